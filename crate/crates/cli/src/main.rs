use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qnlab::{CliError, ExperimentConfig, Kind};

/// Quasi-neutral limit experiments on the periodic box.
#[derive(Parser, Debug)]
#[command(name = "qnlab", version)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    kind: Kind,
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set physics.dt=1e-4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for independent sweep points.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::config(e.to_string().trim().to_string())),
    };
    let result = ExperimentConfig::load(args.kind, &args.config, &args.overrides).and_then(|cfg| {
        let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        qnlab::run(&cfg, args.jobs, &out).map(|a| (out, a))
    });
    match result {
        Ok((out, artifacts)) => {
            for path in artifacts.files.keys() {
                println!("{}", out.join(path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e.record()).expect("error record serializes"));
    ExitCode::from(e.exit_code() as u8)
}
