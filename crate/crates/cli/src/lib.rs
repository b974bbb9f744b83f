//! Configuration, orchestration and report writing for the `qnlab` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::Path;

pub use config::{ExperimentConfig, Kind};
pub use error::CliError;
pub use report::Artifacts;

/// Runs `cfg` on a pool of `jobs` threads (all cores when `None`) and writes
/// its artifacts under `out_dir`.
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>, out_dir: &Path) -> Result<Artifacts, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::config("--jobs must be positive"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Solver(format!("cannot start worker pool: {e}")))?;
    let artifacts = pool.install(|| experiments::run_experiment(cfg))?;
    artifacts.write_all(out_dir)?;
    Ok(artifacts)
}
