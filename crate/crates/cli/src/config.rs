//! Flat `key = value` configuration.
//!
//! One assignment per line; `#` starts a comment. Keys are dotted
//! (`physics.eps`). Each key has a fixed type: lists are comma-separated.
//! `--set key=value` overrides are applied after the file, in order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qnlab_core::grid_spectral::gradient;
use qnlab_core::initial_data::WellPreparedSpec;
use qnlab_core::schrodinger::PotentialMode;
use qnlab_core::{RealField, SpectralField, TorusGrid};
use serde::Serialize;

use crate::error::CliError;

pub const SEED_ENV: &str = "QNLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kind {
    PbSolve,
    SchrodingerRun,
    EulerRun,
    QuasineutralSweep,
    NbodyStats,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::PbSolve => "pb_solve",
            Kind::SchrodingerRun => "schrodinger_run",
            Kind::EulerRun => "euler_run",
            Kind::QuasineutralSweep => "quasineutral_sweep",
            Kind::NbodyStats => "nbody_stats",
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "kind",
    "seed",
    "output.dir",
    "grid.dim",
    "grid.n",
    "physics.eps",
    "physics.hbar",
    "physics.pairing",
    "physics.t_end",
    "physics.dt",
    "physics.mode",
    "physics.sample_every",
    "initial.a",
    "initial.b",
    "initial.file",
    "pb.particles",
    "nbody.ns",
    "nbody.samples",
];

/// How `physics.eps` and `physics.hbar` combine into sweep points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Zip,
    Product,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialProfile {
    /// `ρ₀ ∝ exp(a Σcos 2πx_j)`, `U₀ = b Σ sin(2πx_j)/(2π)`.
    Cosine { a: f64, b: f64 },
    /// Node values of `ρ₀` and `U₀` from a two-column CSV (`rho0,u0`).
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: TorusGrid,
    pub eps: Vec<f64>,
    pub hbar: Vec<f64>,
    pub pairing: Pairing,
    pub t_end: f64,
    pub dt: f64,
    pub mode: PotentialMode,
    pub sample_every: usize,
    pub initial: InitialProfile,
    pub pb_particles: usize,
    pub nbody_ns: Vec<usize>,
    pub nbody_samples: usize,
    /// Every assignment after overrides, echoed into the summary.
    pub raw: BTreeMap<String, String>,
}

/// Parses the text of a config file into key/value pairs.
pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_assignment(line)
            .ok_or_else(|| CliError::config(format!("line {}: expected key = value", lineno + 1)))?;
        if out.insert(k.clone(), v).is_some() {
            return Err(CliError::config(format!("line {}: duplicate key {k}", lineno + 1)));
        }
    }
    Ok(out)
}

fn split_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

pub fn apply_override(map: &mut BTreeMap<String, String>, assignment: &str) -> Result<(), CliError> {
    let (k, v) = split_assignment(assignment)
        .ok_or_else(|| CliError::config(format!("--set {assignment:?}: expected key=value")))?;
    map.insert(k, v);
    Ok(())
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn get<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, CliError> {
        match self.0.get(key) {
            Some(v) => parse_one(key, v),
            None => default.ok_or_else(|| CliError::config(format!("missing key {key}"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: Option<Vec<T>>) -> Result<Vec<T>, CliError> {
        match self.0.get(key) {
            Some(v) => parse_list(key, v),
            None => default.ok_or_else(|| CliError::config(format!("missing key {key}"))),
        }
    }
}

impl ExperimentConfig {
    /// Reads `path`, applies `overrides`, and validates for `kind`.
    pub fn load(kind: Kind, path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            message: format!("cannot read config {}: {e}", path.display()),
            path: Some(path.to_path_buf()),
        })?;
        let mut raw = parse_assignments(&text).map_err(|e| match e {
            CliError::Config { message, .. } => CliError::Config {
                message: format!("{}: {message}", path.display()),
                path: Some(path.to_path_buf()),
            },
            other => other,
        })?;
        for o in overrides {
            apply_override(&mut raw, o)?;
        }
        Self::from_map(kind, raw)
    }

    pub fn from_map(kind: Kind, raw: BTreeMap<String, String>) -> Result<Self, CliError> {
        if let Some(k) = raw.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::config(format!("unknown key {k}")));
        }
        if let Some(k) = raw.get("kind") {
            if k != kind.as_str() {
                return Err(CliError::config(format!(
                    "config is for {k}, but {} was requested",
                    kind.as_str()
                )));
            }
        }
        let l = Lookup(&raw);
        let seed = match raw.get("seed") {
            Some(v) => parse_one("seed", v)?,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => parse_one(SEED_ENV, &v)?,
                Err(_) => 0,
            },
        };
        let dim: usize = l.get("grid.dim", Some(1))?;
        let n: usize = l.get("grid.n", if kind == Kind::NbodyStats { Some(8) } else { None })?;
        let grid = TorusGrid::new(dim, n).map_err(|e| CliError::config(format!("grid: {e}")))?;
        let needs_eps = matches!(kind, Kind::PbSolve | Kind::SchrodingerRun | Kind::QuasineutralSweep);
        let needs_hbar = matches!(kind, Kind::SchrodingerRun | Kind::QuasineutralSweep);
        let needs_time = matches!(kind, Kind::SchrodingerRun | Kind::EulerRun | Kind::QuasineutralSweep);
        let eps: Vec<f64> = l.list("physics.eps", (!needs_eps).then(Vec::new))?;
        let hbar: Vec<f64> = l.list("physics.hbar", (!needs_hbar).then(Vec::new))?;
        if needs_eps && eps.is_empty() {
            return Err(CliError::config("physics.eps is empty"));
        }
        if needs_hbar && hbar.is_empty() {
            return Err(CliError::config("physics.hbar is empty"));
        }
        if let Some(v) = eps.iter().chain(&hbar).find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(CliError::config(format!("eps and hbar must be positive, got {v}")));
        }
        let pairing = match l.get::<String>("physics.pairing", Some("zip".into()))?.as_str() {
            "zip" => Pairing::Zip,
            "product" => Pairing::Product,
            other => return Err(CliError::config(format!("physics.pairing: unknown {other:?}"))),
        };
        if needs_hbar && pairing == Pairing::Zip && eps.len() != hbar.len() {
            return Err(CliError::config(
                "physics.pairing = zip needs as many eps as hbar values",
            ));
        }
        let t_end: f64 = l.get("physics.t_end", (!needs_time).then_some(0.0))?;
        let dt: f64 = l.get("physics.dt", (!needs_time).then_some(1.0))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::config(format!("physics.dt must be positive, got {dt}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(CliError::config(format!("physics.t_end must be nonnegative, got {t_end}")));
        }
        let mode = match l.get::<String>("physics.mode", Some("poisson_boltzmann".into()))?.as_str() {
            "poisson_boltzmann" => PotentialMode::PoissonBoltzmann,
            "linear_poisson" => PotentialMode::LinearPoisson,
            other => return Err(CliError::config(format!("physics.mode: unknown {other:?}"))),
        };
        let sample_every: usize = l.get("physics.sample_every", Some(100))?;
        if sample_every == 0 {
            return Err(CliError::config("physics.sample_every must be positive"));
        }
        let initial = match raw.get("initial.file") {
            Some(p) => {
                if raw.contains_key("initial.a") || raw.contains_key("initial.b") {
                    return Err(CliError::config("initial.file excludes initial.a and initial.b"));
                }
                InitialProfile::File(PathBuf::from(p))
            }
            None => InitialProfile::Cosine {
                a: l.get("initial.a", Some(0.5))?,
                b: l.get("initial.b", Some(0.1))?,
            },
        };
        let pb_particles: usize = l.get("pb.particles", Some(0))?;
        if pb_particles > 0 && dim != 1 {
            return Err(CliError::config("pb.particles needs grid.dim = 1"));
        }
        let nbody_ns: Vec<usize> =
            l.list("nbody.ns", (kind != Kind::NbodyStats).then(Vec::new))?;
        if kind == Kind::NbodyStats && (nbody_ns.is_empty() || nbody_ns.contains(&0)) {
            return Err(CliError::config("nbody.ns must list positive particle numbers"));
        }
        let nbody_samples: usize = l.get("nbody.samples", Some(2000))?;
        if nbody_samples < 2 {
            return Err(CliError::config("nbody.samples must be at least 2"));
        }
        let output_dir = PathBuf::from(l.get::<String>("output.dir", Some("out".into()))?);
        Ok(Self {
            kind,
            seed,
            output_dir,
            grid,
            eps,
            hbar,
            pairing,
            t_end,
            dt,
            mode,
            sample_every,
            initial,
            pb_particles,
            nbody_ns,
            nbody_samples,
            raw,
        })
    }

    /// `(ε, ħ)` sweep points in config order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match self.pairing {
            Pairing::Zip => self.eps.iter().copied().zip(self.hbar.iter().copied()).collect(),
            Pairing::Product => self
                .eps
                .iter()
                .flat_map(|&e| self.hbar.iter().map(move |&h| (e, h)))
                .collect(),
        }
    }

    /// `(ρ₀, U₀)` on the configured grid, with `ρ₀` normalized.
    pub fn initial_fields(&self) -> Result<(RealField, RealField), CliError> {
        match &self.initial {
            InitialProfile::Cosine { a, b } => {
                let s = WellPreparedSpec::cosine_profile(self.grid, *a, *b, 1.0, 1.0);
                Ok((s.rho0, s.u0))
            }
            InitialProfile::File(path) => read_initial_file(path, self.grid),
        }
    }

    /// Rejects grids that cannot resolve `e^{iU₀/ħ}` for the smallest `ħ`:
    /// `n ≥ 8||∇U₀||∞/(2πħ)`.
    pub fn check_resolution(&self, u0: &RealField) -> Result<(), CliError> {
        let Some(hbar) = self.hbar.iter().copied().reduce(f64::min) else {
            return Ok(());
        };
        let slope = gradient(u0).iter().map(|g| g.sup_norm()).fold(0.0, f64::max);
        let needed = 8.0 * slope / (2.0 * std::f64::consts::PI * hbar);
        if (self.grid.points_per_axis() as f64) < needed {
            return Err(CliError::config(format!(
                "grid.n = {} cannot resolve the initial phase at hbar = {hbar}; need at least {}",
                self.grid.points_per_axis(),
                needed.ceil()
            )));
        }
        Ok(())
    }
}

fn read_initial_file(path: &Path, grid: TorusGrid) -> Result<(RealField, RealField), CliError> {
    let file_err = |message: String| CliError::Config {
        message: format!("{}: {message}", path.display()),
        path: Some(path.to_path_buf()),
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| file_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| file_err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["rho0", "u0"] {
        return Err(file_err("header must be rho0,u0".into()));
    }
    let (mut rho, mut u) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.map_err(|e| file_err(e.to_string()))?;
        rho.push(parse_one::<f64>("rho0", &rec[0]).map_err(|e| file_err(e.to_string()))?);
        u.push(parse_one::<f64>("u0", &rec[1]).map_err(|e| file_err(e.to_string()))?);
    }
    if rho.len() != grid.len() {
        return Err(file_err(format!("{} rows for a grid of {} nodes", rho.len(), grid.len())));
    }
    let rho = RealField::from_values(grid, rho).map_err(|e| file_err(e.to_string()))?;
    let u = RealField::from_values(grid, u).map_err(|e| file_err(e.to_string()))?;
    if rho.min() <= 0.0 {
        return Err(file_err("rho0 must be positive".into()));
    }
    let mass = rho.integrate();
    Ok((rho.scaled(1.0 / mass), u))
}
