//! Configuration, experiment orchestration and report emission for `fnls`.
//!
//! Exit codes: 0 pass, 1 a check failed, 2 configuration or input error,
//! 3 solver failure, 4 integrator failure (conservation drift).

pub mod commands;
pub mod config;
pub mod output;
pub mod tolerances;
pub mod verify;

use std::fmt;
use std::path::{Path, PathBuf};

use fnls::operators::PotentialSpec;

pub use commands::Context;
pub use config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Solver(fnls::Error),
    Integrator(fnls::Error),
    /// Checks that ran and failed, one message each.
    Check(Vec<String>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) | Failure::Io(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Integrator(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Io(m) => write!(f, "output error: {m}"),
            Failure::Solver(e) => write!(f, "solver failure: {e}"),
            Failure::Integrator(e) => write!(f, "integrator failure: {e}"),
            Failure::Check(items) => {
                write!(f, "{} check(s) failed:", items.len())?;
                for i in items {
                    write!(f, "\n  {i}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for Failure {}

/// Build the run context from the optional config file and global overrides.
/// Relative tabulated-potential paths are resolved against the config's directory.
pub fn context(config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> Result<Context, Failure> {
    let (mut cfg, base) = match config {
        Some(p) => RunConfig::load(p)?,
        None => (RunConfig::default(), None),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let absolute = |spec: &mut PotentialSpec| {
        if let (PotentialSpec::Tabulated { path }, Some(b)) = (spec, base.as_ref()) {
            if path.is_relative() {
                *path = b.join(&*path);
            }
        }
    };
    absolute(&mut cfg.potential);
    cfg.sweep_potentials.iter_mut().for_each(absolute);
    let out: PathBuf = cfg.output_dir(out);
    Ok(Context { config: cfg, base, out })
}
