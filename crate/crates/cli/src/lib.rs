//! Configuration-driven experiment runner for `quantnorm`.

pub mod config;
pub mod expr;
pub mod run;

pub use config::{load, ExperimentConfig, ExperimentKind};
pub use run::{run, Overrides, RunError, RunOutcome};

/// Violations of the config at `path`; empty when it is valid.
pub fn validate(path: &std::path::Path) -> Vec<String> {
    match load(path) {
        Ok(l) => l.config.violations(&l.base_dir),
        Err(v) => v,
    }
}
