//! Experiment harness and command implementations behind the `snkf` binary.
//!
//! [`experiments::reproduce`] regenerates the six figure datasets;
//! [`commands::run_command`] runs the scenario-file commands. Both return
//! text so the binary only decides where it goes.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{CommandConfig, ConstraintArg, Csi, Experiment, ExperimentConfig};
pub use error::CliError;
pub use output::Dataset;

/// Runs an experiment and renders each dataset as `(name, csv)`.
pub fn reproduce_csv(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>, CliError> {
    let head = output::header(cfg, cfg.seed, &[])?;
    Ok(experiments::reproduce(cfg)?
        .into_iter()
        .map(|d| (d.name.clone(), d.to_csv(&head)))
        .collect())
}
