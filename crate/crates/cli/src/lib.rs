//! Front end for `spinnoon`: run configuration, artifact emission and the
//! `spectrum`, `sweep`, `fig3` and `validate` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

pub use commands::{cmd_fig3, cmd_spectrum, cmd_sweep, cmd_validate, Outcome};
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Sweep,
    Fig3,
    Validate,
}

/// Runs one command. Failed validation checks come back as
/// [`CliError::Validation`] together with the report that was produced.
pub fn run(
    command: Command,
    cfg: &RunConfig,
) -> std::result::Result<Outcome, (CliError, Option<Outcome>)> {
    let out = match command {
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Fig3 => cmd_fig3(cfg),
        Command::Validate => cmd_validate(cfg),
    }
    .map_err(|e| (e, None))?;
    if out.failed > 0 {
        let err = CliError::Validation {
            failed: out.failed,
            total: out.report.len(),
        };
        return Err((err, Some(out)));
    }
    Ok(out)
}
