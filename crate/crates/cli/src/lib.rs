//! Scenario files and the runner behind the `coupler` command.

// Negated comparisons are used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod parse;
pub mod run;
pub mod scenario;

pub use error::{CliError, Result};
pub use parse::parse_config;
pub use run::{render, run, Table};
pub use scenario::{Command, Scenario};

use std::path::Path;

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Runs a scenario and returns the rendered output text.
pub fn execute(sc: &Scenario) -> Result<String> {
    let table = run(sc)?;
    Ok(render(sc, &table))
}
