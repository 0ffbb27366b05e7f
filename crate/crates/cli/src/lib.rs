//! Batch pipeline behind the `earsim` command: consensus, feature extraction,
//! feature selection, JSD-FSI similarity and stage tests, plus a synthetic
//! recording generator.

pub mod cli;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod report;
pub mod store;
pub mod synth;

pub use config::{PipelineConfig, SyntheticSpec};
pub use pipeline::{Inputs, RunOptions};

/// Bad or missing input; the command exits with status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Exit status for an error: 2 for input and validation problems, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let input = e
        .chain()
        .any(|c| c.is::<InputError>() || c.is::<earsim_core::Error>());
    if input {
        2
    } else {
        1
    }
}
