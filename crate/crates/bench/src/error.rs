use std::io;

use thiserror::Error;
use vdp_core::agent::AgentError;
use vdp_core::controller::{ControllerError, ScriptError};
use vdp_core::footprint::{ElfError, RuleError};
use vdp_core::sim::ParamsError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ParamsError),
    #[error("config: {0}")]
    ConfigFile(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("script: {0}")]
    Script(#[from] ScriptError),
    #[error("elf: {0}")]
    Elf(#[from] ElfError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl BenchError {
    /// Process exit status: 2 usage/config, 3 protocol, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_)
            | BenchError::Config(_)
            | BenchError::ConfigFile(_)
            | BenchError::Script(_)
            | BenchError::Rules(_) => 2,
            BenchError::Agent(_) | BenchError::Controller(_) | BenchError::Elf(_) => 3,
            BenchError::Csv(_) | BenchError::Io(_) => 4,
        }
    }
}
