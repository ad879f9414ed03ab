//! Benchmark harness around the `vdp-core` simulator: timing traces,
//! throughput sweeps, scripted sessions, a TCP bridge and footprint
//! reports, plus the `vdp-bench` command line.

pub mod bridge;
pub mod cli;
pub mod equivalence;
mod error;
pub mod history;
pub mod output;
pub mod presets;
pub mod stream;
pub mod sweep;
pub mod trace;

pub use error::BenchError;
