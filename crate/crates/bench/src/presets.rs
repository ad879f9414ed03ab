use std::path::Path;

use serde::Deserialize;
use vdp_core::agent::AgentMode;
use vdp_core::sim::TimingParams;

use crate::BenchError;

/// Shipped timing configurations, embedded at build time.
pub const PRESETS: &[(&str, &str)] = &[
    ("default", include_str!("../presets/default.toml")),
    ("fsm_trace", include_str!("../presets/fsm_trace.toml")),
    ("tasks_trace", include_str!("../presets/tasks_trace.toml")),
    ("busy140", include_str!("../presets/busy140.toml")),
    ("logging_on", include_str!("../presets/logging_on.toml")),
];

const ITERATIONS: &str = include_str!("../presets/iterations.toml");

pub fn preset(name: &str) -> Option<TimingParams> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| TimingParams::from_toml_str(src).expect("shipped presets are valid"))
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Resolves `--config`: a preset name, or a path to a TOML file.
pub fn load_params(spec: Option<&str>) -> Result<TimingParams, BenchError> {
    let Some(spec) = spec else { return Ok(TimingParams::default()) };
    if let Some(p) = preset(spec) {
        return Ok(p);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<_> = preset_names().collect();
        return Err(BenchError::Usage(format!("no preset or file named `{spec}` (presets: {})", names.join(", "))));
    }
    Ok(TimingParams::from_toml_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    name: String,
    description: String,
    mode: String,
    cited_hz: Option<u32>,
    params: TimingParams,
}

#[derive(Debug, Deserialize)]
struct RawIterations {
    stage: Vec<RawStage>,
}

/// One step of the throughput-tuning replay.
#[derive(Debug, Clone)]
pub struct IterationStage {
    pub name: String,
    pub description: String,
    pub mode: AgentMode,
    pub cited_hz: Option<u32>,
    pub params: TimingParams,
}

pub fn iteration_stages() -> Vec<IterationStage> {
    let raw: RawIterations = toml::from_str(ITERATIONS).expect("shipped iteration stages are valid");
    raw.stage
        .into_iter()
        .map(|s| {
            s.params.validate().expect("shipped iteration stages are valid");
            IterationStage {
                name: s.name,
                description: s.description,
                mode: s.mode.parse().expect("shipped iteration stages are valid"),
                cited_hz: s.cited_hz,
                params: s.params,
            }
        })
        .collect()
}
