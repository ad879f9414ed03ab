use serde::{Deserialize, Serialize};
use vdp_core::agent::{AgentMode, CycleCosts};
use vdp_core::footprint::MemoryReport;
use vdp_core::sensor::OdrHz;

use crate::presets::iteration_stages;
use crate::sweep::{default_skew, max_odr_for_busy, plateau_hz, run_sweep};
use crate::BenchError;

pub const HISTORY_CSV: &str = include_str!("../data/iteration_history.csv");
pub const MEMORY_CSV: &str = include_str!("../data/memory_table.csv");

/// One published data point of the optimization history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub series: String,
    pub implementation: String,
    pub stage: String,
    pub metric: String,
    pub value: i64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryRow {
    #[serde(flatten)]
    pub point: HistoryPoint,
    /// Change from the previous point of the same series, implementation
    /// and metric.
    pub delta: Option<i64>,
}

pub fn load_history(text: &str) -> Result<Vec<HistoryPoint>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn history_table(points: &[HistoryPoint]) -> Vec<HistoryRow> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let prev = points[..i]
                .iter()
                .rev()
                .find(|q| q.series == p.series && q.implementation == p.implementation && q.metric == p.metric);
            HistoryRow { point: p.clone(), delta: prev.map(|q| p.value - q.value) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
struct MemoryRow {
    implementation: String,
    text: u64,
    rodata: u64,
    stack: u64,
    static_ram: u64,
    heap: u64,
    stated_total_ram: Option<u64>,
}

/// Reports built from a `implementation,text,rodata,stack,static_ram,heap,stated_total_ram` table.
pub fn load_memory_table(text: &str) -> Result<Vec<(String, MemoryReport)>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in r.deserialize() {
        let m: MemoryRow = row?;
        let mut rep = MemoryReport::from_parts(m.text, m.rodata, m.stack, m.static_ram, m.heap);
        rep.stated_total_ram = m.stated_total_ram;
        out.push((m.implementation, rep));
    }
    Ok(out)
}

/// Simulated outcome of one tuning stage at the 7680 Hz target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayRow {
    pub stage: String,
    pub mode: AgentMode,
    pub busy_ns: u64,
    pub max_sustainable_hz: Option<u32>,
    pub plateau_hz: f64,
    pub simulated_hz: f64,
    pub drops: u64,
    pub cited_hz: Option<u32>,
    pub description: String,
}

pub fn replay_iterations(cycles: u64) -> Result<Vec<ReplayRow>, BenchError> {
    let skew = default_skew();
    let top = OdrHz::MAX;
    let mut out = Vec::new();
    for s in iteration_stages() {
        let busy_ns = CycleCosts::new(s.mode, &s.params).single_sensor_busy_ns();
        let sweep = run_sweep(s.mode, &s.params, &[top], cycles)?;
        let p = &sweep.points[0];
        out.push(ReplayRow {
            stage: s.name,
            mode: s.mode,
            busy_ns,
            max_sustainable_hz: max_odr_for_busy(busy_ns, skew).map(OdrHz::hz),
            plateau_hz: plateau_hz(busy_ns, top, skew),
            simulated_hz: p.achieved_hz,
            drops: p.drops,
            cited_hz: s.cited_hz,
            description: s.description,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_history_parses() {
        let h = load_history(HISTORY_CSV).unwrap();
        assert!(h.iter().any(|p| p.value == 118_236));
        let rows = history_table(&h);
        let last_rom = rows.iter().find(|r| r.point.value == 84_100).unwrap();
        assert_eq!(last_rom.delta, Some(84_100 - 118_236));
    }

    #[test]
    fn shipped_memory_table() {
        let t = load_memory_table(MEMORY_CSV).unwrap();
        assert_eq!(t[0].1.total_ram, 42_608);
        assert_eq!(t[0].1.stated_total_ram, Some(44_656));
        assert_eq!(t[1].1.total_rom, 84_100);
    }
}
