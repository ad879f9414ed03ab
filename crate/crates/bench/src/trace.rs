use serde::Serialize;
use vdp_core::agent::{AgentMode, CycleTrace};
use vdp_core::sensor::OdrHz;
use vdp_core::sim::{SimTime, TimingParams};
use vdp_core::testbed::NullHost;

use crate::stream::streaming_bed;
use crate::BenchError;

/// Interval breakdown of one streaming cycle, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleIntervals {
    pub p0: u64,
    pub p1: u64,
    pub p2: u64,
    pub p3: u64,
    pub p4: u64,
    pub uart: u64,
    pub log: u64,
    pub status_read: u64,
    pub p5: u64,
    pub p6: u64,
}

impl CycleIntervals {
    fn from_pair(c: &CycleTrace, next: &CycleTrace) -> Self {
        CycleIntervals {
            p0: next.trigger - c.trigger,
            p1: c.p1_ns(),
            p2: c.p2_ns,
            p3: c.p3_ns,
            p4: c.p4_ns,
            uart: c.uart_ns,
            log: c.log_ns,
            status_read: c.status_read_ns,
            p5: next.trigger.saturating_sub(c.end),
            p6: c.p6_ns,
        }
    }

    /// P1 + P2 + P3 + P4 + uart + P5 + P6, plus the logging and status-read
    /// spans when those features are enabled.
    pub fn sum(&self) -> u64 {
        self.p1 + self.p2 + self.p3 + self.p4 + self.uart + self.p5 + self.p6 + self.log + self.status_read
    }

    pub fn closure_error(&self) -> u64 {
        self.p0.abs_diff(self.sum())
    }
}

/// Cycle intervals averaged over a run, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub mode: AgentMode,
    pub odr_hz: u32,
    pub cycles: usize,
    pub p0_us: f64,
    pub p1_us: f64,
    pub p2_us: f64,
    pub p3_us: f64,
    pub p4_us: f64,
    pub uart_us: f64,
    pub log_us: f64,
    pub status_read_us: f64,
    pub p5_us: f64,
    /// Stream-to-EXTI round trip; only the task architecture has one.
    pub p6_us: Option<f64>,
    pub busy_us: f64,
    /// Largest per-cycle |P0 - sum of intervals|.
    pub max_closure_error_ns: u64,
    #[serde(skip)]
    pub per_cycle: Vec<CycleIntervals>,
}

impl TraceReport {
    /// `(label, value)` rows in display order.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("P0", Some(self.p0_us)),
            ("P1", Some(self.p1_us)),
            ("P2", Some(self.p2_us)),
            ("P3", Some(self.p3_us)),
            ("P4", Some(self.p4_us)),
            ("uart", Some(self.uart_us)),
            ("log", Some(self.log_us)),
            ("status_read", Some(self.status_read_us)),
            ("P5", Some(self.p5_us)),
            ("P6", self.p6_us),
            ("busy", Some(self.busy_us)),
        ]
    }
}

fn mean_us(cycles: &[CycleIntervals], f: impl Fn(&CycleIntervals) -> u64) -> f64 {
    let total: u64 = cycles.iter().map(f).sum();
    total as f64 / cycles.len() as f64 / 1_000.0
}

/// Streams one accelerometer at `odr` and measures `n_cycles` complete
/// cycles.
pub fn run_trace(mode: AgentMode, params: &TimingParams, odr: OdrHz, n_cycles: usize) -> Result<TraceReport, BenchError> {
    if n_cycles == 0 {
        return Err(BenchError::Usage("trace needs at least one cycle".into()));
    }
    params.validate()?;
    let mut tb = streaming_bed(mode, params, odr, NullHost)?;
    tb.agent.enable_trace(n_cycles + 1);
    let limit = SimTime(u64::MAX / 2);
    tb.run_while(limit, |t| t.agent.traces().len() > n_cycles)?;
    let traces = tb.agent.traces();
    let per_cycle: Vec<CycleIntervals> = traces.windows(2).map(|w| CycleIntervals::from_pair(&w[0], &w[1])).collect();
    let busy_total: u64 = traces[..n_cycles].iter().map(|t| t.busy_ns()).sum();
    Ok(TraceReport {
        mode,
        odr_hz: odr.hz(),
        cycles: n_cycles,
        p0_us: mean_us(&per_cycle, |c| c.p0),
        p1_us: mean_us(&per_cycle, |c| c.p1),
        p2_us: mean_us(&per_cycle, |c| c.p2),
        p3_us: mean_us(&per_cycle, |c| c.p3),
        p4_us: mean_us(&per_cycle, |c| c.p4),
        uart_us: mean_us(&per_cycle, |c| c.uart),
        log_us: mean_us(&per_cycle, |c| c.log),
        status_read_us: mean_us(&per_cycle, |c| c.status_read),
        p5_us: mean_us(&per_cycle, |c| c.p5),
        p6_us: (mode == AgentMode::EventTasks).then(|| mean_us(&per_cycle, |c| c.p6)),
        busy_us: busy_total as f64 / n_cycles as f64 / 1_000.0,
        max_closure_error_ns: per_cycle.iter().map(|c| c.closure_error()).max().unwrap_or(0),
        per_cycle,
    })
}
