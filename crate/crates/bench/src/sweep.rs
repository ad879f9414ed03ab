use serde::Serialize;
use vdp_core::agent::{AgentMode, CycleCosts};
use vdp_core::sensor::{OdrHz, SensorFixture, Skew};
use vdp_core::sim::TimingParams;
use vdp_core::testbed::NullHost;

use crate::stream::{streaming_bed, BENCH_SENSOR};
use crate::BenchError;

/// Periods skipped before measuring, so start-up transients are excluded.
const WARMUP_PERIODS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub target_hz: u32,
    /// Actual DRDY period after sensor skew.
    pub period_ns: u64,
    /// Closed-form single-sensor busy span.
    pub busy_ns: u64,
    pub achieved_hz: f64,
    pub drops: u64,
    pub frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub mode: AgentMode,
    pub cycles: u64,
    pub points: Vec<SweepPoint>,
}

fn bench_skew() -> Skew {
    let f = SensorFixture::reference();
    let idx = f.model.find(BENCH_SENSOR).expect("reference fixture has the bench sensor");
    f.params[idx].skew
}

/// Streams the accelerometer at each ODR for `cycles` DRDY periods and
/// counts frames sent and samples overwritten before they were read.
pub fn run_sweep(mode: AgentMode, params: &TimingParams, odrs: &[OdrHz], cycles: u64) -> Result<SweepResult, BenchError> {
    params.validate()?;
    let skew = bench_skew();
    let busy_ns = CycleCosts::new(mode, params).single_sensor_busy_ns();
    let sensor = SensorFixture::reference().model.find(BENCH_SENSOR).expect("bench sensor");
    let mut points = Vec::with_capacity(odrs.len());
    for &odr in odrs {
        let period_ns = skew.period_ns(odr);
        let mut tb = streaming_bed(mode, params, odr, NullHost)?;
        tb.run_until(tb.now() + WARMUP_PERIODS * period_ns)?;
        let (f0, d0, t0) = (tb.agent.stats().frames, tb.sensors[sensor].stats().overruns, tb.now());
        tb.run_until(t0 + cycles * period_ns)?;
        let frames = tb.agent.stats().frames - f0;
        let drops = tb.sensors[sensor].stats().overruns - d0;
        let window = tb.now() - t0;
        points.push(SweepPoint {
            target_hz: odr.hz(),
            period_ns,
            busy_ns,
            achieved_hz: frames as f64 * 1e9 / window as f64,
            drops,
            frames,
        });
    }
    Ok(SweepResult { mode, cycles, points })
}

/// Largest ladder ODR whose skewed DRDY period still covers the busy span,
/// or `None` when even the slowest rate cannot be sustained.
pub fn max_sustainable_odr(params: &TimingParams, mode: AgentMode, skew: Skew) -> Option<OdrHz> {
    let busy = CycleCosts::new(mode, params).single_sensor_busy_ns();
    max_odr_for_busy(busy, skew)
}

pub fn max_odr_for_busy(busy_ns: u64, skew: Skew) -> Option<OdrHz> {
    OdrHz::ladder().rev().find(|&o| skew.period_ns(o) >= busy_ns)
}

/// Steady-state throughput when every DRDY edge is serviced back to back:
/// the DRDY rate if the busy span fits, `1e9 / busy` otherwise.
pub fn plateau_hz(busy_ns: u64, odr: OdrHz, skew: Skew) -> f64 {
    let period = skew.period_ns(odr);
    1e9 / period.max(busy_ns) as f64
}

pub fn default_skew() -> Skew {
    bench_skew()
}
