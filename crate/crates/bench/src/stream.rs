use vdp_core::agent::{AgentMode, FsmState};
use vdp_core::protocol::{encode_frame, Frame, PacketType};
use vdp_core::sensor::{OdrHz, SensorFixture};
use vdp_core::sim::{SimTime, TimingParams};
use vdp_core::testbed::{Host, Testbed};

use crate::BenchError;

/// Sensor used by traces and sweeps.
pub const BENCH_SENSOR: &str = "acc";

pub fn inject_command<H: Host>(tb: &mut Testbed<H>, json: &str) -> Result<(), BenchError> {
    let f = Frame::new(PacketType::Command, 0, json.as_bytes()).map_err(|e| BenchError::Usage(e.to_string()))?;
    tb.inject_downlink(&encode_frame(&f).expect("valid frame"))
        .map_err(|e| BenchError::Usage(e.to_string()))?;
    Ok(())
}

/// A testbed whose agent streams the accelerometer at `odr`, with the
/// start command fully handled.
pub fn streaming_bed<H: Host>(
    mode: AgentMode,
    params: &TimingParams,
    odr: OdrHz,
    host: H,
) -> Result<Testbed<H>, BenchError> {
    let mut tb = Testbed::new(mode, params, &SensorFixture::reference(), host);
    let set = format!(r#"{{"set_property":{{"sensor":"{BENCH_SENSOR}","enable":true,"odr":{}}}}}"#, odr.hz());
    inject_command(&mut tb, &set)?;
    tb.run_until(SimTime::from_ms(1))?;
    inject_command(&mut tb, r#"{"start_log":{}}"#)?;
    let limit = tb.now() + 100_000_000;
    if !tb.run_while(limit, |t| t.agent.state() == FsmState::Streaming)? {
        return Err(BenchError::Usage("agent did not start streaming".into()));
    }
    Ok(tb)
}
