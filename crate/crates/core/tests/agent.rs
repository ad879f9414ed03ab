use vdp_core::agent::{AgentMode, FsmState, CycleTrace};
use vdp_core::data::{parse_status, SampleRecord, decode_sample};
use vdp_core::protocol::{encode_frame, Frame, FrameDecoder, PacketType, DATA_SEQ_LEN};
use vdp_core::sensor::SensorFixture;
use vdp_core::sim::{SimTime, TimingParams};
use vdp_core::testbed::{CaptureHost, Testbed};

fn fsm_trace_params() -> TimingParams {
    TimingParams { irq_entry_ns: 258, i2c_read_ns: 109_000, serialize_ns: 1_375, uart_transition_ns: 2_542, uart_setup_ns: Some(5_000), ..Default::default() }
}

fn tasks_trace_params() -> TimingParams {
    TimingParams { irq_entry_ns: 58, uart_transition_ns: 2_717, exti_rearm_ns: 2_300, ..fsm_trace_params() }
}

#[derive(Debug)]
struct Out {
    ptype: PacketType,
    channel: u8,
    payload: Vec<u8>,
}

fn frames(bytes: &[u8]) -> Vec<Out> {
    let mut dec: FrameDecoder<2048> = FrameDecoder::new();
    let mut out = Vec::new();
    dec.feed(bytes, |r| {
        let f = r.expect("clean link");
        out.push(Out { ptype: f.packet_type, channel: f.channel, payload: f.payload.to_vec() });
    });
    out
}

fn send(tb: &mut Testbed<CaptureHost>, json: &str) {
    let f = Frame::new(PacketType::Command, 0, json.as_bytes()).unwrap();
    tb.inject_downlink(&encode_frame(&f).unwrap()).unwrap();
}

fn bed(mode: AgentMode, p: &TimingParams) -> Testbed<CaptureHost> {
    Testbed::new(mode, p, &SensorFixture::reference(), CaptureHost::default())
}

fn stream_acc(mode: AgentMode, p: &TimingParams, cycles: usize) -> Vec<CycleTrace> {
    let mut tb = bed(mode, p);
    tb.agent.enable_trace(cycles + 4);
    send(&mut tb, r#"{"set_property":{"sensor":"acc","enable":true,"odr":7680}}"#);
    tb.run_until(SimTime::from_ms(1)).unwrap();
    send(&mut tb, r#"{"start_log":{}}"#);
    tb.run_while(SimTime::from_ms(1000), |t| t.agent.traces().len() >= cycles).unwrap();
    tb.agent.traces().to_vec()
}

#[test]
fn loop_trace_intervals() {
    let t = stream_acc(AgentMode::FsmLoop, &fsm_trace_params(), 20);
    for w in t.windows(2) {
        let c = &w[0];
        assert_eq!(w[1].trigger - c.trigger, 133_750);
        assert_eq!(c.p1_ns(), 1_958);
        assert_eq!(c.p4_ns, 2_542);
        assert_eq!(c.busy_ns(), 119_875);
        assert_eq!(c.phase_sum_ns(), c.busy_ns());
    }
}

#[test]
fn task_trace_intervals() {
    let t = stream_acc(AgentMode::EventTasks, &tasks_trace_params(), 20);
    for c in &t {
        assert_eq!(c.p1_ns(), 3_458);
        assert_eq!(c.p4_ns, 4_417);
        assert_eq!(c.p6_ns, 4_000);
        assert_eq!(c.busy_ns(), 127_250);
    }
}

#[test]
fn session_stop_and_status() {
    let mut tb = bed(AgentMode::EventTasks, &TimingParams::default());
    send(&mut tb, r#"{"set_property":{"sensor":"acc","enable":true,"odr":7680}}"#);
    tb.run_until(SimTime::from_ms(1)).unwrap();
    send(&mut tb, r#"{"start_log":{}}"#);
    tb.run_until(SimTime::from_ms(3)).unwrap();
    assert_eq!(tb.agent.state(), FsmState::Streaming);
    send(&mut tb, r#"{"stop_log":{}}"#);
    tb.run_until(SimTime::from_ms(5)).unwrap();
    assert_eq!(tb.agent.state(), FsmState::Idle);
    send(&mut tb, r#"{"get_status":{}}"#);
    tb.run_until(SimTime::from_ms(8)).unwrap();

    let out = frames(&tb.host.bytes);
    let replies: Vec<_> = out.iter().filter(|f| f.ptype != PacketType::DataAsync).collect();
    assert_eq!(replies.len(), 4);
    let status = parse_status(&replies[3].payload).unwrap();
    assert!(!status.streaming);
    assert!(status.sensors[0].config.enabled);
    let data: Vec<SampleRecord> = out
        .iter()
        .filter(|f| f.ptype == PacketType::DataAsync)
        .map(|f| {
            assert_eq!(f.channel, 1);
            decode_sample(&f.payload[DATA_SEQ_LEN..]).unwrap()
        })
        .collect();
    // 2 ms of streaming at 133.75 us.
    assert!((14..=16).contains(&data.len()), "{}", data.len());
    let s = tb.agent.stats();
    assert_eq!(s.flags_set, s.flags_read + s.flags_discarded);
}
