use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdp_core::agent::AgentMode;
use vdp_core::controller::{Controller, ControllerOptions, Script, ScriptStep, SimController};
use vdp_core::data::{SensorConfig, SensorKind};
use vdp_core::protocol::PacketType;
use vdp_core::sensor::{OdrHz, SensorFixture, SensorParams, Skew, VirtualSensor};
use vdp_core::sim::{write_event_log_csv, EventKind, Kernel, SimTime, TimingParams, UartLink};
use vdp_core::testbed::Testbed;

#[test]
fn kernel_matches_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut k = Kernel::with_capacity(1_000_000);
    let mut expected = Vec::with_capacity(1_000_000);
    for i in 0..1_000_000u32 {
        let at = SimTime(rng.gen_range(0..50_000));
        let seq = k.schedule(at, EventKind::TimerFire { timer: i }).unwrap();
        expected.push((at, seq, i));
    }
    expected.sort();
    let mut n = 0;
    while let Some(ev) = k.pop_until(SimTime(u64::MAX)) {
        let (at, seq, i) = expected[n];
        assert_eq!((ev.at, ev.seq, ev.kind), (at, seq, EventKind::TimerFire { timer: i }));
        n += 1;
    }
    assert_eq!(n, expected.len());
}

fn streaming_log(seed: u64) -> Vec<u8> {
    let mut fixture = SensorFixture::reference();
    for (i, p) in fixture.params.iter_mut().enumerate() {
        p.seed = seed + i as u64;
    }
    let script = Script::parse(concat!(
        "{\"set_property\":{\"sensor\":\"acc\",\"enable\":true,\"odr\":3840}}\n",
        "{\"set_property\":{\"sensor\":\"mlc\",\"enable\":true,\"odr\":30}}\n",
        "{\"start_log\":{}}\nwait 50\n{\"stop_log\":{}}\n",
    ))
    .unwrap();
    let model = fixture.model.clone();
    let mut tb = Testbed::new(
        AgentMode::EventTasks,
        &TimingParams::default(),
        &fixture,
        SimController(Controller::new(model, script, ControllerOptions::default())),
    );
    tb.kernel.enable_log();
    assert!(tb.run_while(SimTime::from_ms(1000), |t| t.host.0.is_finished()).unwrap());
    let mut csv = Vec::new();
    write_event_log_csv(tb.kernel.log(), &mut csv).unwrap();
    csv
}

#[test]
fn event_log_is_deterministic() {
    let a = streaming_log(3);
    assert!(a.len() > 1000);
    assert_eq!(a, streaming_log(3));
}

proptest! {
    #[test]
    fn uart_is_lossless_and_ordered(writes in proptest::collection::vec((0u64..200_000, proptest::collection::vec(any::<u8>(), 1..40)), 1..60)) {
        let mut link = UartLink::new(0, &TimingParams::default());
        let mut now = SimTime::ZERO;
        let mut sent = Vec::new();
        let mut got = Vec::new();
        for (gap, bytes) in &writes {
            now += *gap;
            link.deliver(now, |b| got.extend_from_slice(b));
            if link.transmit(now, bytes).is_ok() {
                sent.extend_from_slice(bytes);
            }
        }
        link.deliver(SimTime(u64::MAX / 2), |b| got.extend_from_slice(b));
        prop_assert_eq!(link.bytes_sent(), link.bytes_delivered());
        prop_assert_eq!(got, sent);
    }

    #[test]
    fn drdy_edges_match_closed_form(odr_idx in 0usize..10, window in 1u64..200_000_000, num in 600u32..700, den in 600u32..700) {
        let odr = OdrHz::ladder().nth(odr_idx).unwrap();
        let skew = Skew::new(num, den).unwrap();
        let cfg = SensorConfig { enabled: true, odr, full_scale: 2 };
        let mut s = VirtualSensor::new(0, SensorKind::Accelerometer, cfg, SensorParams::new(skew, 1));
        let end = SimTime(window);
        let mut next = s.arm(SimTime::ZERO).unwrap();
        let mut count = 0u64;
        while next <= end {
            next = s.tick_drdy(next).unwrap();
            count += 1;
        }
        let nominal = window as f64 * odr.hz() as f64 * skew.as_f64() / 1e9;
        prop_assert!((count as f64 - nominal).abs() <= 1.0, "count {} nominal {}", count, nominal);
        prop_assert_eq!(count, skew.edges_within(odr, window));
    }

    #[test]
    fn same_seed_same_samples(seed in any::<u64>(), n in 1usize..200) {
        let cfg = SensorConfig { enabled: true, odr: OdrHz::new(960).unwrap(), full_scale: 2 };
        let run = || {
            let mut s = VirtualSensor::new(0, SensorKind::Accelerometer, cfg, SensorParams::new(Skew::DEFAULT, seed));
            let mut t = s.arm(SimTime::ZERO).unwrap();
            (0..n).map(|_| {
                let next = s.tick_drdy(t).unwrap();
                let (rec, _) = s.i2c_read_sample(t, 1000).unwrap();
                t = next;
                rec
            }).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }
}

const COMMANDS: [&str; 8] = [
    r#"{"set_property":{"sensor":"acc","enable":true,"odr":1920}}"#,
    r#"{"set_property":{"sensor":"gyro","enable":true,"odr":960}}"#,
    r#"{"set_property":{"sensor":"mlc","enable":true,"odr":30}}"#,
    r#"{"set_property":{"sensor":"acc","enable":false}}"#,
    r#"{"start_log":{}}"#,
    r#"{"stop_log":{}}"#,
    r#"{"get_status":{}}"#,
    r#"{"start_log":{}}"#,
];

fn random_script(rng: &mut ChaCha8Rng) -> Script {
    let mut steps = Vec::new();
    for _ in 0..rng.gen_range(1..12) {
        steps.push(ScriptStep::Command(COMMANDS[rng.gen_range(0..COMMANDS.len())].to_owned()));
        if rng.gen_bool(0.5) {
            steps.push(ScriptStep::Wait(rng.gen_range(1..20)));
        }
    }
    steps.push(ScriptStep::Command(r#"{"stop_log":{}}"#.to_owned()));
    Script { steps }
}

#[test]
fn data_only_while_streaming_and_flags_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total_data = 0;
    for _ in 0..60 {
        let script = random_script(&mut rng);
        for mode in AgentMode::ALL {
            let fixture = SensorFixture::reference();
            let opts = ControllerOptions { keep_frames: true, ..ControllerOptions::default() };
            let ctl = Controller::new(fixture.model.clone(), script.clone(), opts);
            let mut tb = Testbed::new(mode, &TimingParams::default(), &fixture, SimController(ctl));
            assert!(tb.run_while(SimTime::from_ms(5000), |t| t.host.0.is_finished()).unwrap());
            let stats = tb.agent.stats();
            assert_eq!(stats.flags_set, stats.flags_read + stats.flags_discarded, "{stats:?}");

            let rec = tb.host.0.into_recording().unwrap();
            let mut replies = rec.transcript.iter();
            let mut streaming = false;
            for f in rec.frames.as_ref().unwrap() {
                match f.packet_type {
                    PacketType::DataAsync => {
                        assert!(streaming, "data frame outside a streaming session:\n{}", script.to_text());
                        total_data += 1;
                    }
                    PacketType::Response => {
                        let t = replies.next().expect("reply has a command");
                        if t.command.contains("start_log") {
                            streaming = true;
                        } else if t.command.contains("stop_log") {
                            streaming = false;
                        }
                    }
                    PacketType::Error => {
                        replies.next().expect("reply has a command");
                    }
                    _ => {}
                }
            }
            assert!(replies.next().is_none());
        }
    }
    assert!(total_data > 0);
}
