//! Randomized command scripts under which both agent architectures must
//! emit the same frames, and the comparison itself.
//!
//! Scripts are generated so that timing never changes content: every
//! enabled sensor set fits in one DRDY period even with task-switch
//! overhead, and every gap between commands outlasts the reply latency, so
//! both runs send each command at the same instant.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdp_core::agent::{AgentMode, CycleCosts, CLASSIFIER_FRAME_LEN, INERTIAL_FRAME_LEN};
use vdp_core::controller::{run_session, ReceivedFrame, Script, ScriptStep, SessionConfig};
use vdp_core::data::DeviceModel;
use vdp_core::protocol::{PacketType, DATA_SEQ_LEN};
use vdp_core::sensor::{OdrHz, SensorFixture, Skew};
use vdp_core::sim::TimingParams;

use crate::BenchError;

/// Slack left in each period for a command reply squeezed between cycles.
pub const PERIOD_MARGIN_NS: u64 = 2_000;
/// Sample timestamp width at the start of every sample body.
const TIMESTAMP_LEN: usize = 8;

#[derive(Debug, Clone, Copy)]
struct View {
    enabled: bool,
    odr: OdrHz,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    model: &'a DeviceModel,
    params: &'a TimingParams,
    skew: Skew,
    slot_ns: u64,
    view: Vec<View>,
    streaming: bool,
    ever_streamed: bool,
    steps: Vec<ScriptStep>,
}

impl Gen<'_> {
    /// Worst-case busy span of a cycle servicing every enabled sensor, in
    /// the slower architecture.
    fn fits(&self, view: &[View]) -> bool {
        let enabled: Vec<usize> = (0..view.len()).filter(|&i| view[i].enabled).collect();
        let Some(fastest) = enabled.iter().map(|&i| view[i].odr).max() else { return true };
        let lens: Vec<usize> = enabled
            .iter()
            .map(|&i| {
                if self.model.sensor(i).expect("sensor").kind.is_inertial() {
                    INERTIAL_FRAME_LEN
                } else {
                    CLASSIFIER_FRAME_LEN
                }
            })
            .collect();
        let busy = AgentMode::ALL.iter().map(|&m| CycleCosts::new(m, self.params).busy_ns(&lens)).max().unwrap();
        let wire = lens.iter().map(|&l| l as u64).sum::<u64>() * self.params.uart_byte_ns();
        let period = self.skew.period_ns(fastest);
        busy + PERIOD_MARGIN_NS <= period && wire + PERIOD_MARGIN_NS <= period
    }

    fn wait_unit(&self) -> u64 {
        self.view.iter().filter(|v| v.enabled).map(|v| v.odr.nominal_period_ns()).min().unwrap_or(self.slot_ns)
    }

    fn push(&mut self, cmd: String) {
        self.steps.push(ScriptStep::Command(cmd));
    }

    fn set_property(&mut self) {
        let id = self.rng.gen_range(0..self.model.sensors().len());
        let desc = self.model.sensor(id).expect("sensor");
        let odrs = &desc.odrs;
        let mut odr = *odrs.choose(&mut self.rng).expect("odr list");
        let mut enable = self.rng.gen_bool(0.8);
        let mut next = self.view.clone();
        next[id] = View { enabled: enable, odr };
        if !self.fits(&next) {
            // Fall back to the fastest rate that fits, or disable.
            let fitting = odrs.iter().rev().copied().find(|&o| {
                let mut v = next.clone();
                v[id].odr = o;
                self.fits(&v)
            });
            match fitting {
                Some(o) => odr = o,
                None => enable = false,
            }
            next[id] = View { enabled: enable, odr };
        }
        let bad_odr = self.rng.gen_bool(0.1);
        let odr_text = if bad_odr { "100".to_string() } else { odr.hz().to_string() };
        self.push(format!(
            r#"{{"set_property":{{"sensor":"{}","enable":{enable},"odr":{odr_text}}}}}"#,
            desc.name.as_str()
        ));
        if !self.streaming && !bad_odr {
            self.view = next;
        }
    }

    fn wait(&mut self) {
        let unit = self.wait_unit();
        let min = self.slot_ns.div_ceil(unit).max(1);
        let n = self.rng.gen_range(min..=min + 40);
        self.steps.push(ScriptStep::Wait(n as u32));
    }

    fn run(mut self, commands: usize) -> Script {
        for _ in 0..commands {
            match self.rng.gen_range(0..11) {
                0..=2 => self.set_property(),
                3 => self.push(r#"{"get_status":{}}"#.into()),
                4..=6 => {
                    if self.view.iter().any(|v| v.enabled) || self.rng.gen_bool(0.2) {
                        self.push(r#"{"start_log":{}}"#.into());
                        self.streaming |= self.view.iter().any(|v| v.enabled);
                        self.ever_streamed |= self.streaming;
                    }
                }
                7 => {
                    self.push(r#"{"stop_log":{}}"#.into());
                    self.streaming = false;
                }
                8 => self.push(r#"{"set_property":{"sensor":"nope","enable":true}}"#.into()),
                _ => {}
            }
            if self.rng.gen_bool(0.6) {
                self.wait();
            }
        }
        if !self.ever_streamed {
            // Every script streams at least once.
            if !self.view.iter().any(|v| v.enabled) {
                let id = self.rng.gen_range(0..self.view.len());
                let odr = self.model.sensor(id).expect("sensor").odrs[0];
                self.push(format!(
                    r#"{{"set_property":{{"sensor":"{}","enable":true,"odr":{}}}}}"#,
                    self.model.sensor(id).expect("sensor").name.as_str(),
                    odr.hz()
                ));
                self.view[id] = View { enabled: true, odr };
            }
            self.push(r#"{"start_log":{}}"#.into());
            self.streaming = true;
        }
        if self.streaming || self.rng.gen_bool(0.5) {
            self.wait();
            self.push(r#"{"stop_log":{}}"#.into());
        }
        Script { steps: self.steps }
    }
}

/// A random script of roughly `commands` commands for the reference
/// fixture, always ending with streaming stopped.
pub fn random_script(seed: u64, params: &TimingParams, commands: usize) -> Script {
    let fixture = SensorFixture::reference();
    let g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        model: &fixture.model,
        params,
        skew: fixture.params[0].skew,
        slot_ns: vdp_core::controller::ControllerOptions::default().slot_ns,
        view: fixture.default_configs().iter().map(|c| View { enabled: c.enabled, odr: c.odr }).collect(),
        streaming: false,
        ever_streamed: false,
        steps: Vec::new(),
    };
    g.run(commands)
}

/// Frame type, channel and payload with sample timestamps blanked out.
pub fn frame_signature(frames: &[ReceivedFrame]) -> Vec<(PacketType, u8, Vec<u8>)> {
    frames
        .iter()
        .map(|f| {
            let mut p = f.payload.clone();
            if f.packet_type == PacketType::DataAsync && p.len() >= DATA_SEQ_LEN + TIMESTAMP_LEN {
                p.drain(DATA_SEQ_LEN..DATA_SEQ_LEN + TIMESTAMP_LEN);
            }
            (f.packet_type, f.channel, p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub frames: [usize; 2],
    pub data_frames: usize,
    /// Index of the first differing frame, if any.
    pub first_mismatch: Option<usize>,
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        self.first_mismatch.is_none() && self.frames[0] == self.frames[1]
    }
}

/// Runs `script` in both architectures and compares everything the
/// controller received.
pub fn compare_modes(script: &Script, params: &TimingParams) -> Result<Equivalence, BenchError> {
    let mut sigs = Vec::new();
    for mode in AgentMode::ALL {
        let mut cfg = SessionConfig::new(mode);
        cfg.params = params.clone();
        cfg.controller.keep_frames = true;
        let rec = run_session(script, cfg)?;
        sigs.push(frame_signature(rec.frames.as_deref().unwrap_or(&[])));
    }
    let first_mismatch = sigs[0].iter().zip(&sigs[1]).position(|(a, b)| a != b);
    Ok(Equivalence {
        frames: [sigs[0].len(), sigs[1].len()],
        data_frames: sigs[0].iter().filter(|s| s.0 == PacketType::DataAsync).count(),
        first_mismatch,
    })
}
