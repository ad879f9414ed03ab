use thiserror::Error;

use super::recording::{ReceivedFrame, SessionRecording, TranscriptEntry};
use super::script::{Script, ScriptStep};
use crate::agent::{AgentError, AgentMode};
use crate::data::caps::STATUS_BUF_CAP;
use crate::data::{parse_command, Command, DeviceModel, SensorConfig};
use crate::protocol::{encode_frame, encoded_len, FrameDecoder, Inbound, PacketType, TransportError, TransportSession};
use crate::sensor::SensorFixture;
use crate::sim::{SimTime, TimingParams};
use crate::testbed::{Host, HostIo, Testbed};

const REPLY_CAP: usize = encoded_len(STATUS_BUF_CAP);

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("no reply to `{command}` within {timeout_ns} ns")]
    Timeout { command: String, timeout_ns: u64 },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("session did not finish before {0}")]
    TimeLimit(SimTime),
}

impl From<TransportError> for ControllerError {
    fn from(e: TransportError) -> Self {
        ControllerError::Protocol(e.to_string())
    }
}

/// Decides which (channel, seq) data frames to discard before recording.
pub type DropHook = Box<dyn FnMut(u8, u16) -> bool + Send>;

pub struct ControllerOptions {
    /// Gap between consecutive commands without a `wait` in between.
    pub slot_ns: u64,
    pub timeout_ns: u64,
    /// Keep every received frame in [`SessionRecording::frames`].
    pub keep_frames: bool,
    pub drop_hook: Option<DropHook>,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        ControllerOptions { slot_ns: 2_000_000, timeout_ns: 50_000_000, keep_frames: false, drop_hook: None }
    }
}

/// What the controller wants to do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Transmit these bytes now; give up if no reply arrives by `deadline`.
    Send { bytes: Vec<u8>, deadline: SimTime },
    /// Nothing to send before this time.
    WaitUntil(SimTime),
    /// A request is outstanding.
    AwaitReply { deadline: SimTime },
    Finished,
}

struct Outstanding {
    step: usize,
    sent_at: SimTime,
    deadline: SimTime,
}

/// Host-side master, independent of how bytes are moved.
///
/// Commands go out on a fixed schedule: the next command is due one slot
/// after the previous send, or `n` nominal periods of the fastest enabled
/// sensor after it when `wait n` directives come in between, and never
/// before the previous reply.
pub struct Controller {
    model: DeviceModel,
    configs: Vec<SensorConfig>,
    script: Script,
    next_step: usize,
    due: SimTime,
    last_send: Option<SimTime>,
    outstanding: Option<Outstanding>,
    transport: TransportSession,
    decoder: Box<FrameDecoder<REPLY_CAP>>,
    recording: SessionRecording,
    opts: ControllerOptions,
    error: Option<ControllerError>,
}

impl Controller {
    pub fn new(model: DeviceModel, script: Script, opts: ControllerOptions) -> Self {
        let mut recording = SessionRecording::new(&model);
        if opts.keep_frames {
            recording.frames = Some(Vec::new());
        }
        Controller {
            configs: model.default_configs().into_iter().collect(),
            model,
            script,
            next_step: 0,
            due: SimTime::ZERO,
            last_send: None,
            outstanding: None,
            transport: TransportSession::master(),
            decoder: Box::new(FrameDecoder::new()),
            recording,
            opts,
            error: None,
        }
    }

    pub fn recording(&self) -> &SessionRecording {
        &self.recording
    }

    pub fn error(&self) -> Option<&ControllerError> {
        self.error.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.error.is_some() || (self.outstanding.is_none() && self.remaining_commands() == 0)
    }

    fn remaining_commands(&self) -> usize {
        self.script.steps[self.next_step..].iter().filter(|s| matches!(s, ScriptStep::Command(_))).count()
    }

    /// Nominal period of the fastest enabled sensor, or the slot when none
    /// is enabled.
    pub fn wait_unit_ns(&self) -> u64 {
        self.configs
            .iter()
            .filter(|c| c.enabled)
            .map(|c| c.odr.nominal_period_ns())
            .min()
            .unwrap_or(self.opts.slot_ns)
    }

    pub fn next_action(&mut self, now: SimTime) -> Action {
        if self.error.is_some() {
            return Action::Finished;
        }
        if let Some(o) = &self.outstanding {
            return Action::AwaitReply { deadline: o.deadline };
        }
        let mut waits = 0u64;
        while let Some(ScriptStep::Wait(n)) = self.script.steps.get(self.next_step) {
            waits += *n as u64;
            self.next_step += 1;
        }
        let Some(ScriptStep::Command(cmd)) = self.script.steps.get(self.next_step) else {
            return Action::Finished;
        };
        if let Some(last) = self.last_send {
            let gap = if waits > 0 { waits * self.wait_unit_ns() } else { self.opts.slot_ns };
            self.due = self.due.max(last + gap);
        }
        // Consumed waits are folded into `due`; do not count them twice.
        self.last_send = None;
        if self.due > now {
            return Action::WaitUntil(self.due);
        }
        let frame = match self.transport.master_send_command(cmd.as_bytes()) {
            Ok(f) => f,
            Err(e) => {
                self.error = Some(e.into());
                return Action::Finished;
            }
        };
        let bytes = encode_frame(&frame).expect("validated frame");
        let deadline = now + self.opts.timeout_ns;
        self.outstanding = Some(Outstanding { step: self.next_step, sent_at: now, deadline });
        self.last_send = Some(now);
        self.due = now;
        self.next_step += 1;
        Action::Send { bytes, deadline }
    }

    /// Called when `deadline` from the last `Send` has passed.
    pub fn on_deadline(&mut self, now: SimTime) {
        if let Some(o) = &self.outstanding {
            if now >= o.deadline {
                let command = match &self.script.steps[o.step] {
                    ScriptStep::Command(c) => c.clone(),
                    ScriptStep::Wait(_) => String::new(),
                };
                self.transport.master_abandon();
                self.error = Some(ControllerError::Timeout { command, timeout_ns: self.opts.timeout_ns });
            }
        }
    }

    pub fn ingest(&mut self, now: SimTime, bytes: &[u8]) {
        let mut pending_frames: Vec<ReceivedFrame> = Vec::new();
        let mut framing_errors = 0;
        self.decoder.feed(bytes, |r| match r {
            Ok(f) => pending_frames.push(ReceivedFrame {
                packet_type: f.packet_type,
                channel: f.channel,
                payload: f.payload.to_vec(),
            }),
            Err(_) => framing_errors += 1,
        });
        self.recording.protocol_errors += framing_errors;
        for f in pending_frames {
            self.on_frame(now, f);
        }
    }

    fn on_frame(&mut self, now: SimTime, f: ReceivedFrame) {
        let frame = crate::protocol::Frame { packet_type: f.packet_type, channel: f.channel, payload: &f.payload };
        let inbound = match self.transport.master_receive(&frame) {
            Ok(i) => i,
            Err(_) => {
                self.recording.protocol_errors += 1;
                return;
            }
        };
        match inbound {
            Inbound::Data { channel, seq, body } => {
                if let Some(hook) = &mut self.opts.drop_hook {
                    if hook(channel, seq) {
                        return;
                    }
                }
                if self.recording.record_data(channel, seq, body).is_err() {
                    self.recording.protocol_errors += 1;
                }
            }
            Inbound::Reply { packet_type, payload } => self.on_reply(now, packet_type, payload),
            Inbound::Beacon => {}
        }
        if let Some(frames) = &mut self.recording.frames {
            frames.push(f);
        }
    }

    fn on_reply(&mut self, now: SimTime, packet_type: PacketType, payload: &[u8]) {
        let Some(o) = self.outstanding.take() else { return };
        let ScriptStep::Command(cmd) = &self.script.steps[o.step] else { return };
        let ok = packet_type == PacketType::Response;
        if ok {
            match parse_command(cmd.as_bytes(), &self.model) {
                Ok(Command::SetProperty { sensor, patch }) => self.configs[sensor].apply(&patch),
                Ok(Command::StartLog) => self.recording.restart_sequences(),
                Ok(Command::StopLog) => self.recording.finalized = true,
                _ => {}
            }
        }
        self.recording.transcript.push(TranscriptEntry {
            sent_at: o.sent_at,
            replied_at: now,
            command: cmd.clone(),
            reply_type: packet_type,
            reply: String::from_utf8_lossy(payload).into_owned(),
        });
        self.due = self.due.max(now);
    }

    pub fn into_recording(self) -> Result<SessionRecording, ControllerError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.recording),
        }
    }
}

const TIMER_SEND: u32 = 0;
const TIMER_DEADLINE: u32 = 1;

/// Adapts a [`Controller`] to the simulated link.
pub struct SimController(pub Controller);

impl SimController {
    fn pump(&mut self, io: &mut HostIo<'_>) {
        match self.0.next_action(io.now()) {
            Action::Send { bytes, deadline } => {
                if let Err(e) = io.send(&bytes) {
                    self.0.error = Some(ControllerError::Protocol(e.to_string()));
                    return;
                }
                let _ = io.set_timer(deadline, TIMER_DEADLINE);
            }
            Action::WaitUntil(t) => {
                let _ = io.set_timer(t, TIMER_SEND);
            }
            Action::AwaitReply { .. } | Action::Finished => {}
        }
    }
}

impl Host for SimController {
    fn start(&mut self, io: &mut HostIo<'_>) {
        self.pump(io);
    }

    fn on_uplink_bytes(&mut self, bytes: &[u8], io: &mut HostIo<'_>) {
        let waiting = self.0.outstanding.is_some();
        self.0.ingest(io.now(), bytes);
        if waiting && self.0.outstanding.is_none() {
            self.pump(io);
        }
    }

    fn on_timer(&mut self, timer: u32, io: &mut HostIo<'_>) {
        match timer {
            TIMER_DEADLINE => self.0.on_deadline(io.now()),
            _ => {
                if self.0.outstanding.is_none() {
                    self.pump(io);
                }
            }
        }
    }
}

/// Everything needed to run a scripted session against a simulated agent.
pub struct SessionConfig {
    pub mode: AgentMode,
    pub params: TimingParams,
    pub fixture: SensorFixture,
    pub controller: ControllerOptions,
    /// Simulated time after which the run is abandoned.
    pub time_limit: SimTime,
}

impl SessionConfig {
    pub fn new(mode: AgentMode) -> Self {
        SessionConfig {
            mode,
            params: TimingParams::default(),
            fixture: SensorFixture::reference(),
            controller: ControllerOptions::default(),
            time_limit: SimTime::from_ms(60_000),
        }
    }
}

/// Runs `script` against a fresh simulated agent and returns what the
/// controller recorded. Ends when the last command has been answered.
pub fn run_session(script: &Script, cfg: SessionConfig) -> Result<SessionRecording, ControllerError> {
    let controller = Controller::new(cfg.fixture.model.clone(), script.clone(), cfg.controller);
    let mut tb = Testbed::new(cfg.mode, &cfg.params, &cfg.fixture, SimController(controller));
    let done = tb.run_while(cfg.time_limit, |t| t.host.0.is_finished())?;
    if !done {
        return Err(ControllerError::TimeLimit(cfg.time_limit));
    }
    tb.host.0.into_recording()
}
