use core::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use super::costs::CycleCosts;
use super::signal::Signal;
use super::{AgentMode, FsmState};
use crate::data::caps::{CMD_BUF_CAP, MAX_SENSORS, STATUS_BUF_CAP};
use crate::data::json::JsonWriter;
use crate::data::{
    encode_sample, parse_command, serialize_status, Command, DataError, DeviceModel, DeviceStatus,
    SampleRecord, SensorConfig, MAX_SAMPLE_LEN,
};
use crate::protocol::{
    encode_frame_into, encoded_len, Frame, FrameDecoder, PacketType, SlaveInbound, TransportError,
    TransportSession, DATA_SEQ_LEN,
};
use crate::sensor::{resolve_drdy_source, SensorError, SensorSet, VirtualSensor};
use crate::sim::{EventKind, Kernel, KernelError, SimTime, TimingParams, UartError, UartLink};

/// Task id of the interrupt-waiting task (task architecture).
pub const TASK_EXTI: u8 = 0;
/// Task id of the streaming code; also used for the loop architecture.
pub const TASK_STREAM: u8 = 1;
/// Task id of the command handler.
pub const TASK_COMMAND: u8 = 2;

const RX_CAP: usize = encoded_len(CMD_BUF_CAP);
const TX_DATA_CAP: usize = encoded_len(DATA_SEQ_LEN + MAX_SAMPLE_LEN);
const REPLY_CAP: usize = encoded_len(STATUS_BUF_CAP);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("no sensor with id {0}")]
    UnknownSensor(usize),
    #[error("`{command}` is not valid in state {state:?}")]
    InvalidTransition { state: FsmState, command: &'static str },
    #[error("configuration cannot change while streaming")]
    ConfigRejected,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Uart(#[from] UartError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("unexpected {0} event")]
    UnexpectedEvent(&'static str),
}

impl AgentError {
    /// Short machine-readable code used in error responses.
    pub fn code(&self) -> &'static str {
        match self {
            AgentError::UnknownSensor(_) => "unknown_sensor",
            AgentError::InvalidTransition { .. } => "invalid_transition",
            AgentError::ConfigRejected => "config_rejected",
            AgentError::Data(d) => match d {
                DataError::MalformedJson { .. } => "malformed_json",
                DataError::UnknownCommand => "unknown_command",
                DataError::UnknownSensor => "unknown_sensor",
                DataError::ValueOutOfRange { .. } => "value_out_of_range",
                DataError::CapacityExceeded { .. } => "capacity_exceeded",
                DataError::BadSampleLength(_) => "bad_sample",
            },
            _ => "internal",
        }
    }
}

/// Everything outside the agent that its handlers touch.
pub struct AgentContext<'a> {
    pub kernel: &'a mut Kernel,
    pub sensors: &'a mut [VirtualSensor],
    pub uplink: &'a mut UartLink,
}

/// Timestamps and phase spans of one streaming cycle, in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CycleTrace {
    pub trigger: SimTime,
    pub stream_start: SimTime,
    pub end: SimTime,
    pub status_read_ns: u64,
    pub p2_ns: u64,
    pub p3_ns: u64,
    pub p4_ns: u64,
    pub uart_ns: u64,
    pub log_ns: u64,
    pub p6_ns: u64,
    pub samples: u8,
}

impl CycleTrace {
    pub fn p1_ns(&self) -> u64 {
        self.stream_start - self.trigger
    }

    pub fn busy_ns(&self) -> u64 {
        self.end - self.trigger
    }

    /// Sum of the individually recorded phases; equals `busy_ns` when the
    /// phases tile the cycle without gaps.
    pub fn phase_sum_ns(&self) -> u64 {
        self.p1_ns() + self.status_read_ns + self.p2_ns + self.p3_ns + self.p4_ns + self.uart_ns + self.log_ns + self.p6_ns
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgentStats {
    pub cycles: u64,
    pub frames: u64,
    pub flags_set: u64,
    pub flags_read: u64,
    /// Flags still latched when streaming stopped.
    pub flags_discarded: u64,
    pub commands: u64,
    pub error_replies: u64,
    pub rx_frame_errors: u64,
    pub protocol_errors: u64,
    pub uart_stalls: u64,
    pub busy_ns_total: u64,
    pub max_busy_ns: u64,
}

/// Successful outcome of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Ok,
    Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Idle,
    Dispatch { stage: u32 },
    ReadNext,
    Reading(usize),
    Transmit,
    End,
    Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Inbox {
    Command(usize),
    Ping(usize),
}

#[derive(Debug, Clone, Copy, Default)]
struct Cycle {
    trace: CycleTrace,
    queue: [u8; MAX_SENSORS],
    len: u8,
    pos: u8,
}

/// The sensor agent. See the module docs for the event contract.
pub struct Agent {
    mode: AgentMode,
    costs: CycleCosts,
    model: DeviceModel,
    configs: heapless::Vec<SensorConfig, MAX_SENSORS>,
    state: FsmState,
    transport: TransportSession,
    drdy_flags: [AtomicBool; MAX_SENSORS],
    latched_at: [SimTime; MAX_SENSORS],
    stop_requested: AtomicBool,
    stopped_by_request: bool,
    stream_signal: Signal,
    step: Step,
    cycle: Cycle,
    sample: SampleRecord,
    tx_frame: [u8; TX_DATA_CAP],
    tx_len: usize,
    rx: Box<FrameDecoder<RX_CAP>>,
    inbox: Option<Inbox>,
    cmd_buf: Box<[u8; CMD_BUF_CAP]>,
    reply_payload: Box<[u8; STATUS_BUF_CAP]>,
    reply_frame: Box<[u8; REPLY_CAP]>,
    traces: Option<Vec<CycleTrace>>,
    stats: AgentStats,
}

impl Agent {
    pub fn new(mode: AgentMode, params: &TimingParams, model: DeviceModel) -> Self {
        let configs = model.default_configs();
        Agent {
            mode,
            costs: CycleCosts::new(mode, params),
            model,
            configs,
            state: FsmState::Idle,
            transport: TransportSession::slave(),
            drdy_flags: Default::default(),
            latched_at: [SimTime::ZERO; MAX_SENSORS],
            stop_requested: AtomicBool::new(false),
            stopped_by_request: false,
            stream_signal: Signal::new(),
            step: Step::Idle,
            cycle: Cycle::default(),
            sample: SampleRecord { timestamp_us: 0, payload: crate::data::SamplePayload::Classifier { class_id: 0 } },
            tx_frame: [0; TX_DATA_CAP],
            tx_len: 0,
            rx: Box::new(FrameDecoder::new()),
            inbox: None,
            cmd_buf: Box::new([0; CMD_BUF_CAP]),
            reply_payload: Box::new([0; STATUS_BUF_CAP]),
            reply_frame: Box::new([0; REPLY_CAP]),
            traces: None,
            stats: AgentStats::default(),
        }
    }

    pub fn mode(&self) -> AgentMode {
        self.mode
    }

    pub fn costs(&self) -> &CycleCosts {
        &self.costs
    }

    pub fn model(&self) -> &DeviceModel {
        &self.model
    }

    pub fn state(&self) -> FsmState {
        self.state
    }

    pub fn configs(&self) -> &[SensorConfig] {
        &self.configs
    }

    pub fn stats(&self) -> AgentStats {
        self.stats
    }

    pub fn is_busy(&self) -> bool {
        self.step != Step::Idle
    }

    pub fn stop_requested(&self) -> bool {
        self.stop_requested.load(Ordering::Acquire)
    }

    pub fn drdy_flag(&self, sensor: usize) -> bool {
        self.drdy_flags.get(sensor).is_some_and(|f| f.load(Ordering::Acquire))
    }

    /// Records a [`CycleTrace`] per completed cycle. `capacity` is reserved
    /// up front.
    pub fn enable_trace(&mut self, capacity: usize) {
        self.traces = Some(Vec::with_capacity(capacity));
    }

    pub fn traces(&self) -> &[CycleTrace] {
        self.traces.as_deref().unwrap_or(&[])
    }

    pub fn status(&self) -> DeviceStatus {
        DeviceStatus::from_model(&self.model, &self.configs, self.state == FsmState::Streaming)
    }

    /// Data-ready edge from `sensor`. Edges from an earlier arming
    /// (`generation` mismatch) are ignored.
    pub fn on_drdy_interrupt(
        &mut self,
        now: SimTime,
        sensor: usize,
        generation: u32,
        ctx: &mut AgentContext<'_>,
    ) -> Result<(), AgentError> {
        let s = ctx.sensors.get_mut(sensor).ok_or(AgentError::UnknownSensor(sensor))?;
        if s.generation() != generation || !s.is_armed() {
            return Ok(());
        }
        let next = s.tick_drdy(now)?;
        ctx.kernel.schedule(next, EventKind::SensorDrdy { sensor: sensor as u8, generation })?;
        if !self.drdy_flags[sensor].swap(true, Ordering::AcqRel) {
            self.stats.flags_set += 1;
            self.latched_at[sensor] = now;
        }
        if self.step == Step::Idle && self.state == FsmState::Streaming {
            self.trigger(now, ctx)?;
        }
        Ok(())
    }

    pub fn on_i2c_done(&mut self, now: SimTime, sensor: usize, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        if self.step != Step::Reading(sensor) {
            return Err(AgentError::UnexpectedEvent("i2c_done"));
        }
        let channel = self.model.sensor(sensor).ok_or(AgentError::UnknownSensor(sensor))?.channel;
        let mut body = [0u8; MAX_SAMPLE_LEN];
        let n = encode_sample(&self.sample, &mut body)?;
        self.tx_len = self.transport.slave_emit_data(channel, &body[..n], &mut self.tx_frame)?;
        let c = &mut self.cycle.trace;
        c.p3_ns += self.costs.p3_serialize_ns;
        c.p4_ns += self.costs.p4_transition_ns;
        c.samples += 1;
        self.step = Step::Transmit;
        let at = now + self.costs.p3_serialize_ns + self.costs.p4_transition_ns;
        self.continue_at(now, at, ctx)
    }

    pub fn on_task_wake(&mut self, now: SimTime, task: u8, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        match (task, self.step) {
            (TASK_EXTI, Step::Dispatch { stage }) => {
                // `stage + 1` switches are done; the last one wakes the stream.
                if stage + 2 < self.costs.dispatch_stages {
                    self.step = Step::Dispatch { stage: stage + 1 };
                    ctx.kernel.schedule(now + self.costs.switch_ns, EventKind::TaskWake { task: TASK_EXTI })?;
                } else {
                    self.stream_signal.raise();
                    self.step = Step::Dispatch { stage: stage + 1 };
                    ctx.kernel.schedule(now + self.costs.switch_ns, EventKind::TaskWake { task: TASK_STREAM })?;
                }
                Ok(())
            }
            (TASK_STREAM, Step::Dispatch { .. }) => self.begin_stream(now, ctx),
            (TASK_STREAM, _) => self.advance(now, ctx),
            (TASK_COMMAND, Step::Command) => {
                self.step = Step::Idle;
                self.resume(now, ctx)
            }
            _ => Err(AgentError::UnexpectedEvent("task_wake")),
        }
    }

    /// Bytes arriving on the downlink. A complete command is queued; when
    /// the CPU is idle it is handled at once, otherwise after the current
    /// cycle. `stop_log` also raises the stop request immediately.
    pub fn on_rx_bytes(&mut self, now: SimTime, bytes: &[u8], ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        let transport = &mut self.transport;
        let inbox = &mut self.inbox;
        let cmd_buf = &mut self.cmd_buf;
        let stats = &mut self.stats;
        let model = &self.model;
        let state = self.state;
        let stop = &self.stop_requested;
        self.rx.feed(bytes, |res| {
            let frame = match res {
                Ok(f) => f,
                Err(_) => {
                    stats.rx_frame_errors += 1;
                    return;
                }
            };
            let (payload, kind): (&[u8], fn(usize) -> Inbox) = match transport.slave_receive(&frame) {
                Ok(SlaveInbound::Command(p)) => (p, Inbox::Command),
                Ok(SlaveInbound::Ping(p)) => (p, Inbox::Ping),
                Ok(SlaveInbound::Beacon) => return,
                Err(_) => {
                    stats.protocol_errors += 1;
                    return;
                }
            };
            if inbox.is_some() || payload.len() > CMD_BUF_CAP {
                stats.protocol_errors += 1;
                return;
            }
            cmd_buf[..payload.len()].copy_from_slice(payload);
            *inbox = Some(kind(payload.len()));
            if state == FsmState::Streaming && parse_command(payload, model) == Ok(Command::StopLog) {
                stop.store(true, Ordering::Release);
            }
        });
        if self.step == Step::Idle && self.inbox.is_some() {
            self.handle_inbox(now, ctx)?;
        }
        Ok(())
    }

    /// Applies `cmd`. Only called while no cycle is running.
    pub fn handle_command(&mut self, now: SimTime, cmd: &Command, ctx: &mut AgentContext<'_>) -> Result<Reply, AgentError> {
        self.stats.commands += 1;
        match *cmd {
            Command::GetStatus => Ok(Reply::Status),
            Command::SetProperty { sensor, patch } => {
                if matches!(self.state, FsmState::Streaming | FsmState::Stopping) {
                    return Err(AgentError::ConfigRejected);
                }
                let desc = self.model.sensor(sensor).ok_or(AgentError::UnknownSensor(sensor))?;
                let mut cfg = self.configs[sensor];
                cfg.apply(&patch);
                desc.check(&cfg)?;
                self.configs[sensor] = cfg;
                ctx.sensors.get_mut(sensor).ok_or(AgentError::UnknownSensor(sensor))?.set_config(cfg);
                self.state = FsmState::Configured;
                Ok(Reply::Ok)
            }
            Command::StartLog => {
                let can_start = matches!(self.state, FsmState::Idle | FsmState::Configured)
                    && self.configs.iter().any(|c| c.enabled);
                if !can_start {
                    return Err(AgentError::InvalidTransition { state: self.state, command: "start_log" });
                }
                for (id, s) in ctx.sensors.iter_mut().enumerate() {
                    if self.configs.get(id).is_some_and(|c| c.enabled) {
                        let first = s.arm(now)?;
                        ctx.kernel.schedule(first, EventKind::SensorDrdy { sensor: id as u8, generation: s.generation() })?;
                    }
                }
                self.transport.start_streaming()?;
                self.stop_requested.store(false, Ordering::Release);
                self.stopped_by_request = false;
                self.state = FsmState::Streaming;
                Ok(Reply::Ok)
            }
            Command::StopLog => {
                if self.state == FsmState::Streaming {
                    self.stop_streaming(ctx);
                    Ok(Reply::Ok)
                } else if std::mem::take(&mut self.stopped_by_request) {
                    Ok(Reply::Ok)
                } else {
                    Err(AgentError::InvalidTransition { state: self.state, command: "stop_log" })
                }
            }
        }
    }

    fn stop_streaming(&mut self, ctx: &mut AgentContext<'_>) {
        self.state = FsmState::Stopping;
        for s in ctx.sensors.iter_mut() {
            s.disarm();
        }
        for f in &self.drdy_flags {
            if f.swap(false, Ordering::AcqRel) {
                self.stats.flags_discarded += 1;
            }
        }
        let _ = self.transport.stop_streaming();
        self.stop_requested.store(false, Ordering::Release);
        self.state = FsmState::Idle;
    }

    fn handle_inbox(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        let Some(item) = self.inbox.take() else { return Ok(()) };
        let (ptype, len) = match item {
            Inbox::Ping(n) => {
                self.reply_payload[..n].copy_from_slice(&self.cmd_buf[..n]);
                (PacketType::Ping, n)
            }
            Inbox::Command(n) => {
                let outcome = parse_command(&self.cmd_buf[..n], &self.model)
                    .map_err(AgentError::from)
                    .and_then(|cmd| self.handle_command(now, &cmd, ctx));
                match outcome {
                    Ok(Reply::Ok) => {
                        let ok = b"{\"ok\":true}";
                        self.reply_payload[..ok.len()].copy_from_slice(ok);
                        (PacketType::Response, ok.len())
                    }
                    Ok(Reply::Status) => {
                        let status = self.status();
                        (PacketType::Response, serialize_status(&status, &mut self.reply_payload[..])?)
                    }
                    Err(e) => {
                        self.stats.error_replies += 1;
                        (PacketType::Error, write_error(&e, &mut self.reply_payload[..])?)
                    }
                }
            }
        };
        let frame = Frame::new(ptype, 0, &self.reply_payload[..len]).map_err(TransportError::from)?;
        let n = encode_frame_into(&frame, &mut self.reply_frame[..]).map_err(TransportError::from)?;
        let ticket = ctx.uplink.transmit(now, &self.reply_frame[..n])?;
        ctx.kernel.schedule(ticket.completion, EventKind::UartTxDone { link: ctx.uplink.id() })?;
        self.step = Step::Command;
        ctx.kernel.schedule(ticket.cpu_free_at, EventKind::TaskWake { task: TASK_COMMAND })?;
        Ok(())
    }

    /// CPU became free: pending command first, then latched interrupts.
    fn resume(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        if self.inbox.is_some() {
            return self.handle_inbox(now, ctx);
        }
        let latched = self.drdy_flags.iter().any(|f| f.load(Ordering::Acquire));
        if self.state == FsmState::Streaming && latched {
            self.trigger(now, ctx)?;
        }
        Ok(())
    }

    fn trigger(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        self.cycle = Cycle { trace: CycleTrace { trigger: now, ..Default::default() }, ..Default::default() };
        let c = &self.costs;
        self.step = Step::Dispatch { stage: 0 };
        if c.dispatch_stages <= 1 {
            ctx.kernel.schedule(now + c.p1_dispatch_ns, EventKind::TaskWake { task: TASK_STREAM })?;
        } else {
            ctx.kernel.schedule(now + c.irq_entry_plus_switch(), EventKind::TaskWake { task: TASK_EXTI })?;
        }
        Ok(())
    }

    fn begin_stream(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        self.stream_signal.take();
        self.cycle.trace.stream_start = now;
        let latched: SensorSet = (0..MAX_SENSORS).filter(|&i| self.drdy_flags[i].load(Ordering::Acquire)).collect();
        let (set, status_cost) = resolve_drdy_source(latched, self.costs.status_read_ns > 0, self.costs.status_read_ns);
        let mut order = [0u8; MAX_SENSORS];
        let mut n = 0;
        for id in set.iter() {
            order[n] = id as u8;
            n += 1;
        }
        let latched_at = &self.latched_at;
        order[..n].sort_by_key(|&id| (latched_at[id as usize], id));
        self.cycle.queue = order;
        self.cycle.len = n as u8;
        self.cycle.trace.status_read_ns = status_cost;
        self.step = Step::ReadNext;
        self.continue_at(now, now + status_cost, ctx)
    }

    fn advance(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        match self.step {
            Step::ReadNext => self.read_next(now, ctx),
            Step::Transmit => self.transmit(now, ctx),
            Step::End => self.end_cycle(now, ctx),
            _ => Err(AgentError::UnexpectedEvent("task_wake")),
        }
    }

    /// Runs the current step at `at`, directly if that is now.
    fn continue_at(&mut self, now: SimTime, at: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        if at == now {
            self.advance(now, ctx)
        } else {
            ctx.kernel.schedule(at, EventKind::TaskWake { task: TASK_STREAM })?;
            Ok(())
        }
    }

    fn read_next(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        while self.cycle.pos < self.cycle.len {
            let id = self.cycle.queue[self.cycle.pos as usize] as usize;
            self.cycle.pos += 1;
            self.drdy_flags[id].store(false, Ordering::Release);
            self.stats.flags_read += 1;
            let sensor = ctx.sensors.get_mut(id).ok_or(AgentError::UnknownSensor(id))?;
            match sensor.i2c_read_sample(now, self.costs.p2_read_ns) {
                Ok((rec, done)) => {
                    self.sample = rec;
                    self.cycle.trace.p2_ns += done - now;
                    self.step = Step::Reading(id);
                    ctx.kernel.schedule(done, EventKind::I2cDone { sensor: id as u8 })?;
                    return Ok(());
                }
                Err(SensorError::NoDataReady(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let c = &self.costs;
        self.cycle.trace.log_ns = c.log_ns;
        self.cycle.trace.p6_ns = c.p6_rearm_ns;
        self.step = Step::End;
        let end = now + c.log_ns + c.p6_rearm_ns;
        self.continue_at(now, end, ctx)
    }

    fn transmit(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        match ctx.uplink.transmit(now, &self.tx_frame[..self.tx_len]) {
            Ok(ticket) => {
                ctx.kernel.schedule(ticket.completion, EventKind::UartTxDone { link: ctx.uplink.id() })?;
                self.stats.frames += 1;
                self.cycle.trace.uart_ns += ticket.cpu_free_at - now;
                self.step = Step::ReadNext;
                self.continue_at(now, ticket.cpu_free_at, ctx)
            }
            Err(UartError::BufferFull { .. }) => {
                // Spin until the oldest queued write leaves the ring.
                self.stats.uart_stalls += 1;
                let retry = ctx.uplink.next_completion().ok_or(UartError::BufferFull { needed: self.tx_len, free: 0 })?;
                self.cycle.trace.uart_ns += retry - now;
                ctx.kernel.schedule(retry, EventKind::TaskWake { task: TASK_STREAM })?;
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn end_cycle(&mut self, now: SimTime, ctx: &mut AgentContext<'_>) -> Result<(), AgentError> {
        let mut trace = self.cycle.trace;
        trace.end = now;
        let busy = trace.busy_ns();
        self.stats.cycles += 1;
        self.stats.busy_ns_total += busy;
        self.stats.max_busy_ns = self.stats.max_busy_ns.max(busy);
        if let Some(t) = &mut self.traces {
            t.push(trace);
        }
        self.step = Step::Idle;
        if self.stop_requested.load(Ordering::Acquire) && self.state == FsmState::Streaming {
            self.stop_streaming(ctx);
            self.stopped_by_request = true;
        }
        self.resume(now, ctx)
    }
}

impl CycleCosts {
    fn irq_entry_plus_switch(&self) -> u64 {
        self.p1_dispatch_ns - (self.dispatch_stages as u64 - 1) * self.switch_ns
    }
}

fn write_error(e: &AgentError, out: &mut [u8]) -> Result<usize, DataError> {
    let mut w = JsonWriter::new(out);
    w.raw("{")?.key("error", true)?.string(e.code())?;
    if let AgentError::Data(DataError::ValueOutOfRange { field }) = e {
        w.key("field", false)?.string(field)?;
    }
    w.raw("}")?;
    Ok(w.len())
}
