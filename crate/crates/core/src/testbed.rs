//! Wires an [`Agent`], its sensors and two UART links to a host endpoint.
//!
//! ```text
//!            uplink (UPLINK)
//!   Agent ─────────────────────▶ Host
//!         ◀─────────────────────
//!            downlink (DOWNLINK)
//! ```
//!
//! The host sees only bytes. The in-process controller is one [`Host`];
//! [`NullHost`] discards everything, and the TCP bridge in the CLI injects
//! bytes with [`Testbed::inject_downlink`].

use crate::agent::{Agent, AgentContext, AgentError, AgentMode};
use crate::sensor::{SensorFixture, VirtualSensor};
use crate::sim::{EventKind, Kernel, KernelError, SimEvent, SimTime, TimingParams, TxTicket, UartError, UartLink};

pub const UPLINK: u8 = 0;
pub const DOWNLINK: u8 = 1;

/// Pending-event capacity reserved in the kernel.
pub const KERNEL_CAPACITY: usize = 256;

/// The host's handle on the simulation while one of its callbacks runs.
pub struct HostIo<'a> {
    now: SimTime,
    kernel: &'a mut Kernel,
    downlink: &'a mut UartLink,
}

impl HostIo<'_> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Queues bytes towards the agent.
    pub fn send(&mut self, bytes: &[u8]) -> Result<TxTicket, UartError> {
        let t = self.downlink.transmit(self.now, bytes)?;
        self.kernel
            .schedule(t.completion, EventKind::UartTxDone { link: DOWNLINK })
            .expect("completion is not in the past");
        Ok(t)
    }

    pub fn set_timer(&mut self, at: SimTime, timer: u32) -> Result<(), KernelError> {
        self.kernel.schedule(at, EventKind::TimerFire { timer }).map(|_| ())
    }
}

/// The far end of the serial link.
pub trait Host {
    fn start(&mut self, _io: &mut HostIo<'_>) {}
    fn on_uplink_bytes(&mut self, bytes: &[u8], io: &mut HostIo<'_>);
    fn on_timer(&mut self, _timer: u32, _io: &mut HostIo<'_>) {}
}

/// Discards everything the agent sends.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullHost;

impl Host for NullHost {
    fn on_uplink_bytes(&mut self, _bytes: &[u8], _io: &mut HostIo<'_>) {}
}

/// Collects uplink bytes verbatim.
#[derive(Debug, Default, Clone)]
pub struct CaptureHost {
    pub bytes: Vec<u8>,
}

impl Host for CaptureHost {
    fn on_uplink_bytes(&mut self, bytes: &[u8], _io: &mut HostIo<'_>) {
        self.bytes.extend_from_slice(bytes);
    }
}

pub struct Testbed<H> {
    pub kernel: Kernel,
    pub agent: Agent,
    pub sensors: Vec<VirtualSensor>,
    pub uplink: UartLink,
    pub downlink: UartLink,
    pub host: H,
    started: bool,
}

impl<H: Host> Testbed<H> {
    pub fn new(mode: AgentMode, params: &TimingParams, fixture: &SensorFixture, host: H) -> Self {
        Testbed {
            kernel: Kernel::with_capacity(KERNEL_CAPACITY),
            agent: Agent::new(mode, params, fixture.model.clone()),
            sensors: fixture.build_sensors(),
            uplink: UartLink::new(UPLINK, params),
            downlink: UartLink::new(DOWNLINK, params),
            host,
            started: false,
        }
    }

    pub fn now(&self) -> SimTime {
        self.kernel.now()
    }

    fn host_io(&mut self) -> (&mut H, HostIo<'_>) {
        let now = self.kernel.now();
        (&mut self.host, HostIo { now, kernel: &mut self.kernel, downlink: &mut self.downlink })
    }

    fn ensure_started(&mut self) {
        if !self.started {
            self.started = true;
            let (host, mut io) = self.host_io();
            host.start(&mut io);
        }
    }

    /// Sends bytes towards the agent from outside any host callback.
    pub fn inject_downlink(&mut self, bytes: &[u8]) -> Result<TxTicket, UartError> {
        let (_, mut io) = self.host_io();
        io.send(bytes)
    }

    /// Dispatches the next event due by `limit`. Returns `None` when there
    /// is none.
    pub fn step(&mut self, limit: SimTime) -> Result<Option<SimEvent>, AgentError> {
        self.ensure_started();
        let Some(ev) = self.kernel.pop_until(limit) else { return Ok(None) };
        let now = ev.at;
        let mut ctx = AgentContext { kernel: &mut self.kernel, sensors: &mut self.sensors, uplink: &mut self.uplink };
        match ev.kind {
            EventKind::SensorDrdy { sensor, generation } => {
                self.agent.on_drdy_interrupt(now, sensor as usize, generation, &mut ctx)?
            }
            EventKind::I2cDone { sensor } => self.agent.on_i2c_done(now, sensor as usize, &mut ctx)?,
            EventKind::TaskWake { task } => self.agent.on_task_wake(now, task, &mut ctx)?,
            EventKind::UartTxDone { link: UPLINK } => {
                let host = &mut self.host;
                let mut io = HostIo { now, kernel: &mut self.kernel, downlink: &mut self.downlink };
                self.uplink.deliver(now, |b| host.on_uplink_bytes(b, &mut io));
            }
            EventKind::UartTxDone { .. } => {
                let agent = &mut self.agent;
                let mut result = Ok(());
                self.downlink.deliver(now, |b| {
                    if result.is_ok() {
                        result = agent.on_rx_bytes(now, b, &mut ctx);
                    }
                });
                result?;
            }
            EventKind::TimerFire { timer } => {
                let (host, mut io) = self.host_io();
                host.on_timer(timer, &mut io);
            }
        }
        Ok(Some(ev))
    }

    /// Dispatches every event due by `t`; the clock ends at `t`.
    pub fn run_until(&mut self, t: SimTime) -> Result<(), AgentError> {
        while self.step(t)?.is_some() {}
        self.kernel.advance_to(t);
        Ok(())
    }

    /// Steps until `done` holds or the clock would pass `limit`. Returns
    /// whether `done` was reached.
    pub fn run_while(&mut self, limit: SimTime, mut done: impl FnMut(&Self) -> bool) -> Result<bool, AgentError> {
        loop {
            if done(self) {
                return Ok(true);
            }
            if self.step(limit)?.is_none() {
                return Ok(done(self));
            }
        }
    }
}
