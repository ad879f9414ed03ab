use core::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io;

use thiserror::Error;

use super::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Data-ready edge. `generation` ties the edge to one arming of the sensor.
    SensorDrdy { sensor: u8, generation: u32 },
    I2cDone { sensor: u8 },
    UartTxDone { link: u8 },
    TaskWake { task: u8 },
    TimerFire { timer: u32 },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SensorDrdy { .. } => "sensor_drdy",
            EventKind::I2cDone { .. } => "i2c_done",
            EventKind::UartTxDone { .. } => "uart_tx_done",
            EventKind::TaskWake { .. } => "task_wake",
            EventKind::TimerFire { .. } => "timer_fire",
        }
    }

    fn write_detail(&self, w: &mut impl io::Write) -> io::Result<()> {
        match *self {
            EventKind::SensorDrdy { sensor, generation } => write!(w, "sensor={sensor} gen={generation}"),
            EventKind::I2cDone { sensor } => write!(w, "sensor={sensor}"),
            EventKind::UartTxDone { link } => write!(w, "link={link}"),
            EventKind::TaskWake { task } => write!(w, "task={task}"),
            EventKind::TimerFire { timer } => write!(w, "timer={timer}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub at: SimTime,
    /// Insertion ordinal; breaks ties between events at the same instant.
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("event at {at} is earlier than the clock ({now})")]
    SchedulePastEvent { at: SimTime, now: SimTime },
}

/// Event queue plus virtual clock.
///
/// Events come out in `(at, seq)` order. The clock jumps to each event's time
/// as it is popped and never moves backwards.
#[derive(Debug, Default)]
pub struct Kernel {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<SimEvent>>,
    log: Option<Vec<SimEvent>>,
}

impl Kernel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pre-sizes the queue so that up to `events` pending entries never
    /// reallocate.
    pub fn with_capacity(events: usize) -> Self {
        Kernel { queue: BinaryHeap::with_capacity(events), ..Self::default() }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Starts recording every dispatched event.
    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn log(&self) -> &[SimEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn schedule(&mut self, at: SimTime, kind: EventKind) -> Result<u64, KernelError> {
        if at < self.now {
            return Err(KernelError::SchedulePastEvent { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(SimEvent { at, seq, kind }));
        Ok(seq)
    }

    pub fn schedule_in(&mut self, delay_ns: u64, kind: EventKind) -> u64 {
        let at = self.now + delay_ns;
        self.schedule(at, kind).expect("future event")
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|e| e.0.at)
    }

    /// Pops the next event if it is due at or before `limit`.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<SimEvent> {
        if self.peek_time()? > limit {
            return None;
        }
        let Reverse(ev) = self.queue.pop()?;
        self.now = ev.at;
        if let Some(log) = &mut self.log {
            log.push(ev);
        }
        Some(ev)
    }

    /// Moves the clock forward without dispatching anything.
    pub fn advance_to(&mut self, t: SimTime) {
        debug_assert!(self.peek_time().is_none_or(|p| p >= t));
        self.now = self.now.max(t);
    }

    /// Dispatches every event due by `t`, in order, and returns them. The
    /// clock ends at `t`.
    pub fn run_until(&mut self, t: SimTime) -> Vec<SimEvent> {
        let mut out = Vec::new();
        while let Some(ev) = self.pop_until(t) {
            out.push(ev);
        }
        self.now = self.now.max(t);
        out
    }
}

/// Writes events as CSV with columns `time_ns,kind,detail`.
pub fn write_event_log_csv(events: &[SimEvent], mut w: impl io::Write) -> io::Result<()> {
    writeln!(w, "time_ns,kind,detail")?;
    for e in events {
        write!(w, "{},{},", e.at.as_ns(), e.kind.name())?;
        e.kind.write_detail(&mut w)?;
        writeln!(w)?;
    }
    Ok(())
}
