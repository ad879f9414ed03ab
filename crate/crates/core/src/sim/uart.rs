use std::collections::VecDeque;

use thiserror::Error;

use super::params::TimingParams;
use super::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum UartError {
    #[error("link is closed")]
    LinkClosed,
    #[error("transmit ring full: {needed} bytes needed, {free} free")]
    BufferFull { needed: usize, free: usize },
    #[error("{len} bytes can never fit a {cap}-byte ring")]
    TooLarge { len: usize, cap: usize },
}

/// When a queued write releases the CPU and when it leaves the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxTicket {
    pub cpu_free_at: SimTime,
    pub completion: SimTime,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    done: SimTime,
    len: usize,
}

/// One direction of a simulated serial line.
///
/// Each write pays a setup latency, then occupies the wire for
/// `len * byte_ns`. Writes queue behind each other in a ring of fixed
/// capacity and reach the peer only through [`deliver`](Self::deliver), in
/// the order they were written.
#[derive(Debug, Clone)]
pub struct UartLink {
    id: u8,
    byte_ns: u64,
    setup_ns: u64,
    blocking: bool,
    capacity: usize,
    ring: VecDeque<u8>,
    segments: VecDeque<Segment>,
    wire_free: SimTime,
    open: bool,
    bytes_sent: u64,
    bytes_delivered: u64,
}

const MAX_SEGMENTS: usize = 256;

impl UartLink {
    pub fn new(id: u8, params: &TimingParams) -> Self {
        let capacity = params.uart_tx_buffer;
        UartLink {
            id,
            byte_ns: params.uart_byte_ns(),
            setup_ns: params.uart_setup_ns(),
            blocking: params.uart_blocking,
            capacity,
            ring: VecDeque::with_capacity(capacity),
            segments: VecDeque::with_capacity(MAX_SEGMENTS),
            wire_free: SimTime::ZERO,
            open: true,
            bytes_sent: 0,
            bytes_delivered: 0,
        }
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn setup_ns(&self) -> u64 {
        self.setup_ns
    }

    pub fn byte_ns(&self) -> u64 {
        self.byte_ns
    }

    pub fn close(&mut self) {
        self.open = false;
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn queued_bytes(&self) -> usize {
        self.ring.len()
    }

    pub fn bytes_sent(&self) -> u64 {
        self.bytes_sent
    }

    pub fn bytes_delivered(&self) -> u64 {
        self.bytes_delivered
    }

    /// Earliest completion still waiting for delivery.
    pub fn next_completion(&self) -> Option<SimTime> {
        self.segments.front().map(|s| s.done)
    }

    /// Queues `bytes` at `now`.
    ///
    /// Completion is `max(now + setup, wire free) + len * byte_ns`. A
    /// non-blocking write frees the CPU after the setup latency, a blocking
    /// one at completion. The caller schedules delivery at `completion`.
    pub fn transmit(&mut self, now: SimTime, bytes: &[u8]) -> Result<TxTicket, UartError> {
        if !self.open {
            return Err(UartError::LinkClosed);
        }
        if bytes.len() > self.capacity {
            return Err(UartError::TooLarge { len: bytes.len(), cap: self.capacity });
        }
        let free = self.capacity - self.ring.len();
        if bytes.len() > free || self.segments.len() == MAX_SEGMENTS {
            return Err(UartError::BufferFull { needed: bytes.len(), free });
        }
        let start = (now + self.setup_ns).max(self.wire_free);
        let completion = start + bytes.len() as u64 * self.byte_ns;
        self.wire_free = completion;
        self.ring.extend(bytes);
        self.segments.push_back(Segment { done: completion, len: bytes.len() });
        self.bytes_sent += bytes.len() as u64;
        let cpu_free_at = if self.blocking { completion } else { now + self.setup_ns };
        Ok(TxTicket { cpu_free_at, completion })
    }

    /// Hands every write completed by `now` to `sink`, oldest first. Returns
    /// the number of bytes delivered.
    pub fn deliver(&mut self, now: SimTime, mut sink: impl FnMut(&[u8])) -> usize {
        let mut total = 0;
        while let Some(seg) = self.segments.front().copied() {
            if seg.done > now {
                break;
            }
            self.segments.pop_front();
            let (a, b) = self.ring.as_slices();
            let first = seg.len.min(a.len());
            if first > 0 {
                sink(&a[..first]);
            }
            if seg.len > first {
                sink(&b[..seg.len - first]);
            }
            self.ring.drain(..seg.len);
            total += seg.len;
        }
        self.bytes_delivered += total as u64;
        total
    }
}
