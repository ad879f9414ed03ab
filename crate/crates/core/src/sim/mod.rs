//! Discrete-event simulation primitives.
//!
//! Everything is driven from one thread: a [`Kernel`] pops [`SimEvent`]s in
//! `(time, insertion)` order, and the components it drives ([`UartLink`],
//! sensors, the agent) compute their own completion times from
//! [`TimingParams`] and schedule follow-up events.

mod kernel;
mod params;
mod time;
mod uart;

pub use kernel::{write_event_log_csv, EventKind, Kernel, KernelError, SimEvent};
pub use params::{task_switch_latency, ParamsError, TimingParams, UART_BITS_PER_BYTE};
pub use time::SimTime;
pub use uart::{TxTicket, UartError, UartLink};
