use crate::data::{CLASSIFIER_SAMPLE_LEN, INERTIAL_SAMPLE_LEN};
use crate::protocol::{encoded_len, DATA_SEQ_LEN};
use crate::sim::TimingParams;

use super::AgentMode;

/// Encoded size of a data frame carrying one inertial sample.
pub const INERTIAL_FRAME_LEN: usize = encoded_len(DATA_SEQ_LEN + INERTIAL_SAMPLE_LEN);
/// Encoded size of a data frame carrying one classifier sample.
pub const CLASSIFIER_FRAME_LEN: usize = encoded_len(DATA_SEQ_LEN + CLASSIFIER_SAMPLE_LEN);

/// Per-phase CPU costs of one streaming cycle for a given architecture.
///
/// Phase names follow the trace intervals: P1 interrupt-to-stream dispatch,
/// P2 bus transfer, P3 serialisation, P4 stream-to-UART hand-off, P6 the
/// hand-back to the interrupt waiter (task architecture only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleCosts {
    pub switch_ns: u64,
    pub dispatch_stages: u32,
    pub p1_dispatch_ns: u64,
    /// Extra bus transaction to find the interrupt source, once per cycle.
    pub status_read_ns: u64,
    pub p2_read_ns: u64,
    pub p3_serialize_ns: u64,
    pub p4_transition_ns: u64,
    pub uart_setup_ns: u64,
    pub uart_byte_ns: u64,
    pub uart_blocking: bool,
    pub log_ns: u64,
    pub p6_rearm_ns: u64,
}

impl CycleCosts {
    pub fn new(mode: AgentMode, p: &TimingParams) -> Self {
        let sw = p.task_switch_ns();
        let tasks = mode == AgentMode::EventTasks;
        let stages = p.exti_dispatch_stages.unwrap_or(if tasks { 2 } else { 1 });
        CycleCosts {
            switch_ns: sw,
            dispatch_stages: stages,
            p1_dispatch_ns: p.irq_entry_ns + stages as u64 * sw,
            status_read_ns: if p.drdy_via_status_read { p.i2c_read_ns } else { 0 },
            p2_read_ns: p.i2c_read_ns,
            p3_serialize_ns: p.serialize_ns,
            p4_transition_ns: p.uart_transition_ns + if tasks { sw } else { 0 },
            uart_setup_ns: p.uart_setup_ns(),
            uart_byte_ns: p.uart_byte_ns(),
            uart_blocking: p.uart_blocking,
            log_ns: p.logging_overhead_ns,
            p6_rearm_ns: if tasks { p.exti_rearm_ns + sw } else { 0 },
        }
    }

    /// CPU time spent handing a frame of `len` bytes to an idle UART.
    pub fn uart_cpu_ns(&self, len: usize) -> u64 {
        if self.uart_blocking {
            self.uart_setup_ns + len as u64 * self.uart_byte_ns
        } else {
            self.uart_setup_ns
        }
    }

    /// Busy span of a cycle that services one sample of each given frame
    /// size, assuming the UART keeps up.
    pub fn busy_ns(&self, frame_lens: &[usize]) -> u64 {
        let per: u64 = frame_lens
            .iter()
            .map(|&len| self.p2_read_ns + self.p3_serialize_ns + self.p4_transition_ns + self.uart_cpu_ns(len))
            .sum();
        let status = if frame_lens.is_empty() { 0 } else { self.status_read_ns };
        self.p1_dispatch_ns + status + per + self.log_ns + self.p6_rearm_ns
    }

    /// Busy span for a single inertial sample per cycle.
    pub fn single_sensor_busy_ns(&self) -> u64 {
        self.busy_ns(&[INERTIAL_FRAME_LEN])
    }
}
