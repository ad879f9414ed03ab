//! Sensor-agent firmware logic in two architectures over one engine.
//!
//! * [`AgentMode::FsmLoop`]: an endless main loop polls event flags that the
//!   interrupt handler sets. One context switch separates the interrupt from
//!   the streaming code.
//! * [`AgentMode::EventTasks`]: an interrupt-waiting task is woken by the ISR
//!   and signals a streaming task, so dispatch takes two switches. The
//!   hand-off to the UART and the return to the interrupt waiter each add one
//!   more.
//!
//! Both run the same [`Agent`] state machine; only [`CycleCosts`] differ. The
//! agent reacts to kernel events ([`Agent::on_drdy_interrupt`],
//! [`Agent::on_i2c_done`], [`Agent::on_task_wake`]) and to command bytes
//! arriving over the downlink ([`Agent::on_rx_bytes`]). Commands are handled
//! between streaming cycles only; `stop_log` raises `stop_requested` as soon
//! as it arrives so the running cycle is the last one.

mod costs;
mod engine;
mod signal;

pub use costs::{CycleCosts, CLASSIFIER_FRAME_LEN, INERTIAL_FRAME_LEN};
pub use engine::{Agent, AgentContext, AgentError, AgentStats, CycleTrace, Reply, TASK_COMMAND, TASK_EXTI, TASK_STREAM};
pub use signal::Signal;

use core::fmt;
use core::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum AgentMode {
    #[serde(rename = "fsm")]
    FsmLoop,
    #[serde(rename = "tasks")]
    EventTasks,
}

impl AgentMode {
    pub const ALL: [AgentMode; 2] = [AgentMode::FsmLoop, AgentMode::EventTasks];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentMode::FsmLoop => "fsm",
            AgentMode::EventTasks => "tasks",
        }
    }
}

impl fmt::Display for AgentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fsm" => Ok(AgentMode::FsmLoop),
            "tasks" => Ok(AgentMode::EventTasks),
            other => Err(format!("unknown mode `{other}` (expected fsm or tasks)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsmState {
    Idle,
    Configured,
    Streaming,
    Stopping,
}
