//! Host-side master: runs command scripts, checks stream continuity and
//! records sessions.
//!
//! [`Controller`] is transport-agnostic: it hands out [`Action`]s and eats
//! received bytes. [`run_session`] drives it against a simulated agent;
//! the CLI drives the same type over TCP.

mod master;
mod recording;
mod script;

pub use master::{
    run_session, Action, Controller, ControllerError, ControllerOptions, DropHook, SessionConfig, SimController,
};
pub use recording::{export_recording, ChannelRecording, ReceivedFrame, SessionRecording, TranscriptEntry};
pub use script::{Script, ScriptError, ScriptStep};
