//! Host-side implementation of a three-layer serial datalog protocol and of
//! two sensor-agent firmware architectures, driven by a deterministic
//! discrete-event simulator.
//!
//! Layering, bottom up:
//!
//! * [`protocol`]: frame codec and the point-to-point master/slave transport.
//! * [`data`]: JSON commands and status plus binary sample records, all bound
//!   to fixed-capacity storage.
//! * [`sim`]: virtual clock, event queue, timing parameters and the UART link.
//! * [`sensor`]: ODR-clocked virtual IMU channels raising data-ready events.
//! * [`agent`]: the sensor-agent logic as an FSM loop or as cooperative tasks.
//! * [`testbed`]: wires an agent, two UART links and a host endpoint together.
//! * [`controller`]: the host-side master that runs command scripts.
//! * [`footprint`]: ELF section/symbol accounting and RAM/ROM reports.

pub mod agent;
pub mod controller;
pub mod data;
pub mod footprint;
pub mod protocol;
pub mod sensor;
pub mod sim;
pub mod testbed;
