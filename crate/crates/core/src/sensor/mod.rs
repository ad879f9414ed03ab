//! Virtual inertial sensor channels.
//!
//! Each [`VirtualSensor`] owns a data-ready line clocked at its configured
//! [`OdrHz`] stretched by a [`Skew`]. Edge `k` after arming falls at
//! `epoch + floor(k / (odr * skew))`, so long runs never accumulate rounding
//! drift. Content is a seeded random walk (inertial kinds) or a scripted label
//! sequence (classifier kind); both depend only on the seed and edge index.

mod fixture;
mod odr;
mod virtual_sensor;

pub use fixture::{FixtureError, SensorFixture};
pub use odr::{NotOnLadder, OdrHz, Skew, ODR_LADDER};
pub use virtual_sensor::{
    resolve_drdy_source, SensorError, SensorParams, SensorSet, SensorStats, VirtualSensor,
    DEFAULT_MLC_SCRIPT,
};
