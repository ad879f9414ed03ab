//! Data layer: JSON command/response handling and binary sample records.
//!
//! Nothing in this module acquires heap memory once a [`DeviceModel`] has been
//! built: commands are parsed straight out of the caller's byte slice into
//! small `Copy` values, status documents are written into caller-provided
//! buffers, and names live in fixed-capacity strings.

pub mod caps;
mod command;
mod error;
pub mod json;
mod model;
mod sample;
mod status;

pub use command::{parse_command, write_command, Command, ConfigPatch};
pub use error::DataError;
pub use model::{DeviceModel, ModelError, Name, SensorConfig, SensorDescriptor, SensorKind};
pub use sample::{
    decode_sample, encode_sample, SamplePayload, SampleRecord, CLASSIFIER_SAMPLE_LEN,
    INERTIAL_SAMPLE_LEN, MAX_SAMPLE_LEN,
};
pub use status::{parse_status, serialize_status, DeviceStatus, SensorStatus};
