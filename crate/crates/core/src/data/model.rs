use heapless::Vec;
use thiserror::Error;

use super::caps::{MAX_FULL_SCALES, MAX_ODRS, MAX_SENSORS, NAME_CAP};
use super::command::ConfigPatch;
use super::error::DataError;
use crate::sensor::OdrHz;

/// Fixed-capacity identifier.
pub type Name = heapless::String<NAME_CAP>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorKind {
    Accelerometer,
    Gyroscope,
    MlcClassifier,
}

impl SensorKind {
    /// Whether samples carry three axes (as opposed to a class label).
    pub fn is_inertial(self) -> bool {
        !matches!(self, SensorKind::MlcClassifier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("name `{0}` is empty, too long, or has characters outside [A-Za-z0-9_.- ]")]
    BadName(&'static str),
    #[error("channel {0} is outside 1..=15")]
    ChannelOutOfRange(u8),
    #[error("channel {0} is used twice")]
    DuplicateChannel(u8),
    #[error("sensor name is used twice")]
    DuplicateName,
    #[error("ODR list is empty, not strictly increasing, or too long")]
    BadOdrList,
    #[error("full-scale list is empty or too long")]
    BadFullScales,
    #[error("more than {MAX_SENSORS} sensors")]
    TooManySensors,
}

pub(crate) fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= NAME_CAP
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-' | b' '))
}

fn name(s: &str, what: &'static str) -> Result<Name, ModelError> {
    if !valid_name(s) {
        return Err(ModelError::BadName(what));
    }
    Name::try_from(s).map_err(|_| ModelError::BadName(what))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorDescriptor {
    pub name: Name,
    pub channel: u8,
    pub kind: SensorKind,
    pub odrs: Vec<OdrHz, MAX_ODRS>,
    pub full_scales: Vec<u16, MAX_FULL_SCALES>,
}

impl SensorDescriptor {
    pub fn new(
        sensor_name: &str,
        channel: u8,
        kind: SensorKind,
        odrs: &[OdrHz],
        full_scales: &[u16],
    ) -> Result<Self, ModelError> {
        if !(1..=15).contains(&channel) {
            return Err(ModelError::ChannelOutOfRange(channel));
        }
        if odrs.is_empty() || odrs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::BadOdrList);
        }
        if full_scales.is_empty() {
            return Err(ModelError::BadFullScales);
        }
        Ok(SensorDescriptor {
            name: name(sensor_name, "sensor")?,
            channel,
            kind,
            odrs: Vec::from_slice(odrs).map_err(|_| ModelError::BadOdrList)?,
            full_scales: Vec::from_slice(full_scales).map_err(|_| ModelError::BadFullScales)?,
        })
    }

    pub fn supports_odr(&self, odr: OdrHz) -> bool {
        self.odrs.contains(&odr)
    }

    pub fn supports_full_scale(&self, fs: u16) -> bool {
        self.full_scales.contains(&fs)
    }

    /// Power-on configuration: disabled, fastest rate, narrowest range.
    pub fn default_config(&self) -> SensorConfig {
        SensorConfig {
            enabled: false,
            odr: *self.odrs.last().expect("validated nonempty"),
            full_scale: self.full_scales[0],
        }
    }

    pub fn check(&self, config: &SensorConfig) -> Result<(), DataError> {
        if !self.supports_odr(config.odr) {
            return Err(DataError::ValueOutOfRange { field: "odr" });
        }
        if !self.supports_full_scale(config.full_scale) {
            return Err(DataError::ValueOutOfRange { field: "fs" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorConfig {
    pub enabled: bool,
    pub odr: OdrHz,
    pub full_scale: u16,
}

impl SensorConfig {
    pub fn apply(&mut self, patch: &ConfigPatch) {
        if let Some(e) = patch.enable {
            self.enabled = e;
        }
        if let Some(o) = patch.odr {
            self.odr = o;
        }
        if let Some(fs) = patch.full_scale {
            self.full_scale = fs;
        }
    }
}

/// Static description of a device: identity plus its sensor channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceModel {
    pub device_name: Name,
    pub firmware_version: Name,
    sensors: Vec<SensorDescriptor, MAX_SENSORS>,
}

impl DeviceModel {
    pub fn new(device_name: &str, firmware_version: &str) -> Result<Self, ModelError> {
        Ok(DeviceModel {
            device_name: name(device_name, "device")?,
            firmware_version: name(firmware_version, "firmware")?,
            sensors: Vec::new(),
        })
    }

    pub fn add_sensor(&mut self, sensor: SensorDescriptor) -> Result<usize, ModelError> {
        for s in &self.sensors {
            if s.channel == sensor.channel {
                return Err(ModelError::DuplicateChannel(sensor.channel));
            }
            if s.name == sensor.name {
                return Err(ModelError::DuplicateName);
            }
        }
        self.sensors.push(sensor).map_err(|_| ModelError::TooManySensors)?;
        Ok(self.sensors.len() - 1)
    }

    /// An inertial module with accelerometer, gyroscope and a classifier core.
    pub fn reference() -> Self {
        let all: std::vec::Vec<OdrHz> = OdrHz::ladder().collect();
        let mlc: std::vec::Vec<OdrHz> = OdrHz::ladder().filter(|o| o.hz() <= 960).collect();
        let mut m = DeviceModel::new("vdp-imu-node", "1.0.0").expect("static name");
        let acc = SensorDescriptor::new("acc", 1, SensorKind::Accelerometer, &all, &[2, 4, 8, 16]);
        let gyro = SensorDescriptor::new(
            "gyro",
            2,
            SensorKind::Gyroscope,
            &all,
            &[125, 250, 500, 1000, 2000, 4000],
        );
        let mlc = SensorDescriptor::new("mlc", 3, SensorKind::MlcClassifier, &mlc, &[1]);
        for s in [acc, gyro, mlc] {
            m.add_sensor(s.expect("static descriptor")).expect("static model");
        }
        m
    }

    pub fn sensors(&self) -> &[SensorDescriptor] {
        &self.sensors
    }

    pub fn sensor(&self, id: usize) -> Option<&SensorDescriptor> {
        self.sensors.get(id)
    }

    pub fn find(&self, sensor_name: &str) -> Option<usize> {
        self.sensors.iter().position(|s| s.name == sensor_name)
    }

    pub fn by_channel(&self, channel: u8) -> Option<usize> {
        self.sensors.iter().position(|s| s.channel == channel)
    }

    pub fn default_configs(&self) -> Vec<SensorConfig, MAX_SENSORS> {
        self.sensors.iter().map(SensorDescriptor::default_config).collect()
    }
}
