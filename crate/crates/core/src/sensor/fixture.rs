use serde::Deserialize;
use thiserror::Error;

use super::odr::{OdrHz, Skew};
use super::virtual_sensor::{SensorParams, VirtualSensor};
use crate::data::{DeviceModel, ModelError, SensorConfig, SensorDescriptor, SensorKind};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("fixture model: {0}")]
    Model(#[from] ModelError),
    #[error("sensor `{0}`: skew terms must be positive")]
    BadSkew(String),
    #[error("sensor `{0}`: script longer than 32 labels")]
    ScriptTooLong(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindToml {
    Accelerometer,
    Gyroscope,
    Classifier,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorToml {
    name: String,
    channel: u8,
    kind: KindToml,
    odrs: Vec<OdrHz>,
    full_scales: Vec<u16>,
    #[serde(default)]
    skew: Option<[u32; 2]>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    script: Option<Vec<u8>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureToml {
    device: String,
    firmware: String,
    #[serde(rename = "sensor")]
    sensors: Vec<SensorToml>,
}

/// A device model plus the simulation parameters of each of its sensors.
///
/// File format (TOML):
///
/// ```toml
/// device = "vdp-imu-node"
/// firmware = "1.0.0"
///
/// [[sensor]]
/// name = "acc"
/// channel = 1
/// kind = "accelerometer"        # accelerometer | gyroscope | classifier
/// odrs = [15, 30, 60, 120, 240, 480, 960, 1920, 3840, 7680]
/// full_scales = [2, 4, 8, 16]
/// skew = [625, 642]             # achieved/nominal rate; optional
/// seed = 1                      # waveform seed; optional
/// script = [0, 1, 2]            # classifier labels; optional
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorFixture {
    pub model: DeviceModel,
    pub params: Vec<SensorParams>,
}

impl SensorFixture {
    /// The reference model with default skew and seeds 1, 2, 3.
    pub fn reference() -> Self {
        let model = DeviceModel::reference();
        let params = (0..model.sensors().len())
            .map(|i| SensorParams::new(Skew::DEFAULT, i as u64 + 1))
            .collect();
        SensorFixture { model, params }
    }

    pub fn from_toml_str(src: &str) -> Result<Self, FixtureError> {
        let raw: FixtureToml = toml::from_str(src)?;
        let mut model = DeviceModel::new(&raw.device, &raw.firmware)?;
        let mut params = Vec::with_capacity(raw.sensors.len());
        for s in raw.sensors {
            let kind = match s.kind {
                KindToml::Accelerometer => SensorKind::Accelerometer,
                KindToml::Gyroscope => SensorKind::Gyroscope,
                KindToml::Classifier => SensorKind::MlcClassifier,
            };
            model.add_sensor(SensorDescriptor::new(&s.name, s.channel, kind, &s.odrs, &s.full_scales)?)?;
            let skew = match s.skew {
                None => Skew::DEFAULT,
                Some([n, d]) => Skew::new(n, d).ok_or_else(|| FixtureError::BadSkew(s.name.clone()))?,
            };
            let mut p = SensorParams::new(skew, s.seed);
            if let Some(script) = s.script {
                p.script = heapless::Vec::from_slice(&script)
                    .map_err(|_| FixtureError::ScriptTooLong(s.name.clone()))?;
            }
            params.push(p);
        }
        Ok(SensorFixture { model, params })
    }

    /// Builds one virtual sensor per model entry with its default
    /// configuration.
    pub fn build_sensors(&self) -> Vec<VirtualSensor> {
        self.model
            .sensors()
            .iter()
            .zip(&self.params)
            .enumerate()
            .map(|(id, (d, p))| VirtualSensor::new(id, d.kind, d.default_config(), p.clone()))
            .collect()
    }

    pub fn default_configs(&self) -> Vec<SensorConfig> {
        self.model.default_configs().into_iter().collect()
    }
}
