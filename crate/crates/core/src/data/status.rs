use heapless::Vec;

use super::caps::{MAX_SENSORS, STATUS_BUF_CAP};
use super::error::DataError;
use super::json::{JsonReader, JsonWriter};
use super::model::{valid_name, DeviceModel, Name, SensorConfig};
use crate::sensor::OdrHz;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorStatus {
    pub name: Name,
    pub channel: u8,
    pub config: SensorConfig,
}

/// Snapshot returned for `get_status`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceStatus {
    pub device: Name,
    pub firmware: Name,
    pub streaming: bool,
    pub sensors: Vec<SensorStatus, MAX_SENSORS>,
}

impl DeviceStatus {
    /// Pairs each sensor of `model` with the matching entry of `configs`.
    pub fn from_model(model: &DeviceModel, configs: &[SensorConfig], streaming: bool) -> Self {
        let sensors = model
            .sensors()
            .iter()
            .zip(configs)
            .map(|(d, c)| SensorStatus { name: d.name.clone(), channel: d.channel, config: *c })
            .collect();
        DeviceStatus {
            device: model.device_name.clone(),
            firmware: model.firmware_version.clone(),
            streaming,
            sensors,
        }
    }
}

/// Writes `status` as JSON:
///
/// ```text
/// {"device":"..","firmware":"..","streaming":false,
///  "sensors":[{"name":"acc","channel":1,"enable":true,"odr":7680,"fs":2},...]}
/// ```
///
/// Fails with `CapacityExceeded` instead of truncating.
pub fn serialize_status(status: &DeviceStatus, out: &mut [u8]) -> Result<usize, DataError> {
    let mut w = JsonWriter::new(out);
    w.raw("{")?
        .key("device", true)?
        .string(&status.device)?
        .key("firmware", false)?
        .string(&status.firmware)?
        .key("streaming", false)?
        .boolean(status.streaming)?
        .key("sensors", false)?
        .raw("[")?;
    for (i, s) in status.sensors.iter().enumerate() {
        if i > 0 {
            w.raw(",")?;
        }
        w.raw("{")?
            .key("name", true)?
            .string(&s.name)?
            .key("channel", false)?
            .uint(s.channel as u64)?
            .key("enable", false)?
            .boolean(s.config.enabled)?
            .key("odr", false)?
            .uint(s.config.odr.hz() as u64)?
            .key("fs", false)?
            .uint(s.config.full_scale as u64)?
            .raw("}")?;
    }
    w.raw("]}")?;
    Ok(w.len())
}

fn missing(r: &JsonReader<'_>, reason: &'static str) -> DataError {
    DataError::MalformedJson { pos: r.position(), reason }
}

fn read_name(r: &mut JsonReader<'_>, field: &'static str) -> Result<Name, DataError> {
    let s: Name = r.read_str()?.to_fixed()?;
    if valid_name(&s) {
        Ok(s)
    } else {
        Err(DataError::ValueOutOfRange { field })
    }
}

fn read_uint(r: &mut JsonReader<'_>, field: &'static str, max: u64) -> Result<u64, DataError> {
    match r.read_number()?.as_u64() {
        Some(v) if v <= max => Ok(v),
        _ => Err(DataError::ValueOutOfRange { field }),
    }
}

fn parse_sensor(r: &mut JsonReader<'_>) -> Result<SensorStatus, DataError> {
    let (mut name, mut channel, mut enable, mut odr, mut fs) = (None, None, None, None, None);
    let mut cur = r.begin_object()?;
    while let Some(key) = r.next_key(&mut cur)? {
        if key.eq_str("name") {
            name = Some(read_name(r, "name")?);
        } else if key.eq_str("channel") {
            let c = read_uint(r, "channel", 15)?;
            if c == 0 {
                return Err(DataError::ValueOutOfRange { field: "channel" });
            }
            channel = Some(c as u8);
        } else if key.eq_str("enable") {
            enable = Some(r.read_bool()?);
        } else if key.eq_str("odr") {
            let hz = read_uint(r, "odr", u32::MAX as u64)?;
            odr = Some(OdrHz::new(hz as u32).ok_or(DataError::ValueOutOfRange { field: "odr" })?);
        } else if key.eq_str("fs") {
            fs = Some(read_uint(r, "fs", u16::MAX as u64)? as u16);
        } else {
            r.skip_value()?;
        }
    }
    match (name, channel, enable, odr, fs) {
        (Some(name), Some(channel), Some(enabled), Some(odr), Some(full_scale)) => Ok(SensorStatus {
            name,
            channel,
            config: SensorConfig { enabled, odr, full_scale },
        }),
        _ => Err(missing(r, "incomplete sensor entry")),
    }
}

/// Inverse of [`serialize_status`]. Member order is free and unknown members
/// are skipped.
pub fn parse_status(json: &[u8]) -> Result<DeviceStatus, DataError> {
    if json.len() > STATUS_BUF_CAP {
        return Err(DataError::CapacityExceeded { limit: STATUS_BUF_CAP });
    }
    let mut r = JsonReader::new(json);
    let (mut device, mut firmware, mut streaming, mut sensors) = (None, None, None, None);
    let mut cur = r.begin_object()?;
    while let Some(key) = r.next_key(&mut cur)? {
        if key.eq_str("device") {
            device = Some(read_name(&mut r, "device")?);
        } else if key.eq_str("firmware") {
            firmware = Some(read_name(&mut r, "firmware")?);
        } else if key.eq_str("streaming") {
            streaming = Some(r.read_bool()?);
        } else if key.eq_str("sensors") {
            let mut list: Vec<SensorStatus, MAX_SENSORS> = Vec::new();
            let mut arr = r.begin_array()?;
            while r.next_element(&mut arr)? {
                let s = parse_sensor(&mut r)?;
                list.push(s).map_err(|_| DataError::CapacityExceeded { limit: MAX_SENSORS })?;
            }
            sensors = Some(list);
        } else {
            r.skip_value()?;
        }
    }
    r.finish()?;
    match (device, firmware, streaming, sensors) {
        (Some(device), Some(firmware), Some(streaming), Some(sensors)) => {
            Ok(DeviceStatus { device, firmware, streaming, sensors })
        }
        _ => Err(missing(&r, "incomplete status")),
    }
}
