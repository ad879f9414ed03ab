use super::caps::CMD_BUF_CAP;
use super::error::DataError;
use super::json::{JsonReader, JsonStr};
use super::model::DeviceModel;
use crate::sensor::OdrHz;

/// Partial sensor configuration carried by `set_property`. Absent fields keep
/// their current value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfigPatch {
    pub enable: Option<bool>,
    pub odr: Option<OdrHz>,
    pub full_scale: Option<u16>,
}

/// A decoded command. `sensor` indexes into the [`DeviceModel`] it was
/// parsed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    GetStatus,
    SetProperty { sensor: usize, patch: ConfigPatch },
    StartLog,
    StopLog,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GetStatus => "get_status",
            Command::SetProperty { .. } => "set_property",
            Command::StartLog => "start_log",
            Command::StopLog => "stop_log",
        }
    }
}

fn dup(r: &JsonReader<'_>) -> DataError {
    DataError::MalformedJson { pos: r.position(), reason: "duplicate member" }
}

/// Skips every member of a command body object.
fn empty_body(r: &mut JsonReader<'_>) -> Result<(), DataError> {
    let mut cur = r.begin_object()?;
    while r.next_key(&mut cur)?.is_some() {
        r.skip_value()?;
    }
    Ok(())
}

fn set_property(r: &mut JsonReader<'_>, model: &DeviceModel) -> Result<Command, DataError> {
    let mut sensor: Option<JsonStr<'_>> = None;
    let mut enable = None;
    let mut odr: Option<u64> = None;
    let mut fs: Option<u64> = None;

    let mut cur = r.begin_object()?;
    while let Some(key) = r.next_key(&mut cur)? {
        if key.eq_str("sensor") {
            if sensor.is_some() {
                return Err(dup(r));
            }
            sensor = Some(r.read_str()?);
        } else if key.eq_str("enable") {
            if enable.is_some() {
                return Err(dup(r));
            }
            enable = Some(r.read_bool()?);
        } else if key.eq_str("odr") || key.eq_str("fs") {
            let slot = if key.eq_str("odr") { &mut odr } else { &mut fs };
            if slot.is_some() {
                return Err(dup(r));
            }
            let field = if key.eq_str("odr") { "odr" } else { "fs" };
            let n = r.read_number()?;
            *slot = Some(n.as_u64().ok_or(DataError::ValueOutOfRange { field })?);
        } else {
            r.skip_value()?;
        }
    }

    let Some(sensor) = sensor else {
        return Err(DataError::MalformedJson { pos: r.position(), reason: "missing `sensor`" });
    };
    let id = model
        .sensors()
        .iter()
        .position(|s| sensor.eq_str(&s.name))
        .ok_or(DataError::UnknownSensor)?;
    let desc = &model.sensors()[id];

    let odr = match odr {
        None => None,
        Some(hz) => {
            let o = u32::try_from(hz).ok().and_then(OdrHz::new);
            match o {
                Some(o) if desc.supports_odr(o) => Some(o),
                _ => return Err(DataError::ValueOutOfRange { field: "odr" }),
            }
        }
    };
    let full_scale = match fs {
        None => None,
        Some(v) => match u16::try_from(v) {
            Ok(v) if desc.supports_full_scale(v) => Some(v),
            _ => return Err(DataError::ValueOutOfRange { field: "fs" }),
        },
    };
    Ok(Command::SetProperty { sensor: id, patch: ConfigPatch { enable, odr, full_scale } })
}

/// Parses one command document.
///
/// The grammar is a single-member object whose key names the command:
///
/// ```text
/// {"get_status":{}}
/// {"set_property":{"sensor":"acc","enable":true,"odr":7680,"fs":2}}
/// {"start_log":{}}
/// {"stop_log":{}}
/// ```
///
/// Unrecognised members inside a command body are ignored.
pub fn parse_command(json: &[u8], model: &DeviceModel) -> Result<Command, DataError> {
    if json.len() > CMD_BUF_CAP {
        return Err(DataError::CapacityExceeded { limit: CMD_BUF_CAP });
    }
    let mut r = JsonReader::new(json);
    let mut cur = r.begin_object()?;
    let Some(key) = r.next_key(&mut cur)? else {
        return Err(DataError::MalformedJson { pos: r.position(), reason: "empty command object" });
    };
    let cmd = if key.eq_str("get_status") {
        empty_body(&mut r).map(|_| Command::GetStatus)
    } else if key.eq_str("start_log") {
        empty_body(&mut r).map(|_| Command::StartLog)
    } else if key.eq_str("stop_log") {
        empty_body(&mut r).map(|_| Command::StopLog)
    } else if key.eq_str("set_property") {
        set_property(&mut r, model)
    } else {
        // Still require well-formed input before calling it unknown.
        r.skip_value()?;
        Err(DataError::UnknownCommand)
    };
    let cmd = match cmd {
        Err(DataError::UnknownCommand) => None,
        other => Some(other?),
    };
    if r.next_key(&mut cur)?.is_some() {
        return Err(DataError::MalformedJson { pos: r.position(), reason: "more than one command" });
    }
    r.finish()?;
    cmd.ok_or(DataError::UnknownCommand)
}

/// Writes the canonical form of `cmd` into `out`.
pub fn write_command(cmd: &Command, model: &DeviceModel, out: &mut [u8]) -> Result<usize, DataError> {
    let mut w = super::json::JsonWriter::new(out);
    w.raw("{")?.key(cmd.name(), true)?.raw("{")?;
    if let Command::SetProperty { sensor, patch } = cmd {
        let desc = model.sensor(*sensor).ok_or(DataError::UnknownSensor)?;
        w.key("sensor", true)?.string(&desc.name)?;
        if let Some(e) = patch.enable {
            w.key("enable", false)?.boolean(e)?;
        }
        if let Some(o) = patch.odr {
            w.key("odr", false)?.uint(o.hz() as u64)?;
        }
        if let Some(fs) = patch.full_scale {
            w.key("fs", false)?.uint(fs as u64)?;
        }
    }
    w.raw("}}")?;
    Ok(w.len())
}
