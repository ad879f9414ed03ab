//! Capacity constants.
//!
//! Each constant can be overridden at build time through an environment
//! variable of the same name prefixed with `VDP_`, e.g.
//! `VDP_STATUS_BUF_CAP=2048 cargo build`.

const fn parse_or(value: Option<&str>, default: usize) -> usize {
    let Some(s) = value else { return default };
    let b = s.as_bytes();
    assert!(!b.is_empty(), "empty capacity override");
    let mut i = 0;
    let mut n = 0usize;
    while i < b.len() {
        assert!(b[i].is_ascii_digit(), "capacity override must be a decimal integer");
        n = n * 10 + (b[i] - b'0') as usize;
        i += 1;
    }
    n
}

/// Largest accepted command document, in bytes.
pub const CMD_BUF_CAP: usize = parse_or(option_env!("VDP_CMD_BUF_CAP"), 512);
/// Largest status document, in bytes.
pub const STATUS_BUF_CAP: usize = parse_or(option_env!("VDP_STATUS_BUF_CAP"), 1024);
/// Sensor, device and firmware names.
pub const NAME_CAP: usize = 32;
/// Sensors per device model.
pub const MAX_SENSORS: usize = 8;
/// Entries in a sensor's ODR list.
pub const MAX_ODRS: usize = 10;
/// Entries in a sensor's full-scale list.
pub const MAX_FULL_SCALES: usize = 8;
/// Nesting limit when skipping unknown JSON values.
pub const JSON_MAX_DEPTH: usize = 16;
