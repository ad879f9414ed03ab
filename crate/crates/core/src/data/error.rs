use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("malformed JSON at byte {pos}: {reason}")]
    MalformedJson { pos: usize, reason: &'static str },
    #[error("unknown command")]
    UnknownCommand,
    #[error("unknown sensor")]
    UnknownSensor,
    #[error("value out of range for `{field}`")]
    ValueOutOfRange { field: &'static str },
    #[error("capacity exceeded (limit {limit} bytes)")]
    CapacityExceeded { limit: usize },
    #[error("sample record of {0} bytes has no known layout")]
    BadSampleLength(usize),
}
