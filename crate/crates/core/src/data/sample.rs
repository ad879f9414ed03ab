use super::error::DataError;

/// Encoded size of an inertial record: timestamp plus three axes.
pub const INERTIAL_SAMPLE_LEN: usize = 14;
/// Encoded size of a classifier record: timestamp plus class label.
pub const CLASSIFIER_SAMPLE_LEN: usize = 9;
pub const MAX_SAMPLE_LEN: usize = INERTIAL_SAMPLE_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplePayload {
    /// Raw signed counts per axis.
    Inertial { x: i16, y: i16, z: i16 },
    Classifier { class_id: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleRecord {
    pub timestamp_us: u64,
    pub payload: SamplePayload,
}

impl SampleRecord {
    pub fn encoded_len(&self) -> usize {
        match self.payload {
            SamplePayload::Inertial { .. } => INERTIAL_SAMPLE_LEN,
            SamplePayload::Classifier { .. } => CLASSIFIER_SAMPLE_LEN,
        }
    }
}

/// Little-endian layout:
///
/// ```text
/// inertial:   [timestamp_us: u64][x: i16][y: i16][z: i16]
/// classifier: [timestamp_us: u64][class_id: u8]
/// ```
pub fn encode_sample(record: &SampleRecord, out: &mut [u8]) -> Result<usize, DataError> {
    let len = record.encoded_len();
    let Some(out) = out.get_mut(..len) else {
        return Err(DataError::CapacityExceeded { limit: out.len() });
    };
    out[..8].copy_from_slice(&record.timestamp_us.to_le_bytes());
    match record.payload {
        SamplePayload::Inertial { x, y, z } => {
            out[8..10].copy_from_slice(&x.to_le_bytes());
            out[10..12].copy_from_slice(&y.to_le_bytes());
            out[12..14].copy_from_slice(&z.to_le_bytes());
        }
        SamplePayload::Classifier { class_id } => out[8] = class_id,
    }
    Ok(len)
}

/// Inverse of [`encode_sample`]; the kind is implied by the length.
pub fn decode_sample(bytes: &[u8]) -> Result<SampleRecord, DataError> {
    let ts = |b: &[u8]| u64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
    let axis = |b: &[u8], at: usize| i16::from_le_bytes([b[at], b[at + 1]]);
    match bytes.len() {
        INERTIAL_SAMPLE_LEN => Ok(SampleRecord {
            timestamp_us: ts(bytes),
            payload: SamplePayload::Inertial { x: axis(bytes, 8), y: axis(bytes, 10), z: axis(bytes, 12) },
        }),
        CLASSIFIER_SAMPLE_LEN => Ok(SampleRecord {
            timestamp_us: ts(bytes),
            payload: SamplePayload::Classifier { class_id: bytes[8] },
        }),
        n => Err(DataError::BadSampleLength(n)),
    }
}
