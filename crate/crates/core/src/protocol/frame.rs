use std::fmt;

use thiserror::Error;

pub const HEADER_LEN: usize = 4;
pub const TRAILER_LEN: usize = 2;
pub const FRAME_OVERHEAD: usize = HEADER_LEN + TRAILER_LEN;
pub const MAX_PAYLOAD_LEN: usize = u16::MAX as usize;

const CRC16_CCITT_FALSE: crc::Crc<u16> = crc::Crc::<u16>::new(&crc::CRC_16_IBM_3740);

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout).
pub fn crc16(bytes: &[u8]) -> u16 {
    CRC16_CCITT_FALSE.checksum(bytes)
}

/// XOR of the first three header bytes.
pub fn header_check(first3: [u8; 3]) -> u8 {
    first3[0] ^ first3[1] ^ first3[2]
}

/// Packet type carried in the high nibble of header byte 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketType {
    Beacon,
    Ping,
    Command,
    Response,
    DataAsync,
    Error,
}

impl PacketType {
    pub const ALL: [PacketType; 6] = [
        PacketType::Beacon,
        PacketType::Ping,
        PacketType::Command,
        PacketType::Response,
        PacketType::DataAsync,
        PacketType::Error,
    ];

    pub const fn code(self) -> u8 {
        match self {
            PacketType::Beacon => 0x0,
            PacketType::Ping => 0x1,
            PacketType::Command => 0x2,
            PacketType::Response => 0x3,
            PacketType::DataAsync => 0x4,
            PacketType::Error => 0x5,
        }
    }

    pub const fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0x0 => PacketType::Beacon,
            0x1 => PacketType::Ping,
            0x2 => PacketType::Command,
            0x3 => PacketType::Response,
            0x4 => PacketType::DataAsync,
            0x5 => PacketType::Error,
            _ => return None,
        })
    }

    /// Whether `channel` is legal for this packet type: streaming data lives
    /// on channels 1..=15, everything else on channel 0.
    pub const fn channel_ok(self, channel: u8) -> bool {
        match self {
            PacketType::DataAsync => channel >= 1 && channel <= 15,
            _ => channel == 0,
        }
    }
}

impl fmt::Display for PacketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PacketType::Beacon => "beacon",
            PacketType::Ping => "ping",
            PacketType::Command => "command",
            PacketType::Response => "response",
            PacketType::DataAsync => "data_async",
            PacketType::Error => "error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload of {len} bytes does not fit (limit {limit})")]
    Capacity { len: usize, limit: usize },
    #[error("channel {channel} is not valid for {packet_type} frames")]
    InvalidChannel { packet_type: PacketType, channel: u8 },
    #[error("truncated frame: need {needed} bytes, have {got}")]
    TruncatedFrame { needed: usize, got: usize },
    #[error("bad header check: computed {computed:#04x}, frame carries {carried:#04x}")]
    BadHeaderCheck { computed: u8, carried: u8 },
    #[error("bad payload CRC: computed {computed:#06x}, frame carries {carried:#06x}")]
    BadPayloadCrc { computed: u16, carried: u16 },
    #[error("unknown packet type {0:#x}")]
    UnknownPacketType(u8),
    #[error("declared frame length {declared} but {actual} bytes supplied")]
    LengthMismatch { declared: usize, actual: usize },
}

/// One frame, borrowing its payload.
///
/// The header and payload checks are not stored; they are a function of the
/// other fields and are recomputed by [`Frame::header_check`] and
/// [`Frame::payload_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame<'a> {
    pub packet_type: PacketType,
    pub channel: u8,
    pub payload: &'a [u8],
}

impl<'a> Frame<'a> {
    pub fn new(packet_type: PacketType, channel: u8, payload: &'a [u8]) -> Result<Self, FrameError> {
        let frame = Frame { packet_type, channel, payload };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !self.packet_type.channel_ok(self.channel) {
            return Err(FrameError::InvalidChannel {
                packet_type: self.packet_type,
                channel: self.channel,
            });
        }
        if self.payload.len() > MAX_PAYLOAD_LEN {
            return Err(FrameError::Capacity { len: self.payload.len(), limit: MAX_PAYLOAD_LEN });
        }
        Ok(())
    }

    pub fn payload_len(&self) -> u16 {
        self.payload.len() as u16
    }

    fn header_bytes(&self) -> [u8; 3] {
        let len = self.payload_len().to_le_bytes();
        [(self.packet_type.code() << 4) | (self.channel & 0x0f), len[0], len[1]]
    }

    pub fn header_check(&self) -> u8 {
        header_check(self.header_bytes())
    }

    pub fn payload_check(&self) -> u16 {
        crc16(self.payload)
    }
}

/// Total encoded size for a payload of `payload_len` bytes.
pub const fn encoded_len(payload_len: usize) -> usize {
    payload_len + FRAME_OVERHEAD
}

/// Encodes `frame` into `out`, returning the number of bytes written.
pub fn encode_frame_into(frame: &Frame<'_>, out: &mut [u8]) -> Result<usize, FrameError> {
    frame.validate()?;
    let total = encoded_len(frame.payload.len());
    if out.len() < total {
        return Err(FrameError::Capacity {
            len: frame.payload.len(),
            limit: out.len().saturating_sub(FRAME_OVERHEAD),
        });
    }
    let head = frame.header_bytes();
    out[..3].copy_from_slice(&head);
    out[3] = header_check(head);
    let body_end = HEADER_LEN + frame.payload.len();
    out[HEADER_LEN..body_end].copy_from_slice(frame.payload);
    out[body_end..total].copy_from_slice(&frame.payload_check().to_le_bytes());
    Ok(total)
}

/// Encodes `frame` into a freshly allocated buffer (host-side convenience).
pub fn encode_frame(frame: &Frame<'_>) -> Result<Vec<u8>, FrameError> {
    let mut out = vec![0u8; encoded_len(frame.payload.len())];
    encode_frame_into(frame, &mut out)?;
    Ok(out)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame<'_>, FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::TruncatedFrame { needed: HEADER_LEN, got: bytes.len() });
    }
    let head = [bytes[0], bytes[1], bytes[2]];
    let computed = header_check(head);
    if computed != bytes[3] {
        return Err(FrameError::BadHeaderCheck { computed, carried: bytes[3] });
    }
    let packet_type =
        PacketType::from_code(bytes[0] >> 4).ok_or(FrameError::UnknownPacketType(bytes[0] >> 4))?;
    let channel = bytes[0] & 0x0f;
    if !packet_type.channel_ok(channel) {
        return Err(FrameError::InvalidChannel { packet_type, channel });
    }
    let payload_len = u16::from_le_bytes([bytes[1], bytes[2]]) as usize;
    let total = encoded_len(payload_len);
    if bytes.len() < total {
        return Err(FrameError::TruncatedFrame { needed: total, got: bytes.len() });
    }
    if bytes.len() > total {
        return Err(FrameError::LengthMismatch { declared: total, actual: bytes.len() });
    }
    let payload = &bytes[HEADER_LEN..HEADER_LEN + payload_len];
    let carried = u16::from_le_bytes([bytes[total - 2], bytes[total - 1]]);
    let computed = crc16(payload);
    if computed != carried {
        return Err(FrameError::BadPayloadCrc { computed, carried });
    }
    Ok(Frame { packet_type, channel, payload })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bitwise CRC-16/CCITT-FALSE, independent of the table-driven crate.
    fn crc16_bitwise(bytes: &[u8]) -> u16 {
        let mut crc: u16 = 0xffff;
        for &b in bytes {
            crc ^= (b as u16) << 8;
            for _ in 0..8 {
                crc = if crc & 0x8000 != 0 { (crc << 1) ^ 0x1021 } else { crc << 1 };
            }
        }
        crc
    }

    #[test]
    fn crc_matches_bitwise_reference() {
        assert_eq!(crc16_bitwise(b"123456789"), 0x29b1);
        assert_eq!(crc16(b"123456789"), 0x29b1);
        for len in 0..64u8 {
            let data: Vec<u8> = (0..len).map(|i| i.wrapping_mul(37) ^ 0x5a).collect();
            assert_eq!(crc16(&data), crc16_bitwise(&data));
        }
    }

    #[test]
    fn empty_beacon_is_six_bytes() {
        let f = Frame::new(PacketType::Beacon, 0, &[]).unwrap();
        let bytes = encode_frame(&f).unwrap();
        assert_eq!(bytes.len(), 6);
        assert_eq!(&bytes[1..3], &[0, 0]);
        // CRC over nothing is the init value.
        assert_eq!(&bytes[4..6], &0xffffu16.to_le_bytes());
        assert_eq!(decode_frame(&bytes).unwrap(), f);
    }

    #[test]
    fn command_frame_bytes_match_hand_packing() {
        // Oracle: pack by hand, check with the bitwise CRC.
        let payload = b"{}";
        let b0 = 0x2u8 << 4; // channel 0
        let (l0, l1) = (2u8, 0u8);
        let crc = crc16_bitwise(payload).to_le_bytes();
        let expected = [b0, l0, l1, b0 ^ l0 ^ l1, b'{', b'}', crc[0], crc[1]];
        assert_eq!(expected, [0x20, 0x02, 0x00, 0x22, 0x7b, 0x7d, 0x96, 0x66]);

        let f = Frame::new(PacketType::Command, 0, payload).unwrap();
        assert_eq!(encode_frame(&f).unwrap(), expected);
    }

    #[test]
    fn channel_rules() {
        assert!(Frame::new(PacketType::Command, 1, &[]).is_err());
        assert!(Frame::new(PacketType::DataAsync, 0, &[]).is_err());
        assert!(Frame::new(PacketType::DataAsync, 15, &[]).is_ok());
        assert!(Frame::new(PacketType::DataAsync, 16, &[]).is_err());
    }

    #[test]
    fn oversize_payload_is_capacity_error() {
        let big = vec![0u8; MAX_PAYLOAD_LEN + 1];
        let f = Frame { packet_type: PacketType::Response, channel: 0, payload: &big };
        assert!(matches!(encode_frame(&f), Err(FrameError::Capacity { .. })));
        let mut small = [0u8; 7];
        let f = Frame::new(PacketType::Response, 0, b"ab").unwrap();
        assert!(matches!(encode_frame_into(&f, &mut small), Err(FrameError::Capacity { .. })));
    }

    #[test]
    fn decode_errors_are_distinct() {
        assert_eq!(decode_frame(&[]), Err(FrameError::TruncatedFrame { needed: 4, got: 0 }));

        let f = Frame::new(PacketType::Response, 0, b"{\"ok\":true}").unwrap();
        let good = encode_frame(&f).unwrap();

        let mut flipped = good.clone();
        flipped[5] ^= 0x01;
        assert!(matches!(decode_frame(&flipped), Err(FrameError::BadPayloadCrc { .. })));

        let mut bad_head = good.clone();
        bad_head[3] ^= 0xff;
        assert!(matches!(decode_frame(&bad_head), Err(FrameError::BadHeaderCheck { .. })));

        let mut unknown = good.clone();
        unknown[0] = 0x90;
        unknown[3] = unknown[0] ^ unknown[1] ^ unknown[2];
        assert_eq!(decode_frame(&unknown), Err(FrameError::UnknownPacketType(0x9)));

        assert!(matches!(
            decode_frame(&good[..good.len() - 1]),
            Err(FrameError::TruncatedFrame { .. })
        ));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_frame(&long), Err(FrameError::LengthMismatch { .. })));
    }

    #[test]
    fn every_single_bit_flip_is_rejected() {
        let payload: Vec<u8> = (0u8..24).collect();
        let f = Frame::new(PacketType::DataAsync, 3, &payload).unwrap();
        let good = encode_frame(&f).unwrap();
        for bit in 0..good.len() * 8 {
            let mut bytes = good.clone();
            bytes[bit / 8] ^= 1 << (bit % 8);
            assert!(decode_frame(&bytes).is_err(), "bit {bit} flip accepted");
        }
    }
}
