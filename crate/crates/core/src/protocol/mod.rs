//! Framing and transport layers.
//!
//! A frame on the wire is a 4-byte header, the payload and a 2-byte CRC:
//!
//! ```text
//! +-------------------+-----------+-----------+------------+---------+-----------+
//! | type:4 | chan:4   | len (LE)  |  len (LE) | hdr check  | payload | CRC16 LE  |
//! | byte 0            | byte 1    |  byte 2   | byte 3     | len     | 2 bytes   |
//! +-------------------+-----------+-----------+------------+---------+-----------+
//! ```
//!
//! The header check is the XOR of bytes 0..3; the trailer is CRC-16/CCITT-FALSE
//! over the payload only. See `PROTOCOL.md` at the repository root for worked
//! examples.

mod decoder;
mod frame;
mod transport;

pub use decoder::FrameDecoder;
pub use frame::{
    crc16, decode_frame, encode_frame, encode_frame_into, encoded_len, header_check, Frame,
    FrameError, PacketType, FRAME_OVERHEAD, HEADER_LEN, MAX_PAYLOAD_LEN, TRAILER_LEN,
};
pub use transport::{
    Inbound, PendingRequest, Role, SessionState, SlaveInbound, TransportError, TransportSession,
    DATA_SEQ_LEN,
};
