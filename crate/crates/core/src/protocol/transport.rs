use thiserror::Error;

use super::frame::{encode_frame_into, Frame, FrameError, PacketType, HEADER_LEN};

/// Sequence numbers occupy the first two payload bytes of every DataAsync
/// frame (little-endian, wrapping).
pub const DATA_SEQ_LEN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Master,
    Slave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionState {
    Idle,
    AwaitingResponse,
    Streaming,
}

/// The single synchronous request a master may have in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PendingRequest {
    Command,
    Ping,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("a {0:?} request is already outstanding")]
    PipelineViolation(PendingRequest),
    #[error("slave is not streaming")]
    NotStreaming,
    #[error("operation requires the {expected:?} role")]
    WrongRole { expected: Role },
    #[error("channel {0} is not a data channel")]
    InvalidChannel(u8),
    #[error("unexpected {packet_type} frame in state {state:?}")]
    UnexpectedFrame { packet_type: PacketType, state: SessionState },
    #[error("data frame payload shorter than the sequence number")]
    ShortData,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// What a master learns from one inbound frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inbound<'a> {
    /// Closes the outstanding request.
    Reply { packet_type: PacketType, payload: &'a [u8] },
    Data { channel: u8, seq: u16, body: &'a [u8] },
    Beacon,
}

/// What a slave learns from one inbound frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaveInbound<'a> {
    Command(&'a [u8]),
    Ping(&'a [u8]),
    Beacon,
}

/// Point-to-point master/slave transport state for one end of a link.
///
/// Stop-and-wait: a master holds at most one outstanding synchronous request.
/// The slave only enters `Streaming` through [`TransportSession::start_streaming`],
/// which the agent calls once it has acknowledged a start command.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransportSession {
    role: Role,
    state: SessionState,
    next_seq: [u16; 16],
    pending: Option<PendingRequest>,
}

impl TransportSession {
    pub fn new(role: Role) -> Self {
        TransportSession { role, state: SessionState::Idle, next_seq: [0; 16], pending: None }
    }

    pub fn master() -> Self {
        Self::new(Role::Master)
    }

    pub fn slave() -> Self {
        Self::new(Role::Slave)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn pending(&self) -> Option<PendingRequest> {
        self.pending
    }

    /// Next sequence number that will be used on `channel`.
    pub fn next_seq(&self, channel: u8) -> u16 {
        self.next_seq[(channel & 0x0f) as usize]
    }

    fn require(&self, role: Role) -> Result<(), TransportError> {
        if self.role == role {
            Ok(())
        } else {
            Err(TransportError::WrongRole { expected: role })
        }
    }

    fn open_request(&mut self, kind: PendingRequest) -> Result<(), TransportError> {
        self.require(Role::Master)?;
        if let Some(p) = self.pending {
            return Err(TransportError::PipelineViolation(p));
        }
        self.pending = Some(kind);
        self.state = SessionState::AwaitingResponse;
        Ok(())
    }

    pub fn master_send_command<'a>(&mut self, payload: &'a [u8]) -> Result<Frame<'a>, TransportError> {
        let frame = Frame::new(PacketType::Command, 0, payload)?;
        self.open_request(PendingRequest::Command)?;
        Ok(frame)
    }

    pub fn master_send_ping<'a>(&mut self, payload: &'a [u8]) -> Result<Frame<'a>, TransportError> {
        let frame = Frame::new(PacketType::Ping, 0, payload)?;
        self.open_request(PendingRequest::Ping)?;
        Ok(frame)
    }

    /// Gives up on the outstanding request (e.g. after a timeout).
    pub fn master_abandon(&mut self) {
        self.pending = None;
        if self.role == Role::Master {
            self.state = SessionState::Idle;
        }
    }

    /// Classifies an inbound frame on the master side and closes the pending
    /// request when the frame answers it.
    pub fn master_receive<'a>(&mut self, frame: &Frame<'a>) -> Result<Inbound<'a>, TransportError> {
        self.require(Role::Master)?;
        let unexpected = || TransportError::UnexpectedFrame {
            packet_type: frame.packet_type,
            state: self.state,
        };
        match frame.packet_type {
            PacketType::Response | PacketType::Error => {
                if self.pending != Some(PendingRequest::Command) {
                    return Err(unexpected());
                }
            }
            PacketType::Ping => {
                if self.pending != Some(PendingRequest::Ping) {
                    return Err(unexpected());
                }
            }
            PacketType::DataAsync => {
                if frame.payload.len() < DATA_SEQ_LEN {
                    return Err(TransportError::ShortData);
                }
                let seq = u16::from_le_bytes([frame.payload[0], frame.payload[1]]);
                return Ok(Inbound::Data {
                    channel: frame.channel,
                    seq,
                    body: &frame.payload[DATA_SEQ_LEN..],
                });
            }
            PacketType::Beacon => return Ok(Inbound::Beacon),
            PacketType::Command => return Err(unexpected()),
        }
        self.pending = None;
        self.state = SessionState::Idle;
        Ok(Inbound::Reply { packet_type: frame.packet_type, payload: frame.payload })
    }

    pub fn slave_receive<'a>(&mut self, frame: &Frame<'a>) -> Result<SlaveInbound<'a>, TransportError> {
        self.require(Role::Slave)?;
        match frame.packet_type {
            PacketType::Command => Ok(SlaveInbound::Command(frame.payload)),
            PacketType::Ping => Ok(SlaveInbound::Ping(frame.payload)),
            PacketType::Beacon => Ok(SlaveInbound::Beacon),
            other => Err(TransportError::UnexpectedFrame { packet_type: other, state: self.state }),
        }
    }

    /// Enters `Streaming` after a start command has been acknowledged.
    /// Sequence counters restart at zero for the new streaming session.
    pub fn start_streaming(&mut self) -> Result<(), TransportError> {
        self.require(Role::Slave)?;
        self.next_seq = [0; 16];
        self.state = SessionState::Streaming;
        Ok(())
    }

    pub fn stop_streaming(&mut self) -> Result<(), TransportError> {
        self.require(Role::Slave)?;
        self.state = SessionState::Idle;
        Ok(())
    }

    /// Builds a DataAsync frame carrying `body` on `channel` into `buf` and
    /// returns the encoded length. The sequence number is written into the
    /// first two payload bytes and the channel counter is advanced.
    pub fn slave_emit_data(
        &mut self,
        channel: u8,
        body: &[u8],
        buf: &mut [u8],
    ) -> Result<usize, TransportError> {
        self.require(Role::Slave)?;
        if self.state != SessionState::Streaming {
            return Err(TransportError::NotStreaming);
        }
        if !(1..=15).contains(&channel) {
            return Err(TransportError::InvalidChannel(channel));
        }
        let payload_len = DATA_SEQ_LEN + body.len();
        if buf.len() < HEADER_LEN + payload_len {
            return Err(FrameError::Capacity { len: payload_len, limit: buf.len() }.into());
        }
        let seq = self.next_seq[channel as usize];
        // Sample bodies are at most 14 bytes.
        let mut payload = [0u8; 64];
        if payload_len > payload.len() {
            return Err(FrameError::Capacity { len: payload_len, limit: payload.len() }.into());
        }
        payload[..DATA_SEQ_LEN].copy_from_slice(&seq.to_le_bytes());
        payload[DATA_SEQ_LEN..payload_len].copy_from_slice(body);
        let frame = Frame::new(PacketType::DataAsync, channel, &payload[..payload_len])?;
        let n = encode_frame_into(&frame, buf)?;
        self.next_seq[channel as usize] = seq.wrapping_add(1);
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::decode_frame;

    #[test]
    fn master_command_round() {
        let mut m = TransportSession::master();
        let f = m.master_send_command(b"{\"get_status\":{}}").unwrap();
        assert_eq!(f.packet_type, PacketType::Command);
        assert_eq!(m.state(), SessionState::AwaitingResponse);
        assert_eq!(
            m.master_send_command(b"{}"),
            Err(TransportError::PipelineViolation(PendingRequest::Command))
        );
        let reply = Frame::new(PacketType::Response, 0, b"{}").unwrap();
        assert!(matches!(m.master_receive(&reply), Ok(Inbound::Reply { .. })));
        assert_eq!(m.state(), SessionState::Idle);
        assert!(m.master_receive(&reply).is_err());
    }

    #[test]
    fn slave_sequence_counters() {
        let mut s = TransportSession::slave();
        let mut buf = [0u8; 32];
        assert_eq!(s.slave_emit_data(1, &[0; 4], &mut buf), Err(TransportError::NotStreaming));
        s.start_streaming().unwrap();
        let seqs: Vec<u16> = (0..2)
            .map(|_| {
                let n = s.slave_emit_data(1, &[9; 4], &mut buf).unwrap();
                let f = decode_frame(&buf[..n]).unwrap();
                u16::from_le_bytes([f.payload[0], f.payload[1]])
            })
            .collect();
        assert_eq!(seqs, [0, 1]);
        assert_eq!(s.slave_emit_data(0, &[], &mut buf), Err(TransportError::InvalidChannel(0)));
    }

    #[test]
    fn interleaved_channels_count_independently() {
        // Enumerate every interleaving of 3 emissions on ch1 and 3 on ch2 and
        // check that each channel observes 0,1,2.
        for mask in 0u8..64 {
            if mask.count_ones() != 3 {
                continue;
            }
            let mut s = TransportSession::slave();
            s.start_streaming().unwrap();
            let mut seen: [Vec<u16>; 3] = Default::default();
            let mut buf = [0u8; 32];
            for i in 0..6 {
                let ch = if mask & (1 << i) != 0 { 1 } else { 2 };
                let n = s.slave_emit_data(ch, &[], &mut buf).unwrap();
                let f = decode_frame(&buf[..n]).unwrap();
                seen[ch as usize].push(u16::from_le_bytes([f.payload[0], f.payload[1]]));
            }
            assert_eq!(seen[1], [0, 1, 2]);
            assert_eq!(seen[2], [0, 1, 2]);
        }
    }

    #[test]
    fn sequence_wraps() {
        let mut s = TransportSession::slave();
        s.start_streaming().unwrap();
        s.next_seq[4] = u16::MAX;
        let mut buf = [0u8; 16];
        s.slave_emit_data(4, &[], &mut buf).unwrap();
        assert_eq!(s.next_seq(4), 0);
    }

    #[test]
    fn roles_are_enforced() {
        let mut s = TransportSession::slave();
        assert_eq!(
            s.master_send_command(b"{}"),
            Err(TransportError::WrongRole { expected: Role::Master })
        );
        let mut m = TransportSession::master();
        assert_eq!(m.start_streaming(), Err(TransportError::WrongRole { expected: Role::Slave }));
    }
}
