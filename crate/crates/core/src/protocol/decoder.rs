use super::frame::{
    decode_frame, encoded_len, header_check, Frame, FrameError, PacketType, HEADER_LEN,
};

/// Incremental frame extractor for a raw byte stream.
///
/// Bytes are accumulated in a fixed `N`-byte buffer. A bad header check, an
/// unknown packet type or a frame too large for the buffer drops one byte and
/// rescans (resynchronisation); a bad payload CRC discards the whole frame,
/// since its length field was already covered by the header check.
#[derive(Debug, Clone)]
pub struct FrameDecoder<const N: usize> {
    buf: [u8; N],
    len: usize,
    errors: u64,
}

impl<const N: usize> Default for FrameDecoder<N> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const N: usize> FrameDecoder<N> {
    pub const fn new() -> Self {
        FrameDecoder { buf: [0; N], len: 0, errors: 0 }
    }

    /// Number of bytes currently buffered.
    pub fn buffered(&self) -> usize {
        self.len
    }

    /// Number of errors reported so far.
    pub fn errors(&self) -> u64 {
        self.errors
    }

    pub fn reset(&mut self) {
        self.len = 0;
    }

    /// Feeds bytes and reports every completed frame or framing error, in
    /// stream order.
    pub fn feed<F>(&mut self, bytes: &[u8], mut on_frame: F)
    where
        F: FnMut(Result<Frame<'_>, FrameError>),
    {
        for &b in bytes {
            self.buf[self.len] = b;
            self.len += 1;
            self.drain(&mut on_frame);
        }
    }

    fn drain<F>(&mut self, on_frame: &mut F)
    where
        F: FnMut(Result<Frame<'_>, FrameError>),
    {
        loop {
            if self.len < HEADER_LEN {
                return;
            }
            let head = [self.buf[0], self.buf[1], self.buf[2]];
            let computed = header_check(head);
            if computed != self.buf[3] {
                self.errors += 1;
                on_frame(Err(FrameError::BadHeaderCheck { computed, carried: self.buf[3] }));
                self.shift(1);
                continue;
            }
            let code = self.buf[0] >> 4;
            if PacketType::from_code(code).is_none() {
                self.errors += 1;
                on_frame(Err(FrameError::UnknownPacketType(code)));
                self.shift(1);
                continue;
            }
            let total = encoded_len(u16::from_le_bytes([head[1], head[2]]) as usize);
            if total > N {
                self.errors += 1;
                on_frame(Err(FrameError::Capacity { len: total, limit: N }));
                self.shift(1);
                continue;
            }
            if self.len < total {
                return;
            }
            let result = decode_frame(&self.buf[..total]);
            if result.is_err() {
                self.errors += 1;
            }
            on_frame(result);
            self.shift(total);
        }
    }

    fn shift(&mut self, n: usize) {
        self.buf.copy_within(n..self.len, 0);
        self.len -= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::encode_frame;

    fn collect<const N: usize>(dec: &mut FrameDecoder<N>, bytes: &[u8]) -> Vec<Result<Vec<u8>, FrameError>> {
        let mut out = Vec::new();
        dec.feed(bytes, |r| out.push(r.map(|f| f.payload.to_vec())));
        out
    }

    #[test]
    fn splits_concatenated_frames_fed_bytewise() {
        let a = encode_frame(&Frame::new(PacketType::Command, 0, b"abc").unwrap()).unwrap();
        let b = encode_frame(&Frame::new(PacketType::DataAsync, 2, &[1, 2, 3, 4]).unwrap()).unwrap();
        let stream: Vec<u8> = a.iter().chain(b.iter()).copied().collect();
        let mut dec = FrameDecoder::<64>::new();
        let mut got = Vec::new();
        for byte in &stream {
            got.extend(collect(&mut dec, std::slice::from_ref(byte)));
        }
        assert_eq!(got, vec![Ok(b"abc".to_vec()), Ok(vec![1, 2, 3, 4])]);
        assert_eq!(dec.buffered(), 0);
    }

    #[test]
    fn resyncs_after_garbage() {
        let a = encode_frame(&Frame::new(PacketType::Response, 0, b"ok").unwrap()).unwrap();
        let mut stream = vec![0xff, 0x13, 0x77];
        stream.extend_from_slice(&a);
        let mut dec = FrameDecoder::<64>::new();
        let got = collect(&mut dec, &stream);
        assert_eq!(got.last().unwrap(), &Ok(b"ok".to_vec()));
        assert!(got[..got.len() - 1].iter().all(|r| r.is_err()));
    }

    #[test]
    fn crc_error_discards_frame_only() {
        let mut a = encode_frame(&Frame::new(PacketType::Response, 0, b"xy").unwrap()).unwrap();
        a[4] ^= 0x40;
        let b = encode_frame(&Frame::new(PacketType::Response, 0, b"zz").unwrap()).unwrap();
        let mut dec = FrameDecoder::<64>::new();
        let mut got = collect(&mut dec, &a);
        got.extend(collect(&mut dec, &b));
        assert!(matches!(got[0], Err(FrameError::BadPayloadCrc { .. })));
        assert_eq!(got[1], Ok(b"zz".to_vec()));
    }
}
