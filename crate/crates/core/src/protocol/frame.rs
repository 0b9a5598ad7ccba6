//! Length-prefixed framing shared by all four channels.
//!
//! ```text
//! +----------------------+--------+-----------------+
//! | length u32 BE        | opcode | payload         |
//! | = 1 + payload bytes  | u8     | length-1 bytes  |
//! +----------------------+--------+-----------------+
//! ```

use super::ProtocolError;

/// Largest payload accepted on the wire.
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

/// One framed opcode + payload unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub opcode: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(opcode: u8, payload: Vec<u8>) -> Self {
        Frame { opcode, payload }
    }

    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        encode(self)
    }
}

pub fn encode(frame: &Frame) -> Result<Vec<u8>, ProtocolError> {
    if frame.payload.len() > MAX_PAYLOAD {
        return Err(ProtocolError::FrameTooLarge(frame.payload.len()));
    }
    let len = 1 + frame.payload.len() as u32;
    let mut out = Vec::with_capacity(5 + frame.payload.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.push(frame.opcode);
    out.extend_from_slice(&frame.payload);
    Ok(out)
}

/// Incremental decoder for one byte stream. A partial trailing frame stays
/// buffered until the rest arrives.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    pos: usize,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.pos > 0 && self.pos == self.buf.len() {
            self.buf.clear();
            self.pos = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Next complete frame, `None` if more bytes are needed.
    ///
    /// A zero length is reported as `MalformedFrame` and its header skipped,
    /// so decoding can continue. An oversized length cannot be resynchronised;
    /// the buffer is dropped.
    pub fn next_frame(&mut self) -> Option<Result<Frame, ProtocolError>> {
        let avail = &self.buf[self.pos..];
        if avail.len() < 4 {
            self.compact();
            return None;
        }
        let len = u32::from_be_bytes([avail[0], avail[1], avail[2], avail[3]]) as usize;
        if len == 0 {
            self.pos += 4;
            return Some(Err(ProtocolError::MalformedFrame("zero-length frame".into())));
        }
        if len - 1 > MAX_PAYLOAD {
            self.buf.clear();
            self.pos = 0;
            return Some(Err(ProtocolError::FrameTooLarge(len - 1)));
        }
        if avail.len() < 4 + len {
            self.compact();
            return None;
        }
        let opcode = avail[4];
        let payload = avail[5..4 + len].to_vec();
        self.pos += 4 + len;
        Some(Ok(Frame { opcode, payload }))
    }

    fn compact(&mut self) {
        if self.pos > 0 {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
    }
}

impl Iterator for FrameDecoder {
    type Item = Result<Frame, ProtocolError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_length_frame_is_malformed() {
        let mut d = FrameDecoder::new();
        d.push(&[0, 0, 0, 0, 0, 0, 0, 1, 0x23]);
        assert!(matches!(d.next_frame(), Some(Err(ProtocolError::MalformedFrame(_)))));
        assert_eq!(d.next_frame().unwrap().unwrap(), Frame::new(0x23, vec![]));
        assert!(d.next_frame().is_none());
    }

    #[test]
    fn partial_frame_waits() {
        let bytes = encode(&Frame::new(0x01, vec![0])).unwrap();
        let mut d = FrameDecoder::new();
        d.push(&bytes[..3]);
        assert!(d.next_frame().is_none());
        d.push(&bytes[3..5]);
        assert!(d.next_frame().is_none());
        d.push(&bytes[5..]);
        assert_eq!(d.next_frame().unwrap().unwrap(), Frame::new(0x01, vec![0]));
    }

    #[test]
    fn oversize_payload_is_rejected() {
        let f = Frame::new(0x82, vec![0; MAX_PAYLOAD + 1]);
        assert!(matches!(encode(&f), Err(ProtocolError::FrameTooLarge(_))));
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(frames in prop::collection::vec(
            (any::<u8>(), prop::collection::vec(any::<u8>(), 0..64)), 0..16),
            cut in any::<prop::sample::Index>())
        {
            let frames: Vec<Frame> = frames.into_iter().map(|(o, p)| Frame::new(o, p)).collect();
            let mut stream = Vec::new();
            for f in &frames {
                stream.extend(encode(f).unwrap());
            }
            let at = if stream.is_empty() { 0 } else { cut.index(stream.len()) };
            let mut d = FrameDecoder::new();
            d.push(&stream[..at]);
            let mut out: Vec<Frame> = d.by_ref().map(Result::unwrap).collect();
            d.push(&stream[at..]);
            out.extend(d.by_ref().map(Result::unwrap));
            prop_assert_eq!(out, frames);
        }
    }
}
