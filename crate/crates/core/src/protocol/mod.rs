//! Wire protocol between a console and its client: four independent byte
//! streams carrying length-prefixed frames. See `PROTOCOL.md` for the registry.

mod frame;
mod message;
pub mod transport;

use thiserror::Error;

pub use frame::{encode, Frame, FrameDecoder, MAX_PAYLOAD};
pub use message::{
    decode_audio, decode_screen, encode_audio, encode_screen, opcode, Channel, Instruction,
    Message, Notification, PayloadReader, PayloadWriter, Request, WatchCommand,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("frame payload of {0} bytes exceeds the 16 MiB limit")]
    FrameTooLarge(usize),
    #[error("unknown opcode {opcode:#04x} on channel {channel}")]
    UnknownOpcode { channel: Channel, opcode: u8 },
}

/// Decodes every complete message in `bytes`, stopping at the first error.
pub fn decode_all(channel: Channel, bytes: &[u8]) -> Result<Vec<Message>, ProtocolError> {
    let mut d = FrameDecoder::new();
    d.push(bytes);
    let mut out = Vec::new();
    for f in d.by_ref() {
        out.push(Message::from_frame(channel, &f?)?);
    }
    if d.buffered() > 0 {
        return Err(ProtocolError::MalformedFrame(format!(
            "{} trailing bytes",
            d.buffered()
        )));
    }
    Ok(out)
}
