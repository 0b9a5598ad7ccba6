//! Opcode registry and typed messages for channels A-D.
//!
//! Integers are big-endian. Names and identifiers are u16-length-prefixed UTF-8.

use std::fmt;

use super::{Frame, ProtocolError};
use crate::console::{Button, ControlEvent, FrameBuffer};

/// The four logical channels. A is the only console→client direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// Notifications and replies, console → client.
    A,
    /// Watch configuration.
    B,
    /// Control events.
    C,
    /// Instructions.
    D,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::A, Channel::B, Channel::C, Channel::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        (b'a' + self as u8) as char
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter().to_ascii_uppercase())
    }
}

pub mod opcode {
    // C
    pub const HOLD: u8 = 0x01;
    pub const RELEASE: u8 = 0x02;
    pub const DELAY: u8 = 0x03;
    // B
    pub const WATCH: u8 = 0x10;
    pub const CLEAR_ALL: u8 = 0x11;
    pub const SLEEP: u8 = 0x12;
    pub const WAKE: u8 = 0x13;
    pub const WATCH_BREAK: u8 = 0x14;
    // D
    pub const LOAD_GAME: u8 = 0x20;
    pub const LOAD_STATE: u8 = 0x21;
    pub const SAVE_STATE: u8 = 0x22;
    pub const FREEZE: u8 = 0x23;
    pub const UNFREEZE: u8 = 0x24;
    pub const SET_SPEED: u8 = 0x25;
    pub const READ: u8 = 0x26;
    pub const WRITE: u8 = 0x27;
    pub const GET_SCREEN: u8 = 0x28;
    pub const AUDIO_START: u8 = 0x29;
    pub const AUDIO_STOP: u8 = 0x2A;
    pub const KILL: u8 = 0x2B;
    // A
    pub const MEM_CHANGED: u8 = 0x80;
    pub const EVENT_DONE: u8 = 0x81;
    pub const REPLY: u8 = 0x82;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WatchCommand {
    Watch { id: u16, addr: u32, len: u16 },
    ClearAll,
    Sleep(u16),
    Wake(u16),
    /// Like `Watch`, but the console freezes at the end of the frame in which it fires.
    WatchBreak { id: u16, addr: u32, len: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    LoadGame(String),
    LoadState(String),
    SaveState(String),
    Freeze,
    Unfreeze,
    SetSpeed(u32),
    Read { addr: u32, len: u16 },
    Write { addr: u32, value: u8 },
    GetScreen,
    AudioStart,
    AudioStop,
    Kill,
}

impl Instruction {
    /// Whether a successful request is answered with REPLY (else EVENT_DONE).
    pub fn expects_reply(&self) -> bool {
        matches!(
            self,
            Instruction::SetSpeed(_)
                | Instruction::Read { .. }
                | Instruction::GetScreen
                | Instruction::AudioStop
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub req_id: u16,
    pub instruction: Instruction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Notification {
    MemChanged {
        id: u16,
        addr: u32,
        len: u16,
        bytes: Vec<u8>,
    },
    EventDone {
        req_id: u16,
        status: u8,
    },
    Reply {
        req_id: u16,
        payload: Vec<u8>,
    },
}

/// Any message on any channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Control(ControlEvent),
    Watch(WatchCommand),
    Request(Request),
    Notification(Notification),
}

impl Message {
    pub fn channel(&self) -> Channel {
        match self {
            Message::Control(_) => Channel::C,
            Message::Watch(_) => Channel::B,
            Message::Request(_) => Channel::D,
            Message::Notification(_) => Channel::A,
        }
    }

    pub fn to_frame(&self) -> Frame {
        let mut w = PayloadWriter::default();
        let op = match self {
            Message::Control(ev) => match *ev {
                ControlEvent::Hold(b) => {
                    w.u8(b.as_u8());
                    opcode::HOLD
                }
                ControlEvent::Release(b) => {
                    w.u8(b.as_u8());
                    opcode::RELEASE
                }
                ControlEvent::Delay { ms } => {
                    w.u32(ms);
                    opcode::DELAY
                }
            },
            Message::Watch(cmd) => match *cmd {
                WatchCommand::Watch { id, addr, len } => {
                    w.u16(id).u32(addr).u16(len);
                    opcode::WATCH
                }
                WatchCommand::WatchBreak { id, addr, len } => {
                    w.u16(id).u32(addr).u16(len);
                    opcode::WATCH_BREAK
                }
                WatchCommand::ClearAll => opcode::CLEAR_ALL,
                WatchCommand::Sleep(id) => {
                    w.u16(id);
                    opcode::SLEEP
                }
                WatchCommand::Wake(id) => {
                    w.u16(id);
                    opcode::WAKE
                }
            },
            Message::Request(Request {
                req_id,
                instruction,
            }) => {
                w.u16(*req_id);
                match instruction {
                    Instruction::LoadGame(n) => {
                        w.string(n);
                        opcode::LOAD_GAME
                    }
                    Instruction::LoadState(n) => {
                        w.string(n);
                        opcode::LOAD_STATE
                    }
                    Instruction::SaveState(n) => {
                        w.string(n);
                        opcode::SAVE_STATE
                    }
                    Instruction::Freeze => opcode::FREEZE,
                    Instruction::Unfreeze => opcode::UNFREEZE,
                    Instruction::SetSpeed(p) => {
                        w.u32(*p);
                        opcode::SET_SPEED
                    }
                    Instruction::Read { addr, len } => {
                        w.u32(*addr).u16(*len);
                        opcode::READ
                    }
                    Instruction::Write { addr, value } => {
                        w.u32(*addr).u8(*value);
                        opcode::WRITE
                    }
                    Instruction::GetScreen => opcode::GET_SCREEN,
                    Instruction::AudioStart => opcode::AUDIO_START,
                    Instruction::AudioStop => opcode::AUDIO_STOP,
                    Instruction::Kill => opcode::KILL,
                }
            }
            Message::Notification(n) => match n {
                Notification::MemChanged {
                    id,
                    addr,
                    len,
                    bytes,
                } => {
                    w.u16(*id).u32(*addr).u16(*len).bytes(bytes);
                    opcode::MEM_CHANGED
                }
                Notification::EventDone { req_id, status } => {
                    w.u16(*req_id).u8(*status);
                    opcode::EVENT_DONE
                }
                Notification::Reply { req_id, payload } => {
                    w.u16(*req_id).bytes(payload);
                    opcode::REPLY
                }
            },
        };
        Frame::new(op, w.0)
    }

    /// Parses a frame received on `channel`.
    pub fn from_frame(channel: Channel, frame: &Frame) -> Result<Message, ProtocolError> {
        let mut r = PayloadReader::new(&frame.payload);
        let unknown = || ProtocolError::UnknownOpcode {
            channel,
            opcode: frame.opcode,
        };
        let msg = match channel {
            Channel::C => Message::Control(match frame.opcode {
                opcode::HOLD => ControlEvent::Hold(r.button()?),
                opcode::RELEASE => ControlEvent::Release(r.button()?),
                opcode::DELAY => ControlEvent::Delay { ms: r.u32()? },
                _ => return Err(unknown()),
            }),
            Channel::B => Message::Watch(match frame.opcode {
                opcode::WATCH => WatchCommand::Watch {
                    id: r.u16()?,
                    addr: r.u32()?,
                    len: r.u16()?,
                },
                opcode::WATCH_BREAK => WatchCommand::WatchBreak {
                    id: r.u16()?,
                    addr: r.u32()?,
                    len: r.u16()?,
                },
                opcode::CLEAR_ALL => WatchCommand::ClearAll,
                opcode::SLEEP => WatchCommand::Sleep(r.u16()?),
                opcode::WAKE => WatchCommand::Wake(r.u16()?),
                _ => return Err(unknown()),
            }),
            Channel::D => {
                if !(opcode::LOAD_GAME..=opcode::KILL).contains(&frame.opcode) {
                    return Err(unknown());
                }
                let req_id = r.u16()?;
                let instruction = match frame.opcode {
                    opcode::LOAD_GAME => Instruction::LoadGame(r.string()?),
                    opcode::LOAD_STATE => Instruction::LoadState(r.string()?),
                    opcode::SAVE_STATE => Instruction::SaveState(r.string()?),
                    opcode::FREEZE => Instruction::Freeze,
                    opcode::UNFREEZE => Instruction::Unfreeze,
                    opcode::SET_SPEED => Instruction::SetSpeed(r.u32()?),
                    opcode::READ => Instruction::Read {
                        addr: r.u32()?,
                        len: r.u16()?,
                    },
                    opcode::WRITE => Instruction::Write {
                        addr: r.u32()?,
                        value: r.u8()?,
                    },
                    opcode::GET_SCREEN => Instruction::GetScreen,
                    opcode::AUDIO_START => Instruction::AudioStart,
                    opcode::AUDIO_STOP => Instruction::AudioStop,
                    _ => Instruction::Kill,
                };
                Message::Request(Request {
                    req_id,
                    instruction,
                })
            }
            Channel::A => Message::Notification(match frame.opcode {
                opcode::MEM_CHANGED => {
                    let id = r.u16()?;
                    let addr = r.u32()?;
                    let len = r.u16()?;
                    let bytes = r.take(len as usize)?.to_vec();
                    Notification::MemChanged {
                        id,
                        addr,
                        len,
                        bytes,
                    }
                }
                opcode::EVENT_DONE => Notification::EventDone {
                    req_id: r.u16()?,
                    status: r.u8()?,
                },
                opcode::REPLY => {
                    let req_id = r.u16()?;
                    Notification::Reply {
                        req_id,
                        payload: r.rest().to_vec(),
                    }
                }
                _ => return Err(unknown()),
            }),
        };
        r.finish()?;
        Ok(msg)
    }

    pub fn encode(&self) -> Vec<u8> {
        // payloads built from typed fields stay far below the frame limit
        super::encode(&self.to_frame()).expect("typed message within frame limit")
    }
}

#[derive(Debug, Default)]
pub struct PayloadWriter(pub Vec<u8>);

impl PayloadWriter {
    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.0.push(v);
        self
    }
    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.extend_from_slice(b);
        self
    }
    pub fn string(&mut self, s: &str) -> &mut Self {
        let b = s.as_bytes();
        let n = b.len().min(u16::MAX as usize);
        self.u16(n as u16).bytes(&b[..n])
    }
}

pub struct PayloadReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        PayloadReader { data, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.data.len() - self.pos < n {
            return Err(ProtocolError::MalformedFrame("payload too short".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, ProtocolError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Result<u32, ProtocolError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn string(&mut self) -> Result<String, ProtocolError> {
        let n = self.u16()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| ProtocolError::MalformedFrame("invalid UTF-8 string".into()))
    }

    fn button(&mut self) -> Result<Button, ProtocolError> {
        let v = self.u8()?;
        Button::from_u8(v).ok_or_else(|| ProtocolError::MalformedFrame(format!("bad button {v}")))
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let s = &self.data[self.pos..];
        self.pos = self.data.len();
        s
    }

    pub fn finish(&self) -> Result<(), ProtocolError> {
        if self.pos != self.data.len() {
            return Err(ProtocolError::MalformedFrame("trailing payload bytes".into()));
        }
        Ok(())
    }
}

/// GET_SCREEN reply payload: width u16, height u16, RGB24 rows top to bottom.
pub fn encode_screen(fb: &FrameBuffer) -> Vec<u8> {
    let mut w = PayloadWriter::default();
    w.u16(fb.width() as u16)
        .u16(fb.height() as u16)
        .bytes(fb.as_bytes());
    w.0
}

pub fn decode_screen(payload: &[u8]) -> Result<FrameBuffer, ProtocolError> {
    let mut r = PayloadReader::new(payload);
    let w = r.u16()? as usize;
    let h = r.u16()? as usize;
    FrameBuffer::from_raw(w, h, r.rest().to_vec())
        .ok_or_else(|| ProtocolError::MalformedFrame("screen size mismatch".into()))
}

/// AUDIO_STOP reply payload: sample_rate u32, count u32, i16 BE samples.
pub fn encode_audio(sample_rate: u32, samples: &[i16]) -> Vec<u8> {
    let mut w = PayloadWriter::default();
    w.u32(sample_rate).u32(samples.len() as u32);
    for s in samples {
        w.bytes(&s.to_be_bytes());
    }
    w.0
}

pub fn decode_audio(payload: &[u8]) -> Result<(u32, Vec<i16>), ProtocolError> {
    let mut r = PayloadReader::new(payload);
    let rate = r.u32()?;
    let n = r.u32()? as usize;
    let raw = r.take(n * 2)?;
    r.finish()?;
    let samples = raw
        .chunks_exact(2)
        .map(|c| i16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((rate, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hold_up_bytes() {
        let m = Message::Control(ControlEvent::Hold(Button::Up));
        assert_eq!(m.encode(), vec![0, 0, 0, 2, 0x01, 0x00]);
    }

    #[test]
    fn delay_bytes() {
        let m = Message::Control(ControlEvent::Delay { ms: 100 });
        assert_eq!(m.encode(), vec![0, 0, 0, 5, 0x03, 0, 0, 0, 0x64]);
    }

    #[test]
    fn set_speed_bytes() {
        let m = Message::Request(Request {
            req_id: 7,
            instruction: Instruction::SetSpeed(200),
        });
        assert_eq!(m.encode(), vec![0, 0, 0, 7, 0x25, 0, 7, 0, 0, 0, 0xC8]);
    }

    #[test]
    fn opcode_on_wrong_channel_is_unknown() {
        let f = Frame::new(opcode::HOLD, vec![0]);
        assert!(matches!(
            Message::from_frame(Channel::D, &f),
            Err(ProtocolError::UnknownOpcode { channel: Channel::D, opcode: 0x01 })
        ));
        let f = Frame::new(0x7F, vec![]);
        assert!(Message::from_frame(Channel::A, &f).is_err());
    }

    #[test]
    fn screen_and_audio_payloads_round_trip() {
        let fb = FrameBuffer::with_size(3, 2);
        assert_eq!(decode_screen(&encode_screen(&fb)).unwrap(), fb);
        let (rate, s) = decode_audio(&encode_audio(22_050, &[1, -1, i16::MIN])).unwrap();
        assert_eq!((rate, s), (22_050, vec![1, -1, i16::MIN]));
    }

    pub(crate) fn arb_message() -> impl Strategy<Value = Message> {
        let button = (0u8..14).prop_map(|b| Button::from_u8(b).unwrap());
        let name = "[a-z0-9?=&]{0,12}";
        prop_oneof![
            button.clone().prop_map(|b| Message::Control(ControlEvent::Hold(b))),
            button.prop_map(|b| Message::Control(ControlEvent::Release(b))),
            any::<u32>().prop_map(|ms| Message::Control(ControlEvent::Delay { ms })),
            (any::<u16>(), any::<u32>(), any::<u16>())
                .prop_map(|(id, addr, len)| Message::Watch(WatchCommand::Watch { id, addr, len })),
            (any::<u16>(), any::<u32>(), any::<u16>()).prop_map(|(id, addr, len)| Message::Watch(
                WatchCommand::WatchBreak { id, addr, len }
            )),
            Just(Message::Watch(WatchCommand::ClearAll)),
            any::<u16>().prop_map(|id| Message::Watch(WatchCommand::Sleep(id))),
            any::<u16>().prop_map(|id| Message::Watch(WatchCommand::Wake(id))),
            (any::<u16>(), name).prop_map(|(req_id, n)| Message::Request(Request {
                req_id,
                instruction: Instruction::SaveState(n)
            })),
            (any::<u16>(), any::<u32>(), any::<u16>()).prop_map(|(req_id, addr, len)| {
                Message::Request(Request {
                    req_id,
                    instruction: Instruction::Read { addr, len },
                })
            }),
            (any::<u16>(), any::<u32>()).prop_map(|(req_id, p)| Message::Request(Request {
                req_id,
                instruction: Instruction::SetSpeed(p)
            })),
            any::<u16>().prop_map(|req_id| Message::Request(Request {
                req_id,
                instruction: Instruction::Kill
            })),
            (any::<u16>(), any::<u32>(), prop::collection::vec(any::<u8>(), 0..16)).prop_map(
                |(id, addr, bytes)| Message::Notification(Notification::MemChanged {
                    id,
                    addr,
                    len: bytes.len() as u16,
                    bytes
                })
            ),
            (any::<u16>(), any::<u8>()).prop_map(|(req_id, status)| Message::Notification(
                Notification::EventDone { req_id, status }
            )),
            (any::<u16>(), prop::collection::vec(any::<u8>(), 0..32)).prop_map(|(req_id, payload)| {
                Message::Notification(Notification::Reply { req_id, payload })
            }),
        ]
    }

    proptest! {
        #[test]
        fn typed_round_trip(m in arb_message()) {
            let f = m.to_frame();
            prop_assert_eq!(Message::from_frame(m.channel(), &f).unwrap(), m);
        }
    }
}
