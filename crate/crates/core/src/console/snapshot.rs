//! Complete console state and its on-disk format.
//!
//! ```text
//! "VCLE" | version u16 BE | section* ; section = len u32 BE | bytes
//! sections, in order:
//!   0 RAM, deflate-compressed
//!   1 framebuffer: width u16, height u16, RGB24 rows
//!   2 cartridge load name (UTF-8, empty if none)
//!   3 cartridge blob
//!   4 counters: frame u64, speed u32, audio samples u64
//!   5 controller queue (JSON)
//!   6 mixer voices (JSON)
//! ```

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::{ConsoleError, ControlQueue, FrameBuffer, MixerState, Ram};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"VCLE";
pub const SNAPSHOT_VERSION: u16 = 1;
const SECTION_COUNT: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsoleSnapshot {
    pub ram: Ram,
    pub framebuffer: FrameBuffer,
    pub frame_counter: u64,
    pub cartridge_name: Option<String>,
    pub cartridge_state: Vec<u8>,
    pub controls: ControlQueue,
    pub speed_percent: u32,
    pub mixer: MixerState,
    pub audio_samples: u64,
}

fn bad(msg: impl Into<String>) -> ConsoleError {
    ConsoleError::BadSnapshot(msg.into())
}

impl ConsoleSnapshot {
    pub fn encode(&self) -> Result<Vec<u8>, ConsoleError> {
        let mut ram = DeflateEncoder::new(Vec::new(), Compression::fast());
        ram.write_all(self.ram.as_bytes())?;
        let ram = ram.finish()?;

        let mut fb = Vec::with_capacity(4 + self.framebuffer.as_bytes().len());
        fb.extend_from_slice(&(self.framebuffer.width() as u16).to_be_bytes());
        fb.extend_from_slice(&(self.framebuffer.height() as u16).to_be_bytes());
        fb.extend_from_slice(self.framebuffer.as_bytes());

        let mut counters = Vec::with_capacity(20);
        counters.extend_from_slice(&self.frame_counter.to_be_bytes());
        counters.extend_from_slice(&self.speed_percent.to_be_bytes());
        counters.extend_from_slice(&self.audio_samples.to_be_bytes());

        let controls = serde_json::to_vec(&self.controls).map_err(|e| bad(e.to_string()))?;
        let mixer = serde_json::to_vec(&self.mixer).map_err(|e| bad(e.to_string()))?;
        let name = self.cartridge_name.clone().unwrap_or_default().into_bytes();

        let sections: [&[u8]; SECTION_COUNT] = [
            &ram,
            &fb,
            &name,
            &self.cartridge_state,
            &counters,
            &controls,
            &mixer,
        ];
        let mut out = Vec::new();
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_be_bytes());
        for s in sections {
            out.extend_from_slice(&(s.len() as u32).to_be_bytes());
            out.extend_from_slice(s);
        }
        Ok(out)
    }

    pub fn decode(data: &[u8]) -> Result<Self, ConsoleError> {
        if data.len() < 6 || &data[..4] != SNAPSHOT_MAGIC {
            return Err(bad("missing VCLE magic"));
        }
        let version = u16::from_be_bytes([data[4], data[5]]);
        if version != SNAPSHOT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let mut rest = &data[6..];
        let mut sections = Vec::with_capacity(SECTION_COUNT);
        for _ in 0..SECTION_COUNT {
            if rest.len() < 4 {
                return Err(bad("truncated section header"));
            }
            let len = u32::from_be_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
            rest = &rest[4..];
            if rest.len() < len {
                return Err(bad("truncated section"));
            }
            sections.push(&rest[..len]);
            rest = &rest[len..];
        }

        let mut ram = Vec::new();
        DeflateDecoder::new(sections[0]).read_to_end(&mut ram)?;
        let ram = Ram::from_bytes(ram)?;

        let fb = sections[1];
        if fb.len() < 4 {
            return Err(bad("framebuffer section too short"));
        }
        let w = u16::from_be_bytes([fb[0], fb[1]]) as usize;
        let h = u16::from_be_bytes([fb[2], fb[3]]) as usize;
        let framebuffer = FrameBuffer::from_raw(w, h, fb[4..].to_vec())
            .ok_or_else(|| bad("framebuffer size mismatch"))?;

        let name = std::str::from_utf8(sections[2]).map_err(|e| bad(e.to_string()))?;
        let cartridge_name = (!name.is_empty()).then(|| name.to_string());

        let c = sections[4];
        if c.len() != 20 {
            return Err(bad("counters section has wrong length"));
        }
        let frame_counter = u64::from_be_bytes(c[0..8].try_into().unwrap());
        let speed_percent = u32::from_be_bytes(c[8..12].try_into().unwrap());
        let audio_samples = u64::from_be_bytes(c[12..20].try_into().unwrap());

        let controls = serde_json::from_slice(sections[5]).map_err(|e| bad(e.to_string()))?;
        let mixer = serde_json::from_slice(sections[6]).map_err(|e| bad(e.to_string()))?;

        Ok(ConsoleSnapshot {
            ram,
            framebuffer,
            frame_counter,
            cartridge_name,
            cartridge_state: sections[3].to_vec(),
            controls,
            speed_percent,
            mixer,
            audio_samples,
        })
    }
}

/// File name used for a snapshot stored in a directory.
pub fn snapshot_file_name(name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}.vcle")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::console::{Button, ControlEvent};

    fn sample() -> ConsoleSnapshot {
        let mut ram = Ram::new();
        ram.write(0x1000, b"hello").unwrap();
        let mut controls = ControlQueue::new();
        controls.push(ControlEvent::Hold(Button::Up));
        ConsoleSnapshot {
            ram,
            framebuffer: FrameBuffer::new(),
            frame_counter: 1234,
            cartridge_name: Some("kula?level=1".into()),
            cartridge_state: vec![1, 2, 3],
            controls,
            speed_percent: 150,
            mixer: MixerState {
                voices: vec![vec![5, -5]],
            },
            audio_samples: 99,
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let s = sample();
        let bytes = s.encode().unwrap();
        assert_eq!(&bytes[..4], b"VCLE");
        assert_eq!(u16::from_be_bytes([bytes[4], bytes[5]]), SNAPSHOT_VERSION);
        assert_eq!(ConsoleSnapshot::decode(&bytes).unwrap(), s);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = sample().encode().unwrap();
        assert!(ConsoleSnapshot::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(ConsoleSnapshot::decode(&wrong).is_err());
    }
}
