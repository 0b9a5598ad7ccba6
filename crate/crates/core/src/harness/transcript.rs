//! Protocol transcripts: a session script plus the bytes seen on each channel.
//!
//! File layout (integers big-endian): magic `VCTR`, version u16, script
//! length u32 and UTF-8 script, then for channels A, B, C, D a length u32
//! followed by that many bytes.

use std::fmt;
use std::path::Path;

use super::session::record_session;
use super::HarnessError;
use crate::protocol::Channel;

pub const TRANSCRIPT_MAGIC: &[u8; 4] = b"VCTR";
pub const TRANSCRIPT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub script: String,
    /// Bytes per channel, indexed A..D.
    pub channels: [Vec<u8>; 4],
}

impl Transcript {
    pub fn record(script: &str) -> Result<Transcript, HarnessError> {
        let (_, channels) = record_session(script)?;
        Ok(Transcript {
            script: script.to_string(),
            channels,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TRANSCRIPT_MAGIC);
        out.extend_from_slice(&TRANSCRIPT_VERSION.to_be_bytes());
        out.extend_from_slice(&(self.script.len() as u32).to_be_bytes());
        out.extend_from_slice(self.script.as_bytes());
        for ch in &self.channels {
            out.extend_from_slice(&(ch.len() as u32).to_be_bytes());
            out.extend_from_slice(ch);
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Transcript, HarnessError> {
        let mut r = Reader { b, pos: 0 };
        if r.take(4)? != TRANSCRIPT_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_be_bytes(r.take(2)?.try_into().unwrap());
        if version != TRANSCRIPT_VERSION {
            return Err(HarnessError::Transcript(format!("unsupported version {version}")));
        }
        let script = String::from_utf8(r.block()?).map_err(|_| bad("script is not UTF-8"))?;
        let channels = [r.block()?, r.block()?, r.block()?, r.block()?];
        if r.pos != b.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Transcript { script, channels })
    }

    pub fn load(path: &Path) -> Result<Transcript, HarnessError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

fn bad(msg: &str) -> HarnessError {
    HarnessError::Transcript(msg.to_string())
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HarnessError> {
        let s = self
            .b
            .get(self.pos..self.pos + n)
            .ok_or_else(|| bad("truncated transcript"))?;
        self.pos += n;
        Ok(s)
    }

    fn block(&mut self) -> Result<Vec<u8>, HarnessError> {
        let n = u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize;
        Ok(self.take(n)?.to_vec())
    }
}

/// Where one channel first differs from the expected bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub channel: Channel,
    pub offset: usize,
    pub expected_len: usize,
    pub actual_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub divergences: Vec<Divergence>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(f, "PASS: all channels byte-identical");
        }
        for d in &self.divergences {
            writeln!(
                f,
                "FAIL: channel {} diverges at offset {} (expected {} bytes, got {})",
                d.channel, d.offset, d.expected_len, d.actual_len
            )?;
        }
        Ok(())
    }
}

/// First offset at which `a` and `b` differ, if any.
pub fn first_difference(a: &[u8], b: &[u8]) -> Option<usize> {
    match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(i) => Some(i),
        None if a.len() != b.len() => Some(a.len().min(b.len())),
        None => None,
    }
}

pub fn compare(expected: &Transcript, actual: &Transcript) -> VerifyReport {
    let divergences = Channel::ALL
        .iter()
        .zip(expected.channels.iter().zip(&actual.channels))
        .filter_map(|(ch, (e, a))| {
            first_difference(e, a).map(|offset| Divergence {
                channel: *ch,
                offset,
                expected_len: e.len(),
                actual_len: a.len(),
            })
        })
        .collect();
    VerifyReport { divergences }
}

/// Replays the transcript's own script and compares the traffic.
pub fn verify(expected: &Transcript) -> Result<VerifyReport, HarnessError> {
    let actual = Transcript::record(&expected.script)?;
    Ok(compare(expected, &actual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differences() {
        assert_eq!(first_difference(b"abc", b"abc"), None);
        assert_eq!(first_difference(b"abc", b"abd"), Some(2));
        assert_eq!(first_difference(b"ab", b"abc"), Some(2));
    }

    #[test]
    fn bytes_round_trip() {
        let t = Transcript {
            script: "freeze\n".into(),
            channels: [vec![1, 2], vec![], vec![3], vec![4, 5, 6]],
        };
        let b = t.to_bytes();
        assert_eq!(Transcript::from_bytes(&b).unwrap(), t);
        assert!(Transcript::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(Transcript::from_bytes(&bad).is_err());
    }
}
