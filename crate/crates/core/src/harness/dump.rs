//! Frame, audio and MFCC dumps of scripted play.

use std::io::Write;
use std::path::Path;

use super::HarnessError;
use crate::console::{FrameBuffer, SAMPLE_RATE};
use crate::dsp::{mfcc, normalize_i16, MfccConfig, MfccMatrix};
use crate::game::{Action, Game, Sound};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpKind {
    Frame,
    Audio,
    Mfcc,
}

impl std::str::FromStr for DumpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frame" => Ok(DumpKind::Frame),
            "audio" => Ok(DumpKind::Audio),
            "mfcc" => Ok(DumpKind::Mfcc),
            _ => Err(format!("unknown dump kind '{s}' (frame, audio or mfcc)")),
        }
    }
}

pub fn write_ppm(path: &Path, fb: &FrameBuffer) -> Result<(), HarnessError> {
    std::fs::write(path, fb.to_ppm())?;
    Ok(())
}

/// 16-bit mono PCM at the console sample rate.
pub fn write_wav(path: &Path, samples: &[i16]) -> Result<(), HarnessError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for s in samples {
        w.write_sample(*s)?;
    }
    w.finalize()?;
    Ok(())
}

/// One row per frame, coefficients separated by commas. No rows means an empty file.
pub fn write_mfcc_csv<W: Write>(mut out: W, m: &MfccMatrix) -> Result<(), HarnessError> {
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Plays `actions` and writes what the last one produced. The game must
/// record raw audio for the audio and MFCC dumps.
pub fn dump_moves(
    game: &mut Game,
    actions: &[Action],
    kind: DumpKind,
    mfcc_cfg: &MfccConfig,
    out: &Path,
) -> Result<(), HarnessError> {
    let mut last = Vec::new();
    for a in actions {
        let o = game.make_move(*a)?;
        if let Sound::Raw(w) = o.sound {
            last = w;
        }
    }
    match kind {
        DumpKind::Frame => write_ppm(out, &game.screen()?),
        DumpKind::Audio => write_wav(out, &last),
        DumpKind::Mfcc => {
            let m = mfcc(&normalize_i16(&last), mfcc_cfg)?;
            write_mfcc_csv(std::fs::File::create(out)?, &m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mfcc_csv_rows() {
        let m = MfccMatrix {
            n_frames: 2,
            n_coeffs: 2,
            data: vec![1.0, -0.5, 2.0, 0.25],
        };
        let mut buf = Vec::new();
        write_mfcc_csv(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,-0.5\n2,0.25\n");
        let mut buf = Vec::new();
        write_mfcc_csv(&mut buf, &MfccMatrix::empty(13)).unwrap();
        assert!(buf.is_empty());
    }
}
