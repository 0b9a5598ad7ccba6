//! Audio mixer and the sample timeline.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ConsoleError, FRAME_RATE};

pub const SAMPLE_RATE: u32 = 22_050;

/// Number of samples produced by frame `frame` (0-based).
///
/// Uses the exact running total `floor(n * rate / fps)`, so after N frames
/// the stream holds exactly `floor(N * 22050 / 60)` samples with no drift.
pub fn samples_for_frame(frame: u64) -> usize {
    let rate = SAMPLE_RATE as u64;
    let fps = FRAME_RATE as u64;
    (((frame + 1) * rate) / fps - (frame * rate) / fps) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Voice {
    samples: Arc<[i16]>,
    pos: usize,
}

/// Sums the active voices into the console's mono output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mixer {
    voices: Vec<Voice>,
}

impl Mixer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a voice playing `samples` from the next mixed sample.
    pub fn play(&mut self, samples: Arc<[i16]>) {
        if !samples.is_empty() {
            self.voices.push(Voice { samples, pos: 0 });
        }
    }

    pub fn active_voices(&self) -> usize {
        self.voices.len()
    }

    pub fn clear(&mut self) {
        self.voices.clear();
    }

    /// Mixes the next `n` samples and appends them to `out`.
    pub fn mix(&mut self, n: usize, out: &mut Vec<i16>) {
        for _ in 0..n {
            let mut acc: i32 = 0;
            for v in &mut self.voices {
                if let Some(s) = v.samples.get(v.pos) {
                    acc += *s as i32;
                    v.pos += 1;
                }
            }
            out.push(acc.clamp(i16::MIN as i32, i16::MAX as i32) as i16);
        }
        self.voices.retain(|v| v.pos < v.samples.len());
    }

    pub(crate) fn to_state(&self) -> MixerState {
        MixerState {
            voices: self
                .voices
                .iter()
                .map(|v| v.samples[v.pos..].to_vec())
                .collect(),
        }
    }

    pub(crate) fn from_state(state: &MixerState) -> Mixer {
        Mixer {
            voices: state
                .voices
                .iter()
                .filter(|v| !v.is_empty())
                .map(|v| Voice {
                    samples: v.clone().into(),
                    pos: 0,
                })
                .collect(),
        }
    }
}

/// Remaining samples of each sounding voice, as stored in snapshots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixerState {
    pub voices: Vec<Vec<i16>>,
}

/// Console audio output: running sample count, the most recent frame's
/// samples, and the capture buffer while recording.
#[derive(Debug, Clone, Default)]
pub struct AudioRing {
    total_samples: u64,
    last_frame: Vec<i16>,
    recording: Option<Vec<i16>>,
}

impl AudioRing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub(crate) fn set_total_samples(&mut self, n: u64) {
        self.total_samples = n;
    }

    pub fn is_recording(&self) -> bool {
        self.recording.is_some()
    }

    /// Samples emitted by the last executed frame.
    pub fn last_frame(&self) -> &[i16] {
        &self.last_frame
    }

    pub fn start_recording(&mut self) -> Result<(), ConsoleError> {
        if self.recording.is_some() {
            return Err(ConsoleError::AlreadyRecording);
        }
        self.recording = Some(Vec::new());
        Ok(())
    }

    pub fn stop_recording(&mut self) -> Result<Vec<i16>, ConsoleError> {
        self.recording.take().ok_or(ConsoleError::NotRecording)
    }

    pub(crate) fn push_frame(&mut self, samples: Vec<i16>) {
        self.total_samples += samples.len() as u64;
        if let Some(rec) = &mut self.recording {
            rec.extend_from_slice(&samples);
        }
        self.last_frame = samples;
    }
}
