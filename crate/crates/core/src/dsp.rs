//! MFCC features: pre-emphasis, framing, Hamming window, power spectrum,
//! HTK mel filterbank, natural log, orthonormal DCT-II.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("non-finite sample at index {0}")]
    BadAudio(usize),
    #[error("invalid MFCC configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub preemphasis: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 22_050,
            frame_len: 512,
            hop: 256,
            n_mels: 26,
            n_coeffs: 13,
            preemphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |m: &str| Err(DspError::BadConfig(m.into()));
        if !self.frame_len.is_power_of_two() || self.frame_len < 2 {
            return bad("frame_len must be a power of two");
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return bad("hop must be in 1..=frame_len");
        }
        if self.n_mels == 0 || self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return bad("need 1 <= n_coeffs <= n_mels");
        }
        if self.sample_rate == 0 || !(self.log_floor > 0.0) {
            return bad("sample_rate and log_floor must be positive");
        }
        Ok(())
    }

    /// Number of full frames in `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            1 + (len - self.frame_len) / self.hop
        }
    }
}

/// Row-major `n_frames x n_coeffs` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccMatrix {
    pub n_frames: usize,
    pub n_coeffs: usize,
    pub data: Vec<f64>,
}

impl MfccMatrix {
    pub fn empty(n_coeffs: usize) -> Self {
        MfccMatrix {
            n_frames: 0,
            n_coeffs,
            data: Vec::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_coeffs..(i + 1) * self.n_coeffs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_coeffs.max(1)).take(self.n_frames)
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames == 0
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Symmetric Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Triangular filters, `n_mels` rows of `frame_len/2 + 1` weights each.
pub fn mel_filterbank(cfg: &MfccConfig) -> Vec<Vec<f64>> {
    let n_bins = cfg.frame_len / 2 + 1;
    let nyquist = cfg.sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    (0..cfg.n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * cfg.sample_rate as f64 / cfg.frame_len as f64;
                    let up = (f - lo) / (mid - lo);
                    let down = (hi - f) / (hi - mid);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Reusable MFCC extractor (FFT plan, window and filterbank precomputed).
pub struct Mfcc {
    cfg: MfccConfig,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    filters: Vec<Vec<f64>>,
}

impl Mfcc {
    pub fn new(cfg: MfccConfig) -> Result<Self, DspError> {
        cfg.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.frame_len);
        Ok(Mfcc {
            window: hamming(cfg.frame_len),
            filters: mel_filterbank(&cfg),
            fft,
            cfg,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    /// |X_k|^2 for k in 0..=N/2 of one already windowed frame.
    pub fn power_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        buf[..self.cfg.frame_len / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr())
            .collect()
    }

    pub fn compute(&self, wave: &[f64]) -> Result<MfccMatrix, DspError> {
        if let Some(i) = wave.iter().position(|x| !x.is_finite()) {
            return Err(DspError::BadAudio(i));
        }
        let cfg = &self.cfg;
        let n_frames = cfg.n_frames(wave.len());
        if n_frames == 0 {
            return Ok(MfccMatrix::empty(cfg.n_coeffs));
        }
        let emph: Vec<f64> = (0..wave.len())
            .map(|i| {
                if i == 0 {
                    wave[0]
                } else {
                    wave[i] - cfg.preemphasis * wave[i - 1]
                }
            })
            .collect();

        let m = cfg.n_mels;
        let dct = dct_matrix(cfg.n_coeffs, m);
        let mut data = Vec::with_capacity(n_frames * cfg.n_coeffs);
        let mut frame = vec![0.0; cfg.frame_len];
        let mut log_mel = vec![0.0; m];
        for t in 0..n_frames {
            let start = t * cfg.hop;
            for (j, f) in frame.iter_mut().enumerate() {
                *f = emph[start + j] * self.window[j];
            }
            let power = self.power_spectrum(&frame);
            for (lm, filt) in log_mel.iter_mut().zip(&self.filters) {
                let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
                *lm = e.max(cfg.log_floor).ln();
            }
            for row in &dct {
                data.push(row.iter().zip(&log_mel).map(|(a, b)| a * b).sum());
            }
        }
        Ok(MfccMatrix {
            n_frames,
            n_coeffs: cfg.n_coeffs,
            data,
        })
    }
}

/// First `k` rows of the orthonormal DCT-II matrix of size `m`.
fn dct_matrix(k: usize, m: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let s = if i == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
            (0..m)
                .map(|n| {
                    s * (std::f64::consts::PI * i as f64 * (2 * n + 1) as f64 / (2 * m) as f64).cos()
                })
                .collect()
        })
        .collect()
}

/// One-shot MFCC of a waveform in [-1, 1].
pub fn mfcc(wave: &[f64], cfg: &MfccConfig) -> Result<MfccMatrix, DspError> {
    Mfcc::new(cfg.clone())?.compute(wave)
}

/// Magnitude spectrum |X_k|, k in 0..=N/2.
pub fn magnitude_spectrum(frame: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(frame.len()).process(&mut buf);
    buf[..frame.len() / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Normalizes 16-bit samples to [-1, 1) by dividing by 32768.
pub fn normalize_i16(samples: &[i16]) -> Vec<f64> {
    samples.iter().map(|&s| s as f64 / 32768.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_counts() {
        let cfg = MfccConfig::default();
        assert_eq!(cfg.n_frames(511), 0);
        assert_eq!(cfg.n_frames(512), 1);
        assert_eq!(cfg.n_frames(22_050), 85);
        let m = mfcc(&vec![0.0; 300], &cfg).unwrap();
        assert_eq!((m.n_frames, m.n_coeffs), (0, 13));
    }

    #[test]
    fn rejects_non_finite() {
        let mut w = vec![0.0; 600];
        w[7] = f64::NAN;
        assert_eq!(mfcc(&w, &MfccConfig::default()), Err(DspError::BadAudio(7)));
    }

    #[test]
    fn silence_gives_constant_finite_rows() {
        let m = mfcc(&vec![0.0; 2048], &MfccConfig::default()).unwrap();
        assert!(m.data.iter().all(|v| v.is_finite()));
        assert!(m.rows().all(|r| r == m.row(0)));
    }

    #[test]
    fn filterbank_covers_open_band() {
        let cfg = MfccConfig::default();
        let fb = mel_filterbank(&cfg);
        for k in 1..cfg.frame_len / 2 {
            let total: f64 = fb.iter().map(|f| f[k]).sum();
            assert!(total > 0.0, "bin {k} uncovered");
        }
    }

    #[test]
    fn dct_rows_are_orthonormal() {
        let d = dct_matrix(26, 26);
        for i in 0..26 {
            for j in 0..26 {
                let dot: f64 = d[i].iter().zip(&d[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mel_scale_inverts() {
        for f in [0.0, 100.0, 1000.0, 11_025.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_configs() {
        let mut c = MfccConfig::default();
        c.frame_len = 500;
        assert!(c.validate().is_err());
        let mut c = MfccConfig::default();
        c.n_coeffs = 30;
        assert!(c.validate().is_err());
    }
}
