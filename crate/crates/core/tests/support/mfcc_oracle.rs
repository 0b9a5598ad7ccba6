//! Direct-summation MFCC reference: naive DFT, triangular mel filters built
//! from first principles, and a DCT-II summed term by term.

use std::f64::consts::PI;

pub struct OracleParams {
    pub sample_rate: f64,
    pub frame_len: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub preemphasis: f64,
    pub log_floor: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            sample_rate: 22_050.0,
            frame_len: 512,
            hop: 256,
            n_mels: 26,
            n_coeffs: 13,
            preemphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

/// sum_n x[n] e^{-2 pi i k n / N} for k = 0..=N/2, as (re, im).
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (j, v) in x.iter().enumerate() {
                // reduce the angle index first to keep the argument small
                let a = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re, im)
        })
        .collect()
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Weight of filter `m` at frequency `f`.
fn triangle(p: &OracleParams, m: usize, f: f64) -> f64 {
    let step = mel(p.sample_rate / 2.0) / (p.n_mels + 1) as f64;
    let left = inv_mel(step * m as f64);
    let centre = inv_mel(step * (m + 1) as f64);
    let right = inv_mel(step * (m + 2) as f64);
    if f <= left || f >= right {
        0.0
    } else if f <= centre {
        (f - left) / (centre - left)
    } else {
        (right - f) / (right - centre)
    }
}

pub fn oracle_mfcc(wave: &[f64], p: &OracleParams) -> Vec<Vec<f64>> {
    if wave.len() < p.frame_len {
        return Vec::new();
    }
    let n_frames = 1 + (wave.len() - p.frame_len) / p.hop;
    let n = p.frame_len;
    let mut out = Vec::new();
    for t in 0..n_frames {
        let frame: Vec<f64> = (0..n)
            .map(|j| {
                let i = t * p.hop + j;
                let prev = if i == 0 { 0.0 } else { wave[i - 1] };
                let e = if i == 0 { wave[0] } else { wave[i] - p.preemphasis * prev };
                let w = 0.54 - 0.46 * (2.0 * PI * j as f64 / (n - 1) as f64).cos();
                e * w
            })
            .collect();
        let power: Vec<f64> = naive_dft(&frame).iter().map(|(r, i)| r * r + i * i).collect();
        let log_mel: Vec<f64> = (0..p.n_mels)
            .map(|m| {
                let e: f64 = power
                    .iter()
                    .enumerate()
                    .map(|(k, pw)| triangle(p, m, k as f64 * p.sample_rate / n as f64) * pw)
                    .sum();
                e.max(p.log_floor).ln()
            })
            .collect();
        let nm = p.n_mels as f64;
        let coeffs = (0..p.n_coeffs)
            .map(|i| {
                let scale = if i == 0 { (1.0 / nm).sqrt() } else { (2.0 / nm).sqrt() };
                scale
                    * log_mel
                        .iter()
                        .enumerate()
                        .map(|(m, v)| v * (PI * i as f64 * (m as f64 + 0.5) / nm).cos())
                        .sum::<f64>()
            })
            .collect();
        out.push(coeffs);
    }
    out
}

/// Largest |a - b| / max(1, |b|) over all entries.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
