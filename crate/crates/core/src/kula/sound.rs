//! Sound effects, synthesized at the console sample rate.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::console::SAMPLE_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SoundEvent {
    Roll,
    Jump,
    Coin,
    Key,
    Fruit,
    Win,
    Lose,
}

impl SoundEvent {
    pub const ALL: [SoundEvent; 7] = [
        SoundEvent::Roll,
        SoundEvent::Jump,
        SoundEvent::Coin,
        SoundEvent::Key,
        SoundEvent::Fruit,
        SoundEvent::Win,
        SoundEvent::Lose,
    ];

    pub fn duration_ms(self) -> u32 {
        match self {
            SoundEvent::Roll => 80,
            SoundEvent::Jump => 300,
            SoundEvent::Coin => 150,
            SoundEvent::Key => 250,
            SoundEvent::Fruit => 300,
            SoundEvent::Win => 600,
            SoundEvent::Lose => 500,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SoundEvent::Roll => "roll",
            SoundEvent::Jump => "jump",
            SoundEvent::Coin => "coin",
            SoundEvent::Key => "key",
            SoundEvent::Fruit => "fruit",
            SoundEvent::Win => "win",
            SoundEvent::Lose => "lose",
        }
    }
}

impl std::str::FromStr for SoundEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown sound '{s}'"))
    }
}

const ROLL_SEED: u64 = 0x6b75_6c61;

/// Sample count for `ms` milliseconds, rounded half up.
fn sample_count(ms: u32) -> usize {
    ((ms as u64 * SAMPLE_RATE as u64 * 2 + 1000) / 2000) as usize
}

/// Linear fade in and out over `edge` samples.
fn edge_gain(i: usize, n: usize, edge: usize) -> f64 {
    let a = ((i + 1) as f64 / edge as f64).min(1.0);
    let b = ((n - i) as f64 / edge as f64).min(1.0);
    a.min(b)
}

fn to_i16(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Sine sweep with linearly varying frequency.
fn sweep(n: usize, f0: f64, f1: f64, amp: f64) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let mut phase = 0.0f64;
    (0..n)
        .map(|i| {
            let f = f0 + (f1 - f0) * i as f64 / n as f64;
            let v = amp * phase.sin() * edge_gain(i, n, 110);
            phase += TAU * f / sr;
            v
        })
        .collect()
}

/// Notes of equal length played one after another.
fn sequence(n: usize, freqs: &[f64], amp: f64) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let seg = n.div_ceil(freqs.len());
    (0..n)
        .map(|i| {
            let k = i / seg;
            let j = i - k * seg;
            let len = seg.min(n - k * seg);
            amp * (TAU * freqs[k] * j as f64 / sr).sin() * edge_gain(j, len, 66)
        })
        .collect()
}

/// Deterministic waveform for `ev`. Peak amplitude stays at or below 0.8 of full scale.
pub fn synth_sound(ev: SoundEvent) -> Vec<i16> {
    let n = sample_count(ev.duration_ms());
    let sr = SAMPLE_RATE as f64;
    let wave: Vec<f64> = match ev {
        SoundEvent::Roll => {
            let mut rng = ChaCha8Rng::seed_from_u64(ROLL_SEED);
            let mut lp = 0.0;
            let raw: Vec<f64> = (0..n)
                .map(|_| {
                    lp += 0.2 * (rng.random_range(-1.0..1.0) - lp);
                    lp
                })
                .collect();
            let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
            raw.iter()
                .enumerate()
                .map(|(i, v)| 0.6 * v / peak * edge_gain(i, n, 220))
                .collect()
        }
        SoundEvent::Jump => sweep(n, 200.0, 600.0, 0.5),
        SoundEvent::Coin => (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                0.75 * (-t / 0.05).exp() * (TAU * 880.0 * t).sin()
            })
            .collect(),
        SoundEvent::Key => sequence(n, &[660.0, 990.0], 0.5),
        SoundEvent::Fruit => (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                let chord: f64 = [523.25, 659.25, 783.99]
                    .iter()
                    .map(|f| (TAU * f * t).sin())
                    .sum();
                0.25 * chord * (-t / 0.15).exp() * edge_gain(i, n, 66)
            })
            .collect(),
        SoundEvent::Win => sequence(n, &[523.25, 659.25, 783.99], 0.6),
        SoundEvent::Lose => sweep(n, 400.0, 100.0, 0.6),
    };
    wave.into_iter().map(to_i16).collect()
}

/// Shared copy of each waveform, synthesized once.
pub(crate) fn cached(ev: SoundEvent) -> Arc<[i16]> {
    static CACHE: OnceLock<Vec<Arc<[i16]>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        SoundEvent::ALL
            .iter()
            .map(|e| Arc::from(synth_sound(*e)))
            .collect()
    });
    Arc::clone(&all[ev as usize])
}
