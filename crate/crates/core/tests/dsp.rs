mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::mfcc_oracle::{max_rel_err, oracle_mfcc, OracleParams};
use vcle::dsp::{mfcc, normalize_i16, MfccConfig};
use vcle::kula::{synth_sound, SoundEvent};

const TOL: f64 = 1e-6;

fn flat(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn random_wave(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(512..4000);
    let amp = rng.random_range(0.01..1.0);
    (0..len).map(|_| amp * rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn matches_oracle_on_random_waves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = MfccConfig::default();
    for _ in 0..5 {
        let w = random_wave(&mut rng);
        let got = mfcc(&w, &cfg).unwrap();
        let want = oracle_mfcc(&w, &OracleParams::default());
        assert_eq!(got.n_frames, want.len());
        assert!(max_rel_err(&got.data, &flat(&want)) <= TOL);
    }
}

#[test]
fn matches_oracle_on_event_sounds() {
    let cfg = MfccConfig::default();
    for ev in [SoundEvent::Coin, SoundEvent::Jump, SoundEvent::Win] {
        let w = normalize_i16(&synth_sound(ev));
        let got = mfcc(&w, &cfg).unwrap();
        let want = oracle_mfcc(&w, &OracleParams::default());
        assert_eq!(got.n_frames, want.len(), "{}", ev.name());
        assert!(max_rel_err(&got.data, &flat(&want)) <= TOL, "{}", ev.name());
    }
}

#[test]
fn scaling_only_moves_c0() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = MfccConfig::default();
    let w = random_wave(&mut rng);
    let k = 0.25;
    let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
    let a = mfcc(&w, &cfg).unwrap();
    let b = mfcc(&scaled, &cfg).unwrap();
    // a constant log-mel offset of 2 ln k lands in c0 scaled by sqrt(n_mels)
    let shift = 2.0 * k.ln() * (cfg.n_mels as f64).sqrt();
    for (ra, rb) in a.rows().zip(b.rows()) {
        assert!((rb[0] - ra[0] - shift).abs() <= TOL * ra[0].abs().max(1.0));
        assert!(max_rel_err(&rb[1..], &ra[1..]) <= TOL);
    }
}

#[test]
fn short_or_empty_input_has_no_frames() {
    let cfg = MfccConfig::default();
    assert!(mfcc(&[], &cfg).unwrap().is_empty());
    assert!(mfcc(&[0.5; 511], &cfg).unwrap().is_empty());
    assert_eq!(mfcc(&[0.5; 512], &cfg).unwrap().n_frames, 1);
}
