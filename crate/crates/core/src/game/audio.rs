use serde::{Deserialize, Serialize};

use crate::dsp::MfccMatrix;

/// The sound component of a move outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sound {
    None,
    Raw(Vec<i16>),
    Mfcc(MfccMatrix),
}

impl Sound {
    pub fn is_none(&self) -> bool {
        matches!(self, Sound::None)
    }
}

/// Largest magnitude counted as silence for a threshold given as a fraction of full scale.
pub fn silence_level(threshold: f64) -> u32 {
    (threshold * 32768.0).floor().max(0.0) as u32
}

/// Removes the longest silent prefix and suffix. Silence inside the sound is kept.
pub fn trim_silence(wave: &[i16], threshold: f64) -> &[i16] {
    let level = silence_level(threshold);
    let loud = |s: &i16| s.unsigned_abs() as u32 > level;
    match wave.iter().position(loud) {
        None => &[],
        Some(start) => {
            let end = wave.iter().rposition(loud).expect("a loud sample exists");
            &wave[start..=end]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(trim_silence(&[0, 0, 500, -700, 0, 0], 0.001), &[500, -700]);
        assert!(trim_silence(&[0, 3, -32, 0], 0.001).is_empty());
        assert_eq!(trim_silence(&[100, 0, 0, 100], 0.001), &[100, 0, 0, 100]);
        assert_eq!(trim_silence(&[-33], 0.001), &[-33]);
    }
}
