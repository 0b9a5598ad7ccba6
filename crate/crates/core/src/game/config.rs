//! Reward, audio and visual settings, loadable from a TOML file.
//!
//! ```toml
//! [reward]
//! score_to_reward = [[0, 0.0], [250, 0.2], [1000, 0.4], [2500, 0.6]]
//! win_reward = 1.0
//! lose_reward = -1.0
//! lose_timeout = -0.5      # optional per-cause override
//! step_cost = 0.01
//! time_in_state = false
//!
//! [audio]
//! record = true
//! use_mfcc = true
//! silence_threshold = 0.001
//! max_record_s = 3.0
//!
//! [visual]
//! width = 84
//! height = 84
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GameError;
use crate::dsp::MfccConfig;
use crate::kula::GameStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// (score change, reward) pairs, sorted by score change.
    pub score_to_reward: Vec<(u32, f64)>,
    pub win_reward: f64,
    pub lose_reward: f64,
    pub lose_fall: Option<f64>,
    pub lose_spike: Option<f64>,
    pub lose_timeout: Option<f64>,
    /// Subtracted from the reward of every non-terminal move.
    pub step_cost: f64,
    /// Append the remaining clock to the state encoding.
    pub time_in_state: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            score_to_reward: vec![(0, 0.0), (250, 0.2), (1000, 0.4), (2500, 0.6)],
            win_reward: 1.0,
            lose_reward: -1.0,
            lose_fall: None,
            lose_spike: None,
            lose_timeout: None,
            step_cost: 0.01,
            time_in_state: false,
        }
    }
}

impl RewardConfig {
    /// Reward for a score change: the entry for the largest listed change
    /// not above `delta` (0.0 below the first entry).
    pub fn score_to_reward(&self, delta: u32) -> f64 {
        self.score_to_reward
            .iter()
            .rev()
            .find(|(s, _)| *s <= delta)
            .map(|(_, r)| *r)
            .unwrap_or(0.0)
    }

    /// Reward for a completed move that ended in `status`.
    pub fn reward(&self, delta: u32, status: GameStatus) -> f64 {
        match status {
            GameStatus::Playing => self.score_to_reward(delta) - self.step_cost,
            GameStatus::Won => self.win_reward,
            GameStatus::LostFall => self.lose_fall.unwrap_or(self.lose_reward),
            GameStatus::LostSpike => self.lose_spike.unwrap_or(self.lose_reward),
            GameStatus::LostTimeout => self.lose_timeout.unwrap_or(self.lose_reward),
        }
    }

    fn validate(&self) -> Result<(), GameError> {
        let sorted = self.score_to_reward.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        if !sorted {
            return Err(GameError::Config(
                "score_to_reward must be sorted by score change and non-decreasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioPolicy {
    pub record: bool,
    pub use_mfcc: bool,
    /// Fraction of full scale at or below which a sample counts as silent.
    pub silence_threshold: f64,
    /// Longest time audio capture may continue after the move has ended.
    pub max_record_s: f64,
    pub mfcc: MfccConfig,
}

impl Default for AudioPolicy {
    fn default() -> Self {
        AudioPolicy {
            record: false,
            use_mfcc: true,
            silence_threshold: 0.001,
            max_record_s: 3.0,
            mfcc: MfccConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisualConfig {
    pub enabled: bool,
    pub width: usize,
    pub height: usize,
}

impl Default for VisualConfig {
    fn default() -> Self {
        VisualConfig {
            enabled: true,
            width: 84,
            height: 84,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub reward: RewardConfig,
    pub audio: AudioPolicy,
    pub visual: VisualConfig,
    /// Game seconds after which a move that has not finished is reported stuck.
    pub stuck_timeout_s: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            reward: RewardConfig::default(),
            audio: AudioPolicy::default(),
            visual: VisualConfig::default(),
            stuck_timeout_s: 10.0,
        }
    }
}

impl GameConfig {
    pub fn from_toml(text: &str) -> Result<Self, GameError> {
        let cfg: GameConfig = toml::from_str(text).map_err(|e| GameError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GameError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GameError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), GameError> {
        self.reward.validate()?;
        self.audio
            .mfcc
            .validate()
            .map_err(|e| GameError::Config(e.to_string()))?;
        if self.visual.enabled && (self.visual.width == 0 || self.visual.height == 0) {
            return Err(GameError::Config("visual size must be positive".into()));
        }
        if !(self.audio.max_record_s >= 0.0) || !(self.stuck_timeout_s > 0.0) {
            return Err(GameError::Config("durations must be positive".into()));
        }
        Ok(())
    }
}
