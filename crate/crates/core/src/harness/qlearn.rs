//! Tabular Q-learning over the cartridge pose read from RAM.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::log::{fill_moving_average, EpisodeLog, TRAIN_WINDOW};
use super::HarnessError;
use crate::env::{Env, Variant};
use crate::game::{Action, KulaRam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QAgentConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episode budget over which epsilon decays linearly.
    pub decay_fraction: f64,
}

impl Default for QAgentConfig {
    fn default() -> Self {
        QAgentConfig {
            alpha: 0.1,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            decay_fraction: 0.5,
        }
    }
}

impl QAgentConfig {
    pub fn epsilon(&self, episode: usize, budget: usize) -> f64 {
        let span = (budget as f64 * self.decay_fraction).max(1.0);
        let t = (episode as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// (level, x, y, orientation, keys remaining).
pub type QKey = (u8, u8, u8, u8, u8);

pub fn q_key(ram: &KulaRam) -> QKey {
    (
        ram.level_id,
        ram.pose.x,
        ram.pose.y,
        ram.pose.orientation as u8,
        ram.keys_remaining,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Entry {
    state: QKey,
    q: [f64; 4],
}

pub struct QAgent {
    pub config: QAgentConfig,
    table: BTreeMap<QKey, [f64; 4]>,
    rng: ChaCha8Rng,
}

impl QAgent {
    pub fn new(config: QAgentConfig, seed: u64) -> Self {
        QAgent {
            config,
            table: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn q(&self, key: &QKey) -> [f64; 4] {
        self.table.get(key).copied().unwrap_or([0.0; 4])
    }

    /// Highest-valued action; ties go to the lowest index.
    pub fn greedy(&self, key: &QKey) -> usize {
        let q = self.q(key);
        (0..4).fold(0, |best, a| if q[a] > q[best] { a } else { best })
    }

    pub fn act(&mut self, key: &QKey, epsilon: f64) -> usize {
        if self.rng.random::<f64>() < epsilon {
            self.rng.random_range(0..Action::ALL.len())
        } else {
            self.greedy(key)
        }
    }

    /// One-step update; `next` is `None` after a terminal move.
    pub fn update(&mut self, key: QKey, action: usize, reward: f64, next: Option<QKey>) {
        let future = next.map(|n| self.q(&n).into_iter().fold(f64::MIN, f64::max)).unwrap_or(0.0);
        let (alpha, gamma) = (self.config.alpha, self.config.gamma);
        let q = self.table.entry(key).or_insert([0.0; 4]);
        q[action] += alpha * (reward + gamma * future - q[action]);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// JSON list of entries sorted by state.
    pub fn to_json(&self) -> String {
        let entries: Vec<Entry> = self
            .table
            .iter()
            .map(|(k, q)| Entry { state: *k, q: *q })
            .collect();
        serde_json::to_string_pretty(&entries).expect("q-table serializes")
    }

    pub fn from_json(config: QAgentConfig, seed: u64, text: &str) -> Result<Self, HarnessError> {
        let entries: Vec<Entry> = serde_json::from_str(text)?;
        let mut agent = QAgent::new(config, seed);
        agent.table = entries.into_iter().map(|e| (e.state, e.q)).collect();
        Ok(agent)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Trains for `episodes` episodes and returns the per-episode log.
pub fn train_q(
    env: &mut Env,
    agent: &mut QAgent,
    episodes: usize,
) -> Result<Vec<EpisodeLog>, HarnessError> {
    if env.variant() == Variant::Audio {
        return Err(HarnessError::Unsupported(
            "train-q uses a tabular pose state and cannot consume audio-v1 observations".into(),
        ));
    }
    let mut rows = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let t0 = Instant::now();
        let eps = agent.config.epsilon(ep, episodes);
        env.reset(None)?;
        let (level, start) = env.current_start().expect("episode started");
        let mut key = q_key(env.game().ram()?);
        let (mut total, mut moves) = (0.0, 0usize);
        let outcome = loop {
            let a = agent.act(&key, eps);
            let r = env.step(a)?;
            total += r.reward;
            moves += 1;
            if r.done {
                agent.update(key, a, r.reward, None);
                break r.info.cause.expect("terminal cause");
            }
            let next = q_key(env.game().ram()?);
            agent.update(key, a, r.reward, Some(next));
            key = next;
        };
        rows.push(EpisodeLog {
            episode: ep,
            reward: total,
            moves,
            outcome: outcome.name().into(),
            wall_s: t0.elapsed().as_secs_f64(),
            level,
            start: start.to_string(),
            moving_avg: 0.0,
        });
    }
    fill_moving_average(&mut rows, TRAIN_WINDOW);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule() {
        let c = QAgentConfig::default();
        assert_eq!(c.epsilon(0, 2000), 1.0);
        assert!((c.epsilon(500, 2000) - 0.525).abs() < 1e-12);
        assert!((c.epsilon(1000, 2000) - 0.05).abs() < 1e-12);
        assert!((c.epsilon(1999, 2000) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn update_rule() {
        let mut a = QAgent::new(QAgentConfig::default(), 0);
        let s = (1, 0, 0, 0, 0);
        let n = (1, 0, 1, 0, 0);
        a.update(n, 2, 1.0, None);
        assert!((a.q(&n)[2] - 0.1).abs() < 1e-12);
        a.update(s, 0, 0.5, Some(n));
        assert!((a.q(&s)[0] - 0.1 * (0.5 + 0.95 * 0.1)).abs() < 1e-12);
        assert_eq!(a.greedy(&s), 0);
        assert_eq!(a.greedy(&(9, 9, 9, 9, 9)), 0);
    }

    #[test]
    fn json_round_trip() {
        let mut a = QAgent::new(QAgentConfig::default(), 0);
        a.update((1, 2, 3, 1, 0), 3, -1.0, None);
        let b = QAgent::from_json(QAgentConfig::default(), 0, &a.to_json()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
