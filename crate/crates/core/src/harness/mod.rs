//! Agent runners, logs and tooling used by the `vcle` command-line tool.

pub mod dump;
pub mod log;
pub mod policy;
pub mod qlearn;
pub mod serve;
pub mod session;
pub mod transcript;

use std::io;
use std::time::Instant;

use thiserror::Error;

use crate::console::ConsoleError;
use crate::dsp::DspError;
use crate::env::{Env, EnvError};
use crate::game::GameError;

use self::log::{fill_moving_average, EpisodeLog};
use self::policy::Policy;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("script line {line}: {msg}")]
    Script { line: usize, msg: String },
    #[error("session failed: {0}")]
    Session(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("WAVE error: {0}")]
    Wav(#[from] hound::Error),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad transcript: {0}")]
    Transcript(String),
}

impl From<ConsoleError> for HarnessError {
    fn from(e: ConsoleError) -> Self {
        HarnessError::Game(GameError::Console(e))
    }
}

impl From<DspError> for HarnessError {
    fn from(e: DspError) -> Self {
        HarnessError::Game(GameError::Dsp(e))
    }
}

/// Runs `episodes` episodes of `policy`. A policy that stops early leaves the
/// row's outcome as `playing`.
pub fn play(
    env: &mut Env,
    policy: &mut dyn Policy,
    episodes: usize,
    window: usize,
) -> Result<Vec<EpisodeLog>, HarnessError> {
    let mut rows = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let t0 = Instant::now();
        policy.begin_episode();
        let mut state = env.reset(None)?;
        let (level, start) = env.current_start().expect("episode started");
        let (mut total, mut moves) = (0.0, 0usize);
        let mut outcome = "playing";
        while let Some(a) = policy.choose(&state) {
            let r = env.step(a)?;
            total += r.reward;
            moves += 1;
            state = r.state;
            if r.done {
                outcome = r.info.cause.expect("terminal cause").name();
                break;
            }
        }
        rows.push(EpisodeLog {
            episode: ep,
            reward: total,
            moves,
            outcome: outcome.into(),
            wall_s: t0.elapsed().as_secs_f64(),
            level,
            start: start.to_string(),
            moving_avg: 0.0,
        });
    }
    fill_moving_average(&mut rows, window);
    Ok(rows)
}
