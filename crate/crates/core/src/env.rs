//! Gym-style episodes over the game abstraction: `reset`, `step`, `render`,
//! and snapshot-backed resumption of visited states.

use std::collections::HashMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::console::ConsoleError;
use crate::game::{Action, Game, GameConfig, GameError, KulaRam, MoveOutcome, Sound, VisualTensor};
use crate::kula::{bundled_ids, GameStatus, LevelSource, LoadSpec, StartSelector};
use crate::{ConsoleHandle, ConsoleOptions};

/// Clock of every random-v1 episode, in seconds.
pub const RANDOM_TIME_S: u32 = 80;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode is over; call reset")]
    EpisodeOver,
    #[error("invalid action index {0} (expected 0..4)")]
    BadAction(usize),
    #[error("unknown state key {0}")]
    UnknownState(u64),
    #[error("unknown environment '{0}' (expected fixed-v1, random-v1 or audio-v1)")]
    UnknownVariant(String),
    #[error("no {0} start available")]
    NoStart(&'static str),
    #[error("environment is closed")]
    Closed,
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Game(GameError),
}

impl From<GameError> for EnvError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::EpisodeOver => EnvError::EpisodeOver,
            GameError::BadAction(i) => EnvError::BadAction(i),
            other => EnvError::Game(other),
        }
    }
}

impl From<ConsoleError> for EnvError {
    fn from(e: ConsoleError) -> Self {
        EnvError::Game(GameError::Console(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Level 1 from its first start.
    Fixed,
    /// Uniformly chosen training start over the bundled levels, 80 s clock.
    Random,
    /// As `Fixed`, with move audio (MFCC) in the state.
    Audio,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Fixed, Variant::Random, Variant::Audio];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fixed => "fixed-v1",
            Variant::Random => "random-v1",
            Variant::Audio => "audio-v1",
        }
    }

    /// Registered Gym id.
    pub fn gym_id(self) -> &'static str {
        match self {
            Variant::Fixed => "Kula-v1",
            Variant::Random => "Kula-random-v1",
            Variant::Audio => "Kula-audio-v1",
        }
    }

    pub fn composite(self) -> bool {
        self == Variant::Audio
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s || v.gym_id() == s)
            .ok_or_else(|| EnvError::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct EnvOptions {
    /// Run the console unthrottled.
    pub fast: bool,
    /// Use the reserved validation start.
    pub eval: bool,
    /// Seed of the start-selection stream until `reset` is given one.
    pub seed: u64,
    /// Replaces the variant's levels with this one.
    pub level: Option<LevelSource>,
    pub snapshot_dir: Option<PathBuf>,
}

/// Encoded observation. Visual-only variants leave `sound` and `score` empty;
/// `clock` is set for composite variants and when the reward config asks for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub visual: Option<VisualTensor>,
    pub sound: Option<Sound>,
    pub clock: Option<f64>,
    pub score: Option<u32>,
}

impl State {
    /// SHA-256 over a canonical byte encoding, as lowercase hex.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        match &self.visual {
            Some(v) => {
                h.update([1]);
                h.update((v.width as u32).to_le_bytes());
                h.update((v.height as u32).to_le_bytes());
                h.update(&v.data);
            }
            None => h.update([0]),
        }
        match &self.sound {
            None => h.update([0]),
            Some(Sound::None) => h.update([1]),
            Some(Sound::Raw(w)) => {
                h.update([2]);
                h.update((w.len() as u64).to_le_bytes());
                for s in w {
                    h.update(s.to_le_bytes());
                }
            }
            Some(Sound::Mfcc(m)) => {
                h.update([3]);
                h.update((m.n_frames as u64).to_le_bytes());
                h.update((m.n_coeffs as u64).to_le_bytes());
                for v in &m.data {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
        match self.clock {
            Some(c) => {
                h.update([1]);
                h.update(c.to_bits().to_le_bytes());
            }
            None => h.update([0]),
        }
        match self.score {
            Some(s) => {
                h.update([1]);
                h.update(s.to_le_bytes());
            }
            None => h.update([0]),
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub duration_real: f64,
    pub duration_game: f64,
    pub score: u32,
    pub clock: f64,
    /// Final status once the episode has ended.
    pub cause: Option<GameStatus>,
    pub level: u8,
    pub start: StartSelector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub state: State,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Handle to a saved mid-episode situation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey(pub u64);

#[derive(Debug, Clone)]
struct Visit {
    snapshot: String,
    episode: Episode,
}

#[derive(Debug, Clone)]
struct Episode {
    spec: LoadSpec,
    level: u8,
    done: bool,
}

pub struct Env {
    variant: Variant,
    options: EnvOptions,
    game: Game,
    rng: ChaCha8Rng,
    /// Candidate (level source, start) pairs for training and eval resets.
    training: Vec<(LevelSource, StartSelector)>,
    reserved: Vec<(LevelSource, StartSelector)>,
    episode: Option<Episode>,
    visits: HashMap<StateKey, Visit>,
    next_key: u64,
    closed: bool,
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Env")
            .field("variant", &self.variant)
            .field("episode", &self.episode)
            .finish()
    }
}

fn starts_of(
    sources: &[LevelSource],
) -> Result<(Vec<(LevelSource, StartSelector)>, Vec<(LevelSource, StartSelector)>), EnvError> {
    let mut training = Vec::new();
    let mut reserved = Vec::new();
    for src in sources {
        let spec = LoadSpec {
            source: src.clone(),
            start: StartSelector::Training(0),
            time_s: None,
        };
        let level = spec.read_level().map_err(GameError::from)?;
        for i in 0..level.starts.len() {
            training.push((src.clone(), StartSelector::Training(i)));
        }
        if level.reserved_start.is_some() {
            reserved.push((src.clone(), StartSelector::Reserved));
        }
    }
    Ok((training, reserved))
}

impl Env {
    /// Builds an environment on its own console session.
    pub fn new(variant: Variant, mut config: GameConfig, options: EnvOptions) -> Result<Env, EnvError> {
        if variant == Variant::Audio {
            config.audio.record = true;
            config.audio.use_mfcc = true;
        }
        let console_opts = ConsoleOptions {
            fast: options.fast,
            start_frozen: true,
            snapshot_dir: options.snapshot_dir.clone(),
            ..Default::default()
        };
        let console = ConsoleHandle::run(console_opts)?;
        let game = Game::attach(console, config)?;

        let sources: Vec<LevelSource> = match (&options.level, variant) {
            (Some(src), _) => vec![src.clone()],
            (None, Variant::Random) => bundled_ids().map(LevelSource::Bundled).collect(),
            (None, _) => vec![LevelSource::Bundled(1)],
        };
        let (mut training, reserved) = starts_of(&sources)?;
        if variant != Variant::Random {
            training.truncate(1);
        }
        Ok(Env {
            variant,
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            options,
            game,
            training,
            reserved,
            episode: None,
            visits: HashMap::new(),
            next_key: 0,
            closed: false,
        })
    }

    /// Builds from a variant name and an optional TOML config file.
    pub fn make(name: &str, config_path: Option<&Path>, options: EnvOptions) -> Result<Env, EnvError> {
        let variant: Variant = name.parse()?;
        let config = match config_path {
            Some(p) => GameConfig::load(p)?,
            None => GameConfig::default(),
        };
        Env::new(variant, config, options)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn options(&self) -> &EnvOptions {
        &self.options
    }

    /// Level id and start of the current episode.
    pub fn current_start(&self) -> Option<(u8, StartSelector)> {
        self.episode.as_ref().map(|e| (e.level, e.spec.start))
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.done)
    }

    fn ensure_open(&self) -> Result<(), EnvError> {
        if self.closed {
            Err(EnvError::Closed)
        } else {
            Ok(())
        }
    }

    fn pick_start(&mut self) -> Result<(LevelSource, StartSelector), EnvError> {
        let pool = if self.options.eval {
            &self.reserved
        } else {
            &self.training
        };
        if pool.is_empty() {
            return Err(EnvError::NoStart(if self.options.eval { "reserved" } else { "training" }));
        }
        let i = if pool.len() == 1 {
            0
        } else {
            self.rng.random_range(0..pool.len())
        };
        Ok(pool[i].clone())
    }

    /// Starts a new episode. A seed restarts the start-selection stream.
    pub fn reset(&mut self, seed: Option<u64>) -> Result<State, EnvError> {
        self.ensure_open()?;
        if let Some(s) = seed {
            self.rng = ChaCha8Rng::seed_from_u64(s);
        }
        let (source, start) = self.pick_start()?;
        let mut spec = LoadSpec {
            source,
            start,
            time_s: None,
        };
        if self.variant == Variant::Random {
            spec = spec.with_time(RANDOM_TIME_S);
        }
        self.game.load(spec.clone())?;
        let ram = *self.game.ram()?;
        self.episode = Some(Episode {
            spec,
            level: ram.level_id,
            done: false,
        });
        self.encode(None, &ram)
    }

    fn encode(&self, outcome: Option<&MoveOutcome>, ram: &KulaRam) -> Result<State, EnvError> {
        let visual = match outcome {
            Some(o) => o.visual.clone(),
            None if self.game.config().visual.enabled => Some(self.game.observe()?),
            None => None,
        };
        let composite = self.variant.composite();
        let sound = composite.then(|| match outcome {
            Some(o) => o.sound.clone(),
            None => Sound::Mfcc(crate::dsp::MfccMatrix::empty(self.game.config().audio.mfcc.n_coeffs)),
        });
        let with_clock = composite || self.game.config().reward.time_in_state;
        Ok(State {
            visual,
            sound,
            clock: with_clock.then(|| ram.clock_s()),
            score: composite.then_some(ram.score),
        })
    }

    /// Performs action `action` and returns once the move has completed.
    pub fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        self.ensure_open()?;
        let a = Action::from_index(action)?;
        if self.is_done() {
            return Err(EnvError::EpisodeOver);
        }
        let outcome = self.game.make_move(a)?;
        let ram = *self.game.ram()?;
        let state = self.encode(Some(&outcome), &ram)?;
        let ep = self.episode.as_mut().expect("episode active");
        ep.done = !outcome.playing;
        Ok(StepResult {
            state,
            reward: outcome.reward,
            done: ep.done,
            info: StepInfo {
                duration_real: outcome.duration_real,
                duration_game: outcome.duration_game,
                score: outcome.score,
                clock: outcome.clock,
                cause: ep.done.then_some(outcome.status),
                level: ep.level,
                start: ep.spec.start,
            },
        })
    }

    /// Level grid with the ball drawn on it, then a status line.
    pub fn render_text(&self) -> Result<String, EnvError> {
        self.ensure_open()?;
        let ram = self.game.ram()?;
        let mut rows = self.game.grid_rows()?;
        let (x, y) = (ram.pose.x as usize, ram.pose.y as usize);
        if ram.status != GameStatus::LostFall {
            if let Some(row) = rows.get_mut(y) {
                let mut chars: Vec<char> = row.chars().collect();
                if x < chars.len() {
                    chars[x] = ram.pose.orientation.arrow();
                    *row = chars.into_iter().collect();
                }
            }
        }
        let mut out = rows.join("\n");
        out += &format!(
            "\nscore {} clock {:.2} keys {} status {}\n",
            ram.score,
            ram.clock_s(),
            ram.keys_remaining,
            ram.status
        );
        Ok(out)
    }

    /// Writes the full-size screen as a binary PPM.
    pub fn render_image(&self, path: &Path) -> Result<PathBuf, EnvError> {
        self.ensure_open()?;
        let fb = self.game.screen()?;
        std::fs::write(path, fb.to_ppm())?;
        Ok(path.to_path_buf())
    }

    /// Snapshots the current situation so it can be resumed later.
    pub fn save_visited(&mut self) -> Result<StateKey, EnvError> {
        self.ensure_open()?;
        let episode = self.episode.clone().ok_or(EnvError::EpisodeOver)?;
        if episode.done {
            return Err(EnvError::EpisodeOver);
        }
        let key = StateKey(self.next_key);
        self.next_key += 1;
        let snapshot = format!("visit-{}", key.0);
        self.game.save_state(&snapshot)?;
        self.visits.insert(key, Visit { snapshot, episode });
        Ok(key)
    }

    /// Restores a saved situation and continues its episode from there.
    pub fn resume_from(&mut self, key: StateKey) -> Result<State, EnvError> {
        let visit = match (self.closed, self.visits.get(&key)) {
            (false, Some(v)) => v.clone(),
            _ => return Err(EnvError::UnknownState(key.0)),
        };
        let ram = self.game.load_state(&visit.snapshot)?;
        self.game.set_spec(visit.episode.spec.clone());
        self.episode = Some(visit.episode);
        self.encode(None, &ram)
    }

    pub fn forget(&mut self, key: StateKey) -> bool {
        self.visits.remove(&key).is_some()
    }

    /// Shuts the console down. Saved keys become unknown.
    pub fn close(&mut self) -> Result<(), EnvError> {
        if !self.closed {
            self.closed = true;
            self.visits.clear();
            self.game.console().kill()?;
        }
        Ok(())
    }
}

impl Drop for Env {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(v.gym_id().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!("kula".parse::<Variant>(), Err(EnvError::UnknownVariant(_))));
    }

    #[test]
    fn bundled_start_pools() {
        let all: Vec<_> = bundled_ids().map(LevelSource::Bundled).collect();
        let (training, reserved) = starts_of(&all).unwrap();
        assert_eq!(training.len(), 12);
        assert_eq!(reserved, vec![(LevelSource::Bundled(2), StartSelector::Reserved)]);
    }

    #[test]
    fn state_hash_distinguishes_fields() {
        let a = State {
            visual: None,
            sound: None,
            clock: Some(1.0),
            score: None,
        };
        let mut b = a.clone();
        assert_eq!(a.hash_hex(), b.hash_hex());
        b.clock = None;
        assert_ne!(a.hash_hex(), b.hash_hex());
        b.score = Some(0);
        assert_ne!(a.hash_hex(), b.hash_hex());
        assert_eq!(a.hash_hex().len(), 64);
    }
}
