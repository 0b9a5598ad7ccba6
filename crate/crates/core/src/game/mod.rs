//! Game abstraction for Kula: actions become control events, moves are
//! delimited by watching the cartridge's moving flag, and each move yields a
//! [`MoveOutcome`].
//!
//! The console is kept frozen between moves. A break watch on the status and
//! moving bytes freezes it again at the frame where a move starts and at the
//! frame where it ends, so no idle frames leak in between moves.

mod audio;
mod config;
mod visual;

use std::fmt;
use std::str::FromStr;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audio::{silence_level, trim_silence, Sound};
pub use config::{AudioPolicy, GameConfig, RewardConfig, VisualConfig};
pub use visual::{downsample, process_frame, VisualTensor};

use crate::client::{listener_channel, MemoryChange, DEFAULT_TOUCH_MS};
use crate::console::{
    Button, ConsoleError, ConsoleOptions, FrameBuffer, FRAME_RATE, SYSTEM_BASE, SYSTEM_LEN,
    SYS_ACTIVE_VOICES, SYS_FRAME_COUNTER,
};
use crate::dsp::{normalize_i16, DspError, Mfcc};
use crate::kula::{ram_map, GameStatus, KulaError, LoadSpec, MoveKind, Orientation, Pose};
use crate::ConsoleHandle;

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Console(#[from] ConsoleError),
    #[error(transparent)]
    Kula(#[from] KulaError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("episode is over")]
    EpisodeOver,
    #[error("move did not finish within {0} s of game time")]
    StuckMove(f64),
    #[error("bad frame: {0}")]
    BadFrame(String),
    #[error("invalid action index {0}")]
    BadAction(usize),
    #[error("no level loaded")]
    NoLevel,
    #[error("unexpected cartridge memory: {0}")]
    BadMemory(String),
    #[error("config error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Forward = 0,
    LookRight = 1,
    LookLeft = 2,
    JumpForward = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::Forward,
        Action::LookRight,
        Action::LookLeft,
        Action::JumpForward,
    ];

    pub fn from_index(i: usize) -> Result<Action, GameError> {
        Self::ALL.get(i).copied().ok_or(GameError::BadAction(i))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Forward => "Forward",
            Action::LookRight => "LookRight",
            Action::LookLeft => "LookLeft",
            Action::JumpForward => "JumpForward",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<MoveKind> for Action {
    fn from(k: MoveKind) -> Self {
        match k {
            MoveKind::Forward => Action::Forward,
            MoveKind::LookRight => Action::LookRight,
            MoveKind::LookLeft => Action::LookLeft,
            MoveKind::JumpForward => Action::JumpForward,
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            return Action::from_index(i).map_err(|e| e.to_string());
        }
        Action::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown action '{s}'"))
    }
}

/// Decoded cartridge header as found in console RAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KulaRam {
    pub score: u32,
    pub clock_frames: u32,
    pub status: GameStatus,
    pub moving: bool,
    pub pose: Pose,
    pub keys_remaining: u8,
    pub level_id: u8,
    pub width: u8,
    pub height: u8,
}

impl KulaRam {
    pub fn parse(b: &[u8]) -> Result<KulaRam, GameError> {
        if b.len() < ram_map::HEADER_LEN as usize {
            return Err(GameError::BadMemory(format!("header of {} bytes", b.len())));
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let status = GameStatus::from_u8(b[8])
            .ok_or_else(|| GameError::BadMemory(format!("status byte {}", b[8])))?;
        let orientation = Orientation::from_u8(b[12])
            .ok_or_else(|| GameError::BadMemory(format!("orientation byte {}", b[12])))?;
        Ok(KulaRam {
            score: u32_at(0),
            clock_frames: u32_at(4),
            status,
            moving: b[9] != 0,
            pose: Pose::new(b[10], b[11], orientation),
            keys_remaining: b[13],
            level_id: b[14],
            width: b[15],
            height: b[16],
        })
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_frames as f64 / FRAME_RATE as f64
    }
}

/// Result of one move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveOutcome {
    pub visual: Option<VisualTensor>,
    pub reward: f64,
    pub playing: bool,
    /// Remaining game clock in seconds.
    pub clock: f64,
    pub sound: Sound,
    pub duration_real: f64,
    pub duration_game: f64,
    pub score: u32,
    pub status: GameStatus,
}

/// Kula played one move at a time over a console handle.
pub struct Game {
    console: ConsoleHandle,
    config: GameConfig,
    spec: Option<LoadSpec>,
    mfcc: Option<Mfcc>,
    move_rx: Receiver<MemoryChange>,
    step_rx: Receiver<MemoryChange>,
    step_watch: u16,
    ram: Option<KulaRam>,
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("spec", &self.spec)
            .field("ram", &self.ram)
            .finish()
    }
}

/// Wall time between checks of the stuck-move budget.
const POLL: Duration = Duration::from_millis(500);

impl Game {
    /// Starts a console, loads `spec` and begins the first episode.
    pub fn launch(spec: LoadSpec, options: ConsoleOptions, config: GameConfig) -> Result<Game, GameError> {
        let console = ConsoleHandle::run(options)?;
        let mut game = Game::attach(console, config)?;
        game.load(spec)?;
        Ok(game)
    }

    /// Takes over a running console. Existing listeners are kept.
    pub fn attach(console: ConsoleHandle, config: GameConfig) -> Result<Game, GameError> {
        config.validate()?;
        let mfcc = if config.audio.record && config.audio.use_mfcc {
            Some(Mfcc::new(config.audio.mfcc.clone())?)
        } else {
            None
        };
        console.freeze()?;
        let (on_move, move_rx) = listener_channel();
        console.add_break_listener(ram_map::STATUS, 2, on_move)?;
        let (on_step, step_rx) = listener_channel();
        let step_watch = console.add_break_listener(SYSTEM_BASE, SYSTEM_LEN, on_step)?;
        console.sleep_memory_listener(step_watch)?;
        Ok(Game {
            console,
            config,
            spec: None,
            mfcc,
            move_rx,
            step_rx,
            step_watch,
            ram: None,
        })
    }

    pub fn console(&self) -> &ConsoleHandle {
        &self.console
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn spec(&self) -> Option<&LoadSpec> {
        self.spec.as_ref()
    }

    /// Loads a level and starts an episode on it.
    pub fn load(&mut self, spec: LoadSpec) -> Result<(), GameError> {
        self.spec = Some(spec);
        self.play()
    }

    /// Records which level is loaded without reloading it, e.g. after a restore.
    pub fn set_spec(&mut self, spec: LoadSpec) {
        self.spec = Some(spec);
    }

    /// Restarts the current level from its start pose.
    pub fn play(&mut self) -> Result<(), GameError> {
        let name = self.spec.as_ref().ok_or(GameError::NoLevel)?.load_name();
        self.console.freeze()?;
        self.console.load_game(&name)?;
        self.drain();
        self.refresh()?;
        Ok(())
    }

    /// Re-reads the cartridge header from RAM.
    pub fn refresh(&mut self) -> Result<KulaRam, GameError> {
        let bytes = self.console.read_bytes(ram_map::BASE, ram_map::HEADER_LEN)?;
        let ram = KulaRam::parse(&bytes)?;
        self.ram = Some(ram);
        Ok(ram)
    }

    /// Last header read, after the most recent move, load or restore.
    pub fn ram(&self) -> Result<&KulaRam, GameError> {
        self.ram.as_ref().ok_or(GameError::NoLevel)
    }

    pub fn status(&self) -> Result<GameStatus, GameError> {
        Ok(self.ram()?.status)
    }

    pub fn is_playing(&self) -> bool {
        self.ram.is_some_and(|r| r.status == GameStatus::Playing)
    }

    /// Human-readable episode status.
    pub fn interpret_state(&self) -> &'static str {
        self.ram.map(|r| r.status.name()).unwrap_or("unloaded")
    }

    /// All actions, in index order. Fails once the episode has ended.
    pub fn move_options(&self) -> Result<Vec<Action>, GameError> {
        match self.status()? {
            GameStatus::Playing => Ok(Action::ALL.to_vec()),
            _ => Err(GameError::EpisodeOver),
        }
    }

    /// Grid rows as stored in RAM, objects included.
    pub fn grid_rows(&self) -> Result<Vec<String>, GameError> {
        let r = self.ram()?;
        let (w, h) = (r.width as usize, r.height as usize);
        let bytes = self.console.read_bytes(ram_map::GRID, (w * h) as u16)?;
        Ok(bytes
            .chunks(w.max(1))
            .map(|row| String::from_utf8_lossy(row).into_owned())
            .collect())
    }

    pub fn screen(&self) -> Result<FrameBuffer, GameError> {
        Ok(self.console.get_screen()?)
    }

    /// Current screen, downsampled.
    pub fn observe(&self) -> Result<VisualTensor, GameError> {
        let v = &self.config.visual;
        process_frame(&self.screen()?, v.width, v.height)
    }

    pub fn save_state(&self, name: &str) -> Result<(), GameError> {
        Ok(self.console.save_state(name)?)
    }

    pub fn load_state(&mut self, name: &str) -> Result<KulaRam, GameError> {
        self.console.freeze()?;
        self.console.load_state(name)?;
        self.drain();
        self.refresh()
    }

    fn drain(&self) {
        while self.move_rx.try_recv().is_ok() {}
        while self.step_rx.try_recv().is_ok() {}
    }

    fn push_controls(&self, a: Action) -> Result<(), ConsoleError> {
        let c = &self.console;
        match a {
            Action::Forward => c.touch(Button::Up, DEFAULT_TOUCH_MS),
            Action::LookLeft => c.touch(Button::Left, DEFAULT_TOUCH_MS),
            Action::LookRight => c.touch(Button::Right, DEFAULT_TOUCH_MS),
            Action::JumpForward => {
                c.hold(Button::Cross)?;
                c.hold(Button::Up)?;
                c.delay(DEFAULT_TOUCH_MS)?;
                c.release(Button::Cross)?;
                c.release(Button::Up)
            }
        }
    }

    fn frame_counter(&self) -> Result<u32, GameError> {
        let b = self.console.read_bytes(SYS_FRAME_COUNTER, 4)?;
        Ok(u32::from_le_bytes(b[..4].try_into().unwrap()))
    }

    /// Waits for the next break on `rx`. The console runs while waiting; if it
    /// has not broken after `budget` frames since `start_frame` it is frozen
    /// and the move reported stuck.
    fn wait_break(
        &self,
        rx: &Receiver<MemoryChange>,
        start_frame: u32,
        budget: u32,
    ) -> Result<MemoryChange, GameError> {
        loop {
            match rx.recv_timeout(POLL) {
                Ok(change) => return Ok(change),
                Err(RecvTimeoutError::Disconnected) => return Err(ConsoleError::NotRunning.into()),
                Err(RecvTimeoutError::Timeout) => {
                    if !self.console.is_running() {
                        return Err(ConsoleError::NotRunning.into());
                    }
                    let now = self.frame_counter()?;
                    if now.wrapping_sub(start_frame) >= budget {
                        self.console.freeze()?;
                        // a break may have raced the freeze
                        if let Ok(change) = rx.try_recv() {
                            return Ok(change);
                        }
                        return Err(GameError::StuckMove(self.config.stuck_timeout_s));
                    }
                }
            }
        }
    }

    /// Performs one action and blocks until the move has finished.
    pub fn make_move(&mut self, a: Action) -> Result<MoveOutcome, GameError> {
        let before = *self.ram()?;
        if before.status.is_terminal() {
            return Err(GameError::EpisodeOver);
        }
        let policy = self.config.audio.clone();
        let budget = (self.config.stuck_timeout_s * FRAME_RATE as f64).ceil() as u32;
        self.drain();
        let start_frame = self.frame_counter()?;
        let t0 = Instant::now();

        self.push_controls(a)?;
        if policy.record {
            self.console.start_recording_audio()?;
        }
        self.console.unfreeze()?;
        loop {
            let change = self.wait_break(&self.move_rx, start_frame, budget)?;
            let status = GameStatus::from_u8(change.bytes[0]);
            let moving = change.bytes[1] != 0;
            if status.is_some_and(GameStatus::is_terminal) || !moving {
                break;
            }
            self.console.unfreeze()?;
        }
        if self.frame_counter()?.wrapping_sub(start_frame) > budget {
            return Err(GameError::StuckMove(self.config.stuck_timeout_s));
        }

        let sound = if policy.record {
            self.capture_tail(&policy)?;
            let samples = self.console.stop_recording_audio()?;
            let trimmed = trim_silence(&samples, policy.silence_threshold);
            match &self.mfcc {
                Some(m) => Sound::Mfcc(m.compute(&normalize_i16(trimmed))?),
                None => Sound::Raw(trimmed.to_vec()),
            }
        } else {
            Sound::None
        };
        let duration_real = t0.elapsed().as_secs_f64();

        let after = self.refresh()?;
        let delta = after.score.saturating_sub(before.score);
        let visual = if self.config.visual.enabled {
            Some(self.observe()?)
        } else {
            None
        };
        Ok(MoveOutcome {
            visual,
            reward: self.config.reward.reward(delta, after.status),
            playing: after.status == GameStatus::Playing,
            clock: after.clock_s(),
            sound,
            duration_real,
            duration_game: before.clock_frames.saturating_sub(after.clock_frames) as f64
                / FRAME_RATE as f64,
            score: after.score,
            status: after.status,
        })
    }

    /// Steps single frames until no voice is sounding or the recording limit
    /// is reached.
    fn capture_tail(&self, policy: &AudioPolicy) -> Result<(), GameError> {
        let voices = self.console.read_bytes(SYS_ACTIVE_VOICES, 1)?[0];
        if voices == 0 {
            return Ok(());
        }
        let max_frames = (policy.max_record_s * FRAME_RATE as f64).round() as u32;
        let offset = (SYS_ACTIVE_VOICES - SYSTEM_BASE) as usize;
        self.console.wake_memory_listener(self.step_watch)?;
        let mut frames = 0;
        while frames < max_frames {
            let start = self.frame_counter()?;
            self.console.unfreeze()?;
            let change = self.wait_break(&self.step_rx, start, FRAME_RATE)?;
            frames += 1;
            if change.bytes[offset] == 0 {
                break;
            }
        }
        self.console.sleep_memory_listener(self.step_watch)?;
        Ok(())
    }

    /// Stops the console.
    pub fn close(self) -> Result<(), GameError> {
        Ok(self.console.kill()?)
    }
}
