//! Deterministic frame-stepped virtual console.
//!
//! All state advances in whole frames. Anything outside a frame (control
//! events, RAM writes, snapshot loads) takes effect at a frame boundary, and
//! in-game time is `frames / 60` seconds whatever the execution speed.

mod audio;
mod cartridge;
mod controller;
mod error;
mod framebuffer;
mod ram;
pub mod server;
mod snapshot;
mod watch;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

pub use audio::{samples_for_frame, AudioRing, Mixer, MixerState, SAMPLE_RATE};
pub use cartridge::{Cartridge, CartridgeRegistry, TickContext};
pub use controller::{delay_frames, Button, ButtonSet, ControlEvent, ControlQueue};
pub use error::ConsoleError;
pub use framebuffer::{FrameBuffer, Rgb, SCREEN_HEIGHT, SCREEN_WIDTH};
pub use ram::{Ram, RAM_SIZE, SYSTEM_BASE, SYSTEM_LEN, SYS_ACTIVE_VOICES, SYS_FRAME_COUNTER};
pub use snapshot::{snapshot_file_name, ConsoleSnapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use watch::{MemoryWatch, WatchHit, WatchSet};

/// Base frame rate at 100% speed.
pub const FRAME_RATE: u32 = 60;

#[derive(Debug, Clone)]
pub struct ConsoleOptions {
    /// Run frames back to back instead of pacing them to the target rate.
    pub fast: bool,
    pub speed_percent: u32,
    /// Begin the session frozen.
    pub start_frozen: bool,
    /// Also persist snapshots here, one file per name.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for ConsoleOptions {
    fn default() -> Self {
        ConsoleOptions {
            fast: false,
            speed_percent: 100,
            start_frozen: false,
            snapshot_dir: None,
        }
    }
}

impl ConsoleOptions {
    pub fn fast() -> Self {
        ConsoleOptions {
            fast: true,
            start_frozen: true,
            ..Default::default()
        }
    }
}

struct LoadedCartridge {
    name: String,
    cart: Box<dyn Cartridge>,
}

struct Session {
    ram: Ram,
    framebuffer: FrameBuffer,
    fb_valid: bool,
    frame_counter: u64,
    controls: ControlQueue,
    mixer: Mixer,
    audio: AudioRing,
    cartridge: Option<LoadedCartridge>,
    frozen: bool,
    speed_percent: u32,
    watches: WatchSet,
    snapshots: HashMap<String, ConsoleSnapshot>,
}

impl Session {
    fn new(opts: &ConsoleOptions) -> Self {
        let mut s = Session {
            ram: Ram::new(),
            framebuffer: FrameBuffer::new(),
            fb_valid: false,
            frame_counter: 0,
            controls: ControlQueue::new(),
            mixer: Mixer::new(),
            audio: AudioRing::new(),
            cartridge: None,
            frozen: opts.start_frozen,
            speed_percent: opts.speed_percent.max(1),
            watches: WatchSet::new(),
            snapshots: HashMap::new(),
        };
        s.write_system_area();
        s
    }

    fn write_system_area(&mut self) {
        // wraps after ~2.2 years of frames
        let _ = self
            .ram
            .write_u32_le(SYS_FRAME_COUNTER, self.frame_counter as u32);
        let voices = self.mixer.active_voices().min(255) as u8;
        let _ = self.ram.write_byte(SYS_ACTIVE_VOICES, voices);
    }

    fn render(&mut self) {
        if !self.fb_valid {
            self.framebuffer.fill(Rgb(0, 0, 0));
            if let Some(c) = &self.cartridge {
                c.cart.render(&mut self.framebuffer);
            }
            self.fb_valid = true;
        }
    }

    fn scan_watches(&mut self) -> Vec<WatchHit> {
        let hits = self.watches.scan(&self.ram);
        if hits.iter().any(|h| h.breaks) {
            self.frozen = true;
        }
        hits
    }
}

/// The virtual console. Hosts at most one session at a time.
pub struct Console {
    registry: Arc<CartridgeRegistry>,
    options: ConsoleOptions,
    session: Option<Session>,
}

impl std::fmt::Debug for Console {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Console")
            .field("options", &self.options)
            .field("running", &self.session.is_some())
            .finish()
    }
}

impl Console {
    pub fn new(options: ConsoleOptions) -> Self {
        Self::with_registry(options, Arc::new(CartridgeRegistry::default()))
    }

    pub fn with_registry(options: ConsoleOptions, registry: Arc<CartridgeRegistry>) -> Self {
        Console {
            registry,
            options,
            session: None,
        }
    }

    pub fn options(&self) -> &ConsoleOptions {
        &self.options
    }

    fn session(&self) -> Result<&Session, ConsoleError> {
        self.session.as_ref().ok_or(ConsoleError::NotRunning)
    }

    fn session_mut(&mut self) -> Result<&mut Session, ConsoleError> {
        self.session.as_mut().ok_or(ConsoleError::NotRunning)
    }

    /// Starts a fresh session at frame 0.
    pub fn run(&mut self) -> Result<(), ConsoleError> {
        if self.session.is_some() {
            return Err(ConsoleError::AlreadyRunning);
        }
        self.session = Some(Session::new(&self.options));
        Ok(())
    }

    /// Ends the session. Watches, queued controls and in-session snapshots are dropped.
    pub fn kill(&mut self) -> Result<(), ConsoleError> {
        self.session.take().map(|_| ()).ok_or(ConsoleError::NotRunning)
    }

    pub fn is_running(&self) -> bool {
        self.session.is_some()
    }

    pub fn set_frozen(&mut self, frozen: bool) -> Result<(), ConsoleError> {
        self.session_mut()?.frozen = frozen;
        Ok(())
    }

    pub fn is_frozen(&self) -> Result<bool, ConsoleError> {
        Ok(self.session()?.frozen)
    }

    pub fn set_speed(&mut self, percent: u32) -> Result<(), ConsoleError> {
        if percent == 0 {
            return Err(ConsoleError::InvalidSpeed(percent));
        }
        self.session_mut()?.speed_percent = percent;
        Ok(())
    }

    pub fn speed(&self) -> Result<u32, ConsoleError> {
        Ok(self.session()?.speed_percent)
    }

    /// Wall-clock period between frames at the current speed.
    pub fn frame_period(&self) -> Result<Duration, ConsoleError> {
        let pct = self.speed()? as u64;
        Ok(Duration::from_nanos(1_000_000_000 * 100 / (FRAME_RATE as u64 * pct)))
    }

    pub fn frame_counter(&self) -> Result<u64, ConsoleError> {
        Ok(self.session()?.frame_counter)
    }

    pub fn ram(&self) -> Result<&Ram, ConsoleError> {
        Ok(&self.session()?.ram)
    }

    pub fn audio(&self) -> Result<&AudioRing, ConsoleError> {
        Ok(&self.session()?.audio)
    }

    pub fn controls(&self) -> Result<&ControlQueue, ConsoleError> {
        Ok(&self.session()?.controls)
    }

    pub fn cartridge_name(&self) -> Result<Option<&str>, ConsoleError> {
        Ok(self.session()?.cartridge.as_ref().map(|c| c.name.as_str()))
    }

    /// Runs one frame: applies due control events, ticks the cartridge, mixes
    /// audio, bumps the frame counter and scans watches. Does nothing while
    /// frozen. A firing break watch freezes the console after this frame.
    pub fn step_frame(&mut self) -> Result<Vec<WatchHit>, ConsoleError> {
        let s = self.session_mut()?;
        if s.frozen {
            return Ok(Vec::new());
        }
        let buttons = s.controls.advance();
        if let Some(c) = &mut s.cartridge {
            let mut ctx = TickContext {
                buttons,
                ram: &mut s.ram,
                mixer: &mut s.mixer,
            };
            c.cart.tick(&mut ctx);
        }
        let n = samples_for_frame(s.frame_counter);
        let mut samples = Vec::with_capacity(n);
        s.mixer.mix(n, &mut samples);
        s.audio.push_frame(samples);
        s.frame_counter += 1;
        s.write_system_area();
        s.fb_valid = false;
        Ok(s.scan_watches())
    }

    /// Scans watches outside frame execution (after RAM writes at a boundary).
    pub fn check_watches(&mut self) -> Result<Vec<WatchHit>, ConsoleError> {
        Ok(self.session_mut()?.scan_watches())
    }

    pub fn read_bytes(&self, addr: u32, len: usize) -> Result<Vec<u8>, ConsoleError> {
        Ok(self.session()?.ram.read(addr, len)?.to_vec())
    }

    pub fn write_byte(&mut self, addr: u32, value: u8) -> Result<(), ConsoleError> {
        self.session_mut()?.ram.write_byte(addr, value)
    }

    pub fn push_control(&mut self, ev: ControlEvent) -> Result<(), ConsoleError> {
        self.session_mut()?.controls.push(ev);
        Ok(())
    }

    pub fn add_watch(&mut self, id: u16, addr: u32, len: u16, breaks: bool) -> Result<(), ConsoleError> {
        let s = self.session_mut()?;
        s.watches.add(id, addr, len, breaks, &s.ram)
    }

    pub fn clear_watches(&mut self) -> Result<(), ConsoleError> {
        self.session_mut()?.watches.clear();
        Ok(())
    }

    pub fn sleep_watch(&mut self, id: u16) -> Result<(), ConsoleError> {
        self.session_mut()?.watches.sleep(id)
    }

    pub fn wake_watch(&mut self, id: u16) -> Result<(), ConsoleError> {
        let s = self.session_mut()?;
        s.watches.wake(id, &s.ram)
    }

    pub fn watches(&self) -> Result<&WatchSet, ConsoleError> {
        Ok(&self.session()?.watches)
    }

    /// Inserts a cartridge and power-cycles: RAM cleared, frame counter 0,
    /// controller and mixer reset. The frozen flag and watches survive; watch
    /// baselines are reset to the fresh RAM image.
    pub fn load_game(&mut self, name: &str) -> Result<(), ConsoleError> {
        let cart = match self.registry.create(name) {
            None => return Err(ConsoleError::UnknownCartridge(name.to_string())),
            Some(Err(msg)) => return Err(ConsoleError::Cartridge(msg)),
            Some(Ok(c)) => c,
        };
        let s = self.session_mut()?;
        s.ram.clear();
        s.frame_counter = 0;
        s.controls.clear();
        s.mixer.clear();
        s.audio.set_total_samples(0);
        cart.sync_ram(&mut s.ram);
        s.cartridge = Some(LoadedCartridge {
            name: name.to_string(),
            cart,
        });
        s.write_system_area();
        s.fb_valid = false;
        s.watches.rebaseline(&s.ram);
        Ok(())
    }

    pub fn snapshot(&mut self) -> Result<ConsoleSnapshot, ConsoleError> {
        let s = self.session_mut()?;
        s.render();
        Ok(ConsoleSnapshot {
            ram: s.ram.clone(),
            framebuffer: s.framebuffer.clone(),
            frame_counter: s.frame_counter,
            cartridge_name: s.cartridge.as_ref().map(|c| c.name.clone()),
            cartridge_state: s
                .cartridge
                .as_ref()
                .map(|c| c.cart.save_state())
                .unwrap_or_default(),
            controls: s.controls.clone(),
            speed_percent: s.speed_percent,
            mixer: s.mixer.to_state(),
            audio_samples: s.audio.total_samples(),
        })
    }

    /// Restores a full snapshot. Watch baselines are reset, not reported.
    pub fn restore(&mut self, snap: &ConsoleSnapshot) -> Result<(), ConsoleError> {
        let registry = Arc::clone(&self.registry);
        let s = self.session_mut()?;
        let same_cart = match (&s.cartridge, &snap.cartridge_name) {
            (Some(c), Some(n)) => &c.name == n,
            _ => false,
        };
        match &snap.cartridge_name {
            None => s.cartridge = None,
            Some(name) => {
                if !same_cart {
                    let cart = match registry.create(name) {
                        None => return Err(ConsoleError::UnknownCartridge(name.clone())),
                        Some(Err(msg)) => return Err(ConsoleError::Cartridge(msg)),
                        Some(Ok(c)) => c,
                    };
                    s.cartridge = Some(LoadedCartridge {
                        name: name.clone(),
                        cart,
                    });
                }
                if let Some(c) = &mut s.cartridge {
                    c.cart
                        .load_state(&snap.cartridge_state)
                        .map_err(ConsoleError::BadSnapshot)?;
                }
            }
        }
        s.ram = snap.ram.clone();
        s.framebuffer = snap.framebuffer.clone();
        s.fb_valid = true;
        s.frame_counter = snap.frame_counter;
        s.controls = snap.controls.clone();
        s.speed_percent = snap.speed_percent;
        s.mixer = Mixer::from_state(&snap.mixer);
        s.audio.set_total_samples(snap.audio_samples);
        s.watches.rebaseline(&s.ram);
        Ok(())
    }

    pub fn save_snapshot(&mut self, name: &str) -> Result<(), ConsoleError> {
        let snap = self.snapshot()?;
        if let Some(dir) = &self.options.snapshot_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(snapshot_file_name(name)), snap.encode()?)?;
        }
        self.session_mut()?.snapshots.insert(name.to_string(), snap);
        Ok(())
    }

    pub fn load_snapshot(&mut self, name: &str) -> Result<(), ConsoleError> {
        let snap = match self.session()?.snapshots.get(name) {
            Some(s) => s.clone(),
            None => {
                let path = self
                    .options
                    .snapshot_dir
                    .as_ref()
                    .map(|d| d.join(snapshot_file_name(name)))
                    .filter(|p| p.exists())
                    .ok_or_else(|| ConsoleError::UnknownState(name.to_string()))?;
                ConsoleSnapshot::decode(&std::fs::read(path)?)?
            }
        };
        self.restore(&snap)
    }

    pub fn has_snapshot(&self, name: &str) -> bool {
        self.session
            .as_ref()
            .is_some_and(|s| s.snapshots.contains_key(name))
    }

    /// Frame-boundary-consistent copy of the screen.
    pub fn get_screen(&mut self) -> Result<FrameBuffer, ConsoleError> {
        let s = self.session_mut()?;
        s.render();
        Ok(s.framebuffer.clone())
    }

    pub fn start_audio_recording(&mut self) -> Result<(), ConsoleError> {
        self.session_mut()?.audio.start_recording()
    }

    /// Stops recording and returns the captured samples.
    pub fn stop_audio_recording(&mut self) -> Result<Vec<i16>, ConsoleError> {
        self.session_mut()?.audio.stop_recording()
    }
}
