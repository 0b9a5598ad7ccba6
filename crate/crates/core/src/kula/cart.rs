use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::level::cell_map;
use super::{
    bundled, plan_move, ram_map, sound, Arrival, GameStatus, KulaError, LevelSpec, MoveKind,
    MovePlan, ObjectKind, Pose, SoundEvent, StartSelector, CARTRIDGE_NAME,
};
use crate::console::{Button, ButtonSet, Cartridge, FrameBuffer, Ram, TickContext, FRAME_RATE};

/// Where a level comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LevelSource {
    Bundled(u8),
    File(PathBuf),
}

/// Parsed cartridge arguments: `level=N` or `file=PATH`, then optional
/// `start=I|r` and `time=S` (overrides the level's time limit).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoadSpec {
    pub source: LevelSource,
    pub start: StartSelector,
    pub time_s: Option<u32>,
}

impl LoadSpec {
    pub fn bundled(level: u8, start: StartSelector) -> Self {
        LoadSpec {
            source: LevelSource::Bundled(level),
            start,
            time_s: None,
        }
    }

    pub fn with_time(mut self, seconds: u32) -> Self {
        self.time_s = Some(seconds);
        self
    }

    /// Full LOAD_GAME name, e.g. `kula?level=2&start=r&time=80`.
    pub fn load_name(&self) -> String {
        format!("{CARTRIDGE_NAME}?{self}")
    }

    pub fn read_level(&self) -> Result<LevelSpec, KulaError> {
        match &self.source {
            LevelSource::Bundled(id) => bundled(*id),
            LevelSource::File(path) => LevelSpec::parse(&std::fs::read_to_string(path)?),
        }
    }
}

impl fmt::Display for LoadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            LevelSource::Bundled(id) => write!(f, "level={id}")?,
            LevelSource::File(p) => write!(f, "file={}", p.display())?,
        }
        write!(f, "&start={}", self.start)?;
        if let Some(t) = self.time_s {
            write!(f, "&time={t}")?;
        }
        Ok(())
    }
}

impl FromStr for LoadSpec {
    type Err = KulaError;

    fn from_str(args: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| KulaError::BadLoadName(m);
        let mut source = None;
        let mut start = StartSelector::Training(0);
        let mut time_s = None;
        for part in args.split('&').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got '{part}'")))?;
            match k {
                "level" => {
                    let id = v.parse().map_err(|_| bad(format!("bad level '{v}'")))?;
                    source = Some(LevelSource::Bundled(id));
                }
                "file" => source = Some(LevelSource::File(PathBuf::from(v))),
                "start" => start = v.parse().map_err(bad)?,
                "time" => {
                    let t: u32 = v.parse().map_err(|_| bad(format!("bad time '{v}'")))?;
                    if t == 0 {
                        return Err(bad("time must be positive".into()));
                    }
                    time_s = Some(t);
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        Ok(LoadSpec {
            source: source.unwrap_or(LevelSource::Bundled(1)),
            start,
            time_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Animation {
    pub plan: MovePlan,
    pub elapsed: u32,
}

/// Complete mutable game state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KulaState {
    pub pose: Pose,
    pub score: u32,
    pub clock_frames: u32,
    pub status: GameStatus,
    pub keys_remaining: u8,
    #[serde(with = "cell_map")]
    pub objects: BTreeMap<(u8, u8), ObjectKind>,
    pub anim: Option<Animation>,
    pub prev_buttons: u16,
    /// Frames since load; drives render-only effects such as blinking.
    pub frame: u64,
}

impl KulaState {
    pub fn moving(&self) -> bool {
        self.anim.is_some()
    }
}

pub struct KulaCartridge {
    level: Arc<LevelSpec>,
    state: KulaState,
}

impl KulaCartridge {
    pub fn load(spec: &LoadSpec) -> Result<Self, KulaError> {
        let mut level = spec.read_level()?;
        if let Some(t) = spec.time_s {
            level.time_limit_s = t;
        }
        let pose = level.start(spec.start)?;
        Ok(Self::new(Arc::new(level), pose))
    }

    pub fn new(level: Arc<LevelSpec>, pose: Pose) -> Self {
        let state = KulaState {
            pose,
            score: 0,
            clock_frames: level.time_limit_s * FRAME_RATE,
            status: GameStatus::Playing,
            keys_remaining: level.key_count() as u8,
            objects: level.objects.clone(),
            anim: None,
            prev_buttons: 0,
            frame: 0,
        };
        KulaCartridge { level, state }
    }

    pub fn level(&self) -> &LevelSpec {
        &self.level
    }

    pub fn state(&self) -> &KulaState {
        &self.state
    }

    /// Maps newly pressed buttons to a move. `Up` with `Cross` held jumps;
    /// `Cross` alone, `Down` and the other buttons do nothing.
    pub fn scan_input(buttons: ButtonSet, edges: ButtonSet) -> Option<MoveKind> {
        if edges.contains(Button::Up) {
            if buttons.contains(Button::Cross) {
                Some(MoveKind::JumpForward)
            } else {
                Some(MoveKind::Forward)
            }
        } else if edges.contains(Button::Left) {
            Some(MoveKind::LookLeft)
        } else if edges.contains(Button::Right) {
            Some(MoveKind::LookRight)
        } else {
            None
        }
    }

    /// Advances one frame and returns the sounds started during it.
    pub fn advance(&mut self, buttons: ButtonSet) -> Vec<SoundEvent> {
        let s = &mut self.state;
        let mut sounds = Vec::new();
        s.frame += 1;
        let edges = buttons.pressed_since(ButtonSet::from_bits(s.prev_buttons));
        s.prev_buttons = buttons.bits();
        if s.status.is_terminal() {
            return sounds;
        }

        s.clock_frames = s.clock_frames.saturating_sub(1);
        if s.clock_frames == 0 {
            s.status = GameStatus::LostTimeout;
            s.anim = None;
            sounds.push(SoundEvent::Lose);
            return sounds;
        }

        if let Some(mut anim) = s.anim.take() {
            anim.elapsed += 1;
            let plan = anim.plan;
            if anim.elapsed == plan.arrive_at {
                arrive(s, &plan, &mut sounds);
            }
            if s.status.is_terminal() {
                return sounds;
            }
            if anim.elapsed == plan.total {
                if plan.arrival == Arrival::Fall {
                    s.status = GameStatus::LostFall;
                } else {
                    s.pose = plan.to;
                }
            } else {
                s.anim = Some(anim);
            }
            return sounds;
        }

        if let Some(kind) = Self::scan_input(buttons, edges) {
            let plan = plan_move(
                &self.level,
                &s.objects,
                s.keys_remaining as usize,
                s.pose,
                kind,
            );
            if kind == MoveKind::JumpForward {
                sounds.push(SoundEvent::Jump);
            }
            s.anim = Some(Animation { plan, elapsed: 0 });
        }
        sounds
    }

    fn write_ram(&self, ram: &mut Ram) {
        let s = &self.state;
        let l = &self.level;
        let mut header = [0u8; ram_map::HEADER_LEN as usize];
        header[0..4].copy_from_slice(&s.score.to_le_bytes());
        header[4..8].copy_from_slice(&s.clock_frames.to_le_bytes());
        header[8] = s.status as u8;
        header[9] = s.moving() as u8;
        header[10] = s.pose.x;
        header[11] = s.pose.y;
        header[12] = s.pose.orientation as u8;
        header[13] = s.keys_remaining;
        header[14] = l.id;
        header[15] = l.width as u8;
        header[16] = l.height as u8;
        ram.write(ram_map::BASE, &header).expect("cartridge header in range");
        let grid: Vec<u8> = l
            .grid_rows(&s.objects)
            .into_iter()
            .flat_map(String::into_bytes)
            .collect();
        ram.write(ram_map::GRID, &grid).expect("grid in range");
    }
}

/// Applies the effect of reaching the move target.
fn arrive(s: &mut KulaState, plan: &MovePlan, sounds: &mut Vec<SoundEvent>) {
    match plan.arrival {
        Arrival::Rotate => {}
        Arrival::Plain => {
            s.pose = plan.to;
            sounds.push(SoundEvent::Roll);
        }
        Arrival::Collect(obj) => {
            s.pose = plan.to;
            s.objects.remove(&(plan.to.x, plan.to.y));
            s.score += obj.score_value();
            if obj == ObjectKind::Key {
                s.keys_remaining = s.keys_remaining.saturating_sub(1);
            }
            sounds.push(match obj {
                ObjectKind::Coin => SoundEvent::Coin,
                ObjectKind::Key => SoundEvent::Key,
                ObjectKind::Fruit => SoundEvent::Fruit,
            });
        }
        Arrival::Win => {
            s.pose = plan.to;
            s.status = GameStatus::Won;
            s.anim = None;
            sounds.push(SoundEvent::Win);
        }
        Arrival::Spike => {
            s.pose = plan.to;
            s.status = GameStatus::LostSpike;
            s.anim = None;
            sounds.push(SoundEvent::Lose);
        }
        Arrival::Fall => {
            // the ball hangs over the void cell (or the edge) while it drops
            s.pose = plan.to;
            sounds.push(SoundEvent::Lose);
        }
    }
}

impl Cartridge for KulaCartridge {
    fn tick(&mut self, ctx: &mut TickContext<'_>) {
        for ev in self.advance(ctx.buttons) {
            ctx.mixer.play(sound::cached(ev));
        }
        self.write_ram(ctx.ram);
    }

    fn render(&self, fb: &mut FrameBuffer) {
        super::render(&self.level, &self.state, fb);
    }

    fn sync_ram(&self, ram: &mut Ram) {
        self.write_ram(ram);
    }

    fn save_state(&self) -> Vec<u8> {
        serde_json::to_vec(&self.state).expect("state serializes")
    }

    fn load_state(&mut self, blob: &[u8]) -> Result<(), String> {
        self.state = serde_json::from_slice(blob).map_err(|e| e.to_string())?;
        Ok(())
    }
}
