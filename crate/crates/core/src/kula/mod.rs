//! Kula: a rolling-ball grid puzzle cartridge.
//!
//! The ball moves over a planar platform, collecting coins, keys and fruit.
//! Collecting every key opens the goal. Rolling off the platform, landing on
//! a spike, or running out of time ends the level.

mod cart;
mod level;
mod render;
mod solver;
mod sound;

use thiserror::Error;

pub use cart::{Animation, KulaCartridge, KulaState, LevelSource, LoadSpec};
pub use level::{
    bundled, bundled_ids, LevelSpec, ObjectKind, Orientation, Pose, StartSelector, Tile,
    DEFAULT_TIME_S, MAX_SIDE,
};
pub use render::render;
pub use solver::{solve, Solution};
pub use sound::{synth_sound, SoundEvent};

use crate::console::CartridgeRegistry;

/// Name under which the cartridge is registered.
pub const CARTRIDGE_NAME: &str = "kula";

/// Cartridge RAM layout. Multi-byte fields are little-endian.
pub mod ram_map {
    pub const BASE: u32 = 0x0001_0000;
    pub const SCORE: u32 = BASE;
    pub const CLOCK_FRAMES: u32 = BASE + 0x04;
    pub const STATUS: u32 = BASE + 0x08;
    pub const MOVING: u32 = BASE + 0x09;
    pub const X: u32 = BASE + 0x0A;
    pub const Y: u32 = BASE + 0x0B;
    pub const ORIENTATION: u32 = BASE + 0x0C;
    pub const KEYS_REMAINING: u32 = BASE + 0x0D;
    pub const LEVEL_ID: u32 = BASE + 0x0E;
    pub const WIDTH: u32 = BASE + 0x0F;
    pub const HEIGHT: u32 = BASE + 0x10;
    /// Bytes covering score through height.
    pub const HEADER_LEN: u16 = 0x11;
    /// Current grid as level-file characters, row-major (collected objects read as `#`).
    pub const GRID: u32 = BASE + 0x100;
}

#[derive(Debug, Error)]
pub enum KulaError {
    #[error("unknown start '{0}'")]
    UnknownStart(String),
    #[error("unknown level {0}")]
    UnknownLevel(u8),
    #[error("bad level (line {line}): {msg}")]
    BadLevel { line: usize, msg: String },
    #[error("bad load name: {0}")]
    BadLoadName(String),
    #[error("cannot read level file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[repr(u8)]
pub enum GameStatus {
    Playing = 0,
    Won = 1,
    LostFall = 2,
    LostSpike = 3,
    LostTimeout = 4,
}

impl GameStatus {
    pub fn from_u8(v: u8) -> Option<GameStatus> {
        use GameStatus::*;
        [Playing, Won, LostFall, LostSpike, LostTimeout].get(v as usize).copied()
    }

    pub fn is_terminal(self) -> bool {
        self != GameStatus::Playing
    }

    pub fn is_loss(self) -> bool {
        matches!(
            self,
            GameStatus::LostFall | GameStatus::LostSpike | GameStatus::LostTimeout
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GameStatus::Playing => "playing",
            GameStatus::Won => "won",
            GameStatus::LostFall => "lost_fall",
            GameStatus::LostSpike => "lost_spike",
            GameStatus::LostTimeout => "lost_timeout",
        }
    }
}

impl std::fmt::Display for GameStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum MoveKind {
    Forward,
    LookLeft,
    LookRight,
    JumpForward,
}

/// Animation lengths in frames.
pub mod timing {
    pub const LOOK: u32 = 15;
    pub const FORWARD: u32 = 30;
    pub const JUMP: u32 = 75;
    /// Extra frames when the move collects an object.
    pub const COLLECT: u32 = 15;
    /// Frames of falling after rolling onto void.
    pub const FALL: u32 = 90;
}

/// What happens when the ball reaches its target cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Arrival {
    Rotate,
    Plain,
    Collect(ObjectKind),
    Win,
    Fall,
    Spike,
}

/// A scheduled move: target pose, frame of arrival, total length, effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MovePlan {
    pub kind: MoveKind,
    pub from: Pose,
    pub to: Pose,
    /// Target cell, which may lie outside the grid.
    pub target: (i32, i32),
    pub arrive_at: u32,
    pub total: u32,
    pub arrival: Arrival,
}

/// Plans `kind` from `pose`. `objects` holds the not yet collected objects and
/// `keys_remaining` the keys still to collect before the move.
pub fn plan_move(
    level: &LevelSpec,
    objects: &std::collections::BTreeMap<(u8, u8), ObjectKind>,
    keys_remaining: usize,
    pose: Pose,
    kind: MoveKind,
) -> MovePlan {
    let rotate = |o: Orientation| MovePlan {
        kind,
        from: pose,
        to: Pose { orientation: o, ..pose },
        target: (pose.x as i32, pose.y as i32),
        arrive_at: timing::LOOK,
        total: timing::LOOK,
        arrival: Arrival::Rotate,
    };
    let (steps, base) = match kind {
        MoveKind::LookLeft => return rotate(pose.orientation.left()),
        MoveKind::LookRight => return rotate(pose.orientation.right()),
        MoveKind::Forward => (1, timing::FORWARD),
        MoveKind::JumpForward => (2, timing::JUMP),
    };
    let (dx, dy) = pose.orientation.delta();
    let tx = pose.x as i32 + dx * steps;
    let ty = pose.y as i32 + dy * steps;
    let to = if level.in_bounds(tx, ty) {
        Pose { x: tx as u8, y: ty as u8, ..pose }
    } else {
        pose
    };
    let (arrival, total) = match level.tile(tx, ty) {
        Tile::Void => (Arrival::Fall, base + timing::FALL),
        Tile::Spike => (Arrival::Spike, base),
        Tile::Goal if keys_remaining == 0 => (Arrival::Win, base),
        Tile::Goal => (Arrival::Plain, base),
        Tile::Platform => match objects.get(&(tx as u8, ty as u8)) {
            Some(o) => (Arrival::Collect(*o), base + timing::COLLECT),
            None => (Arrival::Plain, base),
        },
    };
    MovePlan {
        kind,
        from: pose,
        to,
        target: (tx, ty),
        arrive_at: base,
        total,
        arrival,
    }
}

/// Registers the cartridge under [`CARTRIDGE_NAME`].
pub fn register(reg: &mut CartridgeRegistry) {
    reg.register(CARTRIDGE_NAME, |args| {
        let spec: LoadSpec = args.parse().map_err(|e: KulaError| e.to_string())?;
        let cart = KulaCartridge::load(&spec).map_err(|e| e.to_string())?;
        Ok(Box::new(cart))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(text: &str) -> LevelSpec {
        LevelSpec::parse(text).unwrap()
    }

    #[test]
    fn jump_overflies_middle_cell() {
        let l = level("id: 1\nstart: 1,3,N\n#.#\n###\n#.#\n###\n");
        let p = l.starts[0];
        let plan = plan_move(&l, &l.objects, 0, p, MoveKind::JumpForward);
        assert_eq!((plan.to.x, plan.to.y), (1, 1));
        assert_eq!(plan.arrival, Arrival::Plain);
        assert_eq!(plan.total, timing::JUMP);
    }

    #[test]
    fn move_durations() {
        let l = level("id: 1\nstart: 0,2,N\nC.\n#.\n#.\n");
        let p = l.starts[0];
        let f = plan_move(&l, &l.objects, 0, p, MoveKind::Forward);
        assert_eq!((f.arrive_at, f.total), (30, 30));
        let j = plan_move(&l, &l.objects, 0, p, MoveKind::JumpForward);
        assert_eq!((j.arrive_at, j.total, j.arrival), (75, 90, Arrival::Collect(ObjectKind::Coin)));
        let r = plan_move(&l, &l.objects, 0, p, MoveKind::LookRight);
        assert_eq!((r.total, r.to.orientation), (15, Orientation::E));
        let off = plan_move(&l, &l.objects, 0, r.to, MoveKind::Forward);
        assert_eq!((off.arrival, off.total), (Arrival::Fall, 120));
        assert_eq!(j.total - timing::COLLECT - r.total, 60);
    }

    #[test]
    fn goal_needs_all_keys() {
        let l = level("id: 1\nstart: 0,1,N\nGK\n##\n");
        let p = l.starts[0];
        assert_eq!(plan_move(&l, &l.objects, 1, p, MoveKind::Forward).arrival, Arrival::Plain);
        assert_eq!(plan_move(&l, &l.objects, 0, p, MoveKind::Forward).arrival, Arrival::Win);
    }

    #[test]
    fn leaving_the_grid_is_a_fall() {
        let l = level("id: 1\nstart: 0,0,W\n#\n");
        let plan = plan_move(&l, &l.objects, 0, l.starts[0], MoveKind::Forward);
        assert_eq!(plan.arrival, Arrival::Fall);
        assert_eq!(plan.target, (-1, 0));
        assert_eq!(plan.to, l.starts[0]);
    }
}
