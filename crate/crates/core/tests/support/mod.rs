#![allow(dead_code)]

use std::path::PathBuf;

use tempfile::TempDir;
use vcle::game::{Game, GameConfig};
use vcle::kula::{LevelSource, LoadSpec, StartSelector};
use vcle::ConsoleOptions;

pub mod mfcc_oracle;

/// A level file in its own temporary directory.
pub struct TempLevel {
    pub dir: TempDir,
    pub path: PathBuf,
}

impl TempLevel {
    pub fn new(text: &str) -> TempLevel {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("level.txt");
        std::fs::write(&path, text).unwrap();
        TempLevel { dir, path }
    }

    pub fn spec(&self) -> LoadSpec {
        LoadSpec {
            source: LevelSource::File(self.path.clone()),
            start: StartSelector::Training(0),
            time_s: None,
        }
    }
}

/// A fast-mode game on an ad hoc level. Keep the `TempLevel` alive while playing.
pub fn game_on(text: &str, config: GameConfig) -> (TempLevel, Game) {
    let level = TempLevel::new(text);
    let game = Game::launch(level.spec(), ConsoleOptions::fast(), config).unwrap();
    (level, game)
}

pub fn quiet_config() -> GameConfig {
    let mut cfg = GameConfig::default();
    cfg.visual.enabled = false;
    cfg
}
