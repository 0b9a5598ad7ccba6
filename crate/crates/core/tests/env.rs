mod support;

use std::collections::BTreeMap;

use support::TempLevel;
use vcle::env::{Env, EnvError, EnvOptions, StateKey, Variant};
use vcle::game::{Action, GameConfig, Sound};
use vcle::kula::{bundled, solve, GameStatus, LevelSource, MoveKind, StartSelector};

fn fast() -> EnvOptions {
    EnvOptions {
        fast: true,
        ..Default::default()
    }
}

fn on_level(level: &TempLevel, variant: Variant) -> Env {
    let opts = EnvOptions {
        level: Some(LevelSource::File(level.path.clone())),
        ..fast()
    };
    Env::new(variant, GameConfig::default(), opts).unwrap()
}

fn action_of(k: MoveKind) -> usize {
    match k {
        MoveKind::Forward => Action::Forward,
        MoveKind::LookRight => Action::LookRight,
        MoveKind::LookLeft => Action::LookLeft,
        MoveKind::JumpForward => Action::JumpForward,
    }
    .index()
}

#[test]
fn fixed_reset_is_deterministic() {
    let mut env = Env::new(Variant::Fixed, GameConfig::default(), fast()).unwrap();
    let a = env.reset(Some(3)).unwrap();
    env.step(1).unwrap();
    let b = env.reset(Some(3)).unwrap();
    assert_eq!(a.hash_hex(), b.hash_hex());
    assert_eq!(a.visual.as_ref().unwrap().shape(), [84, 84, 3]);
    assert!(a.sound.is_none() && a.score.is_none() && a.clock.is_none());
    assert_eq!(env.current_start(), Some((1, StartSelector::Training(0))));
}

#[test]
fn coin_step_and_episode_end() {
    let level = TempLevel::new("id: 9\nstart: 0,2,N\n.\nC\n#\n");
    let mut env = on_level(&level, Variant::Fixed);
    env.reset(None).unwrap();
    let r = env.step(0).unwrap();
    assert!((r.reward - 0.19).abs() < 1e-12);
    assert!(!r.done);
    assert_eq!(r.info.score, 250);
    assert_eq!(r.info.cause, None);
    let r = env.step(0).unwrap();
    assert!(r.done);
    assert_eq!(r.info.cause, Some(GameStatus::LostFall));
    assert!(matches!(env.step(0), Err(EnvError::EpisodeOver)));
    assert!(matches!(env.step(5), Err(EnvError::BadAction(5))));
}

#[test]
fn audio_variant_states() {
    let level = TempLevel::new("id: 9\nstart: 0,2,N\n.\nC\n#\n");
    let mut env = on_level(&level, Variant::Audio);
    let s = env.reset(None).unwrap();
    match s.sound {
        Some(Sound::Mfcc(m)) => assert!(m.is_empty()),
        other => panic!("unexpected sound {other:?}"),
    }
    assert_eq!(s.score, Some(0));
    assert_eq!(s.clock, Some(100.0));
    let r = env.step(0).unwrap();
    match &r.state.sound {
        Some(Sound::Mfcc(m)) => assert!(m.n_frames >= 1),
        other => panic!("unexpected sound {other:?}"),
    }
    assert_eq!(r.state.score, Some(250));
}

#[test]
fn random_variant_clock_and_eval() {
    let mut env = Env::new(Variant::Random, GameConfig::default(), fast()).unwrap();
    let mut seen = BTreeMap::new();
    for seed in 0..60 {
        env.reset(Some(seed)).unwrap();
        assert_eq!(env.game().ram().unwrap().clock_frames, 80 * 60);
        *seen.entry(env.current_start().unwrap()).or_insert(0) += 1;
    }
    assert!(seen.keys().all(|(_, s)| *s != StartSelector::Reserved));
    assert!(seen.len() > 8);

    let opts = EnvOptions { eval: true, ..fast() };
    let mut env = Env::new(Variant::Random, GameConfig::default(), opts).unwrap();
    for seed in 0..5 {
        env.reset(Some(seed)).unwrap();
        assert_eq!(env.current_start(), Some((2, StartSelector::Reserved)));
        assert_eq!(env.game().ram().unwrap().clock_frames, 80 * 60);
    }
}

#[test]
fn text_and_image_render() {
    let level = TempLevel::new("id: 9\nstart: 1,1,E\n###\n###\n###\n");
    let mut env = on_level(&level, Variant::Fixed);
    env.reset(None).unwrap();
    let t = env.render_text().unwrap();
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(&lines[..3], &["###", "#>#", "###"]);
    assert!(lines[3].starts_with("score 0 clock 100.00"));
    assert_eq!(t, env.render_text().unwrap());

    let path = level.dir.path().join("frame.ppm");
    env.render_image(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P6 320 240 255\n"));
    assert_eq!(bytes.len(), 15 + 320 * 240 * 3);
}

#[test]
fn resume_replays_exactly() {
    let mut env = Env::new(Variant::Fixed, GameConfig::default(), fast()).unwrap();
    env.reset(None).unwrap();
    env.step(1).unwrap();
    let key = env.save_visited().unwrap();
    let original: Vec<_> = [0, 2, 2, 0].iter().map(|&a| env.step(a).unwrap()).collect();

    env.resume_from(key).unwrap();
    env.step(3).unwrap();
    let resumed = env.resume_from(key).unwrap();
    assert!(!env.is_done());
    assert_eq!(resumed.visual.as_ref().unwrap().shape(), [84, 84, 3]);
    let replay: Vec<_> = [0, 2, 2, 0].iter().map(|&a| env.step(a).unwrap()).collect();
    for (a, b) in original.iter().zip(&replay) {
        assert_eq!(a.state.hash_hex(), b.state.hash_hex());
        assert_eq!((a.reward, a.done, a.info.score, a.info.clock), (b.reward, b.done, b.info.score, b.info.clock));
    }

    env.close().unwrap();
    assert!(matches!(env.resume_from(key), Err(EnvError::UnknownState(_))));
    assert!(matches!(env.resume_from(StateKey(99)), Err(EnvError::UnknownState(99))));
}

#[test]
fn won_episode_reward_accounting() {
    let level = bundled(1).unwrap();
    let sol = solve(&level, level.starts[0]).unwrap();
    let mut env = Env::new(Variant::Fixed, GameConfig::default(), fast()).unwrap();
    env.reset(None).unwrap();
    let cfg = GameConfig::default().reward;
    let mut total = 0.0;
    let mut items = 0.0;
    let mut score = 0;
    let mut last = None;
    for k in &sol.moves {
        let r = env.step(action_of(*k)).unwrap();
        total += r.reward;
        items += cfg.score_to_reward(r.info.score - score);
        score = r.info.score;
        last = Some(r);
    }
    let last = last.unwrap();
    assert!(last.done);
    assert_eq!(last.info.cause, Some(GameStatus::Won));
    assert_eq!(last.info.score, sol.score);
    assert!(items >= 0.4, "the key must be collected");
    // the winning move itself carries no step cost
    let expected = items - (sol.moves.len() - 1) as f64 * cfg.step_cost + cfg.win_reward;
    assert!((total - expected).abs() < 1e-9, "{total} vs {expected}");
}
