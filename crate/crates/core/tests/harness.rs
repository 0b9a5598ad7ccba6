mod support;

use std::io::Cursor;

use support::{game_on, quiet_config, TempLevel};
use vcle::dsp::MfccConfig;
use vcle::env::{Env, EnvOptions, Variant};
use vcle::game::{Action, GameConfig};
use vcle::harness::dump::{dump_moves, DumpKind};
use vcle::harness::log::{read_csv, write_csv, EpisodeLog, EVAL_WINDOW, TRAIN_WINDOW};
use vcle::harness::play;
use vcle::harness::policy::{RandomPolicy, ScriptPolicy};
use vcle::harness::qlearn::{q_key, train_q, QAgent, QAgentConfig};
use vcle::harness::serve::serve;
use vcle::harness::HarnessError;
use vcle::kula::LevelSource;

fn env_on(level: Option<&TempLevel>, variant: Variant, eval: bool) -> Env {
    let opts = EnvOptions {
        fast: true,
        eval,
        level: level.map(|l| LevelSource::File(l.path.clone())),
        ..Default::default()
    };
    Env::new(variant, quiet_config(), opts).unwrap()
}

/// Everything except the wall-clock column.
fn logical(rows: &[EpisodeLog]) -> Vec<(usize, f64, usize, String, u8, String, f64)> {
    rows.iter()
        .map(|r| (r.episode, r.reward, r.moves, r.outcome.clone(), r.level, r.start.clone(), r.moving_avg))
        .collect()
}

#[test]
fn random_play_is_seeded() {
    let run = || {
        let mut env = env_on(None, Variant::Fixed, false);
        play(&mut env, &mut RandomPolicy::new(7), 10, TRAIN_WINDOW).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.len(), 10);
    assert_eq!(logical(&a), logical(&b));

    let mut buf = Vec::new();
    write_csv(&mut buf, &a).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("episode,reward,moves,outcome,wall_s,level,start,moving_avg\n"));
    assert_eq!(logical(&read_csv(Cursor::new(buf)).unwrap()), logical(&a));
}

#[test]
fn scripted_dead_end_falls() {
    let level = TempLevel::new("id: 9\nstart: 0,1,N\n#\n#\n");
    let mut env = env_on(Some(&level), Variant::Fixed, false);
    let mut script = ScriptPolicy::parse("Forward,Forward").unwrap();
    let rows = play(&mut env, &mut script, 2, TRAIN_WINDOW).unwrap();
    for r in &rows {
        assert_eq!(r.outcome, "lost_fall");
        assert_eq!(r.moves, 2);
        assert!((r.reward - (-0.01 - 1.0)).abs() < 1e-12);
    }

    // a script that stops before the episode ends
    let mut script = ScriptPolicy::parse("LookLeft").unwrap();
    let rows = play(&mut env, &mut script, 1, TRAIN_WINDOW).unwrap();
    assert_eq!(rows[0].outcome, "playing");
}

#[test]
fn eval_rows_use_reserved_start() {
    let mut env = env_on(None, Variant::Random, true);
    let rows = play(&mut env, &mut ScriptPolicy::parse("LookLeft").unwrap(), 6, EVAL_WINDOW).unwrap();
    assert!(rows.iter().all(|r| r.start == "r" && r.level == 2));
    let expected = (rows[1..6].iter().map(|r| r.reward).sum::<f64>()) / 5.0;
    assert!((rows[5].moving_avg - expected).abs() < 1e-12);
}

#[test]
fn bad_script_is_rejected() {
    assert!(matches!(
        ScriptPolicy::parse("Forward\nJumpBack"),
        Err(HarnessError::Script { line: 2, .. })
    ));
}

const TWO_CHOICE: &str = "id: 9\ntime: 10\nstart: 1,1,N\n.C..\n.#FG\n....\n";

fn greedy_first_move(gamma: f64) -> Action {
    let level = TempLevel::new(TWO_CHOICE);
    let mut env = env_on(Some(&level), Variant::Fixed, false);
    let cfg = QAgentConfig { gamma, ..Default::default() };
    let mut agent = QAgent::new(cfg, 3);
    train_q(&mut env, &mut agent, 300).unwrap();
    env.reset(None).unwrap();
    let key = q_key(env.game().ram().unwrap());
    Action::from_index(agent.greedy(&key)).unwrap()
}

#[test]
fn discount_decides_between_coin_and_fruit() {
    // the coin is one move away but a dead end; the fruit path ends at the goal
    assert_eq!(greedy_first_move(0.0), Action::Forward);
    assert_eq!(greedy_first_move(0.95), Action::LookRight);
}

#[test]
fn q_table_is_seeded() {
    let run = || {
        let mut env = env_on(None, Variant::Fixed, false);
        let mut agent = QAgent::new(QAgentConfig::default(), 9);
        let rows = train_q(&mut env, &mut agent, 30).unwrap();
        (agent.to_json(), logical(&rows))
    };
    assert_eq!(run(), run());
}

#[test]
fn train_q_rejects_audio() {
    let mut env = env_on(None, Variant::Audio, false);
    let mut agent = QAgent::new(QAgentConfig::default(), 0);
    assert!(matches!(train_q(&mut env, &mut agent, 1), Err(HarnessError::Unsupported(_))));
}

fn recording() -> GameConfig {
    let mut cfg = quiet_config();
    cfg.audio.record = true;
    cfg.audio.use_mfcc = false;
    cfg
}

#[test]
fn dumps() {
    let coin = "id: 9\nstart: 0,2,N\nG\nC\n#\n";
    let (level, mut g) = game_on(coin, recording());
    let wav = level.dir.path().join("coin.wav");
    dump_moves(&mut g, &[Action::Forward], DumpKind::Audio, &MfccConfig::default(), &wav).unwrap();
    let r = hound::WavReader::open(&wav).unwrap();
    let spec = r.spec();
    assert_eq!((spec.channels, spec.sample_rate, spec.bits_per_sample), (1, 22_050, 16));
    let ms = r.duration() as f64 * 1000.0 / 22_050.0;
    assert!((ms - 150.0).abs() < 1.0, "{ms} ms");

    let (level, mut g) = game_on(coin, recording());
    let csv = level.dir.path().join("look.csv");
    dump_moves(&mut g, &[Action::LookLeft], DumpKind::Mfcc, &MfccConfig::default(), &csv).unwrap();
    assert_eq!(std::fs::read(&csv).unwrap(), b"");

    let (level, mut g) = game_on(coin, recording());
    let csv = level.dir.path().join("coin.csv");
    dump_moves(&mut g, &[Action::Forward], DumpKind::Mfcc, &MfccConfig::default(), &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.is_empty());
    assert!(text.lines().all(|l| l.split(',').count() == 13));

    let (level, mut g) = game_on(coin, quiet_config());
    let ppm = level.dir.path().join("frame.ppm");
    dump_moves(&mut g, &[], DumpKind::Frame, &MfccConfig::default(), &ppm).unwrap();
    let b = std::fs::read(&ppm).unwrap();
    let header = b"P6 320 240 255\n";
    assert!(b.starts_with(header));
    assert_eq!(b.len(), header.len() + 320 * 240 * 3);
}

fn serve_lines(env: &mut Env, input: &str) -> Vec<serde_json::Value> {
    let mut out = Vec::new();
    serve(env, Cursor::new(input.to_string()), &mut out).unwrap();
    String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn env_serve_speaks_json_lines() {
    let level = TempLevel::new("id: 9\nstart: 0,2,N\n.\nC\n#\n");
    let opts = EnvOptions {
        fast: true,
        level: Some(LevelSource::File(level.path.clone())),
        ..Default::default()
    };
    let mut env = Env::new(Variant::Fixed, GameConfig::default(), opts.clone()).unwrap();
    let replies = serve_lines(
        &mut env,
        "{\"cmd\":\"spaces\"}\n{\"cmd\":\"reset\",\"seed\":1}\n{\"cmd\":\"step\",\"action\":5}\n\
         {\"cmd\":\"step\",\"action\":0}\nnot json\n{\"cmd\":\"render\"}\n{\"cmd\":\"close\"}\n{\"cmd\":\"reset\"}\n",
    );
    assert_eq!(replies.len(), 7, "nothing is read after close");
    assert_eq!(replies[0]["action_space"]["n"], 4);
    assert_eq!(replies[0]["observation_space"]["shape"], serde_json::json!([84, 84, 3]));
    assert_eq!(replies[1]["ok"], true);
    assert_eq!(replies[1]["state"]["visual"]["shape"], serde_json::json!([84, 84, 3]));
    assert_eq!(replies[2]["ok"], false);
    assert_eq!(replies[2]["error"], "BadAction");
    assert_eq!(replies[3]["reward"], 0.19);
    assert_eq!(replies[3]["done"], false);
    assert_eq!(replies[3]["info"]["score"], 250);
    assert_eq!(replies[4]["error"], "BadRequest");
    assert!(replies[5]["text"].as_str().unwrap().contains("score 250"));
    assert_eq!(replies[6]["ok"], true);

    // the served hash matches a direct step
    let mut direct = Env::new(Variant::Fixed, GameConfig::default(), opts).unwrap();
    direct.reset(Some(1)).unwrap();
    let r = direct.step(0).unwrap();
    assert_eq!(replies[3]["state"]["hash"], r.state.hash_hex());
}
