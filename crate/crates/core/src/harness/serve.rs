//! `env-serve`: one environment driven by JSON lines on stdin, one JSON reply per line.
//!
//! Requests look like `{"cmd":"step","action":0}`. Replies carry `"ok":true`
//! plus command-specific fields, or `"ok":false` with an error kind and message.
//! Visual observations are base64 of the row-major `h x w x 3` bytes.

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::HarnessError;
use crate::env::{Env, EnvError, State, StateKey, StepInfo};
use crate::game::{Action, Sound};

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Spaces,
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    Step { action: usize },
    Render,
    Save,
    Resume { key: u64 },
    Close,
}

fn state_json(s: &State) -> Value {
    let visual = s.visual.as_ref().map(|v| {
        json!({
            "shape": v.shape(),
            "data": STANDARD.encode(&v.data),
        })
    });
    let sound = s.sound.as_ref().map(|snd| match snd {
        Sound::None => json!({"kind": "none"}),
        Sound::Raw(w) => json!({"kind": "raw", "samples": w}),
        Sound::Mfcc(m) => json!({
            "kind": "mfcc",
            "shape": [m.n_frames, m.n_coeffs],
            "data": m.data,
        }),
    });
    json!({
        "visual": visual,
        "sound": sound,
        "clock": s.clock,
        "score": s.score,
        "hash": s.hash_hex(),
    })
}

fn info_json(i: &StepInfo) -> Value {
    json!({
        "duration_real": i.duration_real,
        "duration_game": i.duration_game,
        "score": i.score,
        "clock": i.clock,
        "cause": i.cause.map(|c| c.name()),
        "level": i.level,
        "start": i.start.to_string(),
    })
}

/// Gym-style space descriptors for the environment's observations and actions.
pub fn spaces(env: &Env) -> Value {
    let cfg = env.game().config();
    let visual = cfg.visual.enabled.then(|| {
        json!({
            "type": "box",
            "shape": [cfg.visual.height, cfg.visual.width, 3],
            "dtype": "uint8",
            "low": 0,
            "high": 255,
        })
    });
    let observation = if env.variant().composite() {
        json!({
            "type": "dict",
            "spaces": {
                "visual": visual,
                "sound": {
                    "type": "box",
                    "shape": [Value::Null, cfg.audio.mfcc.n_coeffs],
                    "dtype": "float64",
                },
                "clock": {"type": "box", "shape": [], "dtype": "float64", "low": 0.0},
                "score": {"type": "box", "shape": [], "dtype": "uint32", "low": 0},
            },
        })
    } else {
        visual.unwrap_or(Value::Null)
    };
    let actions: Vec<&str> = Action::ALL.iter().map(|a| a.name()).collect();
    json!({
        "variant": env.variant().name(),
        "gym_id": env.variant().gym_id(),
        "action_space": {"type": "discrete", "n": Action::ALL.len(), "names": actions},
        "observation_space": observation,
    })
}

fn error_kind(e: &EnvError) -> &'static str {
    match e {
        EnvError::EpisodeOver => "EpisodeOver",
        EnvError::BadAction(_) => "BadAction",
        EnvError::UnknownState(_) => "UnknownState",
        EnvError::UnknownVariant(_) => "UnknownVariant",
        EnvError::NoStart(_) => "NoStart",
        EnvError::Closed => "Closed",
        EnvError::Io(_) => "Io",
        EnvError::Game(_) => "Game",
    }
}

fn failure(kind: &str, msg: impl ToString) -> Value {
    json!({"ok": false, "error": kind, "message": msg.to_string()})
}

/// Handles one request. The boolean is true once the session should end.
pub fn handle(env: &mut Env, req: Request) -> (Value, bool) {
    let reply = match req {
        Request::Spaces => Ok(spaces(env)),
        Request::Reset { seed } => env.reset(seed).map(|s| json!({"state": state_json(&s)})),
        Request::Step { action } => env.step(action).map(|r| {
            json!({
                "state": state_json(&r.state),
                "reward": r.reward,
                "done": r.done,
                "info": info_json(&r.info),
            })
        }),
        Request::Render => env.render_text().map(|t| json!({"text": t})),
        Request::Save => env.save_visited().map(|k| json!({"key": k.0})),
        Request::Resume { key } => env
            .resume_from(StateKey(key))
            .map(|s| json!({"state": state_json(&s)})),
        Request::Close => {
            return match env.close() {
                Ok(()) => (json!({"ok": true}), true),
                Err(e) => (failure(error_kind(&e), e), true),
            }
        }
    };
    match reply {
        Ok(mut v) => {
            v["ok"] = Value::Bool(true);
            (v, false)
        }
        Err(e) => (failure(error_kind(&e), e), false),
    }
}

/// Serves requests until `close` or end of input. Malformed lines get an
/// error reply and do not end the session.
pub fn serve<R: BufRead, W: Write>(env: &mut Env, input: R, mut output: W) -> Result<(), HarnessError> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (reply, done) = match serde_json::from_str::<Request>(&line) {
            Ok(req) => handle(env, req),
            Err(e) => (failure("BadRequest", e), false),
        };
        serde_json::to_writer(&mut output, &reply)?;
        output.write_all(b"\n")?;
        output.flush()?;
        if done {
            return Ok(());
        }
    }
    env.close()?;
    Ok(())
}
