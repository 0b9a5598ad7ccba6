//! Scripted console sessions, one client call per line:
//!
//! ```text
//! load kula?level=1&start=0
//! break 0x10008 2        # break listener, ids count up from 1
//! touch Up 50
//! unfreeze
//! wait                   # next listener notification
//! read 0x10000 17
//! ```
//!
//! Other commands: `freeze`, `speed P`, `hold B`, `release B`, `delay MS`,
//! `watch ADDR LEN`, `sleep ID`, `wake ID`, `clear`, `write ADDR V`, `screen`,
//! `audio-start`, `audio-stop`, `save NAME`, `restore NAME`, `kill`.
//!
//! A session only advances frames through break listeners, so its byte
//! traffic is reproducible.

use std::sync::mpsc::{self, Receiver};
use std::time::Duration;

use super::HarnessError;
use crate::client::{MemoryChange, DEFAULT_TOUCH_MS};
use crate::console::{Button, ConsoleOptions};
use crate::protocol::transport::Recorder;
use crate::ConsoleHandle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionCommand {
    Load(String),
    Freeze,
    Unfreeze,
    Speed(u32),
    Hold(Button),
    Release(Button),
    Delay(u32),
    Touch(Button, u32),
    Watch { addr: u32, len: u16, breaks: bool },
    Sleep(u16),
    Wake(u16),
    Clear,
    Wait,
    Read { addr: u32, len: u16 },
    Write { addr: u32, value: u8 },
    Screen,
    AudioStart,
    AudioStop,
    Save(String),
    Restore(String),
    Kill,
}

fn parse_num<T: TryFrom<u64>>(tok: Option<&str>, line: usize) -> Result<T, HarnessError> {
    let bad = |msg: String| HarnessError::Script { line, msg };
    let tok = tok.ok_or_else(|| bad("missing number".into()))?;
    let v = match tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => tok.parse(),
    }
    .map_err(|_| bad(format!("bad number '{tok}'")))?;
    T::try_from(v).map_err(|_| bad(format!("number {v} out of range")))
}

fn parse_button(tok: Option<&str>, line: usize) -> Result<Button, HarnessError> {
    let tok = tok.ok_or(HarnessError::Script {
        line,
        msg: "missing button".into(),
    })?;
    tok.parse().map_err(|msg| HarnessError::Script { line, msg })
}

pub fn parse_session(text: &str) -> Result<Vec<SessionCommand>, HarnessError> {
    use SessionCommand as C;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let word = it.next().expect("non-empty line");
        let name = |it: &mut std::str::SplitWhitespace<'_>| {
            it.next().map(str::to_string).ok_or(HarnessError::Script {
                line,
                msg: format!("{word} needs a name"),
            })
        };
        let cmd = match word {
            "load" => C::Load(name(&mut it)?),
            "freeze" => C::Freeze,
            "unfreeze" => C::Unfreeze,
            "speed" => C::Speed(parse_num(it.next(), line)?),
            "hold" => C::Hold(parse_button(it.next(), line)?),
            "release" => C::Release(parse_button(it.next(), line)?),
            "delay" => C::Delay(parse_num(it.next(), line)?),
            "touch" => {
                let b = parse_button(it.next(), line)?;
                let ms = match it.next() {
                    Some(t) => parse_num(Some(t), line)?,
                    None => DEFAULT_TOUCH_MS,
                };
                C::Touch(b, ms)
            }
            "watch" | "break" => C::Watch {
                addr: parse_num(it.next(), line)?,
                len: parse_num(it.next(), line)?,
                breaks: word == "break",
            },
            "sleep" => C::Sleep(parse_num(it.next(), line)?),
            "wake" => C::Wake(parse_num(it.next(), line)?),
            "clear" => C::Clear,
            "wait" => C::Wait,
            "read" => C::Read {
                addr: parse_num(it.next(), line)?,
                len: parse_num(it.next(), line)?,
            },
            "write" => C::Write {
                addr: parse_num(it.next(), line)?,
                value: parse_num(it.next(), line)?,
            },
            "screen" => C::Screen,
            "audio-start" => C::AudioStart,
            "audio-stop" => C::AudioStop,
            "save" => C::Save(name(&mut it)?),
            "restore" => C::Restore(name(&mut it)?),
            "kill" => C::Kill,
            other => {
                return Err(HarnessError::Script {
                    line,
                    msg: format!("unknown command '{other}'"),
                })
            }
        };
        if let Some(extra) = it.next() {
            return Err(HarnessError::Script {
                line,
                msg: format!("unexpected '{extra}'"),
            });
        }
        out.push(cmd);
    }
    Ok(out)
}

/// How long `wait` blocks before the session fails.
const WAIT_TIMEOUT: Duration = Duration::from_secs(10);

/// Runs `commands` on `console`, returning one line per command that produced output.
pub fn run_commands(
    console: &ConsoleHandle,
    commands: &[SessionCommand],
) -> Result<Vec<String>, HarnessError> {
    use SessionCommand as C;
    let (tx, rx): (_, Receiver<MemoryChange>) = mpsc::channel();
    let tx = std::sync::Mutex::new(tx);
    let notify = std::sync::Arc::new(move |c: &MemoryChange| {
        let _ = tx.lock().unwrap().send(c.clone());
    });
    let mut log = Vec::new();
    let mut killed = false;
    for cmd in commands {
        match cmd {
            C::Load(n) => console.load_game(n)?,
            C::Freeze => console.freeze()?,
            C::Unfreeze => console.unfreeze()?,
            C::Speed(p) => console.set_speed(*p)?,
            C::Hold(b) => console.hold(*b)?,
            C::Release(b) => console.release(*b)?,
            C::Delay(ms) => console.delay(*ms)?,
            C::Touch(b, ms) => console.touch(*b, *ms)?,
            C::Watch { addr, len, breaks } => {
                let n = std::sync::Arc::clone(&notify);
                let f = move |c: &MemoryChange| n(c);
                let id = if *breaks {
                    console.add_break_listener(*addr, *len, f)?
                } else {
                    console.add_memory_listener(*addr, *len, f)?
                };
                log.push(format!("watch {id}"));
            }
            C::Sleep(id) => console.sleep_memory_listener(*id)?,
            C::Wake(id) => console.wake_memory_listener(*id)?,
            C::Clear => console.clear_memory_listeners()?,
            C::Wait => {
                let c = rx
                    .recv_timeout(WAIT_TIMEOUT)
                    .map_err(|_| HarnessError::Session("no notification within 10 s".into()))?;
                log.push(format!("changed {} {:#x} {}", c.id, c.addr, hex(&c.bytes)));
            }
            C::Read { addr, len } => {
                let b = console.read_bytes(*addr, *len)?;
                log.push(format!("read {addr:#x} {}", hex(&b)));
            }
            C::Write { addr, value } => console.write_byte(*addr, *value)?,
            C::Screen => {
                let fb = console.get_screen()?;
                log.push(format!("screen {}x{}", fb.width(), fb.height()));
            }
            C::AudioStart => console.start_recording_audio()?,
            C::AudioStop => {
                let s = console.stop_recording_audio()?;
                log.push(format!("audio {} samples", s.len()));
            }
            C::Save(n) => console.save_state(n)?,
            C::Restore(n) => console.load_state(n)?,
            C::Kill => {
                console.kill()?;
                killed = true;
                break;
            }
        }
    }
    if !killed {
        console.kill()?;
    }
    Ok(log)
}

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

/// Runs a session script on a fresh fast console, recording every channel.
pub fn record_session(script: &str) -> Result<(Vec<String>, [Vec<u8>; 4]), HarnessError> {
    let commands = parse_session(script)?;
    let (console, rec) = ConsoleHandle::run_with_recorder(ConsoleOptions::fast(), true)?;
    let rec: Recorder = rec.expect("recorder requested");
    let log = run_commands(&console, &commands)?;
    Ok((log, rec.dumps()))
}
