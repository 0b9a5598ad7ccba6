//! The console process loop: services channels B, C and D at frame
//! boundaries, steps frames, and reports on channel A.

use std::io::Write;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{Console, ConsoleError, WatchHit};
use crate::protocol::transport::{ServerEnd, ServerInput};
use crate::protocol::{
    encode_audio, encode_screen, Channel, FrameDecoder, Instruction, Message, Notification,
    PayloadReader, ProtocolError, Request, WatchCommand,
};

/// How long a frozen console sleeps between checks for input.
const IDLE_WAIT: Duration = Duration::from_millis(100);

/// Inbound channels in the order they are drained at each boundary. D comes
/// first so that B and C bytes written before an instruction are already
/// buffered when it is applied.
const DRAIN_ORDER: [Channel; 3] = [Channel::D, Channel::B, Channel::C];

pub struct ConsoleServer {
    console: Console,
    input: Box<dyn ServerInput>,
    output: Box<dyn Write + Send>,
    decoders: [FrameDecoder; 4],
    scratch: Vec<u8>,
}

enum Flow {
    Continue,
    Stop,
}

impl ConsoleServer {
    /// Takes a console with a running session and a connected transport.
    pub fn new(console: Console, end: ServerEnd) -> Self {
        ConsoleServer {
            console,
            input: end.input,
            output: end.output,
            decoders: Default::default(),
            scratch: Vec::new(),
        }
    }

    /// Serves until KILL or until the client disconnects. Returns the console
    /// (no longer running).
    pub fn serve(mut self) -> Result<Console, ConsoleError> {
        if !self.console.is_running() {
            self.console.run()?;
        }
        let mut next_frame = Instant::now();
        loop {
            match self.boundary() {
                Ok(Flow::Continue) => {}
                Ok(Flow::Stop) => break,
                Err(e) => {
                    debug!("console stopping: {e}");
                    break;
                }
            }
            if self.console.is_frozen()? {
                self.input.wait(IDLE_WAIT)?;
                next_frame = Instant::now();
                continue;
            }
            if !self.console.options().fast {
                let now = Instant::now();
                if now < next_frame {
                    self.input.wait(next_frame - now)?;
                    if Instant::now() < next_frame {
                        // woken early by input; apply it before the frame
                        continue;
                    }
                }
                next_frame += self.console.frame_period()?;
                if next_frame + Duration::from_millis(250) < Instant::now() {
                    // fell far behind (debugger, load spike): do not try to catch up
                    next_frame = Instant::now();
                }
            }
            let hits = self.console.step_frame()?;
            self.notify_hits(hits)?;
        }
        if self.console.is_running() {
            self.console.kill()?;
        }
        self.output.flush()?;
        Ok(self.console)
    }

    /// Drains and applies all pending input at a frame boundary.
    fn boundary(&mut self) -> Result<Flow, ConsoleError> {
        let mut frames = Vec::new();
        let mut closed = false;
        for ch in DRAIN_ORDER {
            self.scratch.clear();
            let open = self.input.read_available(ch, &mut self.scratch)?;
            closed |= !open;
            let dec = &mut self.decoders[ch.index()];
            dec.push(&self.scratch);
            for f in dec.by_ref() {
                frames.push((ch, f));
            }
        }
        for (ch, f) in frames {
            let frame = match f {
                Ok(f) => f,
                Err(e) => {
                    warn!("channel {ch}: {e}");
                    continue;
                }
            };
            match Message::from_frame(ch, &frame) {
                Ok(msg) => {
                    if let Flow::Stop = self.apply(msg)? {
                        return Ok(Flow::Stop);
                    }
                }
                Err(e) => self.reject(ch, &frame.payload, e)?,
            }
        }
        let hits = self.console.check_watches()?;
        self.notify_hits(hits)?;
        if closed {
            debug!("client disconnected");
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }

    /// Unparseable frame: surfaced as an error status when a request id can
    /// be recovered, otherwise only logged.
    fn reject(&mut self, ch: Channel, payload: &[u8], e: ProtocolError) -> Result<(), ConsoleError> {
        warn!("channel {ch}: {e}");
        if ch == Channel::D {
            if let Ok(req_id) = PayloadReader::new(payload).u16() {
                let status = ConsoleError::Protocol(e).status_code();
                self.send(Notification::EventDone { req_id, status })?;
            }
        }
        Ok(())
    }

    fn apply(&mut self, msg: Message) -> Result<Flow, ConsoleError> {
        match msg {
            Message::Control(ev) => self.console.push_control(ev)?,
            Message::Watch(cmd) => {
                let r = match cmd {
                    WatchCommand::Watch { id, addr, len } => self.console.add_watch(id, addr, len, false),
                    WatchCommand::WatchBreak { id, addr, len } => {
                        self.console.add_watch(id, addr, len, true)
                    }
                    WatchCommand::ClearAll => self.console.clear_watches(),
                    WatchCommand::Sleep(id) => self.console.sleep_watch(id),
                    WatchCommand::Wake(id) => self.console.wake_watch(id),
                };
                // B has no reply path; the client validates before sending
                if let Err(e) = r {
                    warn!("watch command failed: {e}");
                }
            }
            Message::Request(req) => return self.handle_request(req),
            Message::Notification(_) => unreachable!("A frames are never read by the console"),
        }
        Ok(Flow::Continue)
    }

    fn handle_request(&mut self, req: Request) -> Result<Flow, ConsoleError> {
        let Request {
            req_id,
            instruction,
        } = req;
        let c = &mut self.console;
        let result: Result<Option<Vec<u8>>, ConsoleError> = match &instruction {
            Instruction::LoadGame(name) => c.load_game(name).map(|_| None),
            Instruction::LoadState(name) => c.load_snapshot(name).map(|_| None),
            Instruction::SaveState(name) => c.save_snapshot(name).map(|_| None),
            Instruction::Freeze => c.set_frozen(true).map(|_| None),
            Instruction::Unfreeze => c.set_frozen(false).map(|_| None),
            Instruction::SetSpeed(p) => c
                .set_speed(*p)
                .and_then(|_| c.speed())
                .map(|s| Some(s.to_be_bytes().to_vec())),
            Instruction::Read { addr, len } => c.read_bytes(*addr, *len as usize).map(Some),
            Instruction::Write { addr, value } => c.write_byte(*addr, *value).map(|_| None),
            Instruction::GetScreen => c.get_screen().map(|fb| Some(encode_screen(&fb))),
            Instruction::AudioStart => c.start_audio_recording().map(|_| None),
            Instruction::AudioStop => c
                .stop_audio_recording()
                .map(|s| Some(encode_audio(super::SAMPLE_RATE, &s))),
            Instruction::Kill => {
                self.send(Notification::EventDone { req_id, status: 0 })?;
                return Ok(Flow::Stop);
            }
        };
        let note = match result {
            Ok(Some(payload)) => Notification::Reply { req_id, payload },
            Ok(None) => Notification::EventDone { req_id, status: 0 },
            Err(e) => {
                debug!("request {req_id} {instruction:?} failed: {e}");
                Notification::EventDone {
                    req_id,
                    status: e.status_code(),
                }
            }
        };
        self.send(note)?;
        Ok(Flow::Continue)
    }

    fn notify_hits(&mut self, hits: Vec<WatchHit>) -> Result<(), ConsoleError> {
        for h in hits {
            self.send(Notification::MemChanged {
                id: h.id,
                addr: h.addr,
                len: h.len,
                bytes: h.bytes,
            })?;
        }
        Ok(())
    }

    fn send(&mut self, n: Notification) -> Result<(), ConsoleError> {
        let bytes = crate::protocol::encode(&Message::Notification(n).to_frame())?;
        self.output.write_all(&bytes)?;
        Ok(())
    }
}
