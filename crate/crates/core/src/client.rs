//! Client-side Console API over the four-channel protocol.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU16, AtomicU32, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use log::debug;

use crate::console::server::ConsoleServer;
use crate::console::{
    Button, Console, ConsoleError, ConsoleOptions, ControlEvent, FrameBuffer, Ram,
};
use crate::protocol::transport::{self, ClientEnd, Recorder};
use crate::protocol::{
    decode_audio, decode_screen, Channel, FrameDecoder, Instruction, Message, Notification,
    Request, WatchCommand,
};

/// Default hold time of [`ConsoleHandle::touch`].
pub const DEFAULT_TOUCH_MS: u32 = 50;

/// How long a synchronous call waits for its reply.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// A change reported by a memory listener: the new contents of its region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryChange {
    pub id: u16,
    pub addr: u32,
    pub bytes: Vec<u8>,
}

type Subscriber = Arc<dyn Fn(&MemoryChange) + Send + Sync>;

struct Listener {
    addr: u32,
    len: u16,
    callback: Subscriber,
}

struct Inner {
    writers: Mutex<[Box<dyn Write + Send>; 3]>,
    pending: Mutex<HashMap<u16, Sender<Notification>>>,
    listeners: Arc<Mutex<HashMap<u16, Listener>>>,
    next_req: AtomicU16,
    next_watch: AtomicU16,
    speed: AtomicU32,
    closed: Arc<AtomicBool>,
    timeout: Duration,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

/// Handle to a running console. Cheap to clone and safe to share between
/// threads; commands are serialized per channel in call order.
///
/// Listener callbacks run on one dedicated notification thread in channel-A
/// order. They must not block on calls to the same console.
#[derive(Clone)]
pub struct ConsoleHandle {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for ConsoleHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConsoleHandle")
            .field("running", &self.is_running())
            .finish()
    }
}

impl ConsoleHandle {
    /// Starts an in-process console thread and connects to it.
    pub fn run(options: ConsoleOptions) -> Result<ConsoleHandle, ConsoleError> {
        Ok(Self::run_with_recorder(options, false)?.0)
    }

    /// Like [`run`](Self::run), optionally recording every channel's bytes on
    /// the console side.
    pub fn run_with_recorder(
        options: ConsoleOptions,
        record: bool,
    ) -> Result<(ConsoleHandle, Option<Recorder>), ConsoleError> {
        let speed = options.speed_percent;
        let mut console = Console::new(options);
        console.run()?;
        let (client, server) = transport::memory_pair();
        let (server, recorder) = if record {
            let (s, r) = server.recorded();
            (s, Some(r))
        } else {
            (server, None)
        };
        let th = std::thread::Builder::new()
            .name("vcle-console".into())
            .spawn(move || {
                if let Err(e) = ConsoleServer::new(console, server).serve() {
                    debug!("console thread ended with error: {e}");
                }
            })?;
        let handle = Self::from_end(client, speed)?;
        handle.inner.threads.lock().unwrap().push(th);
        Ok((handle, recorder))
    }

    /// Connects to a console serving FIFOs under `session_dir`.
    pub fn connect(session_dir: &Path) -> Result<ConsoleHandle, ConsoleError> {
        let end = transport::fifo_client(session_dir)?;
        Self::from_end(end, 100)
    }

    /// Wraps an already connected transport.
    pub fn from_end(end: ClientEnd, speed: u32) -> Result<ConsoleHandle, ConsoleError> {
        let ClientEnd {
            writers,
            notifications,
        } = end;
        let inner = Arc::new(Inner {
            writers: Mutex::new(writers),
            pending: Mutex::new(HashMap::new()),
            listeners: Arc::new(Mutex::new(HashMap::new())),
            next_req: AtomicU16::new(1),
            next_watch: AtomicU16::new(1),
            speed: AtomicU32::new(speed),
            closed: Arc::new(AtomicBool::new(false)),
            timeout: DEFAULT_TIMEOUT,
            threads: Mutex::new(Vec::new()),
        });

        let (note_tx, note_rx) = mpsc::channel::<MemoryChange>();
        let listeners = Arc::clone(&inner.listeners);
        let notifier = std::thread::Builder::new()
            .name("vcle-notify".into())
            .spawn(move || {
                for change in note_rx {
                    let cb = listeners
                        .lock()
                        .unwrap()
                        .get(&change.id)
                        .map(|l| Arc::clone(&l.callback));
                    if let Some(cb) = cb {
                        cb(&change);
                    }
                }
            })?;

        let weak = Arc::downgrade(&inner);
        let closed = Arc::clone(&inner.closed);
        let reader = std::thread::Builder::new()
            .name("vcle-reader".into())
            .spawn(move || {
                read_notifications(notifications, note_tx, &weak);
                closed.store(true, Ordering::SeqCst);
                if let Some(inner) = weak.upgrade() {
                    // wake every waiter; their senders drop here
                    inner.pending.lock().unwrap().clear();
                }
            })?;
        inner.threads.lock().unwrap().extend([notifier, reader]);
        Ok(ConsoleHandle { inner })
    }

    pub fn is_running(&self) -> bool {
        !self.inner.closed.load(Ordering::SeqCst)
    }

    fn send(&self, msg: &Message) -> Result<(), ConsoleError> {
        if !self.is_running() {
            return Err(ConsoleError::NotRunning);
        }
        let idx = ClientEnd::writer_index(msg.channel()).expect("client never writes A");
        let bytes = msg.encode();
        let mut w = self.inner.writers.lock().unwrap();
        w[idx]
            .write_all(&bytes)
            .and_then(|_| w[idx].flush())
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::BrokenPipe => ConsoleError::NotRunning,
                _ => ConsoleError::Io(e),
            })
    }

    /// Sends a D request and waits for its REPLY or EVENT_DONE.
    fn request(&self, instruction: Instruction) -> Result<Option<Vec<u8>>, ConsoleError> {
        let context = match &instruction {
            Instruction::LoadGame(n) | Instruction::LoadState(n) | Instruction::SaveState(n) => {
                n.clone()
            }
            other => format!("{other:?}"),
        };
        let (tx, rx) = mpsc::channel();
        let req_id = {
            let mut pending = self.inner.pending.lock().unwrap();
            let mut id = self.inner.next_req.fetch_add(1, Ordering::Relaxed);
            while pending.contains_key(&id) {
                id = self.inner.next_req.fetch_add(1, Ordering::Relaxed);
            }
            pending.insert(id, tx);
            id
        };
        let sent = self.send(&Message::Request(Request {
            req_id,
            instruction,
        }));
        if let Err(e) = sent {
            self.inner.pending.lock().unwrap().remove(&req_id);
            return Err(e);
        }
        let answer = rx.recv_timeout(self.inner.timeout);
        self.inner.pending.lock().unwrap().remove(&req_id);
        match answer {
            Ok(Notification::Reply { payload, .. }) => Ok(Some(payload)),
            Ok(Notification::EventDone { status: 0, .. }) => Ok(None),
            Ok(Notification::EventDone { status, .. }) => {
                Err(ConsoleError::from_status(status, &context))
            }
            Ok(Notification::MemChanged { .. }) => unreachable!("routed to listeners"),
            Err(RecvTimeoutError::Timeout) => Err(ConsoleError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(ConsoleError::NotRunning),
        }
    }

    fn expect_reply(&self, instruction: Instruction) -> Result<Vec<u8>, ConsoleError> {
        self.request(instruction)?.ok_or_else(|| {
            ConsoleError::Protocol(crate::protocol::ProtocolError::MalformedFrame(
                "expected REPLY, got EVENT_DONE".into(),
            ))
        })
    }

    // ------------------------------------------------------------ controller

    pub fn hold(&self, b: Button) -> Result<(), ConsoleError> {
        self.send(&Message::Control(ControlEvent::Hold(b)))
    }

    pub fn release(&self, b: Button) -> Result<(), ConsoleError> {
        self.send(&Message::Control(ControlEvent::Release(b)))
    }

    pub fn delay(&self, ms: u32) -> Result<(), ConsoleError> {
        self.send(&Message::Control(ControlEvent::Delay { ms }))
    }

    /// Hold, delay `hold_ms`, release.
    pub fn touch(&self, b: Button, hold_ms: u32) -> Result<(), ConsoleError> {
        self.hold(b)?;
        self.delay(hold_ms)?;
        self.release(b)
    }

    // ------------------------------------------------------------ listeners

    fn next_watch_id(&self) -> u16 {
        let listeners = self.inner.listeners.lock().unwrap();
        loop {
            let id = self.inner.next_watch.fetch_add(1, Ordering::Relaxed);
            if !listeners.contains_key(&id) {
                return id;
            }
        }
    }

    fn add_listener<F>(&self, addr: u32, len: u16, breaks: bool, f: F) -> Result<u16, ConsoleError>
    where
        F: Fn(&MemoryChange) + Send + Sync + 'static,
    {
        Ram::check_range(addr, len as usize)?;
        let id = self.next_watch_id();
        self.inner.listeners.lock().unwrap().insert(
            id,
            Listener {
                addr,
                len,
                callback: Arc::new(f),
            },
        );
        let cmd = if breaks {
            WatchCommand::WatchBreak { id, addr, len }
        } else {
            WatchCommand::Watch { id, addr, len }
        };
        if let Err(e) = self.send(&Message::Watch(cmd)) {
            self.inner.listeners.lock().unwrap().remove(&id);
            return Err(e);
        }
        Ok(id)
    }

    /// Calls `f` with the region's new bytes whenever it changes.
    pub fn add_memory_listener<F>(&self, addr: u32, len: u16, f: F) -> Result<u16, ConsoleError>
    where
        F: Fn(&MemoryChange) + Send + Sync + 'static,
    {
        self.add_listener(addr, len, false, f)
    }

    /// Like [`add_memory_listener`](Self::add_memory_listener), but the console
    /// also freezes at the end of the frame in which the region changed.
    pub fn add_break_listener<F>(&self, addr: u32, len: u16, f: F) -> Result<u16, ConsoleError>
    where
        F: Fn(&MemoryChange) + Send + Sync + 'static,
    {
        self.add_listener(addr, len, true, f)
    }

    pub fn clear_memory_listeners(&self) -> Result<(), ConsoleError> {
        self.send(&Message::Watch(WatchCommand::ClearAll))?;
        self.inner.listeners.lock().unwrap().clear();
        Ok(())
    }

    pub fn sleep_memory_listener(&self, id: u16) -> Result<(), ConsoleError> {
        self.check_listener(id)?;
        self.send(&Message::Watch(WatchCommand::Sleep(id)))
    }

    pub fn wake_memory_listener(&self, id: u16) -> Result<(), ConsoleError> {
        self.check_listener(id)?;
        self.send(&Message::Watch(WatchCommand::Wake(id)))
    }

    fn check_listener(&self, id: u16) -> Result<(), ConsoleError> {
        if self.inner.listeners.lock().unwrap().contains_key(&id) {
            Ok(())
        } else {
            Err(ConsoleError::UnknownWatch(id))
        }
    }

    /// Registered listener ids with their regions.
    pub fn memory_listeners(&self) -> Vec<(u16, u32, u16)> {
        let mut v: Vec<_> = self
            .inner
            .listeners
            .lock()
            .unwrap()
            .iter()
            .map(|(id, l)| (*id, l.addr, l.len))
            .collect();
        v.sort_unstable();
        v
    }

    // ------------------------------------------------------------ instructions

    pub fn load_game(&self, name: &str) -> Result<(), ConsoleError> {
        self.request(Instruction::LoadGame(name.to_string())).map(drop)
    }

    pub fn save_state(&self, name: &str) -> Result<(), ConsoleError> {
        self.request(Instruction::SaveState(name.to_string())).map(drop)
    }

    pub fn load_state(&self, name: &str) -> Result<(), ConsoleError> {
        self.request(Instruction::LoadState(name.to_string())).map(drop)
    }

    pub fn freeze(&self) -> Result<(), ConsoleError> {
        self.request(Instruction::Freeze).map(drop)
    }

    pub fn unfreeze(&self) -> Result<(), ConsoleError> {
        self.request(Instruction::Unfreeze).map(drop)
    }

    /// Last confirmed speed percentage.
    pub fn speed(&self) -> u32 {
        self.inner.speed.load(Ordering::SeqCst)
    }

    /// Sets the speed and waits until the console confirms it.
    pub fn set_speed(&self, percent: u32) -> Result<(), ConsoleError> {
        let reply = self.expect_reply(Instruction::SetSpeed(percent))?;
        let confirmed = crate::protocol::PayloadReader::new(&reply).u32()?;
        self.inner.speed.store(confirmed, Ordering::SeqCst);
        Ok(())
    }

    pub fn read_bytes(&self, addr: u32, len: u16) -> Result<Vec<u8>, ConsoleError> {
        Ram::check_range(addr, len as usize)?;
        self.expect_reply(Instruction::Read { addr, len })
    }

    pub fn write_byte(&self, addr: u32, value: u8) -> Result<(), ConsoleError> {
        Ram::check_range(addr, 1)?;
        self.request(Instruction::Write { addr, value }).map(drop)
    }

    pub fn get_screen(&self) -> Result<FrameBuffer, ConsoleError> {
        Ok(decode_screen(&self.expect_reply(Instruction::GetScreen)?)?)
    }

    pub fn start_recording_audio(&self) -> Result<(), ConsoleError> {
        self.request(Instruction::AudioStart).map(drop)
    }

    /// Stops recording and returns the captured mono samples.
    pub fn stop_recording_audio(&self) -> Result<Vec<i16>, ConsoleError> {
        Ok(decode_audio(&self.expect_reply(Instruction::AudioStop)?)?.1)
    }

    /// Ends the session and waits for the console to shut down.
    pub fn kill(&self) -> Result<(), ConsoleError> {
        self.request(Instruction::Kill)?;
        self.inner.closed.store(true, Ordering::SeqCst);
        let threads: Vec<_> = self.inner.threads.lock().unwrap().drain(..).collect();
        let me = std::thread::current().id();
        for t in threads {
            if t.thread().id() != me {
                let _ = t.join();
            }
        }
        Ok(())
    }
}

impl Drop for Inner {
    fn drop(&mut self) {
        if !self.closed.load(Ordering::SeqCst) {
            let msg = Message::Request(Request {
                req_id: 0,
                instruction: Instruction::Kill,
            });
            let mut w = self.writers.lock().unwrap();
            let _ = w[2].write_all(&msg.encode());
        }
    }
}

fn read_notifications(
    mut src: Box<dyn Read + Send>,
    notes: Sender<MemoryChange>,
    inner: &std::sync::Weak<Inner>,
) {
    let mut dec = FrameDecoder::new();
    let mut buf = vec![0u8; 65536];
    loop {
        let n = match src.read(&mut buf) {
            Ok(0) => return,
            Ok(n) => n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => {
                debug!("notification stream failed: {e}");
                return;
            }
        };
        dec.push(&buf[..n]);
        for f in dec.by_ref() {
            let msg = match f.and_then(|f| Message::from_frame(Channel::A, &f)) {
                Ok(Message::Notification(n)) => n,
                Ok(_) => continue,
                Err(e) => {
                    debug!("bad frame on A: {e}");
                    continue;
                }
            };
            match msg {
                Notification::MemChanged { id, addr, bytes, .. } => {
                    let _ = notes.send(MemoryChange { id, addr, bytes });
                }
                Notification::EventDone { req_id, .. } | Notification::Reply { req_id, .. } => {
                    let Some(inner) = inner.upgrade() else { return };
                    let tx = inner.pending.lock().unwrap().remove(&req_id);
                    if let Some(tx) = tx {
                        let _ = tx.send(msg);
                    }
                }
            }
        }
    }
}

/// Receives listener events on the caller's thread.
pub fn listener_channel() -> (
    impl Fn(&MemoryChange) + Send + Sync + 'static,
    Receiver<MemoryChange>,
) {
    let (tx, rx) = mpsc::channel();
    let tx = Mutex::new(tx);
    (
        move |c: &MemoryChange| {
            let _ = tx.lock().unwrap().send(c.clone());
        },
        rx,
    )
}
