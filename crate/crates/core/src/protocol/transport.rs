//! Byte transports for the four channels: an in-process pipe set, named
//! FIFOs under a session directory, and a recorder that tees every stream.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::os::unix::io::AsRawFd;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use super::Channel;

/// Console-side view of the three inbound channels.
pub trait ServerInput: Send {
    /// Appends whatever is already buffered on `ch` without blocking.
    /// Returns `false` once the stream is closed and drained.
    fn read_available(&mut self, ch: Channel, out: &mut Vec<u8>) -> io::Result<bool>;

    /// Blocks until new input may be available or `timeout` elapses.
    fn wait(&mut self, timeout: Duration) -> io::Result<()>;
}

pub struct ServerEnd {
    pub input: Box<dyn ServerInput>,
    pub output: Box<dyn Write + Send>,
}

pub struct ClientEnd {
    /// Writers for B, C and D, in that order.
    pub writers: [Box<dyn Write + Send>; 3],
    pub notifications: Box<dyn Read + Send>,
}

impl ClientEnd {
    pub fn writer_index(ch: Channel) -> Option<usize> {
        match ch {
            Channel::A => None,
            Channel::B => Some(0),
            Channel::C => Some(1),
            Channel::D => Some(2),
        }
    }
}

// ---------------------------------------------------------------- memory

#[derive(Default)]
struct MemState {
    bufs: [VecDeque<u8>; 4],
    writer_closed: [bool; 4],
    reader_closed: [bool; 4],
}

#[derive(Default)]
struct Shared {
    state: Mutex<MemState>,
    cv: Condvar,
}

struct MemWriter {
    shared: Arc<Shared>,
    ch: usize,
}

impl Write for MemWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let mut st = self.shared.state.lock().unwrap();
        if st.reader_closed[self.ch] {
            return Err(io::ErrorKind::BrokenPipe.into());
        }
        st.bufs[self.ch].extend(buf);
        self.shared.cv.notify_all();
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Drop for MemWriter {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().unwrap();
        st.writer_closed[self.ch] = true;
        self.shared.cv.notify_all();
    }
}

/// Blocking reader for channel A.
struct MemReader {
    shared: Arc<Shared>,
    ch: usize,
}

impl Read for MemReader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let mut st = self.shared.state.lock().unwrap();
        loop {
            if !st.bufs[self.ch].is_empty() {
                let n = buf.len().min(st.bufs[self.ch].len());
                for (dst, src) in buf.iter_mut().zip(st.bufs[self.ch].drain(..n)) {
                    *dst = src;
                }
                return Ok(n);
            }
            if st.writer_closed[self.ch] {
                return Ok(0);
            }
            st = self.shared.cv.wait(st).unwrap();
        }
    }
}

impl Drop for MemReader {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().unwrap();
        st.reader_closed[self.ch] = true;
        st.bufs[self.ch].clear();
    }
}

struct MemServerInput {
    shared: Arc<Shared>,
}

impl ServerInput for MemServerInput {
    fn read_available(&mut self, ch: Channel, out: &mut Vec<u8>) -> io::Result<bool> {
        let mut st = self.shared.state.lock().unwrap();
        let i = ch.index();
        out.extend(st.bufs[i].drain(..));
        Ok(!st.writer_closed[i])
    }

    fn wait(&mut self, timeout: Duration) -> io::Result<()> {
        let deadline = Instant::now() + timeout;
        let mut st = self.shared.state.lock().unwrap();
        loop {
            let ready = (1..4).any(|i| !st.bufs[i].is_empty() || st.writer_closed[i]);
            let now = Instant::now();
            if ready || now >= deadline {
                return Ok(());
            }
            st = self.shared.cv.wait_timeout(st, deadline - now).unwrap().0;
        }
    }
}

impl Drop for MemServerInput {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().unwrap();
        for i in 1..4 {
            st.reader_closed[i] = true;
            st.bufs[i].clear();
        }
    }
}

/// Connected in-process client and server ends.
pub fn memory_pair() -> (ClientEnd, ServerEnd) {
    let shared = Arc::new(Shared::default());
    let w = |ch: Channel| -> Box<dyn Write + Send> {
        Box::new(MemWriter {
            shared: Arc::clone(&shared),
            ch: ch.index(),
        })
    };
    let client = ClientEnd {
        writers: [w(Channel::B), w(Channel::C), w(Channel::D)],
        notifications: Box::new(MemReader {
            shared: Arc::clone(&shared),
            ch: Channel::A.index(),
        }),
    };
    let server = ServerEnd {
        input: Box::new(MemServerInput {
            shared: Arc::clone(&shared),
        }),
        output: w(Channel::A),
    };
    (client, server)
}

// ---------------------------------------------------------------- FIFOs

const INBOUND: [Channel; 3] = [Channel::B, Channel::C, Channel::D];

fn fifo_path(dir: &Path, ch: Channel) -> std::path::PathBuf {
    dir.join(ch.letter().to_string())
}

/// Creates `{dir}/a`, `b`, `c`, `d` as named pipes.
pub fn create_fifos(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for ch in Channel::ALL {
        let path = fifo_path(dir, ch);
        if path.exists() {
            continue;
        }
        let c = std::ffi::CString::new(path.as_os_str().as_encoded_bytes())
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        // SAFETY: `c` is a valid NUL-terminated path.
        if unsafe { libc::mkfifo(c.as_ptr(), 0o600) } != 0 {
            return Err(io::Error::last_os_error());
        }
    }
    Ok(())
}

fn set_nonblocking(f: &File) -> io::Result<()> {
    let fd = f.as_raw_fd();
    // SAFETY: fcntl on an fd we own.
    unsafe {
        let flags = libc::fcntl(fd, libc::F_GETFL);
        if flags < 0 || libc::fcntl(fd, libc::F_SETFL, flags | libc::O_NONBLOCK) < 0 {
            return Err(io::Error::last_os_error());
        }
    }
    Ok(())
}

struct FifoInput {
    files: [File; 3],
}

impl ServerInput for FifoInput {
    fn read_available(&mut self, ch: Channel, out: &mut Vec<u8>) -> io::Result<bool> {
        let i = INBOUND.iter().position(|c| *c == ch).expect("inbound channel");
        let mut buf = [0u8; 65536];
        loop {
            match self.files[i].read(&mut buf) {
                Ok(0) => return Ok(false),
                Ok(n) => out.extend_from_slice(&buf[..n]),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => return Ok(true),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
    }

    fn wait(&mut self, timeout: Duration) -> io::Result<()> {
        let mut fds: Vec<libc::pollfd> = self
            .files
            .iter()
            .map(|f| libc::pollfd {
                fd: f.as_raw_fd(),
                events: libc::POLLIN,
                revents: 0,
            })
            .collect();
        let ms = timeout.as_millis().min(i32::MAX as u128) as i32;
        // SAFETY: `fds` is a valid array of pollfd for the duration of the call.
        let r = unsafe { libc::poll(fds.as_mut_ptr(), fds.len() as libc::nfds_t, ms) };
        if r < 0 {
            let e = io::Error::last_os_error();
            if e.kind() != io::ErrorKind::Interrupted {
                return Err(e);
            }
        }
        Ok(())
    }
}

/// Opens the console side of a FIFO session. Blocks until a client connects.
///
/// Both sides open b, c, d and then a, so neither can deadlock the other.
pub fn fifo_server(dir: &Path) -> io::Result<ServerEnd> {
    let open_in = |ch| OpenOptions::new().read(true).open(fifo_path(dir, ch));
    let files = [open_in(Channel::B)?, open_in(Channel::C)?, open_in(Channel::D)?];
    for f in &files {
        set_nonblocking(f)?;
    }
    let a = OpenOptions::new().write(true).open(fifo_path(dir, Channel::A))?;
    Ok(ServerEnd {
        input: Box::new(FifoInput { files }),
        output: Box::new(a),
    })
}

/// Opens the client side of a FIFO session created by [`fifo_server`].
pub fn fifo_client(dir: &Path) -> io::Result<ClientEnd> {
    let open_out = |ch| -> io::Result<Box<dyn Write + Send>> {
        Ok(Box::new(OpenOptions::new().write(true).open(fifo_path(dir, ch))?))
    };
    let writers = [open_out(Channel::B)?, open_out(Channel::C)?, open_out(Channel::D)?];
    let a = OpenOptions::new().read(true).open(fifo_path(dir, Channel::A))?;
    Ok(ClientEnd {
        writers,
        notifications: Box::new(a),
    })
}

// ---------------------------------------------------------------- recording

/// Per-channel byte dumps collected on the console side.
#[derive(Debug, Clone, Default)]
pub struct Recorder(Arc<Mutex<[Vec<u8>; 4]>>);

impl Recorder {
    pub fn dumps(&self) -> [Vec<u8>; 4] {
        self.0.lock().unwrap().clone()
    }

    fn append(&self, ch: Channel, bytes: &[u8]) {
        self.0.lock().unwrap()[ch.index()].extend_from_slice(bytes);
    }
}

struct RecordingInput {
    inner: Box<dyn ServerInput>,
    rec: Recorder,
}

impl ServerInput for RecordingInput {
    fn read_available(&mut self, ch: Channel, out: &mut Vec<u8>) -> io::Result<bool> {
        let start = out.len();
        let open = self.inner.read_available(ch, out)?;
        self.rec.append(ch, &out[start..]);
        Ok(open)
    }

    fn wait(&mut self, timeout: Duration) -> io::Result<()> {
        self.inner.wait(timeout)
    }
}

struct RecordingOutput {
    inner: Box<dyn Write + Send>,
    rec: Recorder,
}

impl Write for RecordingOutput {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.rec.append(Channel::A, &buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

impl ServerEnd {
    /// Wraps this end so that every byte crossing it is also recorded.
    pub fn recorded(self) -> (ServerEnd, Recorder) {
        let rec = Recorder::default();
        let end = ServerEnd {
            input: Box::new(RecordingInput {
                inner: self.input,
                rec: rec.clone(),
            }),
            output: Box::new(RecordingOutput {
                inner: self.output,
                rec: rec.clone(),
            }),
        };
        (end, rec)
    }
}
