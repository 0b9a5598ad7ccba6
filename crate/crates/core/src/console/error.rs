use thiserror::Error;

/// Errors raised by the console and propagated through the client API.
#[derive(Debug, Error)]
pub enum ConsoleError {
    #[error("console session already running")]
    AlreadyRunning,
    #[error("console session not running")]
    NotRunning,
    #[error("invalid speed {0}% (must be at least 1)")]
    InvalidSpeed(u32),
    #[error("memory access out of bounds: addr {addr:#x}, len {len}")]
    OutOfBounds { addr: u64, len: u64 },
    #[error("unknown state '{0}'")]
    UnknownState(String),
    #[error("audio is not being recorded")]
    NotRecording,
    #[error("audio is already being recorded")]
    AlreadyRecording,
    #[error("unknown memory watch {0}")]
    UnknownWatch(u16),
    #[error("unknown cartridge '{0}'")]
    UnknownCartridge(String),
    #[error("cartridge rejected load: {0}")]
    Cartridge(String),
    #[error("no game loaded")]
    NoGame,
    #[error("corrupt snapshot: {0}")]
    BadSnapshot(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(#[from] crate::protocol::ProtocolError),
    #[error("timed out waiting for the console")]
    Timeout,
    #[error("console reported error status {0}")]
    Remote(u8),
}

impl ConsoleError {
    /// Wire status code carried by EVENT_DONE. 0 means success.
    pub fn status_code(&self) -> u8 {
        match self {
            ConsoleError::AlreadyRunning => 1,
            ConsoleError::NotRunning => 2,
            ConsoleError::InvalidSpeed(_) => 3,
            ConsoleError::OutOfBounds { .. } => 4,
            ConsoleError::UnknownState(_) => 5,
            ConsoleError::NotRecording => 6,
            ConsoleError::AlreadyRecording => 7,
            ConsoleError::UnknownWatch(_) => 8,
            ConsoleError::UnknownCartridge(_) => 9,
            ConsoleError::Cartridge(_) => 10,
            ConsoleError::NoGame => 11,
            ConsoleError::BadSnapshot(_) => 12,
            ConsoleError::Io(_) => 13,
            ConsoleError::Protocol(_) => 14,
            ConsoleError::Timeout => 15,
            ConsoleError::Remote(code) => *code,
        }
    }

    /// Rebuilds an error from a wire status code. Details that do not travel
    /// over the wire (addresses, names) are filled from the request context.
    pub fn from_status(code: u8, context: &str) -> ConsoleError {
        match code {
            1 => ConsoleError::AlreadyRunning,
            2 => ConsoleError::NotRunning,
            3 => ConsoleError::InvalidSpeed(0),
            4 => ConsoleError::OutOfBounds { addr: 0, len: 0 },
            5 => ConsoleError::UnknownState(context.to_string()),
            6 => ConsoleError::NotRecording,
            7 => ConsoleError::AlreadyRecording,
            8 => ConsoleError::UnknownWatch(0),
            9 => ConsoleError::UnknownCartridge(context.to_string()),
            10 => ConsoleError::Cartridge(context.to_string()),
            11 => ConsoleError::NoGame,
            12 => ConsoleError::BadSnapshot(context.to_string()),
            13 => ConsoleError::Io(std::io::Error::other(context.to_string())),
            other => ConsoleError::Remote(other),
        }
    }
}
