use super::ConsoleError;

/// Size of console main memory: 2 MiB.
pub const RAM_SIZE: usize = 2 * 1024 * 1024;

/// Start of the console system area (frame counter, active voices).
pub const SYSTEM_BASE: u32 = 0x0000_0000;
/// Frame counter, u32 little-endian.
pub const SYS_FRAME_COUNTER: u32 = SYSTEM_BASE;
/// Number of sounding mixer voices, u8.
pub const SYS_ACTIVE_VOICES: u32 = SYSTEM_BASE + 4;
pub const SYSTEM_LEN: u16 = 8;

/// Console main memory. The size never changes and every access is bounds-checked.
#[derive(Clone, PartialEq, Eq)]
pub struct Ram {
    bytes: Box<[u8]>,
}

impl std::fmt::Debug for Ram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ram").field("len", &self.bytes.len()).finish()
    }
}

impl Default for Ram {
    fn default() -> Self {
        Self::new()
    }
}

impl Ram {
    pub fn new() -> Self {
        Ram {
            bytes: vec![0u8; RAM_SIZE].into_boxed_slice(),
        }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, ConsoleError> {
        if bytes.len() != RAM_SIZE {
            return Err(ConsoleError::BadSnapshot(format!(
                "RAM image is {} bytes, expected {RAM_SIZE}",
                bytes.len()
            )));
        }
        Ok(Ram {
            bytes: bytes.into_boxed_slice(),
        })
    }

    pub fn check_range(addr: u32, len: usize) -> Result<(), ConsoleError> {
        let end = addr as u64 + len as u64;
        if end > RAM_SIZE as u64 {
            return Err(ConsoleError::OutOfBounds {
                addr: addr as u64,
                len: len as u64,
            });
        }
        Ok(())
    }

    pub fn read(&self, addr: u32, len: usize) -> Result<&[u8], ConsoleError> {
        Self::check_range(addr, len)?;
        let start = addr as usize;
        Ok(&self.bytes[start..start + len])
    }

    pub fn write_byte(&mut self, addr: u32, value: u8) -> Result<(), ConsoleError> {
        Self::check_range(addr, 1)?;
        self.bytes[addr as usize] = value;
        Ok(())
    }

    pub fn write(&mut self, addr: u32, data: &[u8]) -> Result<(), ConsoleError> {
        Self::check_range(addr, data.len())?;
        let start = addr as usize;
        self.bytes[start..start + data.len()].copy_from_slice(data);
        Ok(())
    }

    pub fn write_u32_le(&mut self, addr: u32, value: u32) -> Result<(), ConsoleError> {
        self.write(addr, &value.to_le_bytes())
    }

    pub fn read_u32_le(&self, addr: u32) -> Result<u32, ConsoleError> {
        let b = self.read(addr, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn clear(&mut self) {
        self.bytes.fill(0);
    }
}
