//! RAM watches. Changes are detected by byte comparison at frame
//! boundaries, so each watch reports at most once per boundary.

use std::collections::BTreeMap;

use super::{ConsoleError, Ram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryWatch {
    pub id: u16,
    pub addr: u32,
    pub len: u16,
    pub awake: bool,
    /// Freeze the console at the end of the frame in which this watch fires.
    pub breaks: bool,
    baseline: Vec<u8>,
}

/// A watch that saw its region change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatchHit {
    pub id: u16,
    pub addr: u32,
    pub len: u16,
    pub bytes: Vec<u8>,
    pub breaks: bool,
}

#[derive(Debug, Clone, Default)]
pub struct WatchSet {
    watches: BTreeMap<u16, MemoryWatch>,
}

impl WatchSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers (or replaces) watch `id`. The current contents become the baseline.
    pub fn add(
        &mut self,
        id: u16,
        addr: u32,
        len: u16,
        breaks: bool,
        ram: &Ram,
    ) -> Result<(), ConsoleError> {
        let baseline = ram.read(addr, len as usize)?.to_vec();
        self.watches.insert(
            id,
            MemoryWatch {
                id,
                addr,
                len,
                awake: true,
                breaks,
                baseline,
            },
        );
        Ok(())
    }

    pub fn clear(&mut self) {
        self.watches.clear();
    }

    pub fn get(&self, id: u16) -> Option<&MemoryWatch> {
        self.watches.get(&id)
    }

    pub fn len(&self) -> usize {
        self.watches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.watches.is_empty()
    }

    pub fn sleep(&mut self, id: u16) -> Result<(), ConsoleError> {
        let w = self
            .watches
            .get_mut(&id)
            .ok_or(ConsoleError::UnknownWatch(id))?;
        w.awake = false;
        Ok(())
    }

    /// Wakes a watch. Changes made while it slept are absorbed into the baseline.
    pub fn wake(&mut self, id: u16, ram: &Ram) -> Result<(), ConsoleError> {
        let w = self
            .watches
            .get_mut(&id)
            .ok_or(ConsoleError::UnknownWatch(id))?;
        if !w.awake {
            w.awake = true;
            w.baseline.copy_from_slice(ram.read(w.addr, w.len as usize)?);
        }
        Ok(())
    }

    /// Resets every baseline to the current RAM contents without reporting.
    pub fn rebaseline(&mut self, ram: &Ram) {
        for w in self.watches.values_mut() {
            if let Ok(cur) = ram.read(w.addr, w.len as usize) {
                w.baseline.copy_from_slice(cur);
            }
        }
    }

    /// Compares every awake watch against its baseline, in id order.
    pub fn scan(&mut self, ram: &Ram) -> Vec<WatchHit> {
        let mut hits = Vec::new();
        for w in self.watches.values_mut() {
            let Ok(cur) = ram.read(w.addr, w.len as usize) else {
                continue;
            };
            if cur == w.baseline.as_slice() {
                continue;
            }
            w.baseline.copy_from_slice(cur);
            if w.awake {
                hits.push(WatchHit {
                    id: w.id,
                    addr: w.addr,
                    len: w.len,
                    bytes: cur.to_vec(),
                    breaks: w.breaks,
                });
            }
        }
        hits
    }
}
