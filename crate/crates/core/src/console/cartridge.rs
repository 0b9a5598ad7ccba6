//! Game cartridges are native plug-ins selected by name.

use std::collections::BTreeMap;
use std::fmt;

use super::{ButtonSet, FrameBuffer, Mixer, Ram};

/// What a cartridge can touch during one frame.
pub struct TickContext<'a> {
    pub buttons: ButtonSet,
    pub ram: &'a mut Ram,
    pub mixer: &'a mut Mixer,
}

pub trait Cartridge: Send {
    /// Advances the game by one frame.
    fn tick(&mut self, ctx: &mut TickContext<'_>);

    /// Draws the current state. Must depend only on cartridge state.
    fn render(&self, fb: &mut FrameBuffer);

    /// Writes the cartridge's RAM image (called after load and restore).
    fn sync_ram(&self, ram: &mut Ram);

    fn save_state(&self) -> Vec<u8>;

    fn load_state(&mut self, blob: &[u8]) -> Result<(), String>;
}

type Factory = Box<dyn Fn(&str) -> Result<Box<dyn Cartridge>, String> + Send + Sync>;

/// Name → cartridge constructor. A load name is `name` or `name?args`;
/// the factory receives `args` (possibly empty).
pub struct CartridgeRegistry {
    factories: BTreeMap<String, Factory>,
}

impl fmt::Debug for CartridgeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for CartridgeRegistry {
    /// Registry with the built-in cartridges.
    fn default() -> Self {
        let mut reg = Self::empty();
        crate::kula::register(&mut reg);
        reg
    }
}

impl CartridgeRegistry {
    pub fn empty() -> Self {
        CartridgeRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&str) -> Result<Box<dyn Cartridge>, String> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    /// Instantiates the cartridge for a load name. `None` means the
    /// cartridge name is not registered.
    pub fn create(&self, load_name: &str) -> Option<Result<Box<dyn Cartridge>, String>> {
        let (name, args) = load_name.split_once('?').unwrap_or((load_name, ""));
        self.factories.get(name).map(|f| f(args))
    }
}
