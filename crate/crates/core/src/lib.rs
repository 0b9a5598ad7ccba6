//! A deterministic virtual console for reinforcement-learning research, with
//! a four-channel control protocol, a rolling-ball puzzle cartridge, an
//! asynchronous move abstraction and a Gym-style environment interface.

pub mod client;
pub mod console;
pub mod dsp;
pub mod env;
pub mod game;
pub mod harness;
pub mod kula;
pub mod protocol;

pub use client::ConsoleHandle;
pub use console::{Button, Console, ConsoleError, ConsoleOptions};
