//! Drive the console directly: load level 1 and roll forward twice.

use vcle::{Button, ConsoleHandle, ConsoleOptions};

fn main() -> Result<(), vcle::ConsoleError> {
    let console = ConsoleHandle::run(ConsoleOptions::default())?;
    console.load_game("kula?level=1&start=0")?;

    // face the open row first, then press Up twice with a 100 ms gap
    console.touch(Button::Right, 50)?;
    console.delay(500)?;
    console.touch(Button::Up, 50)?;
    console.delay(100)?;
    console.touch(Button::Up, 50)?;
    console.delay(1500)?;

    std::thread::sleep(std::time::Duration::from_millis(2500));
    let header = console.read_bytes(0x10000, 17)?;
    println!("ball at ({}, {})", header[10], header[11]);
    console.kill()
}
