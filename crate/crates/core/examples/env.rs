//! Random play through the Gym-style interface. Nothing here is game specific.

use rand::Rng;
use vcle::env::{Env, EnvError, EnvOptions};

fn main() -> Result<(), EnvError> {
    let opts = EnvOptions { fast: true, ..Default::default() };
    let mut kula = Env::make("Kula-v1", None, opts)?;
    let mut rng = rand::rng();
    for _ in 0..3 {
        kula.reset(None)?;
        let mut done = false;
        while !done {
            let action = rng.random_range(0..4);
            let r = kula.step(action)?;
            // r.state.visual is the 84x84x3 screen, r.info has durations, score and clock
            println!("action {action} reward {:+.2} score {} clock {:.2}", r.reward, r.info.score, r.info.clock);
            done = r.done;
        }
    }
    kula.close()
}
