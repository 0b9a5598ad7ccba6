//! Play level 1 with random moves through the move-level game abstraction.

use rand::seq::IndexedRandom;
use vcle::game::{Game, GameConfig};
use vcle::kula::{LoadSpec, StartSelector};
use vcle::ConsoleOptions;

fn main() -> Result<(), vcle::game::GameError> {
    let spec = LoadSpec::bundled(1, StartSelector::Training(0));
    let mut game = Game::launch(spec, ConsoleOptions::fast(), GameConfig::default())?;
    let mut rng = rand::rng();
    for _ in 0..3 {
        game.play()?;
        while game.is_playing() {
            let options = game.move_options()?;
            let m = *options.choose(&mut rng).expect("four moves");
            let outcome = game.make_move(m)?;
            println!("{:<12} reward {:+.2} clock {:.2}", m.name(), outcome.reward, outcome.clock);
        }
        println!("outcome: {}", game.interpret_state());
    }
    game.close()
}
