//! Action sources for `play`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::env::State;
use crate::game::Action;

pub trait Policy {
    /// Called at the start of every episode.
    fn begin_episode(&mut self) {}

    /// Next action, or `None` to stop the episode early.
    fn choose(&mut self, state: &State) -> Option<usize>;
}

/// Uniformly random actions from a seeded stream.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn choose(&mut self, _state: &State) -> Option<usize> {
        Some(self.rng.random_range(0..Action::ALL.len()))
    }
}

/// A fixed action list replayed from the top each episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptPolicy {
    actions: Vec<Action>,
    pos: usize,
}

impl ScriptPolicy {
    pub fn new(actions: Vec<Action>) -> Self {
        ScriptPolicy { actions, pos: 0 }
    }

    /// Actions separated by commas, whitespace or newlines; `#` starts a comment.
    /// Names (`Forward`) and indices (`0`) are both accepted.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut actions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                let a = tok.parse::<Action>().map_err(|msg| HarnessError::Script {
                    line: i + 1,
                    msg,
                })?;
                actions.push(a);
            }
        }
        if actions.is_empty() {
            return Err(HarnessError::Script {
                line: 0,
                msg: "script has no actions".into(),
            });
        }
        Ok(ScriptPolicy::new(actions))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }
}

impl Policy for ScriptPolicy {
    fn begin_episode(&mut self) {
        self.pos = 0;
    }

    fn choose(&mut self, _state: &State) -> Option<usize> {
        let a = self.actions.get(self.pos)?;
        self.pos += 1;
        Some(a.index())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_script() {
        let p = ScriptPolicy::parse("Forward, forward\n# comment\n2 JumpForward # jump\n").unwrap();
        assert_eq!(
            p.actions(),
            &[Action::Forward, Action::Forward, Action::LookLeft, Action::JumpForward]
        );
        assert!(matches!(
            ScriptPolicy::parse("Forward\nBackward"),
            Err(HarnessError::Script { line: 2, .. })
        ));
        assert!(ScriptPolicy::parse("# nothing").is_err());
    }
}
