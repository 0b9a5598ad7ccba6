//! Exhaustive shortest-time solver, used to check that levels are winnable.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use super::{plan_move, Arrival, LevelSpec, MoveKind, ObjectKind, Pose};
use crate::console::FRAME_RATE;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub moves: Vec<MoveKind>,
    /// Game frames used, counting the frame each move starts on.
    pub frames: u32,
    pub score: u32,
}

const MOVES: [MoveKind; 4] = [
    MoveKind::Forward,
    MoveKind::LookRight,
    MoveKind::LookLeft,
    MoveKind::JumpForward,
];

/// Fastest winning move sequence from `start`, or `None` if the level cannot
/// be won within its time limit. Search state is (pose, collected objects).
pub fn solve(level: &LevelSpec, start: Pose) -> Option<Solution> {
    let cells: Vec<((u8, u8), ObjectKind)> = level.objects.iter().map(|(k, v)| (*k, *v)).collect();
    assert!(cells.len() <= 64, "solver supports at most 64 objects");
    let budget = level.time_limit_s * FRAME_RATE;
    let remaining = |mask: u64| -> BTreeMap<(u8, u8), ObjectKind> {
        cells
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) == 0)
            .map(|(_, c)| *c)
            .collect()
    };
    let keys_left = |mask: u64| {
        cells
            .iter()
            .enumerate()
            .filter(|(i, (_, o))| *o == ObjectKind::Key && mask & (1 << i) == 0)
            .count()
    };

    // a won node keeps its pose and mask but is flagged terminal
    type Node = (Pose, u64, bool);
    let mut best: HashMap<Node, u32> = HashMap::new();
    let mut parent: HashMap<Node, (Node, MoveKind)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let root = (start, 0u64, false);
    best.insert(root, 0);
    heap.push(Reverse((0u32, root)));

    while let Some(Reverse((cost, node))) = heap.pop() {
        if best.get(&node).is_some_and(|c| *c < cost) {
            continue;
        }
        let (pose, mask, won) = node;
        if won {
            let mut moves = Vec::new();
            let mut cur = node;
            while let Some((prev, k)) = parent.get(&cur) {
                moves.push(*k);
                cur = *prev;
            }
            moves.reverse();
            let score = cells
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, (_, o))| o.score_value())
                .sum();
            return Some(Solution {
                moves,
                frames: cost,
                score,
            });
        }
        let objects = remaining(mask);
        for kind in MOVES {
            let plan = plan_move(level, &objects, keys_left(mask), pose, kind);
            let (next, c) = match plan.arrival {
                Arrival::Fall | Arrival::Spike => continue,
                Arrival::Win => ((plan.to, mask, true), cost + plan.arrive_at + 1),
                Arrival::Collect(_) => {
                    let i = cells
                        .iter()
                        .position(|(k, _)| *k == (plan.to.x, plan.to.y))
                        .expect("collected cell holds an object");
                    ((plan.to, mask | (1 << i), false), cost + plan.total + 1)
                }
                Arrival::Plain | Arrival::Rotate => ((plan.to, mask, false), cost + plan.total + 1),
            };
            if c >= budget {
                continue;
            }
            if best.get(&next).is_none_or(|b| c < *b) {
                best.insert(next, c);
                parent.insert(next, (node, kind));
                heap.push(Reverse((c, next)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kula::{bundled, bundled_ids, StartSelector};

    #[test]
    fn every_bundled_start_is_winnable() {
        for id in bundled_ids() {
            let level = bundled(id).unwrap();
            let mut starts: Vec<Pose> = level.starts.clone();
            starts.extend(level.start(StartSelector::Reserved).ok());
            for s in starts {
                let sol = solve(&level, s).unwrap_or_else(|| panic!("level {id} start {s}"));
                assert!(sol.frames < 80 * FRAME_RATE, "level {id} start {s} needs {}", sol.frames);
            }
        }
    }

    #[test]
    fn trivial_level() {
        let l = LevelSpec::parse("id: 1\nstart: 0,1,N\nG\n#\n").unwrap();
        let sol = solve(&l, l.starts[0]).unwrap();
        assert_eq!(sol.moves, vec![MoveKind::Forward]);
        assert_eq!(sol.frames, 31);
    }

    #[test]
    fn unwinnable_level() {
        let l = LevelSpec::parse("id: 1\nstart: 0,0,N\n#..G\n").unwrap();
        assert!(solve(&l, l.starts[0]).is_none());
    }
}
