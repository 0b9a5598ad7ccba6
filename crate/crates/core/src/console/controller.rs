//! Simulated controller: the 14 buttons and the queue of control events
//! that is consumed at frame boundaries.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FRAME_RATE;

/// One of the 14 controller buttons, numbered as on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Button {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Cross = 4,
    Circle = 5,
    Square = 6,
    Triangle = 7,
    L1 = 8,
    L2 = 9,
    R1 = 10,
    R2 = 11,
    Start = 12,
    Select = 13,
}

impl Button {
    pub const ALL: [Button; 14] = [
        Button::Up,
        Button::Down,
        Button::Left,
        Button::Right,
        Button::Cross,
        Button::Circle,
        Button::Square,
        Button::Triangle,
        Button::L1,
        Button::L2,
        Button::R1,
        Button::R2,
        Button::Start,
        Button::Select,
    ];

    pub fn from_u8(v: u8) -> Option<Button> {
        Button::ALL.get(v as usize).copied()
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Button::Up => "Up",
            Button::Down => "Down",
            Button::Left => "Left",
            Button::Right => "Right",
            Button::Cross => "Cross",
            Button::Circle => "Circle",
            Button::Square => "Square",
            Button::Triangle => "Triangle",
            Button::L1 => "L1",
            Button::L2 => "L2",
            Button::R1 => "R1",
            Button::R2 => "R2",
            Button::Start => "Start",
            Button::Select => "Select",
        }
    }
}

impl fmt::Display for Button {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Button {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Button::ALL
            .iter()
            .copied()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown button '{s}'"))
    }
}

/// Set of buttons held down, as a 14-bit mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ButtonSet(u16);

impl ButtonSet {
    pub const EMPTY: ButtonSet = ButtonSet(0);

    pub fn contains(self, b: Button) -> bool {
        self.0 & (1 << b as u16) != 0
    }

    pub fn insert(&mut self, b: Button) {
        self.0 |= 1 << b as u16;
    }

    pub fn remove(&mut self, b: Button) {
        self.0 &= !(1 << b as u16);
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn from_bits(bits: u16) -> ButtonSet {
        ButtonSet(bits & 0x3FFF)
    }

    /// Buttons in `self` that are not in `prev`.
    pub fn pressed_since(self, prev: ButtonSet) -> ButtonSet {
        ButtonSet(self.0 & !prev.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Button> {
        Button::ALL.into_iter().filter(move |b| self.contains(*b))
    }
}

impl FromIterator<Button> for ButtonSet {
    fn from_iter<I: IntoIterator<Item = Button>>(iter: I) -> Self {
        let mut set = ButtonSet::EMPTY;
        for b in iter {
            set.insert(b);
        }
        set
    }
}

/// A hold, release, or inter-event delay on the simulated controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlEvent {
    Hold(Button),
    Release(Button),
    Delay { ms: u32 },
}

/// Frames of console time covered by a delay of `ms` milliseconds (rounded up).
pub fn delay_frames(ms: u32) -> u64 {
    (ms as u64 * FRAME_RATE as u64).div_ceil(1000)
}

/// Pending control events plus the current button state.
///
/// Events are consumed at frame boundaries only. A delay blocks later events
/// for its length in frames. Within one boundary, a transition of a button
/// that already changed at that boundary waits for the next frame, so every
/// press is visible to at least one input scan.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlQueue {
    pending: VecDeque<ControlEvent>,
    wait_frames: u64,
    buttons: ButtonSet,
}

impl ControlQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ev: ControlEvent) {
        self.pending.push_back(ev);
    }

    pub fn buttons(&self) -> ButtonSet {
        self.buttons
    }

    pub fn pending(&self) -> impl Iterator<Item = &ControlEvent> {
        self.pending.iter()
    }

    pub fn is_idle(&self) -> bool {
        self.pending.is_empty() && self.wait_frames == 0
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    /// Applies every event due at this frame boundary and returns the
    /// buttons held during the frame.
    pub fn advance(&mut self) -> ButtonSet {
        if self.wait_frames > 0 {
            self.wait_frames -= 1;
            if self.wait_frames > 0 {
                return self.buttons;
            }
        }
        let mut changed = ButtonSet::EMPTY;
        while let Some(ev) = self.pending.front().copied() {
            match ev {
                ControlEvent::Hold(b) | ControlEvent::Release(b) if changed.contains(b) => break,
                ControlEvent::Hold(b) => {
                    if !self.buttons.contains(b) {
                        self.buttons.insert(b);
                        changed.insert(b);
                    }
                }
                ControlEvent::Release(b) => {
                    // releasing an un-held button is a no-op
                    if self.buttons.contains(b) {
                        self.buttons.remove(b);
                        changed.insert(b);
                    }
                }
                ControlEvent::Delay { ms } => {
                    self.pending.pop_front();
                    let frames = delay_frames(ms);
                    if frames > 0 {
                        self.wait_frames = frames;
                        break;
                    }
                    continue;
                }
            }
            self.pending.pop_front();
        }
        self.buttons
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(q: &mut ControlQueue, frames: usize) -> Vec<bool> {
        (0..frames).map(|_| q.advance().contains(Button::Up)).collect()
    }

    #[test]
    fn fourteen_buttons_round_trip_through_their_ids() {
        assert_eq!(Button::ALL.len(), 14);
        for (i, b) in Button::ALL.iter().enumerate() {
            assert_eq!(b.as_u8() as usize, i);
            assert_eq!(Button::from_u8(i as u8), Some(*b));
            assert_eq!(b.name().parse::<Button>().unwrap(), *b);
        }
        assert_eq!(Button::from_u8(14), None);
    }

    #[test]
    fn delay_frames_rounds_up() {
        assert_eq!(delay_frames(0), 0);
        assert_eq!(delay_frames(50), 3);
        assert_eq!(delay_frames(100), 6);
        assert_eq!(delay_frames(10), 1);
    }

    #[test]
    fn touch_holds_for_delay_length() {
        let mut q = ControlQueue::new();
        q.push(ControlEvent::Hold(Button::Up));
        q.push(ControlEvent::Delay { ms: 50 });
        q.push(ControlEvent::Release(Button::Up));
        assert_eq!(run(&mut q, 5), vec![true, true, true, false, false]);
        assert!(q.is_idle());
    }

    #[test]
    fn zero_length_touch_spans_consecutive_frames() {
        let mut q = ControlQueue::new();
        q.push(ControlEvent::Hold(Button::Up));
        q.push(ControlEvent::Delay { ms: 0 });
        q.push(ControlEvent::Release(Button::Up));
        assert_eq!(run(&mut q, 3), vec![true, false, false]);
    }

    #[test]
    fn delay_between_touches_separates_presses() {
        let mut q = ControlQueue::new();
        for ev in [
            ControlEvent::Hold(Button::Up),
            ControlEvent::Delay { ms: 50 },
            ControlEvent::Release(Button::Up),
            ControlEvent::Delay { ms: 100 },
            ControlEvent::Hold(Button::Up),
            ControlEvent::Delay { ms: 50 },
            ControlEvent::Release(Button::Up),
        ] {
            q.push(ev);
        }
        let held = run(&mut q, 14);
        // 3 frames down, 6 up, 3 down
        let expect: Vec<bool> = [[true; 3].as_slice(), &[false; 6], &[true; 3], &[false; 2]].concat();
        assert_eq!(held, expect);
    }

    #[test]
    fn zero_delay_adds_no_gap() {
        let mut q = ControlQueue::new();
        q.push(ControlEvent::Hold(Button::Left));
        q.push(ControlEvent::Delay { ms: 0 });
        q.push(ControlEvent::Hold(Button::Right));
        let b = q.advance();
        assert!(b.contains(Button::Left) && b.contains(Button::Right));
    }

    #[test]
    fn chord_is_applied_in_one_frame() {
        let mut q = ControlQueue::new();
        q.push(ControlEvent::Hold(Button::Cross));
        q.push(ControlEvent::Hold(Button::Up));
        let b = q.advance();
        assert!(b.contains(Button::Cross) && b.contains(Button::Up));
    }

    #[test]
    fn release_without_hold_is_a_no_op() {
        let mut q = ControlQueue::new();
        q.push(ControlEvent::Release(Button::Start));
        q.push(ControlEvent::Hold(Button::Start));
        // the release does not count as a change, so the hold applies now
        assert!(q.advance().contains(Button::Start));
    }
}
