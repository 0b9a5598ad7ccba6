//! Top-down view of the level with a score/clock/keys HUD.

use super::{Arrival, GameStatus, KulaState, LevelSpec, MoveKind, ObjectKind, Orientation, Tile};
use crate::console::{FrameBuffer, Rgb, FRAME_RATE};

const HUD_H: i32 = 24;
const MARGIN: i32 = 8;
const MAX_CELL: i32 = 40;

const BG: Rgb = Rgb(12, 12, 28);
const HUD_BG: Rgb = Rgb(30, 30, 60);
const TEXT: Rgb = Rgb(240, 240, 240);
const PLATFORM_A: Rgb = Rgb(150, 150, 165);
const PLATFORM_B: Rgb = Rgb(130, 130, 145);
const GOAL_OPEN: Rgb = Rgb(40, 210, 90);
const GOAL_SHUT: Rgb = Rgb(40, 110, 60);
const SPIKE: Rgb = Rgb(200, 40, 40);
const COIN: Rgb = Rgb(250, 210, 40);
const KEY: Rgb = Rgb(60, 220, 230);
const FRUIT: Rgb = Rgb(220, 60, 200);
const BALL: Rgb = Rgb(245, 130, 30);
const ARROW: Rgb = Rgb(20, 20, 20);
const WON: Rgb = Rgb(60, 230, 60);
const LOST: Rgb = Rgb(230, 50, 50);

/// 3x5 digit glyphs, one row per u8 (low 3 bits, MSB left).
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

fn draw_number(fb: &mut FrameBuffer, mut x: i32, y: i32, scale: i32, value: u32, c: Rgb) {
    for ch in value.to_string().bytes() {
        let glyph = DIGITS[(ch - b'0') as usize];
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    fb.fill_rect(x + col * scale, y + row as i32 * scale, scale, scale, c);
                }
            }
        }
        x += 4 * scale;
    }
}

fn number_width(value: u32, scale: i32) -> i32 {
    value.to_string().len() as i32 * 4 * scale - scale
}

struct Layout {
    cell: i32,
    ox: i32,
    oy: i32,
}

impl Layout {
    fn new(level: &LevelSpec, fb: &FrameBuffer) -> Layout {
        let avail_w = fb.width() as i32 - 2 * MARGIN;
        let avail_h = fb.height() as i32 - HUD_H - 2 * MARGIN;
        let cell = (avail_w / level.width as i32)
            .min(avail_h / level.height as i32)
            .clamp(2, MAX_CELL);
        let ox = (fb.width() as i32 - cell * level.width as i32) / 2;
        let oy = HUD_H + (fb.height() as i32 - HUD_H - cell * level.height as i32) / 2;
        Layout { cell, ox, oy }
    }

    /// Top-left pixel of a cell position given in 1/256 cell units.
    fn pos(&self, fx: i32, fy: i32) -> (i32, i32) {
        (self.ox + fx * self.cell / 256, self.oy + fy * self.cell / 256)
    }
}

/// Draws the whole screen. Depends only on `level` and `state`.
pub fn render(level: &LevelSpec, state: &KulaState, fb: &mut FrameBuffer) {
    fb.fill(BG);
    let w = fb.width() as i32;
    fb.fill_rect(0, 0, w, HUD_H, HUD_BG);
    draw_number(fb, 6, 5, 3, state.score, TEXT);
    let secs = state.clock_frames.div_ceil(FRAME_RATE);
    draw_number(fb, w - 6 - number_width(secs, 3), 5, 3, secs, TEXT);
    for k in 0..state.keys_remaining as i32 {
        fb.fill_rect(w / 2 - 30 + k * 14, 7, 10, 10, KEY);
    }

    let lay = Layout::new(level, fb);
    let c = lay.cell;
    let open = state.keys_remaining == 0;
    let blink_on = (state.frame / 15).is_multiple_of(2);
    for y in 0..level.height as i32 {
        for x in 0..level.width as i32 {
            let (px, py) = (lay.ox + x * c, lay.oy + y * c);
            match level.tile(x, y) {
                Tile::Void => continue,
                Tile::Platform => {
                    let shade = if (x + y) % 2 == 0 { PLATFORM_A } else { PLATFORM_B };
                    fb.fill_rect(px, py, c, c, shade);
                }
                Tile::Goal => {
                    let col = if open && blink_on { GOAL_OPEN } else { GOAL_SHUT };
                    fb.fill_rect(px, py, c, c, col);
                }
                Tile::Spike => {
                    fb.fill_rect(px, py, c, c, PLATFORM_B);
                    let s = (c / 4).max(1);
                    for i in 0..3 {
                        fb.fill_rect(px + s / 2 + i * s + i, py + c / 4, s, c / 2, SPIKE);
                    }
                }
            }
            fb.fill_rect(px, py, c, 1, BG);
            fb.fill_rect(px, py, 1, c, BG);
        }
    }
    for (&(x, y), obj) in &state.objects {
        let col = match obj {
            ObjectKind::Coin => COIN,
            ObjectKind::Key => KEY,
            ObjectKind::Fruit => FRUIT,
        };
        let s = c / 2;
        fb.fill_rect(lay.ox + x as i32 * c + c / 4, lay.oy + y as i32 * c + c / 4, s, s, col);
    }

    draw_ball(fb, &lay, state);

    let border = match state.status {
        GameStatus::Playing => None,
        GameStatus::Won => Some(WON),
        _ => Some(LOST),
    };
    if let Some(col) = border {
        let h = fb.height() as i32;
        fb.fill_rect(0, HUD_H, w, 4, col);
        fb.fill_rect(0, h - 4, w, 4, col);
        fb.fill_rect(0, HUD_H, 4, h - HUD_H, col);
        fb.fill_rect(w - 4, HUD_H, 4, h - HUD_H, col);
    }
}

fn draw_ball(fb: &mut FrameBuffer, lay: &Layout, state: &KulaState) {
    let c = lay.cell;
    let mut fx = state.pose.x as i32 * 256;
    let mut fy = state.pose.y as i32 * 256;
    let mut orientation = state.pose.orientation;
    let mut size = c * 3 / 4;
    if let Some(anim) = &state.anim {
        let p = anim.plan;
        match p.kind {
            MoveKind::LookLeft | MoveKind::LookRight => {
                if anim.elapsed * 2 >= p.total {
                    orientation = p.to.orientation;
                }
            }
            MoveKind::Forward | MoveKind::JumpForward => {
                let (tx, ty) = p.target;
                if anim.elapsed < p.arrive_at {
                    let t = (anim.elapsed * 256 / p.arrive_at) as i32;
                    fx = p.from.x as i32 * 256 + (tx - p.from.x as i32) * t;
                    fy = p.from.y as i32 * 256 + (ty - p.from.y as i32) * t;
                    if p.kind == MoveKind::JumpForward {
                        // grows towards mid-flight
                        let arc = 128 - (t - 128).abs();
                        size += size * arc / 256;
                    }
                } else {
                    fx = tx * 256;
                    fy = ty * 256;
                    if p.arrival == Arrival::Fall {
                        let left = (p.total - anim.elapsed) as i32;
                        size = size * left / (p.total - p.arrive_at) as i32;
                    }
                }
            }
        }
    }
    if size <= 0 {
        return;
    }
    let (px, py) = lay.pos(fx, fy);
    let off = (c - size) / 2;
    fb.fill_rect(px + off, py + off, size, size, BALL);
    let a = (size / 4).max(1);
    let (cx, cy) = (px + c / 2 - a / 2, py + c / 2 - a / 2);
    let (dx, dy) = orientation.delta();
    let reach = size / 2 - a;
    fb.fill_rect(cx, cy, a, a, ARROW);
    fb.fill_rect(cx + dx * reach, cy + dy * reach, a, a, ARROW);
    if matches!(orientation, Orientation::N | Orientation::S) {
        fb.fill_rect(cx, cy.min(cy + dy * reach), a, (dy * reach).abs(), ARROW);
    } else {
        fb.fill_rect(cx.min(cx + dx * reach), cy, (dx * reach).abs(), a, ARROW);
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::console::{Button, ButtonSet};
    use crate::kula::{bundled, KulaCartridge};

    fn frame_of(cart: &KulaCartridge) -> FrameBuffer {
        let mut fb = FrameBuffer::new();
        render(cart.level(), cart.state(), &mut fb);
        fb
    }

    #[test]
    fn render_is_a_pure_function_of_state() {
        let level = Arc::new(bundled(1).unwrap());
        let cart = KulaCartridge::new(Arc::clone(&level), level.starts[0]);
        assert_eq!(frame_of(&cart), frame_of(&cart));
    }

    #[test]
    fn animation_changes_pixels() {
        let level = Arc::new(bundled(1).unwrap());
        let mut cart = KulaCartridge::new(Arc::clone(&level), level.starts[0]);
        let before = frame_of(&cart);
        cart.advance([Button::Up].into_iter().collect());
        for _ in 0..10 {
            cart.advance(ButtonSet::EMPTY);
        }
        assert_ne!(frame_of(&cart), before);
    }

    #[test]
    fn digits_render_inside_hud() {
        let mut fb = FrameBuffer::new();
        fb.fill(BG);
        draw_number(&mut fb, 0, 0, 1, 8, TEXT);
        let lit = (0..5)
            .flat_map(|y| (0..3).map(move |x| (x, y)))
            .filter(|&(x, y)| fb.pixel(x, y) == TEXT)
            .count();
        assert_eq!(lit, 13);
    }
}
