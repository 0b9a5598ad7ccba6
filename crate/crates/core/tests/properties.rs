use proptest::prelude::*;
use vcle::console::{FrameBuffer, Rgb, SCREEN_HEIGHT, SCREEN_WIDTH};
use vcle::game::{downsample, process_frame, silence_level, trim_silence};
use vcle::harness::log::moving_average;

/// Supersampling reference: every input pixel becomes an `out_w x out_h` block
/// of sub-pixels, after which each output pixel owns exactly `w x h` of them.
fn supersample(px: &[u8], w: usize, h: usize, ow: usize, oh: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(ow * oh * 3);
    for oy in 0..oh {
        for ox in 0..ow {
            for c in 0..3 {
                let mut sum = 0u64;
                for sy in oy * h..(oy + 1) * h {
                    for sx in ox * w..(ox + 1) * w {
                        let (x, y) = (sx / ow, sy / oh);
                        sum += px[(y * w + x) * 3 + c] as u64;
                    }
                }
                let n = (w * h) as u64;
                // round half up
                out.push(((sum * 2 + n) / (2 * n)) as u8);
            }
        }
    }
    out
}

fn padded() -> impl Strategy<Value = (usize, Vec<i16>, usize, f64)> {
    (0.0005f64..0.05).prop_flat_map(|th| {
        let level = silence_level(th) as i16;
        let quiet = prop::collection::vec(-level..=level, 0..40);
        let loud_sample = prop_oneof![(level + 1)..=i16::MAX, i16::MIN..=(-level - 1)];
        let body = (loud_sample.clone(), prop::collection::vec(any::<i16>(), 0..60), loud_sample);
        (quiet.clone(), body, quiet, Just(th)).prop_map(|(pre, (a, mid, b), post, th)| {
            let mut w = pre.clone();
            w.push(a);
            w.extend(mid);
            w.push(b);
            let body_len = w.len() - pre.len();
            w.extend(&post);
            (pre.len(), w, body_len, th)
        })
    })
}

proptest! {
    #[test]
    fn trim_removes_exactly_the_silent_ends((start, wave, len, th) in padded()) {
        let t = trim_silence(&wave, th);
        prop_assert_eq!(t, &wave[start..start + len]);
    }

    #[test]
    fn all_silent_trims_to_empty(th in 0.0005f64..0.05, seed in prop::collection::vec(any::<i16>(), 0..80)) {
        let level = silence_level(th) as i32;
        let wave: Vec<i16> = seed.iter().map(|s| (*s as i32 % (level + 1)) as i16).collect();
        prop_assert!(trim_silence(&wave, th).is_empty());
    }

    #[test]
    fn downsample_matches_supersampling(
        (w, h, ow, oh, px) in (1usize..12, 1usize..12, 1usize..12, 1usize..12)
            .prop_flat_map(|(w, h, ow, oh)| (Just(w), Just(h), Just(ow), Just(oh), prop::collection::vec(any::<u8>(), w * h * 3)))
    ) {
        let t = downsample(&px, w, h, ow, oh).unwrap();
        prop_assert_eq!(t.data, supersample(&px, w, h, ow, oh));
    }

    #[test]
    fn moving_average_is_a_trailing_mean(values in prop::collection::vec(-5.0f64..5.0, 1..40), window in 1usize..12) {
        let ma = moving_average(&values, window);
        for (i, m) in ma.iter().enumerate() {
            let lo = (i + 1).saturating_sub(window);
            let slice = &values[lo..=i];
            let mean = slice.iter().sum::<f64>() / slice.len() as f64;
            prop_assert!((m - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn console_frame_matches_area_mean() {
    let mut fb = FrameBuffer::new();
    for y in 0..SCREEN_HEIGHT {
        for x in 0..SCREEN_WIDTH {
            let v = ((x * 7 + y * 13) % 256) as u8;
            fb.set_pixel(x, y, Rgb(v, (x % 256) as u8, (255 - y) as u8));
        }
    }
    let t = process_frame(&fb, 84, 84).unwrap();
    assert_eq!(t.shape(), [84, 84, 3]);
    // floating-point area mean over fractional pixel coverage
    let (sx, sy) = (SCREEN_WIDTH as f64 / 84.0, SCREEN_HEIGHT as f64 / 84.0);
    for oy in 0..84 {
        for ox in 0..84 {
            let (x0, x1, y0, y1) = (ox as f64 * sx, (ox + 1) as f64 * sx, oy as f64 * sy, (oy + 1) as f64 * sy);
            let mut acc = [0.0f64; 3];
            for y in y0.floor() as usize..(y1.ceil() as usize).min(SCREEN_HEIGHT) {
                let cy = (y1.min(y as f64 + 1.0) - y0.max(y as f64)).max(0.0);
                for x in x0.floor() as usize..(x1.ceil() as usize).min(SCREEN_WIDTH) {
                    let cx = (x1.min(x as f64 + 1.0) - x0.max(x as f64)).max(0.0);
                    let p = fb.pixel(x, y);
                    for (a, v) in acc.iter_mut().zip([p.0, p.1, p.2]) {
                        *a += cx * cy * v as f64;
                    }
                }
            }
            for c in 0..3 {
                let mean = acc[c] / (sx * sy);
                assert!((t.get(ox, oy, c) as f64 - mean).abs() <= 0.5 + 1e-9, "({ox},{oy},{c})");
            }
        }
    }
    assert!(process_frame(&FrameBuffer::with_size(10, 10), 84, 84).is_err());
}
