//! Frame downsampling for agent observations.

use serde::{Deserialize, Serialize};

use super::GameError;
use crate::console::{FrameBuffer, SCREEN_HEIGHT, SCREEN_WIDTH};

/// Height x width x 3 image, row-major with interleaved RGB channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisualTensor {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl VisualTensor {
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * 3 + c]
    }

    /// One colour plane, row-major.
    pub fn channel(&self, c: usize) -> Vec<u8> {
        assert!(c < 3, "channel {c} out of range");
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, 3]
    }
}

/// Overlap weights between input and output cells along one axis.
///
/// Input cell `i` spans `[i*n_out, (i+1)*n_out)` and output cell `o` spans
/// `[o*n_in, (o+1)*n_in)`, so every overlap is an integer and each output
/// row of weights sums to `n_in`.
fn axis_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, u64)>> {
    (0..n_out)
        .map(|o| {
            let (lo, hi) = (o * n_in, (o + 1) * n_in);
            let first = lo / n_out;
            let last = (hi - 1) / n_out;
            (first..=last)
                .map(|i| {
                    let a = lo.max(i * n_out);
                    let b = hi.min((i + 1) * n_out);
                    (i, (b - a) as u64)
                })
                .collect()
        })
        .collect()
}

/// Area-average resize of an RGB24 buffer, rounding half up, computed in exact
/// integer arithmetic.
pub fn downsample(
    pixels: &[u8],
    width: usize,
    height: usize,
    out_w: usize,
    out_h: usize,
) -> Result<VisualTensor, GameError> {
    if pixels.len() != width * height * 3 || width == 0 || height == 0 {
        return Err(GameError::BadFrame(format!(
            "{} bytes for a {width}x{height} RGB frame",
            pixels.len()
        )));
    }
    if out_w == 0 || out_h == 0 {
        return Err(GameError::BadFrame("empty output size".into()));
    }
    let wx = axis_weights(width, out_w);
    let wy = axis_weights(height, out_h);
    let total = (width * height) as u64;
    let mut data = vec![0u8; out_w * out_h * 3];
    for (oy, rows) in wy.iter().enumerate() {
        for (ox, cols) in wx.iter().enumerate() {
            let mut acc = [0u64; 3];
            for &(y, fy) in rows {
                for &(x, fx) in cols {
                    let p = (y * width + x) * 3;
                    let w = fy * fx;
                    for c in 0..3 {
                        acc[c] += w * pixels[p + c] as u64;
                    }
                }
            }
            let o = (oy * out_w + ox) * 3;
            for c in 0..3 {
                data[o + c] = ((2 * acc[c] + total) / (2 * total)) as u8;
            }
        }
    }
    Ok(VisualTensor {
        width: out_w,
        height: out_h,
        data,
    })
}

/// Downsamples a full 320x240 console frame.
pub fn process_frame(raw: &FrameBuffer, out_w: usize, out_h: usize) -> Result<VisualTensor, GameError> {
    if raw.width() != SCREEN_WIDTH || raw.height() != SCREEN_HEIGHT {
        return Err(GameError::BadFrame(format!(
            "expected {SCREEN_WIDTH}x{SCREEN_HEIGHT}, got {}x{}",
            raw.width(),
            raw.height()
        )));
    }
    downsample(raw.as_bytes(), raw.width(), raw.height(), out_w, out_h)
}
