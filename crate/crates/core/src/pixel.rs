//! Raster frames and the RGB to HSV projection.
//!
//! Hue is stored in half-degree units (`0..=179`), saturation and value in
//! `0..=255`. The conversion is computed in integer arithmetic so it is
//! exact: every rounding is half-away-from-zero on the true rational value,
//! with the max-channel tie broken in the order r, g, b.

use crate::error::{Axis, Error, Result};

/// Number of hue steps in a full turn (half-degree units).
pub const HUE_STEPS: u16 = 180;

/// An 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbFrame {
    /// All-black frame.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0; width as usize * height as usize * 3],
        })
    }

    /// Wraps interleaved `r,g,b` bytes.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::Dimensions(format!(
                "{width}x{height} frame needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Panics if the coordinate is outside the frame.
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.index(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Panics if the coordinate is outside the frame.
    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.index(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    fn index(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) outside frame");
        (y as usize * self.width as usize + x as usize) * 3
    }
}

/// One HSV pixel: `h` in `0..=179`, `s` and `v` in `0..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Hsv {
    pub h: u8,
    pub s: u8,
    pub v: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HsvFrame {
    width: u32,
    height: u32,
    pixels: Vec<Hsv>,
}

impl HsvFrame {
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Hsv>) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Dimensions(format!(
                "{width}x{height} frame needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| u16::from(p.h) >= HUE_STEPS) {
            return Err(Error::Dimensions(format!("hue {} out of range", p.h)));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Hsv] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Hsv {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) outside frame");
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions(format!(
            "frame must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// `round(num / den)` half away from zero, for `num >= 0`, `den > 0`.
#[inline]
fn div_round(num: u32, den: u32) -> u32 {
    (2 * num + den) / (2 * den)
}

/// Converts a single pixel.
#[inline]
pub fn rgb_to_hsv_pixel([r, g, b]: [u8; 3]) -> Hsv {
    let (r, g, b) = (u32::from(r), u32::from(g), u32::from(b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let s = if max == 0 { 0 } else { div_round(255 * delta, max) };

    // Hue in half-degrees is 30 * (sector offset) / delta; the numerator is
    // shifted into the non-negative range before rounding.
    let h = if delta == 0 {
        0
    } else {
        let num = if max == r {
            if g >= b {
                30 * (g - b)
            } else {
                180 * delta - 30 * (b - g)
            }
        } else if max == g {
            60 * delta + 30 * b - 30 * r
        } else {
            120 * delta + 30 * r - 30 * g
        };
        div_round(num, delta) % u32::from(HUE_STEPS)
    };

    Hsv {
        h: h as u8,
        s: s as u8,
        v: max as u8,
    }
}

pub fn rgb_to_hsv(frame: &RgbFrame) -> HsvFrame {
    HsvFrame {
        width: frame.width,
        height: frame.height,
        pixels: frame.pixels().map(rgb_to_hsv_pixel).collect(),
    }
}

/// Hue of the pixel at `(x, y)`.
pub fn sample_hue(frame: &RgbFrame, x: u64, y: u64) -> Result<u8> {
    if x >= u64::from(frame.width) {
        return Err(Error::Coordinate {
            axis: Axis::X,
            value: x,
            limit: frame.width,
        });
    }
    if y >= u64::from(frame.height) {
        return Err(Error::Coordinate {
            axis: Axis::Y,
            value: y,
            limit: frame.height,
        });
    }
    Ok(rgb_to_hsv_pixel(frame.get(x as u32, y as u32)).h)
}

/// Inverse of [`rgb_to_hsv_pixel`] used to paint synthetic scenes.
///
/// `v` becomes the max channel and `round(s * v / 255)` the channel spread.
/// The varying channel is then nudged until the forward conversion lands on
/// `h` again, which always succeeds once the spread is at least 30.
pub fn hsv_to_rgb(hsv: Hsv) -> [u8; 3] {
    let h = u32::from(hsv.h) % u32::from(HUE_STEPS);
    let max = u32::from(hsv.v);
    let delta = div_round(u32::from(hsv.s) * max, 255);
    if delta == 0 {
        return [hsv.v; 3];
    }
    let min = max - delta;

    // (max channel, min channel, varying channel, offset of varying from min in 30ths of delta)
    let sector = h / 30;
    let (hi, lo, mid, steps) = match sector {
        0 => (0, 2, 1, h),
        1 => (1, 2, 0, 60 - h),
        2 => (1, 0, 2, h - 60),
        3 => (2, 0, 1, 120 - h),
        4 => (2, 1, 0, h - 120),
        _ => (0, 1, 2, 180 - h),
    };
    let guess = min + div_round(steps * delta, 30);

    let build = |c: u32| {
        let mut px = [0u8; 3];
        px[hi] = max as u8;
        px[lo] = min as u8;
        px[mid] = c.min(max) as u8;
        px
    };

    let target = h as i32;
    let hue_gap = |px: [u8; 3]| {
        let d = (i32::from(rgb_to_hsv_pixel(px).h) - target).rem_euclid(180);
        d.min(180 - d)
    };
    let mut best = build(guess);
    let mut best_gap = hue_gap(best);
    for d in [1i32, -1, 2, -2] {
        if best_gap == 0 {
            break;
        }
        let c = guess as i32 + d;
        if c < min as i32 || c > max as i32 {
            continue;
        }
        let px = build(c as u32);
        let gap = hue_gap(px);
        if gap < best_gap {
            best = px;
            best_gap = gap;
        }
    }
    best
}
