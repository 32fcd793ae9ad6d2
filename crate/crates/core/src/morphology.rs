//! Binary masks and 3x3 erosion/dilation.
//!
//! Masks are stored bit-packed, 64 pixels per word, each row starting on a
//! fresh word. Bits past `width` in the last word of a row are always zero;
//! every operation below relies on that, since it makes the padding double
//! as the out-of-frame background.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    stride: usize,
    words: Vec<u64>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
        if self.width <= 64 && self.height <= 64 {
            for y in 0..self.height {
                let row: String = (0..self.width)
                    .map(|x| if self.get(x, y) { '#' } else { '.' })
                    .collect();
                writeln!(f, "{row}")?;
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    /// All-background mask.
    pub fn new(width: u32, height: u32) -> Self {
        let stride = (width as usize).div_ceil(64);
        Self {
            width,
            height,
            stride,
            words: vec![0; stride * height as usize],
        }
    }

    /// All-foreground mask.
    pub fn full(width: u32, height: u32) -> Self {
        let mut m = Self::new(width, height);
        m.words.fill(u64::MAX);
        m.clear_padding();
        m
    }

    /// Builds a mask from row-major flags.
    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::Dimensions(format!(
                "{width}x{height} mask needs {} flags, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        let mut m = Self::new(width, height);
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            let (x, y) = (i % width as usize, i / width as usize);
            m.set(x as u32, y as u32, true);
        }
        Ok(m)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) outside mask");
        let w = self.words[y as usize * self.stride + x as usize / 64];
        (w >> (x % 64)) & 1 == 1
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) outside mask");
        let w = &mut self.words[y as usize * self.stride + x as usize / 64];
        let bit = 1u64 << (x % 64);
        if on {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Row-major flags, one per pixel.
    pub fn to_bools(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.width as usize * self.height as usize);
        for y in 0..self.height {
            out.extend((0..self.width).map(|x| self.get(x, y)));
        }
        out
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Foreground pixels inside `[x, x+w) x [y, y+h)`, clipped to the mask.
    pub fn count_in_rect(&self, x: u32, y: u32, w: u32, h: u32) -> u64 {
        let x1 = x.saturating_add(w).min(self.width);
        let y1 = y.saturating_add(h).min(self.height);
        if x >= x1 || y >= y1 {
            return 0;
        }
        let mut total = 0u64;
        for row in y..y1 {
            let words = self.row(row);
            let (first, last) = (x as usize / 64, (x1 as usize - 1) / 64);
            for (k, &word) in words.iter().enumerate().take(last + 1).skip(first) {
                let lo = if k == first { x as usize % 64 } else { 0 };
                let hi = if k == last { (x1 as usize - 1) % 64 + 1 } else { 64 };
                let span = if hi - lo == 64 {
                    u64::MAX
                } else {
                    ((1u64 << (hi - lo)) - 1) << lo
                };
                total += u64::from((word & span).count_ones());
            }
        }
        total
    }

    /// Pixelwise `self ⊆ other`. Panics on a size mismatch.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.assert_same_shape(other);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Pixelwise intersection. Panics on a size mismatch.
    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        self.assert_same_shape(other);
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        out
    }

    fn assert_same_shape(&self, other: &BinaryMask) {
        assert!(
            self.width == other.width && self.height == other.height,
            "mask size mismatch: {}x{} vs {}x{}",
            self.width,
            self.height,
            other.width,
            other.height
        );
    }

    pub(crate) fn row(&self, y: u32) -> &[u64] {
        let start = y as usize * self.stride;
        &self.words[start..start + self.stride]
    }

    fn tail_mask(&self) -> u64 {
        match self.width % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    fn clear_padding(&mut self) {
        if self.stride == 0 {
            return;
        }
        let tail = self.tail_mask();
        for row in self.words.chunks_exact_mut(self.stride) {
            if let Some(last) = row.last_mut() {
                *last &= tail;
            }
        }
    }
}

/// Combines each pixel with its left and right neighbours.
fn horizontal(src: &[u64], dst: &mut [u64], combine: fn(u64, u64, u64) -> u64) {
    let n = src.len();
    for k in 0..n {
        let w = src[k];
        let prev = if k > 0 { src[k - 1] } else { 0 };
        let next = if k + 1 < n { src[k + 1] } else { 0 };
        let left = (w << 1) | (prev >> 63);
        let right = (w >> 1) | (next << 63);
        dst[k] = combine(w, left, right);
    }
}

fn apply3x3(mask: &BinaryMask, combine: fn(u64, u64, u64) -> u64) -> BinaryMask {
    let stride = mask.stride;
    let height = mask.height as usize;
    let mut rows = vec![0u64; mask.words.len()];
    for y in 0..height {
        let span = y * stride..(y + 1) * stride;
        horizontal(&mask.words[span.clone()], &mut rows[span], combine);
    }

    let mut out = BinaryMask::new(mask.width, mask.height);
    for y in 0..height {
        for k in 0..stride {
            let mid = rows[y * stride + k];
            let up = if y > 0 { rows[(y - 1) * stride + k] } else { 0 };
            let down = if y + 1 < height {
                rows[(y + 1) * stride + k]
            } else {
                0
            };
            out.words[y * stride + k] = combine(mid, up, down);
        }
    }
    out.clear_padding();
    out
}

/// 3x3 erosion; pixels outside the frame count as background.
pub fn erode(mask: &BinaryMask) -> BinaryMask {
    apply3x3(mask, |a, b, c| a & b & c)
}

/// 3x3 dilation, clipped to the frame.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    apply3x3(mask, |a, b, c| a | b | c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Erode,
    Dilate,
}

impl MorphOp {
    pub fn apply(self, mask: &BinaryMask) -> BinaryMask {
        match self {
            MorphOp::Erode => erode(mask),
            MorphOp::Dilate => dilate(mask),
        }
    }
}

impl fmt::Display for MorphOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MorphOp::Erode => "erode",
            MorphOp::Dilate => "dilate",
        })
    }
}

/// One schedule entry: `op` applied `count` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStep")]
pub struct MorphStep {
    op: MorphOp,
    count: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    op: MorphOp,
    count: u32,
}

impl TryFrom<RawStep> for MorphStep {
    type Error = Error;

    fn try_from(raw: RawStep) -> Result<Self> {
        MorphStep::new(raw.op, raw.count)
    }
}

impl MorphStep {
    pub fn new(op: MorphOp, count: u32) -> Result<Self> {
        if count == 0 {
            return Err(Error::Parameter(format!("{op} count must be at least 1")));
        }
        Ok(Self { op, count })
    }

    pub fn op(&self) -> MorphOp {
        self.op
    }

    pub fn count(&self) -> u32 {
        self.count
    }
}

/// Ordered erode/dilate steps. An empty schedule is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MorphSchedule {
    steps: Vec<MorphStep>,
}

impl MorphSchedule {
    pub fn new(steps: Vec<MorphStep>) -> Self {
        Self { steps }
    }

    pub fn identity() -> Self {
        Self { steps: Vec::new() }
    }

    /// Builds from `(op, count)` pairs, rejecting zero counts.
    pub fn from_pairs(pairs: &[(MorphOp, u32)]) -> Result<Self> {
        pairs
            .iter()
            .map(|&(op, n)| MorphStep::new(op, n))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn steps(&self) -> &[MorphStep] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Runs the schedule left to right.
    pub fn apply(&self, mask: &BinaryMask) -> BinaryMask {
        apply_schedule(mask, self)
    }
}

/// Two dilations, six erosions, eight dilations.
impl Default for MorphSchedule {
    fn default() -> Self {
        Self::new(vec![
            MorphStep {
                op: MorphOp::Dilate,
                count: 2,
            },
            MorphStep {
                op: MorphOp::Erode,
                count: 6,
            },
            MorphStep {
                op: MorphOp::Dilate,
                count: 8,
            },
        ])
    }
}

/// `dilate:2,erode:6,dilate:8`; the empty string is the identity.
impl fmt::Display for MorphSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", s.op, s.count)?;
        }
        Ok(())
    }
}

impl FromStr for MorphSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Self::identity());
        }
        s.split(',')
            .map(|item| {
                let item = item.trim();
                let (op, count) = item.split_once(':').unwrap_or((item, "1"));
                let op = match op.trim() {
                    "erode" | "e" => MorphOp::Erode,
                    "dilate" | "d" => MorphOp::Dilate,
                    other => {
                        return Err(Error::Parameter(format!("unknown morphology op `{other}`")))
                    }
                };
                let count = count
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Parameter(format!("bad count in `{item}`: {e}")))?;
                MorphStep::new(op, count)
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

pub fn apply_schedule(mask: &BinaryMask, schedule: &MorphSchedule) -> BinaryMask {
    let mut current = mask.clone();
    for step in &schedule.steps {
        for _ in 0..step.count {
            // erode/dilate both fix the empty mask
            if current.is_empty() {
                return current;
            }
            current = step.op.apply(&current);
        }
    }
    current
}
