//! Deterministic synthetic scenes: fluorescent blobs, thin reflective rings
//! standing in for non-fluorescent cohabitants, and seeded sensor noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::{hsv_to_rgb, Hsv, RgbFrame};

const LCG_MUL: u32 = 1_664_525;
const LCG_INC: u32 = 1_013_904_223;

/// Filled axis-aligned ellipse in a single HSV color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub cx: u32,
    pub cy: u32,
    pub rx: u32,
    pub ry: u32,
    pub hue: u8,
    pub sat: u8,
    pub val: u8,
}

/// One-pixel circle, bright and weakly saturated, whose hue wobbles by up
/// to `hue_spread` around `hue` along the contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub cx: u32,
    pub cy: u32,
    pub radius: u32,
    pub hue: u8,
    #[serde(default)]
    pub hue_spread: u8,
    #[serde(default = "RingSpec::default_sat")]
    pub sat: u8,
    #[serde(default = "RingSpec::default_val")]
    pub val: u8,
}

impl RingSpec {
    fn default_sat() -> u8 {
        70
    }

    fn default_val() -> u8 {
        230
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub rings: Vec<RingSpec>,
    #[serde(default)]
    pub noise_seed: u32,
    /// Largest value added to a channel; 0 disables noise.
    #[serde(default)]
    pub noise_amplitude: u8,
}

impl SceneSpec {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            blobs: Vec::new(),
            rings: Vec::new(),
            noise_seed: 0,
            noise_amplitude: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Scene(format!(
                "frame must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        let fits = |c: u32, r: u32, limit: u32| c >= r && u64::from(c) + u64::from(r) < u64::from(limit);
        for (i, b) in self.blobs.iter().enumerate() {
            if b.rx == 0 || b.ry == 0 {
                return Err(Error::Scene(format!("blob {i} has a zero radius")));
            }
            if !fits(b.cx, b.rx, self.width) || !fits(b.cy, b.ry, self.height) {
                return Err(Error::Scene(format!("blob {i} does not fit in the frame")));
            }
            if b.hue >= 180 {
                return Err(Error::Scene(format!("blob {i} hue {} outside [0,179]", b.hue)));
            }
        }
        for (i, r) in self.rings.iter().enumerate() {
            if r.radius == 0 {
                return Err(Error::Scene(format!("ring {i} has a zero radius")));
            }
            if !fits(r.cx, r.radius, self.width) || !fits(r.cy, r.radius, self.height) {
                return Err(Error::Scene(format!("ring {i} does not fit in the frame")));
            }
            if r.hue >= 180 || r.hue_spread >= 90 {
                return Err(Error::Scene(format!("ring {i} hue {}±{} is invalid", r.hue, r.hue_spread)));
            }
        }
        Ok(())
    }
}

/// Squared distances compared in integers: inside iff
/// `dx²·ry² + dy²·rx² <= rx²·ry²`.
fn in_ellipse(dx: i64, dy: i64, rx: i64, ry: i64) -> bool {
    dx * dx * ry * ry + dy * dy * rx * rx <= rx * rx * ry * ry
}

/// On the ring iff the centre distance rounds to `radius`, i.e.
/// `(2r-1)² <= 4d² < (2r+1)²`.
fn on_ring(dx: i64, dy: i64, radius: i64) -> bool {
    let d4 = 4 * (dx * dx + dy * dy);
    (2 * radius - 1).pow(2) <= d4 && d4 < (2 * radius + 1).pow(2)
}

/// Pixels covered by a blob, row-major.
pub fn blob_pixels(blob: &BlobSpec) -> Vec<(u32, u32)> {
    let (rx, ry) = (i64::from(blob.rx), i64::from(blob.ry));
    let mut out = Vec::new();
    for dy in -ry..=ry {
        for dx in -rx..=rx {
            if in_ellipse(dx, dy, rx, ry) {
                out.push(((i64::from(blob.cx) + dx) as u32, (i64::from(blob.cy) + dy) as u32));
            }
        }
    }
    out
}

/// Pixels covered by a ring, row-major.
pub fn ring_pixels(ring: &RingSpec) -> Vec<(u32, u32)> {
    let r = i64::from(ring.radius);
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if on_ring(dx, dy, r) {
                out.push(((i64::from(ring.cx) + dx) as u32, (i64::from(ring.cy) + dy) as u32));
            }
        }
    }
    out
}

/// Draws one byte per channel from the LCG and adds `byte * (amp+1) / 256`.
fn add_noise(frame: &mut RgbFrame, seed: u32, amplitude: u8) {
    if amplitude == 0 {
        return;
    }
    let mut state = seed;
    let scale = u32::from(amplitude) + 1;
    for ch in frame.data_mut() {
        state = state.wrapping_mul(LCG_MUL).wrapping_add(LCG_INC);
        let byte = state >> 24;
        let add = (byte * scale) >> 8;
        *ch = ch.saturating_add(add as u8);
    }
}

/// Renders a scene on a black background: blobs in order, then rings, then
/// noise over every channel in row-major order.
pub fn synth_scene(spec: &SceneSpec) -> Result<RgbFrame> {
    spec.validate()?;
    let mut frame = RgbFrame::new(spec.width, spec.height)?;

    for blob in &spec.blobs {
        let rgb = hsv_to_rgb(Hsv {
            h: blob.hue,
            s: blob.sat,
            v: blob.val,
        });
        for (x, y) in blob_pixels(blob) {
            frame.put(x, y, rgb);
        }
    }

    for ring in &spec.rings {
        let period = 2 * u32::from(ring.hue_spread) + 1;
        for (x, y) in ring_pixels(ring) {
            let wobble = ((x + y) % period) as i32 - i32::from(ring.hue_spread);
            let hue = (i32::from(ring.hue) + wobble).rem_euclid(180) as u8;
            let rgb = hsv_to_rgb(Hsv {
                h: hue,
                s: ring.sat,
                v: ring.val,
            });
            frame.put(x, y, rgb);
        }
    }

    add_noise(&mut frame, spec.noise_seed, spec.noise_amplitude);
    Ok(frame)
}
