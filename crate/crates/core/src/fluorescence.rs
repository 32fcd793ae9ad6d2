//! Hue-band calibration and fluorescence masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::BinaryMask;
use crate::pixel::{Hsv, HsvFrame, HUE_STEPS};

/// Default saturation floor; hue is noise below it.
pub const DEFAULT_S_MIN: u8 = 30;
/// Default value floor.
pub const DEFAULT_V_MIN: u8 = 40;

/// Summary of sampled hues, in half-degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HueStats {
    mean: f64,
    sd: f64,
    n: usize,
}

impl HueStats {
    pub fn new(mean: f64, sd: f64, n: usize) -> Result<Self> {
        if !(0.0..f64::from(HUE_STEPS)).contains(&mean) {
            return Err(Error::Calibration(format!("mean hue {mean} outside [0,180)")));
        }
        if !(sd >= 0.0 && sd.is_finite()) {
            return Err(Error::Calibration(format!("standard deviation {sd} must be >= 0")));
        }
        if n == 0 {
            return Err(Error::Calibration("sample count must be at least 1".into()));
        }
        Ok(Self { mean, sd, n })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Closed hue interval plus saturation and value floors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HueBand {
    lo: u8,
    hi: u8,
    s_min: u8,
    v_min: u8,
}

impl HueBand {
    pub fn new(lo: u8, hi: u8, s_min: u8, v_min: u8) -> Result<Self> {
        if u16::from(hi) >= HUE_STEPS {
            return Err(Error::Parameter(format!("hue {hi} outside [0,179]")));
        }
        if lo > hi {
            return Err(Error::Parameter(format!(
                "hue band lower bound {lo} exceeds upper bound {hi}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            s_min,
            v_min,
        })
    }

    pub fn lo(&self) -> u8 {
        self.lo
    }

    pub fn hi(&self) -> u8 {
        self.hi
    }

    pub fn s_min(&self) -> u8 {
        self.s_min
    }

    pub fn v_min(&self) -> u8 {
        self.v_min
    }

    #[inline]
    pub fn contains(&self, p: Hsv) -> bool {
        (self.lo..=self.hi).contains(&p.h) && p.s >= self.s_min && p.v >= self.v_min
    }
}

/// The fluorescence band, hue 73..=82 with the default floors.
impl Default for HueBand {
    fn default() -> Self {
        Self {
            lo: 73,
            hi: 82,
            s_min: DEFAULT_S_MIN,
            v_min: DEFAULT_V_MIN,
        }
    }
}

/// Mean and population standard deviation of hue samples.
pub fn hue_stats(samples: &[u8]) -> Result<HueStats> {
    if samples.is_empty() {
        return Err(Error::Calibration("no hue samples".into()));
    }
    if let Some(&bad) = samples.iter().find(|&&h| u16::from(h) >= HUE_STEPS) {
        return Err(Error::Calibration(format!("hue sample {bad} outside [0,179]")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&h| f64::from(h)).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|&h| (f64::from(h) - mean).powi(2))
        .sum::<f64>()
        / n;
    HueStats::new(mean, var.sqrt(), samples.len())
}

/// `round(mean ± sd)` clamped to the hue range.
pub fn stats_to_band(stats: &HueStats, s_min: u8, v_min: u8) -> HueBand {
    let max = f64::from(HUE_STEPS - 1);
    // f64::round is half-away-from-zero
    let lo = (stats.mean - stats.sd).round().clamp(0.0, max) as u8;
    let hi = (stats.mean + stats.sd).round().clamp(0.0, max) as u8;
    HueBand {
        lo,
        hi,
        s_min,
        v_min,
    }
}

/// Foreground where the pixel falls inside the band.
pub fn band_mask(hsv: &HsvFrame, band: &HueBand) -> BinaryMask {
    let width = hsv.width();
    let mut mask = BinaryMask::new(width, hsv.height());
    for (y, row) in hsv.pixels().chunks_exact(width as usize).enumerate() {
        for (x, &p) in row.iter().enumerate() {
            if band.contains(p) {
                mask.set(x as u32, y as u32, true);
            }
        }
    }
    mask
}
