//! Pipeline configuration, read from and written to TOML.
//!
//! ```toml
//! hue_lo = 73
//! hue_hi = 82
//! s_min = 30
//! v_min = 40
//! morph_schedule = [
//!     { op = "dilate", count = 2 },
//!     { op = "erode", count = 6 },
//!     { op = "dilate", count = 8 },
//! ]
//! min_area = 40
//! min_density = 0.05
//! block_size = 5
//! fps = 5
//! ```
//!
//! Missing keys take the defaults above; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{Gate, DEFAULT_MIN_AREA, DEFAULT_MIN_DENSITY};
use crate::error::{Error, Result};
use crate::fluorescence::{HueBand, DEFAULT_S_MIN, DEFAULT_V_MIN};
use crate::morphology::MorphSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub hue_lo: u8,
    pub hue_hi: u8,
    pub s_min: u8,
    pub v_min: u8,
    pub morph_schedule: MorphSchedule,
    pub min_area: u64,
    pub min_density: f64,
    pub block_size: usize,
    pub fps: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            hue_lo: 73,
            hue_hi: 82,
            s_min: DEFAULT_S_MIN,
            v_min: DEFAULT_V_MIN,
            morph_schedule: MorphSchedule::default(),
            min_area: DEFAULT_MIN_AREA,
            min_density: DEFAULT_MIN_DENSITY,
            block_size: 5,
            fps: 5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hue_hi > 179 {
            return Err(Error::Config(format!("hue_hi = {} exceeds 179", self.hue_hi)));
        }
        if self.hue_lo > self.hue_hi {
            return Err(Error::Config(format!(
                "hue_lo = {} exceeds hue_hi = {}",
                self.hue_lo, self.hue_hi
            )));
        }
        if !(0.0..=1.0).contains(&self.min_density) {
            return Err(Error::Config(format!(
                "min_density = {} outside [0,1]",
                self.min_density
            )));
        }
        if self.block_size == 0 {
            return Err(Error::Config("block_size must be at least 1".into()));
        }
        if self.fps == 0 {
            return Err(Error::Config("fps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn band(&self) -> Result<HueBand> {
        HueBand::new(self.hue_lo, self.hue_hi, self.s_min, self.v_min)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn gate(&self) -> Gate {
        Gate {
            min_area: self.min_area,
            min_density: self.min_density,
        }
    }
}
