//! Scorpion detection by dual validation: candidates from a shape detector
//! are confirmed only when the UV-induced cyan-green fluorescence shows up
//! inside their boxes.
//!
//! The pipeline for one frame is
//! [`rgb_to_hsv`](pixel::rgb_to_hsv) → [`band_mask`](fluorescence::band_mask)
//! → [`apply_schedule`](morphology::apply_schedule) → per-candidate gate in
//! [`dual_validate`](detection::dual_validate). Frame verdicts then feed the
//! block, confusion-matrix and ROC tools in [`evaluation`].

pub mod cli;
pub mod config;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod fluorescence;
pub mod formats;
pub mod labels;
pub mod morphology;
pub mod pixel;
pub mod synth;

pub use error::{Error, Result};
