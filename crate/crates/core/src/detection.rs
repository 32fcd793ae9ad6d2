//! Shape candidates, a connected-component blob detector, and the
//! fluorescence gate that confirms candidates.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluorescence::{band_mask, HueBand};
use crate::morphology::{apply_schedule, BinaryMask, MorphSchedule};
use crate::pixel::{rgb_to_hsv, RgbFrame};

pub const DEFAULT_MIN_AREA: u64 = 40;
pub const DEFAULT_MIN_DENSITY: f64 = 0.05;

/// Axis-aligned box, top-left corner plus size. Width and height are >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::Parameter(format!("box size {w}x{h} must be positive")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn fits(&self, width: u32, height: u32) -> bool {
        u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_idx: u64,
    pub bbox: BBox,
    score: f64,
    pub source: String,
}

impl Detection {
    pub fn new(frame_idx: u64, bbox: BBox, score: f64, source: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Parameter(format!("score {score} outside [0,1]")));
        }
        Ok(Self {
            frame_idx,
            bbox,
            score,
            source: source.into(),
        })
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// A candidate that passed the fluorescence gate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDetection {
    pub detection: Detection,
    /// Foreground pixels of the cleaned mask inside the box.
    pub fluor_area: u64,
    /// `fluor_area / box area`.
    pub fluor_density: f64,
    /// Shape score scaled down when density is below the gate's floor.
    pub combined_score: f64,
}

/// Thresholds a candidate's fluorescence must meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub min_area: u64,
    pub min_density: f64,
}

impl Default for Gate {
    fn default() -> Self {
        Self {
            min_area: DEFAULT_MIN_AREA,
            min_density: DEFAULT_MIN_DENSITY,
        }
    }
}

// ---------------------------------------------------------------------------
// Log records

/// Wire form of a detection (one JSON object per line).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DetectionRecord {
    frame: u64,
    x: i64,
    y: i64,
    w: i64,
    h: i64,
    score: f64,
    source: String,
}

/// Wire form of a validated detection.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ValidatedRecord {
    #[serde(flatten)]
    base: DetectionRecord,
    fluor_area: u64,
    fluor_density: f64,
    combined_score: f64,
}

impl From<&Detection> for DetectionRecord {
    fn from(d: &Detection) -> Self {
        Self {
            frame: d.frame_idx,
            x: i64::from(d.bbox.x),
            y: i64::from(d.bbox.y),
            w: i64::from(d.bbox.w),
            h: i64::from(d.bbox.h),
            score: d.score,
            source: d.source.clone(),
        }
    }
}

impl DetectionRecord {
    fn into_detection(self, line: usize) -> Result<Detection> {
        let record_err = |message: String| Error::Record { line, message };
        if self.w <= 0 || self.h <= 0 {
            return Err(record_err(format!(
                "box size {}x{} must be positive",
                self.w, self.h
            )));
        }
        let to_u32 = |name: &str, v: i64| {
            u32::try_from(v).map_err(|_| record_err(format!("{name} = {v} out of range")))
        };
        let bbox = BBox {
            x: to_u32("x", self.x)?,
            y: to_u32("y", self.y)?,
            w: to_u32("w", self.w)?,
            h: to_u32("h", self.h)?,
        };
        if !(0.0..=1.0).contains(&self.score) {
            return Err(record_err(format!("score {} outside [0,1]", self.score)));
        }
        Ok(Detection {
            frame_idx: self.frame,
            bbox,
            score: self.score,
            source: self.source,
        })
    }
}

fn for_each_record<T, R>(reader: R, mut f: impl FnMut(usize, T) -> Result<()>) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        f(line_no, rec)?;
    }
    Ok(())
}

/// Parses a detection log, one JSON record per line. Blank lines are
/// skipped; the first bad line aborts the whole read.
pub fn ingest_detections<R: BufRead>(reader: R) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for_each_record(reader, |line, rec: DetectionRecord| {
        out.push(rec.into_detection(line)?);
        Ok(())
    })?;
    Ok(out)
}

/// Parses a validated-detection log.
pub fn ingest_validated<R: BufRead>(reader: R) -> Result<Vec<ValidatedDetection>> {
    let mut out = Vec::new();
    for_each_record(reader, |line, rec: ValidatedRecord| {
        let detection = rec.base.into_detection(line)?;
        let record_err = |message: String| Error::Record { line, message };
        if rec.fluor_area > detection.bbox.area() {
            return Err(record_err(format!(
                "fluor_area {} exceeds box area {}",
                rec.fluor_area,
                detection.bbox.area()
            )));
        }
        if !(0.0..=1.0).contains(&rec.fluor_density) {
            return Err(record_err(format!(
                "fluor_density {} outside [0,1]",
                rec.fluor_density
            )));
        }
        if !(0.0..=1.0).contains(&rec.combined_score) {
            return Err(record_err(format!(
                "combined_score {} outside [0,1]",
                rec.combined_score
            )));
        }
        out.push(ValidatedDetection {
            detection,
            fluor_area: rec.fluor_area,
            fluor_density: rec.fluor_density,
            combined_score: rec.combined_score,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_detections<W: Write>(mut w: W, detections: &[Detection]) -> Result<()> {
    for d in detections {
        serde_json::to_writer(&mut w, &DetectionRecord::from(d)).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_validated<W: Write>(mut w: W, validated: &[ValidatedDetection]) -> Result<()> {
    for v in validated {
        let rec = ValidatedRecord {
            base: DetectionRecord::from(&v.detection),
            fluor_area: v.fluor_area,
            fluor_density: v.fluor_density,
            combined_score: v.combined_score,
        };
        serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Blob detector

/// 8-connected components of at least `min_area` pixels.
///
/// Each component becomes a `"blob"` detection on frame 0 whose score is
/// its fill ratio inside its own bounding box. Results are ordered by the
/// box's top-left corner, row first.
pub fn blob_detect(mask: &BinaryMask, min_area: u64) -> Vec<Detection> {
    let (width, height) = (mask.width() as usize, mask.height() as usize);
    let bits = mask.to_bools();
    let mut seen = vec![false; bits.len()];
    let mut queue = VecDeque::new();
    let mut found = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0u64;
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % width, i / width);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    let j = ny * width + nx;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if area >= min_area {
            let bbox = BBox {
                x: x0 as u32,
                y: y0 as u32,
                w: (x1 - x0 + 1) as u32,
                h: (y1 - y0 + 1) as u32,
            };
            found.push(Detection {
                frame_idx: 0,
                score: area as f64 / bbox.area() as f64,
                bbox,
                source: "blob".to_string(),
            });
        }
    }
    found.sort_by_key(|d| (d.bbox.y, d.bbox.x));
    found
}

// ---------------------------------------------------------------------------
// Dual validation

/// Band mask of the frame after the cleanup schedule.
pub fn fluorescence_mask(frame: &RgbFrame, band: &HueBand, schedule: &MorphSchedule) -> BinaryMask {
    apply_schedule(&band_mask(&rgb_to_hsv(frame), band), schedule)
}

fn check_fits(index: usize, b: BBox, width: u32, height: u32) -> Result<()> {
    if b.fits(width, height) {
        return Ok(());
    }
    Err(Error::Validation {
        index,
        message: format!(
            "box ({},{},{},{}) exceeds {width}x{height} frame",
            b.x, b.y, b.w, b.h
        ),
    })
}

/// Gates candidates against an already-cleaned fluorescence mask.
pub fn validate_against_mask(
    mask: &BinaryMask,
    candidates: &[Detection],
    gate: Gate,
) -> Result<Vec<ValidatedDetection>> {
    let mut out = Vec::new();
    for (index, cand) in candidates.iter().enumerate() {
        let b = cand.bbox;
        check_fits(index, b, mask.width(), mask.height())?;
        let fluor_area = mask.count_in_rect(b.x, b.y, b.w, b.h);
        let fluor_density = fluor_area as f64 / b.area() as f64;
        if fluor_area < gate.min_area || fluor_density < gate.min_density {
            continue;
        }
        let ratio = if gate.min_density > 0.0 {
            (fluor_density / gate.min_density).min(1.0)
        } else {
            1.0
        };
        out.push(ValidatedDetection {
            detection: cand.clone(),
            fluor_area,
            fluor_density,
            combined_score: cand.score * ratio,
        });
    }
    Ok(out)
}

/// Confirms shape candidates by fluorescence inside their boxes.
///
/// The cleaned mask is built once for the whole frame and each candidate is
/// then judged on the pixels its box covers. Passing candidates keep their
/// input order.
pub fn dual_validate(
    frame: &RgbFrame,
    candidates: &[Detection],
    band: &HueBand,
    schedule: &MorphSchedule,
    gate: Gate,
) -> Result<Vec<ValidatedDetection>> {
    // bounds are checked before paying for the mask
    for (index, cand) in candidates.iter().enumerate() {
        check_fits(index, cand.bbox, frame.width(), frame.height())?;
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let mask = fluorescence_mask(frame, band, schedule);
    validate_against_mask(&mask, candidates, gate)
}
