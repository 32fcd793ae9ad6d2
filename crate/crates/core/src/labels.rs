//! Ground-truth and scored-label files, and the CSV tables the CLI prints.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::{BlockVerdict, ConfusionMatrix, Metrics, RocCurve};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthRecord {
    frame: u64,
    label: LabelValue,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelValue {
    Int(u8),
    Bool(bool),
}

fn parse_label(text: &str, line: usize) -> Result<bool> {
    match text.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Record {
            line,
            message: format!("label must be 0 or 1, got `{other}`"),
        }),
    }
}

/// Reads per-frame ground truth: either `frame,label` CSV (an optional
/// `frame,label` header is skipped) or one `{"frame":..,"label":..}` JSON
/// object per line. Blank lines and `#` comments are ignored.
///
/// Returns labels keyed by frame; a frame listed twice is an error.
pub fn read_ground_truth<R: BufRead>(reader: R) -> Result<BTreeMap<u64, bool>> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (frame, label) = if text.starts_with('{') {
            let rec: TruthRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let label = match rec.label {
                LabelValue::Bool(b) => b,
                LabelValue::Int(v) => parse_label(&v.to_string(), line_no)?,
            };
            (rec.frame, label)
        } else {
            let Some((frame, label)) = text.split_once(',') else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `frame,label`, got `{text}`"),
                });
            };
            if out.is_empty() && frame.trim() == "frame" {
                continue;
            }
            let frame = frame.trim().parse::<u64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad frame `{}`: {e}", frame.trim()),
            })?;
            (frame, parse_label(label, line_no)?)
        };
        if out.insert(frame, label).is_some() {
            return Err(Error::Record {
                line: line_no,
                message: format!("frame {frame} labelled twice"),
            });
        }
    }
    Ok(out)
}

/// Reads `score,label` rows, with an optional header.
pub fn read_scored_labels<R: BufRead>(reader: R) -> Result<Vec<(f64, bool)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let Some((score, label)) = text.split_once(',') else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `score,label`, got `{text}`"),
            });
        };
        if out.is_empty() && score.trim() == "score" {
            continue;
        }
        let score = score.trim().parse::<f64>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad score `{}`: {e}", score.trim()),
        })?;
        if !score.is_finite() {
            return Err(Error::Record {
                line: line_no,
                message: format!("score {score} is not finite"),
            });
        }
        out.push((score, parse_label(label, line_no)?));
    }
    Ok(out)
}

pub fn write_blocks_csv<W: Write>(mut w: W, verdicts: &[BlockVerdict]) -> Result<()> {
    writeln!(w, "block,first_frame,last_frame,positive")?;
    for v in verdicts {
        writeln!(
            w,
            "{},{},{},{}",
            v.block_idx,
            v.frame_range.0,
            v.frame_range.1,
            u8::from(v.positive)
        )?;
    }
    Ok(())
}

pub fn write_metrics_csv<W: Write>(
    mut w: W,
    cm: &ConfusionMatrix,
    m: &Metrics,
    decimals: usize,
) -> Result<()> {
    writeln!(w, "tp,fp,tn,fn,accuracy,precision,recall,f_measure")?;
    writeln!(
        w,
        "{},{},{},{},{:.d$},{:.d$},{:.d$},{:.d$}",
        cm.tp,
        cm.fp,
        cm.tn,
        cm.fn_,
        m.accuracy,
        m.precision,
        m.recall,
        m.f_measure,
        d = decimals
    )?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(mut w: W, curve: &RocCurve) -> Result<()> {
    writeln!(w, "threshold,fpr,tpr")?;
    for p in &curve.points {
        writeln!(w, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
    }
    Ok(())
}
