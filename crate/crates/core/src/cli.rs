//! Command-line front end. Every subcommand is a thin adapter over the
//! library; output depends only on the inputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::detection::{
    blob_detect, dual_validate, fluorescence_mask, ingest_detections, ingest_validated,
    write_detections, write_validated, Detection, ValidatedDetection,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    block_recall, compute_metrics, frame_confusion, frame_positives, frame_scores, group_blocks,
    roc,
};
use crate::fluorescence::{band_mask, hue_stats, stats_to_band};
use crate::formats::{frame_index, list_frames, load_frame, load_mask, save_frame, save_mask};
use crate::labels::{
    read_ground_truth, read_scored_labels, write_blocks_csv, write_metrics_csv, write_roc_csv,
};
use crate::morphology::{apply_schedule, MorphSchedule};
use crate::pixel::{rgb_to_hsv, sample_hue};
use crate::synth::{synth_scene, SceneSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "scorpion",
    version,
    about = "Fluorescence-confirmed scorpion detection and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the hue (0-179) of one pixel
    Probe { frame: PathBuf, x: u64, y: u64 },
    /// Derive a hue band from sampled hues (one integer per line)
    Calibrate {
        samples: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        s_min: Option<u8>,
        #[arg(long)]
        v_min: Option<u8>,
        /// Also print mean, standard deviation and sample count
        #[arg(long)]
        verbose: bool,
    },
    /// Write the raw hue-band mask of a frame as PGM
    Mask {
        frame: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Apply a morphology schedule to a PGM mask
    Clean {
        mask: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured schedule, e.g. `dilate:2,erode:6,dilate:8`
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Find fluorescent blobs in frames and print them as detections
    Detect {
        /// Frame files, or a single directory of frame_NNNNNN images
        #[arg(required = true)]
        frames: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        min_area: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Confirm shape detections by fluorescence
    Validate {
        /// Frame files, or a single directory of frame_NNNNNN images
        #[arg(required = true)]
        frames: Vec<PathBuf>,
        #[arg(short, long)]
        detections: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Aggregate a validated log into per-block verdicts
    Blocks {
        log: PathBuf,
        /// Number of frames in the sequence (default: last logged frame + 1)
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Frame-level confusion matrix and metrics
    Eval {
        /// Validated detection log
        #[arg(long)]
        predictions: PathBuf,
        /// Ground truth, `frame,label` per line
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 4)]
        decimals: usize,
    },
    /// ROC points and AUC
    Roc {
        /// `score,label` rows
        #[arg(long, conflicts_with_all = ["validated", "truth"], required_unless_present = "validated")]
        scores: Option<PathBuf>,
        /// Validated log; frames are ranked by their best combined score
        #[arg(long, requires = "truth")]
        validated: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Render a synthetic scene (PNG for .png outputs, PPM otherwise)
    Synth {
        scene: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Runs the CLI with explicit streams and returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let _ = write!(err, "{}", e.render());
            if matches!(
                e.kind(),
                ErrorKind::InvalidSubcommand
                    | ErrorKind::MissingSubcommand
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = writeln!(err, "\ncommands:");
                for sub in Cli::command().get_subcommands() {
                    let about = sub.get_about().map(|a| a.to_string()).unwrap_or_default();
                    let _ = writeln!(err, "  {:<10} {about}", sub.get_name());
                }
            }
            return EXIT_USAGE;
        }
    };
    match run(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

/// Writes to `path`, or to `out` when no path is given.
fn with_output(path: Option<&Path>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(out)?,
    }
    Ok(())
}

/// A single directory expands to its numbered frames; files keep their
/// `frame_NNNNNN` index when they have one and their position otherwise.
fn resolve_frames(inputs: &[PathBuf]) -> Result<Vec<(u64, PathBuf)>> {
    if let [dir] = inputs {
        if dir.is_dir() {
            return list_frames(dir);
        }
    }
    let mut frames: Vec<(u64, PathBuf)> = inputs
        .iter()
        .enumerate()
        .map(|(i, p)| (frame_index(p).unwrap_or(i as u64), p.clone()))
        .collect();
    frames.sort();
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parameter(format!("frame index {} given twice", w[0].0)));
    }
    Ok(frames)
}

fn read_hue_samples(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let h = t.parse::<u8>().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("bad hue `{t}`: {e}"),
        })?;
        samples.push(h);
    }
    Ok(samples)
}

fn truth_vectors(
    truth: &BTreeMap<u64, bool>,
    validated: &[ValidatedDetection],
) -> Result<(Vec<u64>, Vec<bool>)> {
    if let Some(v) = validated.iter().find(|v| !truth.contains_key(&v.detection.frame_idx)) {
        return Err(Error::Parameter(format!(
            "detection on frame {} has no ground truth",
            v.detection.frame_idx
        )));
    }
    Ok(truth.iter().map(|(&f, &l)| (f, l)).unzip())
}

fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Probe { frame, x, y } => {
            let f = load_frame(&frame)?;
            writeln!(out, "{}", sample_hue(&f, x, y)?)?;
        }
        Command::Calibrate {
            samples,
            config,
            s_min,
            v_min,
            verbose,
        } => {
            let cfg = load_config(config.as_deref())?;
            let stats = hue_stats(&read_hue_samples(&samples)?)?;
            let band = stats_to_band(&stats, s_min.unwrap_or(cfg.s_min), v_min.unwrap_or(cfg.v_min));
            if verbose {
                writeln!(
                    out,
                    "# mean={:.4} sd={:.4} n={}",
                    stats.mean(),
                    stats.sd(),
                    stats.n()
                )?;
            }
            writeln!(out, "{} {}", band.lo(), band.hi())?;
        }
        Command::Mask {
            frame,
            output,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let band = cfg.band()?;
            let f = load_frame(&frame)?;
            save_mask(&band_mask(&rgb_to_hsv(&f), &band), &output)?;
        }
        Command::Clean {
            mask,
            output,
            config,
            schedule,
        } => {
            let cfg = load_config(config.as_deref())?;
            let schedule = match schedule {
                Some(s) => s.parse::<MorphSchedule>()?,
                None => cfg.morph_schedule,
            };
            save_mask(&apply_schedule(&load_mask(&mask)?, &schedule), &output)?;
        }
        Command::Detect {
            frames,
            config,
            min_area,
            output,
        } => {
            let cfg = load_config(config.as_deref())?;
            let band = cfg.band()?;
            let min_area = min_area.unwrap_or(cfg.min_area);
            let frames = resolve_frames(&frames)?;
            let per_frame = frames
                .par_iter()
                .map(|(idx, path)| {
                    let f = load_frame(path)?;
                    let mask = fluorescence_mask(&f, &band, &cfg.morph_schedule);
                    Ok(blob_detect(&mask, min_area)
                        .into_iter()
                        .map(|mut d| {
                            d.frame_idx = *idx;
                            d
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let all: Vec<Detection> = per_frame.into_iter().flatten().collect();
            with_output(output.as_deref(), out, |w| write_detections(w, &all))?;
        }
        Command::Validate {
            frames,
            detections,
            config,
            output,
        } => {
            let cfg = load_config(config.as_deref())?;
            let band = cfg.band()?;
            let gate = cfg.gate();
            let frames: BTreeMap<u64, PathBuf> = resolve_frames(&frames)?.into_iter().collect();
            let mut by_frame: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
            for d in ingest_detections(open(&detections)?)? {
                by_frame.entry(d.frame_idx).or_default().push(d);
            }
            let jobs = by_frame
                .into_iter()
                .map(|(idx, cands)| {
                    let path = frames.get(&idx).cloned().ok_or_else(|| {
                        Error::Parameter(format!("no image for frame {idx}"))
                    })?;
                    Ok((idx, path, cands))
                })
                .collect::<Result<Vec<_>>>()?;
            let validated = jobs
                .par_iter()
                .map(|(idx, path, cands)| {
                    let f = load_frame(path)?;
                    dual_validate(&f, cands, &band, &cfg.morph_schedule, gate).map_err(|e| match e {
                        Error::Validation { index, message } => Error::Validation {
                            index,
                            message: format!("frame {idx}: {message}"),
                        },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let all: Vec<ValidatedDetection> = validated.into_iter().flatten().collect();
            with_output(output.as_deref(), out, |w| write_validated(w, &all))?;
        }
        Command::Blocks {
            log,
            frames,
            block_size,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let block_size = block_size.unwrap_or(cfg.block_size);
            let validated = ingest_validated(open(&log)?)?;
            let n_frames = match frames {
                Some(n) => n,
                None => validated
                    .iter()
                    .map(|v| v.detection.frame_idx as usize + 1)
                    .max()
                    .ok_or_else(|| {
                        Error::Parameter("empty log; pass --frames to set the sequence length".into())
                    })?,
            };
            let verdicts = group_blocks(&frame_positives(&validated, n_frames)?, block_size)?;
            let recall = block_recall(&verdicts)?;
            write_blocks_csv(&mut *out, &verdicts)?;
            let positive = verdicts.iter().filter(|v| v.positive).count();
            writeln!(
                out,
                "# recall={recall:.6} positive_blocks={positive} total_blocks={}",
                verdicts.len()
            )?;
        }
        Command::Eval {
            predictions,
            truth,
            decimals,
        } => {
            let validated = ingest_validated(open(&predictions)?)?;
            let truth = read_ground_truth(open(&truth)?)?;
            let (frames, labels) = truth_vectors(&truth, &validated)?;
            let positive: std::collections::HashSet<u64> =
                validated.iter().map(|v| v.detection.frame_idx).collect();
            let predicted: Vec<bool> = frames.iter().map(|f| positive.contains(f)).collect();
            let cm = frame_confusion(&predicted, &labels)?;
            let m = compute_metrics(&cm)?;
            write_metrics_csv(&mut *out, &cm, &m, decimals)?;
        }
        Command::Roc {
            scores,
            validated,
            truth,
        } => {
            let samples = match (scores, validated, truth) {
                (Some(path), _, _) => read_scored_labels(open(&path)?)?,
                (None, Some(log), Some(truth)) => {
                    let validated = ingest_validated(open(&log)?)?;
                    let truth = read_ground_truth(open(&truth)?)?;
                    let (frames, labels) = truth_vectors(&truth, &validated)?;
                    let n = frames.last().map_or(0, |&f| f as usize + 1);
                    let scores = frame_scores(&validated, n)?;
                    frames
                        .iter()
                        .zip(labels)
                        .map(|(&f, l)| (scores[f as usize], l))
                        .collect()
                }
                _ => return Err(Error::Parameter("roc needs --scores or --validated with --truth".into())),
            };
            let curve = roc(&samples)?;
            write_roc_csv(&mut *out, &curve)?;
            writeln!(out, "# auc={:.6}", curve.auc)?;
        }
        Command::Synth { scene, output } => {
            let spec = SceneSpec::from_toml_str(&std::fs::read_to_string(&scene)?)?;
            save_frame(&synth_scene(&spec)?, &output)?;
        }
    }
    Ok(())
}
