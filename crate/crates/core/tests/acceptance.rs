//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{
    oracle_dilate, oracle_erode, oracle_schedule, pairwise_auc, reference_hsv, Grid,
};
use scorpion_detect::cli::{run_cli, EXIT_OK};
use scorpion_detect::detection::{
    dual_validate, ingest_validated, write_validated, BBox, Detection, Gate, ValidatedDetection,
};
use scorpion_detect::evaluation::{
    block_recall, compute_exact_metrics, compute_metrics, frame_positives, frame_scores,
    group_blocks, roc, ConfusionMatrix,
};
use scorpion_detect::fluorescence::{
    band_mask, hue_stats, stats_to_band, HueBand, HueStats, DEFAULT_S_MIN, DEFAULT_V_MIN,
};
use scorpion_detect::morphology::{
    apply_schedule, dilate, erode, BinaryMask, MorphOp, MorphSchedule,
};
use scorpion_detect::pixel::{rgb_to_hsv, rgb_to_hsv_pixel, RgbFrame};
use scorpion_detect::synth::{blob_pixels, ring_pixels, synth_scene, BlobSpec, RingSpec, SceneSpec};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, elapsed: Duration, what: &str) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, limit {limit:?}"))
    }
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(std::iter::once("scorpion").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

// ---------------------------------------------------------------------------

fn table_row(m: &scorpion_detect::evaluation::Metrics) -> String {
    format!(
        "{:.2} {:.2} {:.2} {:.2}",
        m.accuracy, m.precision, m.recall, m.f_measure
    )
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rows = [
        ((174, 2, 172, 0), [(346, 348), (174, 176), (1, 1), (348, 350)], "0.99 0.99 1.00 0.99"),
        ((131, 5, 126, 0), [(257, 262), (131, 136), (1, 1), (262, 267)], "0.98 0.96 1.00 0.98"),
    ];
    for ((tp, fp, tn, fn_), fracs, shown) in rows {
        let cm = ConfusionMatrix::new(tp, fp, tn, fn_);
        let exact = compute_exact_metrics(&cm).map_err(|e| e.to_string())?;
        let got = [exact.accuracy, exact.precision, exact.recall, exact.f_measure];
        for (g, (n, d)) in got.iter().zip(fracs) {
            ensure!(*g == Ratio::new(n, d), "{cm:?}: got {g}, want {n}/{d}");
        }
        let m = compute_metrics(&cm).map_err(|e| e.to_string())?;
        ensure!(table_row(&m) == shown, "{cm:?} displays as {}", table_row(&m));
    }
    within(Duration::from_secs(1), start.elapsed(), "metrics")?;
    Ok("exact fractions and 2-decimal rows for both detectors".into())
}

// ---------------------------------------------------------------------------

/// Validated-detection log for `n_blocks` blocks of `block_size` frames where
/// exactly the blocks in `positive` hold at least one detection.
fn block_log(rng: &mut ChaCha8Rng, n_blocks: usize, block_size: usize, positive: &[bool]) -> Vec<u8> {
    let mut entries = Vec::new();
    for (b, _) in positive.iter().enumerate().take(n_blocks).filter(|(_, p)| **p) {
        let hits = rng.random_range(1..=block_size);
        let mut frames: Vec<usize> = (0..block_size).collect();
        for i in 0..hits {
            let j = rng.random_range(i..block_size);
            frames.swap(i, j);
        }
        let mut chosen = frames[..hits].to_vec();
        chosen.sort_unstable();
        for f in chosen {
            let score = rng.random_range(0.3..1.0);
            entries.push(ValidatedDetection {
                detection: Detection::new(
                    (b * block_size + f) as u64,
                    BBox::new(10, 10, 20, 20).unwrap(),
                    score,
                    "hcc",
                )
                .unwrap(),
                fluor_area: 120,
                fluor_density: 0.3,
                combined_score: score,
            });
        }
    }
    let mut buf = Vec::new();
    write_validated(&mut buf, &entries).unwrap();
    buf
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for (k, want) in [(33usize, 0.7333), (37, 0.8222)] {
        let mut positive = vec![false; 45];
        let mut order: Vec<usize> = (0..45).collect();
        for i in 0..k {
            let j = rng.random_range(i..45);
            order.swap(i, j);
            positive[order[i]] = true;
        }
        let log = block_log(&mut rng, 45, 5, &positive);

        let start = Instant::now();
        let validated = ingest_validated(log.as_slice()).map_err(|e| e.to_string())?;
        let frames = frame_positives(&validated, 225).map_err(|e| e.to_string())?;
        let verdicts = group_blocks(&frames, 5).map_err(|e| e.to_string())?;
        let recall = block_recall(&verdicts).map_err(|e| e.to_string())?;
        within(Duration::from_secs(1), start.elapsed(), "block recall")?;

        ensure!(verdicts.len() == 45, "{} blocks", verdicts.len());
        let got: Vec<bool> = verdicts.iter().map(|v| v.positive).collect();
        ensure!(got == positive, "block verdicts differ from the encoded pattern");
        ensure!((recall - want).abs() <= 1e-4, "{k} blocks: recall {recall}, want {want}");

        let path = dir.path().join(format!("log{k}.jsonl"));
        std::fs::write(&path, &log).map_err(|e| e.to_string())?;
        let (code, out, err) = cli(&["blocks", path.to_str().unwrap(), "--frames", "225", "--block-size", "5"]);
        ensure!(code == EXIT_OK, "cli blocks failed: {err}");
        let tail = format!("# recall={recall:.6} positive_blocks={k} total_blocks=45\n");
        ensure!(out.ends_with(&tail), "cli blocks printed {}", out.lines().last().unwrap_or(""));
        report.push(format!("{k}/45 -> {recall:.4}"));
    }
    Ok(report.join(", "))
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let stats = HueStats::new(77.4, 4.5, 100).map_err(|e| e.to_string())?;
    let band = stats_to_band(&stats, DEFAULT_S_MIN, DEFAULT_V_MIN);
    ensure!((band.lo(), band.hi()) == (73, 82), "band {}..{}", band.lo(), band.hi());

    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/hue_samples.txt");
    let text = std::fs::read_to_string(&fixture).map_err(|e| e.to_string())?;
    let samples: Vec<u8> = text.split_whitespace().map(|t| t.parse().unwrap()).collect();
    let measured = hue_stats(&samples).map_err(|e| e.to_string())?;
    ensure!(
        (measured.mean() - 77.4).abs() < 1e-12 && (measured.sd() - 4.5).abs() < 1e-12,
        "fixture stats {} / {}",
        measured.mean(),
        measured.sd()
    );
    let band = stats_to_band(&measured, DEFAULT_S_MIN, DEFAULT_V_MIN);
    ensure!((band.lo(), band.hi()) == (73, 82), "fixture band {}..{}", band.lo(), band.hi());

    let (code, out, err) = cli(&["calibrate", fixture.to_str().unwrap()]);
    ensure!(code == EXIT_OK && out == "73 82\n", "cli calibrate: {out:?} {err}");
    Ok("(77.4, 4.5) -> [73, 82], also from 200 raw samples and the CLI".into())
}

// ---------------------------------------------------------------------------

const CORPUS_PAIRS: usize = 174;

struct Corpus {
    frames: Vec<(RgbFrame, Detection)>,
    dark: Vec<bool>,
}

/// Frame `i < 174` is dark with an in-band blob; frame `174 + i` repeats its
/// geometry in natural light with an out-of-band hue.
fn build_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h) = (128u32, 96u32);
    let mut geometry = Vec::with_capacity(CORPUS_PAIRS);
    for _ in 0..CORPUS_PAIRS {
        let rx = rng.random_range(8..=14u32);
        let ry = rng.random_range(8..=14u32);
        let cx = rng.random_range(rx + 1..w / 2 - rx);
        let cy = rng.random_range(ry + 1..h - ry - 1);
        let hue = rng.random_range(75..=80u8);
        let ring = rng.random_bool(0.5).then(|| RingSpec {
            cx: rng.random_range(w / 2 + 12..w - 12),
            cy: rng.random_range(12..h - 12),
            radius: rng.random_range(6..=10),
            hue: rng.random_range(74..=81),
            hue_spread: 1,
            sat: 70,
            val: 230,
        });
        let seed: u32 = rng.random();
        geometry.push((cx, cy, rx, ry, hue, ring, seed));
    }

    let mut frames = Vec::with_capacity(2 * CORPUS_PAIRS);
    let mut dark = Vec::with_capacity(2 * CORPUS_PAIRS);
    for is_dark in [true, false] {
        for (i, (cx, cy, rx, ry, hue, ring, seed)) in geometry.iter().enumerate() {
            let mut spec = SceneSpec::new(w, h);
            let (hue, sat, val) = if is_dark { (*hue, 255, 255) } else { (15, 150, 120) };
            spec.blobs.push(BlobSpec { cx: *cx, cy: *cy, rx: *rx, ry: *ry, hue, sat, val });
            if is_dark {
                spec.rings.extend(ring.clone());
            }
            spec.noise_seed = *seed;
            spec.noise_amplitude = 8;
            let frame = synth_scene(&spec).unwrap();
            let idx = frames.len() as u64;
            let bbox = BBox::new(cx - rx, cy - ry, 2 * rx + 1, 2 * ry + 1).unwrap();
            let source = if i % 2 == 0 { "hcc" } else { "yolo" };
            frames.push((frame, Detection::new(idx, bbox, 0.9, source).unwrap()));
            dark.push(is_dark);
        }
    }
    Corpus { frames, dark }
}

fn gate_corpus(corpus: &Corpus) -> Result<Vec<ValidatedDetection>, String> {
    let band = HueBand::default();
    let schedule = MorphSchedule::default();
    let gate = Gate::default();
    let per_frame: Vec<_> = corpus
        .frames
        .par_iter()
        .map(|(frame, cand)| dual_validate(frame, std::slice::from_ref(cand), &band, &schedule, gate))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(per_frame.into_iter().flatten().collect())
}

fn criterion_4(corpus: &Corpus, build_time: Duration) -> Outcome {
    let start = Instant::now();
    let passed = gate_corpus(corpus)?;
    let elapsed = build_time + start.elapsed();
    within(Duration::from_secs(30), elapsed, "corpus generation and gating")?;

    let n = corpus.frames.len();
    let predicted = frame_positives(&passed, n).map_err(|e| e.to_string())?;
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (p, t) in predicted.iter().zip(&corpus.dark) {
        match (p, t) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    ensure!(cm == ConfusionMatrix::new(174, 0, 174, 0), "confusion {cm:?}");
    let recall = compute_metrics(&cm).map_err(|e| e.to_string())?.recall;
    ensure!(recall == 1.0, "recall {recall}");
    Ok(format!("TP=174 FN=0 TN=174 FP=0 in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

fn to_grid(mask: &BinaryMask) -> Grid {
    Grid {
        w: mask.width() as usize,
        h: mask.height() as usize,
        bits: mask.to_bools(),
    }
}

fn count_at(g: &Grid, pixels: &[(u32, u32)]) -> usize {
    pixels.iter().filter(|(x, y)| g.get(i64::from(*x), i64::from(*y))).count()
}

fn count_rect(g: &Grid, x0: i64, y0: i64, x1: i64, y1: i64) -> usize {
    let mut n = 0;
    for y in y0..=y1 {
        for x in x0..=x1 {
            n += usize::from(g.get(x, y));
        }
    }
    n
}

fn criterion_5() -> Outcome {
    let blob = BlobSpec { cx: 30, cy: 40, rx: 14, ry: 10, hue: 77, sat: 255, val: 255 };
    let ring = RingSpec { cx: 100, cy: 40, radius: 10, hue: 78, hue_spread: 3, sat: 70, val: 230 };
    let mut spec = SceneSpec::new(140, 80);
    spec.blobs.push(blob.clone());
    spec.rings.push(ring.clone());
    spec.noise_seed = 5;
    spec.noise_amplitude = 8;
    let frame = synth_scene(&spec).map_err(|e| e.to_string())?;
    let raw = band_mask(&rgb_to_hsv(&frame), &HueBand::default());
    let raw_g = to_grid(&raw);

    let blob_px = blob_pixels(&blob);
    let ring_px = ring_pixels(&ring);
    ensure!(count_at(&raw_g, &blob_px) == blob_px.len(), "raw mask misses blob pixels");
    // noise may tip a few low-saturation contour pixels out of the band
    let ring_raw = count_at(&raw_g, &ring_px);
    ensure!(10 * ring_raw >= 9 * ring_px.len(), "raw mask has {ring_raw} of {} ring pixels", ring_px.len());
    // the ring's neighbourhood, far from anything the blob can grow into
    let ring_region = |g: &Grid| {
        let (cx, cy, r) = (i64::from(ring.cx), i64::from(ring.cy), i64::from(ring.radius) + 10);
        count_rect(g, cx - r, cy - r, cx + r, cy + r)
    };
    let blob_region = |g: &Grid| {
        let (cx, cy) = (i64::from(blob.cx), i64::from(blob.cy));
        count_rect(g, cx - 30, cy - 30, cx + 30, cy + 30)
    };

    let run = |pairs: &[(MorphOp, u32)]| -> Result<Grid, String> {
        let schedule = MorphSchedule::from_pairs(pairs).map_err(|e| e.to_string())?;
        let got = to_grid(&apply_schedule(&raw, &schedule));
        let steps: Vec<(bool, u32)> = pairs.iter().map(|(op, n)| (*op == MorphOp::Dilate, *n)).collect();
        let want = oracle_schedule(&raw_g, &steps);
        ensure!(got == want, "schedule {pairs:?} disagrees with the oracle");
        Ok(got)
    };

    let default_pairs: Vec<(MorphOp, u32)> = MorphSchedule::default()
        .steps()
        .iter()
        .map(|s| (s.op(), s.count()))
        .collect();
    ensure!(
        default_pairs == [(MorphOp::Dilate, 2), (MorphOp::Erode, 6), (MorphOp::Dilate, 8)],
        "default schedule is {default_pairs:?}"
    );
    let cleaned = run(&default_pairs)?;
    ensure!(ring_region(&cleaned) == 0, "{} ring pixels survive", ring_region(&cleaned));
    let overlap = count_at(&cleaned, &blob_px) as f64 / blob_px.len() as f64;
    ensure!(overlap >= 0.6, "blob overlap {overlap:.3}");

    let eroded = run(&[(MorphOp::Erode, 1)])?;
    let (before, after) = (blob_region(&raw_g), blob_region(&eroded));
    ensure!(after < before, "erode:1 blob area {before} -> {after}");

    let dilated = run(&[(MorphOp::Dilate, 1)])?;
    let (ring_before, ring_after) = (ring_region(&raw_g), ring_region(&dilated));
    ensure!(ring_after > ring_before, "dilate:1 ring pixels {ring_before} -> {ring_after}");

    Ok(format!(
        "default: ring 0 px, blob overlap {:.1}%; erode:1 blob {before}->{after}; dilate:1 ring {ring_before}->{ring_after}",
        overlap * 100.0
    ))
}

// ---------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let corners = [
        [255, 0, 0],
        [0, 255, 0],
        [0, 0, 255],
        [255, 255, 0],
        [0, 255, 255],
        [255, 0, 255],
    ];
    let triples = corners.into_iter().chain((0..10_000).map(|_| rng.random::<[u8; 3]>()));
    let mut checked = 0;
    for rgb in triples {
        let got = rgb_to_hsv_pixel(rgb);
        let want = reference_hsv(rgb);
        ensure!((got.h, got.s, got.v) == want, "{rgb:?}: got {got:?}, want {want:?}");
        checked += 1;
    }
    Ok(format!("{checked} triples bit-exact"))
}

// ---------------------------------------------------------------------------

fn corpus_auc(scores: &[f64], labels: &[bool], injected: usize) -> Result<f64, String> {
    let mut samples: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    samples.extend(std::iter::repeat_n((0.9, false), injected));
    let curve = roc(&samples).map_err(|e| e.to_string())?;
    let oracle = pairwise_auc(&samples);
    ensure!((curve.auc - oracle).abs() <= 1e-9, "auc {} vs oracle {oracle}", curve.auc);
    Ok(curve.auc)
}

fn criterion_7(corpus: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for set in 0..100 {
        let n = rng.random_range(2..=50);
        let mut samples: Vec<(f64, bool)> = (0..n)
            .map(|_| (f64::from(rng.random_range(0..20u8)) / 20.0, rng.random_bool(0.5)))
            .collect();
        samples[0].1 = true;
        samples[1].1 = false;
        let auc = roc(&samples).map_err(|e| e.to_string())?.auc;
        let oracle = pairwise_auc(&samples);
        ensure!((auc - oracle).abs() <= 1e-9, "set {set}: auc {auc} vs oracle {oracle}");
    }

    let worked: [(&[(f64, bool)], f64); 3] = [
        (&[(0.9, true), (0.8, true), (0.3, false), (0.1, false)], 1.0),
        (&[(0.5, true), (0.5, false)], 0.5),
        (&[(0.9, true), (0.7, false), (0.6, true), (0.2, false)], 0.75),
    ];
    for (samples, want) in worked {
        let auc = roc(samples).map_err(|e| e.to_string())?.auc;
        ensure!(auc == want, "{samples:?}: auc {auc}, want {want}");
    }

    let passed = gate_corpus(corpus)?;
    let scores = frame_scores(&passed, corpus.frames.len()).map_err(|e| e.to_string())?;
    let hcc = corpus_auc(&scores, &corpus.dark, 2)?;
    let yolo = corpus_auc(&scores, &corpus.dark, 5)?;
    ensure!((hcc - 0.99).abs() <= 0.01, "HCC+UV auc {hcc:.4}");
    ensure!((yolo - 0.98).abs() <= 0.01, "YOLO+UV auc {yolo:.4}");
    Ok(format!("100 sets match the oracle, worked examples exact, corpus AUC {hcc:.4} / {yolo:.4}"))
}

// ---------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..200 {
        let density = rng.random_range(0.1..0.9);
        let g = Grid::random(&mut rng, 32, density);
        let (w, h) = (g.w as u32, g.h as u32);
        let mask = BinaryMask::from_bools(w, h, &g.bits).map_err(|e| e.to_string())?;

        let (e, d) = (erode(&mask), dilate(&mask));
        ensure!(to_grid(&e) == oracle_erode(&g), "case {case}: erode differs from oracle");
        ensure!(to_grid(&d) == oracle_dilate(&g), "case {case}: dilate differs from oracle");

        // a random superset exercises monotonicity
        let mut sup_bits = g.bits.clone();
        for b in sup_bits.iter_mut() {
            *b |= rng.random_bool(0.2);
        }
        let sup = BinaryMask::from_bools(w, h, &sup_bits).map_err(|e| e.to_string())?;
        ensure!(e.is_subset_of(&erode(&sup)), "case {case}: erode not monotone");
        ensure!(d.is_subset_of(&dilate(&sup)), "case {case}: dilate not monotone");

        let opened = dilate(&e);
        ensure!(opened.is_subset_of(&mask), "case {case}: opening added pixels");
    }
    Ok("200 masks: oracle-exact, monotone, opening anti-extensive".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let build_start = Instant::now();
    let corpus = build_corpus();
    let build_time = build_start.elapsed();

    let criteria: Vec<(u32, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(|| criterion_4(&corpus, build_time))),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(|| criterion_7(&corpus))),
        (8, Box::new(criterion_8)),
    ];

    let mut failures = 0;
    for (n, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS criterion {n}: {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {n}: {why}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
