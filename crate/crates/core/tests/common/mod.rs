//! Brute-force reference implementations shared by the integration tests.
//! None of these call into the code paths they are used to check.
#![allow(dead_code)]

use num_rational::Ratio;
use rand::Rng;

/// HSV straight from the textbook formula, evaluated in exact rationals.
pub fn reference_hsv(rgb: [u8; 3]) -> (u8, u8, u8) {
    let [r, g, b] = rgb.map(i64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max == 0 {
        0
    } else {
        Ratio::new(255 * delta, max).round().to_integer()
    };
    let six = Ratio::from_integer(6);
    let h_deg = if delta == 0 {
        Ratio::from_integer(0)
    } else if max == r {
        let x = Ratio::new(g - b, delta);
        let m = x - six * (x / six).floor();
        Ratio::from_integer(60) * m
    } else if max == g {
        Ratio::from_integer(60) * (Ratio::new(b - r, delta) + Ratio::from_integer(2))
    } else {
        Ratio::from_integer(60) * (Ratio::new(r - g, delta) + Ratio::from_integer(4))
    };
    let h = (h_deg / Ratio::from_integer(2)).round().to_integer().rem_euclid(180);
    (h as u8, s as u8, max as u8)
}

/// Row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub w: usize,
    pub h: usize,
    pub bits: Vec<bool>,
}

impl Grid {
    pub fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.w as i64 || y >= self.h as i64 {
            return false;
        }
        self.bits[y as usize * self.w + x as usize]
    }

    pub fn random(rng: &mut impl Rng, max_side: usize, density: f64) -> Grid {
        let w = rng.random_range(1..=max_side);
        let h = rng.random_range(1..=max_side);
        let bits = (0..w * h).map(|_| rng.random_bool(density)).collect();
        Grid { w, h, bits }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

fn neighbourhood(g: &Grid, all: bool) -> Grid {
    let mut bits = Vec::with_capacity(g.bits.len());
    for y in 0..g.h as i64 {
        for x in 0..g.w as i64 {
            let mut vals = Vec::with_capacity(9);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    vals.push(g.get(x + dx, y + dy));
                }
            }
            bits.push(if all {
                vals.iter().all(|v| *v)
            } else {
                vals.iter().any(|v| *v)
            });
        }
    }
    Grid {
        w: g.w,
        h: g.h,
        bits,
    }
}

pub fn oracle_erode(g: &Grid) -> Grid {
    neighbourhood(g, true)
}

pub fn oracle_dilate(g: &Grid) -> Grid {
    neighbourhood(g, false)
}

/// `(is_dilate, count)` steps applied in order.
pub fn oracle_schedule(g: &Grid, steps: &[(bool, u32)]) -> Grid {
    let mut cur = g.clone();
    for &(dilate, n) in steps {
        for _ in 0..n {
            cur = if dilate { oracle_dilate(&cur) } else { oracle_erode(&cur) };
        }
    }
    cur
}

/// 8-connected components by repeated min-label propagation.
/// Returns `(x0, y0, x1, y1, area)` per component in no particular order.
pub fn oracle_components(g: &Grid) -> Vec<(usize, usize, usize, usize, usize)> {
    let n = g.bits.len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for y in 0..g.h {
            for x in 0..g.w {
                let i = y * g.w + x;
                if !g.bits[i] {
                    continue;
                }
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if g.get(nx, ny) {
                            let j = ny as usize * g.w + nx as usize;
                            if label[j] < label[i] {
                                label[i] = label[j];
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut comps = std::collections::BTreeMap::new();
    for i in (0..n).filter(|&i| g.bits[i]) {
        let (x, y) = (i % g.w, i / g.w);
        let e = comps.entry(label[i]).or_insert((x, y, x, y, 0));
        e.0 = e.0.min(x);
        e.1 = e.1.min(y);
        e.2 = e.2.max(x);
        e.3 = e.3.max(y);
        e.4 += 1;
    }
    comps.into_values().collect()
}

/// Probability that a random positive outranks a random negative, ties ½.
pub fn pairwise_auc(samples: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = samples.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = samples.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Pixels of a filled ellipse via the floating-point implicit equation.
pub fn oracle_ellipse(cx: i64, cy: i64, rx: i64, ry: i64, w: i64, h: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let u = (x - cx) as f64 / rx as f64;
            let v = (y - cy) as f64 / ry as f64;
            if u * u + v * v <= 1.0 {
                out.push((x, y));
            }
        }
    }
    out
}
