//! Brute-force reference optima for desk-scale instances.
//!
//! Nothing here calls into the solver's distance or objective code; the
//! oracles keep their own raw-slice arithmetic so that they can serve as an
//! independent check of it.

use rand::{seq::IndexedRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, SetFamily};
use crate::probseb::ProbInstance;

/// Number of multi-start descents, the centroid included.
pub const ORACLE_STARTS: usize = 32;

const ORACLE_SEED: u64 = 0x5eed_0ac1e;

const GOLDEN_ITERS: usize = 80;
const POLISH_ROUNDS: usize = 40;
const REFINE_LEVELS: usize = 3;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct RawFamily {
    sets: Vec<Vec<Vec<f64>>>,
}

impl RawFamily {
    fn furthest<'a>(&'a self, c: &[f64], set: usize) -> (f64, &'a [f64]) {
        let mut best = (-1.0, &self.sets[set][0][..]);
        for p in &self.sets[set] {
            let d = euclid(c, p);
            if d > best.0 {
                best = (d, p);
            }
        }
        best
    }

    fn cost(&self, c: &[f64]) -> f64 {
        (0..self.sets.len()).map(|i| self.furthest(c, i).0).sum()
    }

    /// Normalized exact subgradient, or `None` at a point with zero subgradient.
    fn descent_direction(&self, c: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; c.len()];
        for i in 0..self.sets.len() {
            let (d, p) = self.furthest(c, i);
            if d > 0.0 {
                for (gk, (ck, pk)) in g.iter_mut().zip(c.iter().zip(p)) {
                    *gk += (ck - pk) / d;
                }
            }
        }
        let len = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        (len > 0.0).then(|| g.into_iter().map(|x| x / len).collect())
    }

    /// Subgradient descent with steps `radius / sqrt(t)`; returns the best iterate.
    fn descend(&self, start: Vec<f64>, radius: f64, iters: usize) -> (Vec<f64>, f64) {
        let mut best_cost = self.cost(&start);
        let mut best = start.clone();
        let mut c = start;
        for t in 1..=iters {
            let Some(dir) = self.descent_direction(&c) else {
                break;
            };
            let step = radius / (t as f64).sqrt();
            for (ck, gk) in c.iter_mut().zip(&dir) {
                *ck -= step * gk;
            }
            let cost = self.cost(&c);
            if cost < best_cost {
                best_cost = cost;
                best.clone_from(&c);
            }
        }
        (best, best_cost)
    }
}

/// Minimizes `g` on `[lo, hi]` by golden-section search.
fn golden_section(mut lo: f64, mut hi: f64, mut g: impl FnMut(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn bounding_box(points: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Reference optimum of the set median problem.
///
/// 32 starts (31 input points drawn at random plus the centroid of all
/// points) each run `budget` exact-subgradient iterations with steps
/// `R_box / sqrt(t)`, `R_box` the bounding-box diameter. The best result is
/// polished by restarted descents with a halving radius and finally by
/// coordinate-wise golden-section search. Returns `(center, f(center))`.
pub fn oracle_set_median(family: &SetFamily, budget: usize) -> (Point, f64) {
    let dim = family.dim();
    let raw = RawFamily {
        sets: family
            .sets()
            .iter()
            .map(|s| s.iter().map(|p| p.coords().to_vec()).collect())
            .collect(),
    };
    let all: Vec<&[f64]> = raw.sets.iter().flatten().map(Vec::as_slice).collect();
    let (lo, hi) = bounding_box(&all, dim);
    let r_box = euclid(&lo, &hi);

    let centroid: Vec<f64> = (0..dim)
        .map(|k| all.iter().map(|p| p[k]).sum::<f64>() / all.len() as f64)
        .collect();
    if r_box == 0.0 {
        let cost = raw.cost(&centroid);
        return (Point::new(centroid).expect("finite centroid"), cost);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut starts: Vec<Vec<f64>> = all
        .choose_multiple(&mut rng, ORACLE_STARTS - 1)
        .map(|p| p.to_vec())
        .collect();
    starts.push(centroid);

    let runs: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|s| raw.descend(s, r_box, budget))
        .collect();
    let (mut best, mut best_cost) = runs
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one start");

    let polish_iters = (budget / 4).max(50);
    let mut radius = r_box / 4.0;
    for _ in 0..POLISH_ROUNDS {
        let (c, cost) = raw.descend(best.clone(), radius, polish_iters);
        if cost < best_cost {
            best = c;
            best_cost = cost;
        }
        radius /= 2.0;
    }

    let mut half_width = r_box / 100.0;
    for _ in 0..20 {
        for k in 0..dim {
            let mut probe = best.clone();
            let (x, cost) = golden_section(best[k] - half_width, best[k] + half_width, |x| {
                probe[k] = x;
                raw.cost(&probe)
            });
            if cost < best_cost {
                best[k] = x;
                best_cost = cost;
            }
        }
        half_width /= 4.0;
    }

    (Point::new(best).expect("finite oracle center"), best_cost)
}

/// Realizations with positive probability, as `(probability, points)`.
fn realizations(inst: &ProbInstance, cap: usize) -> Result<Vec<(f64, Vec<Vec<f64>>)>> {
    let size: f64 = inst
        .distributions()
        .iter()
        .map(|d| d.entries().len() as f64)
        .product();
    if size > cap as f64 {
        return Err(Error::EnumerationCap { size, cap });
    }
    fn recurse(
        inst: &ProbInstance,
        i: usize,
        prob: f64,
        acc: &mut Vec<Vec<f64>>,
        out: &mut Vec<(f64, Vec<Vec<f64>>)>,
    ) {
        if prob == 0.0 {
            return;
        }
        if i == inst.len() {
            out.push((prob, acc.clone()));
            return;
        }
        for e in inst.distributions()[i].entries() {
            match &e.loc {
                Some(p) => {
                    acc.push(p.coords().to_vec());
                    recurse(inst, i + 1, prob * e.p, acc, out);
                    acc.pop();
                }
                None => recurse(inst, i + 1, prob * e.p, acc, out),
            }
        }
    }
    let mut out = Vec::new();
    recurse(inst, 0, 1.0, &mut Vec::new(), &mut out);
    Ok(out)
}

fn expected(c: &[f64], reals: &[(f64, Vec<Vec<f64>>)]) -> f64 {
    reals
        .iter()
        .map(|(p, pts)| p * pts.iter().map(|q| euclid(c, q)).fold(0.0, f64::max))
        .sum()
}

fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Evaluates every point of the product grid and returns the first minimizer.
fn grid_min(axes: &[Vec<f64>], reals: &[(f64, Vec<Vec<f64>>)]) -> (Vec<f64>, f64) {
    let points: Vec<Vec<f64>> = match axes {
        [x] => x.iter().map(|&a| vec![a]).collect(),
        [x, y] => x
            .iter()
            .flat_map(|&a| y.iter().map(move |&b| vec![a, b]))
            .collect(),
        _ => unreachable!("grid oracle is limited to d <= 2"),
    };
    let costs: Vec<f64> = points.par_iter().map(|c| expected(c, reals)).collect();
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    (points[best].clone(), costs[best])
}

/// Reference optimum of the probabilistic smallest enclosing ball for `d <= 2`.
///
/// Grid search with spacing `grid_step` over the bounding box of all
/// locations padded by its diameter, followed by three refinement levels,
/// each a grid ten times finer spanning two coarse steps around the
/// incumbent. The expected cost is computed exactly by enumeration.
pub fn oracle_pseb(inst: &ProbInstance, grid_step: f64) -> Result<(Point, f64)> {
    let dim = inst.dim();
    if dim > 2 {
        return Err(Error::GridDimension(dim));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "grid_step",
            value: grid_step,
            reason: "must be positive",
        });
    }
    let reals = realizations(inst, crate::probseb::DEFAULT_ENUMERATION_CAP)?;
    let locs: Vec<&[f64]> = inst
        .distributions()
        .iter()
        .flat_map(|d| d.entries())
        .filter_map(|e| e.loc.as_ref().map(|p| p.coords()))
        .collect();
    if locs.is_empty() {
        return Ok((Point::zeros(dim), 0.0));
    }
    let (lo, hi) = bounding_box(&locs, dim);
    let pad = euclid(&lo, &hi);
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|k| grid_axis(lo[k] - pad, hi[k] + pad, grid_step))
        .collect();
    let (mut best, mut best_cost) = grid_min(&axes, &reals);

    let mut step = grid_step;
    for _ in 0..REFINE_LEVELS {
        let fine = step / 10.0;
        let axes: Vec<Vec<f64>> = best
            .iter()
            .map(|&x| (-20..=20).map(|i| x + i as f64 * fine).collect())
            .collect();
        let (c, cost) = grid_min(&axes, &reals);
        if cost < best_cost {
            best = c;
            best_cost = cost;
        }
        step = fine;
    }
    Ok((Point::new(best).expect("finite grid point"), best_cost))
}
