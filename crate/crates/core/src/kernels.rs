//! Kernels and implicit feature-space centers.
//!
//! A center in the feature space of a kernel `K` is stored as an affine
//! combination `c = sum_w gamma_w phi(q_w)` of mapped input locations.
//! Distances to mapped points follow from kernel evaluations alone:
//!
//! ```text
//! ||c - phi(q)||^2 = sum_w sum_w' gamma_w gamma_w' K(q_w, q_w') + K(q, q) - 2 sum_w gamma_w K(q_w, q)
//! ```
//!
//! The double sum is cached and updated incrementally, so a distance costs
//! one kernel evaluation per term.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::geometry::{Point, SetFamily};
use crate::probseb::{annotate, for_each_realization, sample_family, ProbInstance};
use crate::setmedian::{solve_in_space, CenterSpace, SolveResult};

/// Squared distances at or below this fraction of `||c||^2 + K(q, q)` are
/// treated as zero; the cancellation in the distance formula leaves noise of
/// that order when `c` coincides with `phi(q)`.
pub const ZERO_DISTANCE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Rbf { sigma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { degree, offset } => {
                if degree == 0 {
                    return Err(Error::InvalidParameter {
                        name: "poly_degree",
                        value: 0.0,
                        reason: "must be a positive integer",
                    });
                }
                if !(offset >= 0.0 && offset.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "poly_offset",
                        value: offset,
                        reason: "must be non-negative for a positive semidefinite kernel",
                    });
                }
                Ok(())
            }
            Kernel::Rbf { sigma } => {
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "rbf_sigma",
                        value: sigma,
                        reason: "must be positive",
                    })
                }
            }
        }
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        match *self {
            Kernel::Linear => x.dot(y),
            Kernel::Polynomial { degree, offset } => (x.dot(y) + offset).powi(degree as i32),
            Kernel::Rbf { sigma } => (-x.sq_distance(y) / (2.0 * sigma * sigma)).exp(),
        }
    }
}

pub fn kernel_eval(kernel: &Kernel, x: &Point, y: &Point) -> Result<f64> {
    y.check_dim(x.dim())?;
    Ok(kernel.eval(x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub gamma: f64,
    pub loc: Point,
}

/// A feature-space center `sum_w gamma_w phi(q_w)` with its cached squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitCenter {
    terms: Vec<Term>,
    sq_norm: f64,
}

impl ImplicitCenter {
    /// `phi(q)` itself.
    pub fn at(q: Point, kernel: &Kernel) -> Self {
        let sq_norm = kernel.eval(&q, &q);
        ImplicitCenter {
            terms: vec![Term { gamma: 1.0, loc: q }],
            sq_norm,
        }
    }

    /// Builds a center from explicit terms, computing the norm from scratch.
    pub fn from_terms(terms: Vec<Term>, kernel: &Kernel) -> Result<Self> {
        let dim = terms.first().map(|t| t.loc.dim()).ok_or(Error::Empty("implicit center"))?;
        for t in &terms {
            t.loc.check_dim(dim)?;
        }
        let mut c = ImplicitCenter { terms, sq_norm: 0.0 };
        c.sq_norm = c.recompute_sq_norm(kernel);
        Ok(c)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].loc.dim()
    }

    pub fn cached_sq_norm(&self) -> f64 {
        self.sq_norm
    }

    pub fn gamma_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.gamma).sum()
    }

    /// The double sum `sum_w sum_w' gamma_w gamma_w' K(q_w, q_w')`.
    pub fn recompute_sq_norm(&self, kernel: &Kernel) -> f64 {
        let mut total = 0.0;
        for a in &self.terms {
            for b in &self.terms {
                total += a.gamma * b.gamma * kernel.eval(&a.loc, &b.loc);
            }
        }
        total
    }

    /// `sum_w gamma_w K(q_w, q)`, i.e. `<c, phi(q)>`.
    pub fn cross(&self, q: &Point, kernel: &Kernel) -> f64 {
        self.terms.iter().map(|t| t.gamma * kernel.eval(&t.loc, q)).sum()
    }

    /// `sum_w gamma_w q_w`; the center itself under the linear kernel.
    pub fn explicit(&self) -> Point {
        self.terms
            .iter()
            .fold(Point::zeros(self.dim()), |acc, t| acc.axpy(t.gamma, &t.loc))
    }

    fn sq_distance_from_parts(&self, q_sq_norm: f64, cross: f64) -> f64 {
        let sq = self.sq_norm + q_sq_norm - 2.0 * cross;
        if sq <= ZERO_DISTANCE_REL * (self.sq_norm.abs() + q_sq_norm.abs()) {
            0.0
        } else {
            sq
        }
    }

    /// `||c - phi(q)||` together with the cross term `<c, phi(q)>`.
    pub fn distance_and_cross(&self, q: &Point, kernel: &Kernel) -> (f64, f64) {
        let cross = self.cross(q, kernel);
        let sq = self.sq_distance_from_parts(kernel.eval(q, q), cross);
        (sq.sqrt(), cross)
    }

    fn updated(&self, q: &Point, q_sq_norm: f64, step: f64, dist: f64, cross: f64) -> Self {
        let beta = step / dist;
        let keep = 1.0 - beta;
        let mut terms: Vec<Term> = Vec::with_capacity(self.terms.len() + 1);
        let mut merged = false;
        for t in &self.terms {
            let mut gamma = keep * t.gamma;
            if !merged && t.loc == *q {
                gamma += beta;
                merged = true;
            }
            if gamma != 0.0 {
                terms.push(Term {
                    gamma,
                    loc: t.loc.clone(),
                });
            }
        }
        if !merged {
            terms.push(Term {
                gamma: beta,
                loc: q.clone(),
            });
        }
        let sq_norm = keep * keep * self.sq_norm + beta * beta * q_sq_norm + 2.0 * beta * keep * cross;
        ImplicitCenter { terms, sq_norm }
    }
}

pub fn implicit_distance(c: &ImplicitCenter, q: &Point, kernel: &Kernel) -> Result<f64> {
    q.check_dim(c.dim())?;
    Ok(c.distance_and_cross(q, kernel).0)
}

/// `c - step * (c - phi(q)) / ||c - phi(q)||`, expressed as
/// `(1 - beta) c + beta phi(q)` with `beta = step / ||c - phi(q)||`.
/// A repeated location has its coefficient merged instead of appended.
pub fn implicit_update(c: &ImplicitCenter, q: &Point, step: f64, kernel: &Kernel) -> Result<ImplicitCenter> {
    q.check_dim(c.dim())?;
    let (dist, cross) = c.distance_and_cross(q, kernel);
    if dist == 0.0 {
        return Err(Error::ZeroDistance);
    }
    Ok(c.updated(q, kernel.eval(q, q), step, dist, cross))
}

/// A set family whose points are mapped into the feature space of a kernel.
/// Points are interned so that each distinct location is stored once.
#[derive(Debug, Clone)]
pub struct KernelSpace {
    kernel: Kernel,
    pool: Vec<Point>,
    pool_sq_norms: Vec<f64>,
    sets: Vec<Vec<usize>>,
}

impl KernelSpace {
    pub fn new(family: &SetFamily, kernel: Kernel) -> Result<Self> {
        kernel.validate()?;
        let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut pool = Vec::new();
        let sets = family
            .sets()
            .iter()
            .map(|s| {
                s.iter()
                    .map(|p| {
                        let key: Vec<u64> = p.coords().iter().map(|x| x.to_bits()).collect();
                        *ids.entry(key).or_insert_with(|| {
                            pool.push(p.clone());
                            pool.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let pool_sq_norms = pool.iter().map(|p| kernel.eval(p, p)).collect();
        Ok(KernelSpace {
            kernel,
            pool,
            pool_sq_norms,
            sets,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Number of distinct locations.
    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    /// Furthest member of `set` from `c`: `(distance, cross term, pool id)`.
    fn furthest(&self, c: &ImplicitCenter, set: usize) -> (f64, f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0);
        for &id in &self.sets[set] {
            let cross = c.cross(&self.pool[id], &self.kernel);
            let sq = c.sq_distance_from_parts(self.pool_sq_norms[id], cross);
            if sq > best.0 {
                best = (sq, cross, id);
            }
        }
        (best.0.sqrt(), best.1, best.2)
    }

    fn cached_cost(&self, c: &ImplicitCenter, weights: impl Iterator<Item = (usize, f64)>) -> f64 {
        let mut sq_cache = vec![f64::NAN; self.pool.len()];
        let mut total = 0.0;
        for (set, w) in weights {
            let mut far: f64 = 0.0;
            for &id in &self.sets[set] {
                if sq_cache[id].is_nan() {
                    let cross = c.cross(&self.pool[id], &self.kernel);
                    sq_cache[id] = c.sq_distance_from_parts(self.pool_sq_norms[id], cross);
                }
                far = far.max(sq_cache[id]);
            }
            total += w * far.sqrt();
        }
        total
    }
}

impl CenterSpace for KernelSpace {
    type Center = ImplicitCenter;

    fn num_sets(&self) -> usize {
        self.sets.len()
    }

    fn initial_center(&self, set: usize) -> ImplicitCenter {
        ImplicitCenter::at(self.pool[self.sets[set][0]].clone(), &self.kernel)
    }

    fn max_distance(&self, c: &ImplicitCenter, set: usize) -> f64 {
        self.furthest(c, set).0
    }

    fn descend(&self, c: &ImplicitCenter, set: usize, step: f64) -> ImplicitCenter {
        let (dist, cross, id) = self.furthest(c, set);
        if dist == 0.0 {
            return c.clone();
        }
        c.updated(&self.pool[id], self.pool_sq_norms[id], step, dist, cross)
    }

    fn weighted_cost(&self, c: &ImplicitCenter, weights: &[(usize, f64)]) -> f64 {
        self.cached_cost(c, weights.iter().copied())
    }

    fn cost(&self, c: &ImplicitCenter) -> f64 {
        self.cached_cost(c, (0..self.sets.len()).map(|i| (i, 1.0)))
    }
}

/// Exact `E[m(c, phi(X))]` by enumeration of all realizations.
pub fn kernel_expected_cost(c: &ImplicitCenter, inst: &ProbInstance, kernel: &Kernel, cap: usize) -> Result<f64> {
    let mut total = 0.0;
    for_each_realization(inst, cap, |prob, points| {
        if prob > 0.0 {
            let far = points
                .iter()
                .map(|p| c.distance_and_cross(p, kernel).0)
                .fold(0.0, f64::max);
            total += prob * far;
        }
    })?;
    Ok(total)
}

/// `(1 + eps)`-approximate probabilistic SVDD: the probabilistic smallest
/// enclosing ball pipeline run on implicit centers in the kernel's feature
/// space. The cost estimate is scaled as in [`crate::probseb::solve_pseb`].
pub fn solve_psvdd(inst: &ProbInstance, kernel: Kernel, cfg: &SolverConfig) -> Result<SolveResult<ImplicitCenter>> {
    kernel.validate()?;
    let sampled = sample_family(inst, cfg)?;
    let space = KernelSpace::new(&sampled.family, kernel)?;
    let mut result = solve_in_space(&space, cfg)?;
    result.cost_estimate *= sampled.cost_scale;
    annotate(&mut result.diagnostics, &sampled);
    Ok(result)
}
