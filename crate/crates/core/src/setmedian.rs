//! Stochastic subgradient solver for the set median problem.
//!
//! The pipeline of a single repetition:
//!
//! 1. pick an initial center `c0` from a uniformly chosen input set and
//!    estimate the average optimal cost from `ceil(1/eps)` sampled sets;
//! 2. run fixed-step stochastic subgradient descent from `c0` for each step
//!    size on a doubling grid, collecting iterates as candidates;
//! 3. pick the candidate with the smallest cost on a uniform sample of sets.
//!
//! `ceil(log2(1/eta))` independent repetitions are run and the one with the
//! smallest cost wins.
//!
//! The pipeline is written against [`CenterSpace`], so the same code drives
//! explicit centers in `R^d` ([`EuclideanSpace`]), centers queried through
//! approximate enclosing balls ([`crate::coreset::BallSpace`]) and implicit
//! kernel-space centers ([`crate::kernels::KernelSpace`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{max_distance_unchecked, objective, Point, SetFamily};

/// A family of sets together with a center representation in which
/// furthest-point distances and subgradient steps can be computed.
pub trait CenterSpace: Sync {
    type Center: Clone + Send + Sync;

    /// Number of sets `N`.
    fn num_sets(&self) -> usize;

    /// The deterministic "arbitrary point" of a set used as a starting center.
    fn initial_center(&self, set: usize) -> Self::Center;

    /// `m(c, P_set)`.
    fn max_distance(&self, c: &Self::Center, set: usize) -> f64;

    /// One subgradient step of length `step` driven by `set`: moves `c` towards
    /// the furthest point of the set. A zero subgradient leaves `c` unchanged.
    fn descend(&self, c: &Self::Center, set: usize, step: f64) -> Self::Center;

    /// `sum_i w_i * m(c, P_i)` over `(set, weight)` pairs.
    fn weighted_cost(&self, c: &Self::Center, weights: &[(usize, f64)]) -> f64 {
        weights
            .iter()
            .map(|&(set, w)| w * self.max_distance(c, set))
            .sum()
    }

    /// The full objective `f(c)`.
    fn cost(&self, c: &Self::Center) -> f64 {
        (0..self.num_sets()).map(|i| self.max_distance(c, i)).sum()
    }
}

/// Explicit centers in `R^d` with exact furthest-point scans.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanSpace<'a> {
    family: &'a SetFamily,
}

impl<'a> EuclideanSpace<'a> {
    pub fn new(family: &'a SetFamily) -> Self {
        EuclideanSpace { family }
    }

    pub fn family(&self) -> &'a SetFamily {
        self.family
    }
}

impl CenterSpace for EuclideanSpace<'_> {
    type Center = Point;

    fn num_sets(&self) -> usize {
        self.family.len()
    }

    fn initial_center(&self, set: usize) -> Point {
        self.family.set(set).points()[0].clone()
    }

    fn max_distance(&self, c: &Point, set: usize) -> f64 {
        max_distance_unchecked(c, self.family.set(set)).0
    }

    fn descend(&self, c: &Point, set: usize, step: f64) -> Point {
        let s = self.family.set(set);
        let (_, witness) = max_distance_unchecked(c, s);
        let g = c.unit_direction_from(&s.points()[witness]);
        c.axpy(-step, &g)
    }
}

/// A subgradient of the objective (or of one sampled term of it).
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient {
    pub direction: Point,
    /// The sampled set for the stochastic variant, `None` for the exact sum.
    pub source_index: Option<usize>,
}

/// `g(c) = sum_j (c - p_j) / ||c - p_j||` with `p_j` the furthest point of
/// `P_j`; terms where `c = p_j` contribute zero.
pub fn exact_subgradient(c: &Point, family: &SetFamily) -> Result<Subgradient> {
    c.check_dim(family.dim())?;
    let mut direction = Point::zeros(c.dim());
    for set in family.sets() {
        let (_, w) = max_distance_unchecked(c, set);
        direction = direction.add(&c.unit_direction_from(&set.points()[w]));
    }
    Ok(Subgradient {
        direction,
        source_index: None,
    })
}

/// One uniformly sampled term of [`exact_subgradient`]; its expectation is `g(c) / N`.
pub fn stochastic_subgradient<R: Rng + ?Sized>(
    c: &Point,
    family: &SetFamily,
    rng: &mut R,
) -> Result<Subgradient> {
    c.check_dim(family.dim())?;
    let j = rng.random_range(0..family.len());
    let set = family.set(j);
    let (_, w) = max_distance_unchecked(c, set);
    Ok(Subgradient {
        direction: c.unit_direction_from(&set.points()[w]),
        source_index: Some(j),
    })
}

/// Uniformly chosen set index; the starting center is that set's first point.
pub fn pick_initial_set<R: Rng + ?Sized>(num_sets: usize, rng: &mut R) -> usize {
    rng.random_range(0..num_sets)
}

pub fn pick_initial_center<R: Rng + ?Sized>(family: &SetFamily, rng: &mut R) -> Point {
    let i = pick_initial_set(family.len(), rng);
    family.set(i).points()[0].clone()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate<C = Point> {
    /// `R~ = sum_{P in S} m(c0, P)` over the sample `S`.
    pub r_tilde: f64,
    pub c0: C,
    /// Set the initial center was taken from.
    pub initial_set: usize,
    pub sample_indices: Vec<usize>,
}

/// Initial center plus the radius estimate from `ceil(1/eps)` sets sampled
/// uniformly with repetition.
pub fn estimate_radius<R: Rng + ?Sized>(
    family: &SetFamily,
    cfg: &SolverConfig,
    rng: &mut R,
) -> RadiusEstimate {
    estimate_radius_in(&EuclideanSpace::new(family), cfg, rng)
}

pub fn estimate_radius_in<S: CenterSpace, R: Rng + ?Sized>(
    space: &S,
    cfg: &SolverConfig,
    rng: &mut R,
) -> RadiusEstimate<S::Center> {
    let n = space.num_sets();
    let initial_set = pick_initial_set(n, rng);
    let c0 = space.initial_center(initial_set);
    let sample_indices: Vec<usize> = (0..cfg.radius_sample_size())
        .map(|_| rng.random_range(0..n))
        .collect();
    let r_tilde = sample_indices
        .iter()
        .map(|&i| space.max_distance(&c0, i))
        .sum();
    RadiusEstimate {
        r_tilde,
        c0,
        initial_set,
        sample_indices,
    }
}

/// Which iterates of a descent run are kept as candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retention {
    /// Every iterate of every run, the starting center included each time.
    All,
    /// At most `budget` stride-thinned iterates per run plus its last iterate;
    /// the starting center is kept once.
    Thinned { budget: usize },
}

impl Retention {
    pub fn for_config(cfg: &SolverConfig) -> Self {
        match cfg.mode {
            Mode::PaperFaithful => Retention::All,
            Mode::Practical => Retention::Thinned {
                budget: cfg.candidate_budget,
            },
        }
    }
}

/// Accumulates candidate centers across descent runs.
#[derive(Debug, Clone)]
pub struct CandidateCollector<C> {
    retention: Retention,
    candidates: Vec<C>,
    stride: usize,
    run_len: usize,
    runs: usize,
}

impl<C: Clone> CandidateCollector<C> {
    pub fn new(retention: Retention) -> Self {
        CandidateCollector {
            retention,
            candidates: Vec::new(),
            stride: 1,
            run_len: 0,
            runs: 0,
        }
    }

    /// Announces a run of `iters` iterations.
    pub fn begin_run(&mut self, iters: usize) {
        self.run_len = iters;
        self.stride = match self.retention {
            Retention::All => 1,
            Retention::Thinned { budget } => iters.div_ceil(budget.max(1)).max(1),
        };
        self.runs += 1;
    }

    /// Offers iterate `i` of the current run (`i = 0` is the starting center).
    pub fn offer(&mut self, i: usize, c: &C) {
        let keep = match self.retention {
            Retention::All => true,
            Retention::Thinned { .. } => {
                if i == 0 {
                    self.runs == 1
                } else {
                    i.is_multiple_of(self.stride) || i == self.run_len
                }
            }
        };
        if keep {
            self.candidates.push(c.clone());
        }
    }

    /// Adds a candidate outside any run.
    pub fn push(&mut self, c: C) {
        self.candidates.push(c);
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[C] {
        &self.candidates
    }

    pub fn into_candidates(self) -> Vec<C> {
        self.candidates
    }
}

/// Fixed-step stochastic subgradient descent: `c_i = c_{i-1} - step * g~(c_{i-1})`
/// for `i = 1..=iters`. Every iterate, `c0` included, is offered to the
/// collector. Returns the last iterate.
pub fn sgd_run<S: CenterSpace, R: Rng + ?Sized>(
    space: &S,
    c0: &S::Center,
    step: f64,
    iters: usize,
    rng: &mut R,
    collector: &mut CandidateCollector<S::Center>,
) -> S::Center {
    let n = space.num_sets();
    collector.begin_run(iters);
    collector.offer(0, c0);
    let mut c = c0.clone();
    for i in 1..=iters {
        let j = rng.random_range(0..n);
        c = space.descend(&c, j, step);
        collector.offer(i, &c);
    }
    c
}

/// Runs [`sgd_run`] on explicit points and returns `c0, c1, ..., c_iters`.
pub fn sgd_iterates<R: Rng + ?Sized>(
    c0: &Point,
    family: &SetFamily,
    step: f64,
    iters: usize,
    rng: &mut R,
) -> Vec<Point> {
    let mut collector = CandidateCollector::new(Retention::All);
    sgd_run(&EuclideanSpace::new(family), c0, step, iters, rng, &mut collector);
    collector.into_candidates()
}

/// The plain subgradient method: a fixed-step run followed by the exact
/// argmin of `f` over all iterates. Returns that iterate and its cost.
pub fn subgradient_method<R: Rng + ?Sized>(
    c0: &Point,
    family: &SetFamily,
    step: f64,
    iters: usize,
    rng: &mut R,
) -> (Point, f64) {
    let space = EuclideanSpace::new(family);
    let iterates = sgd_iterates(c0, family, step, iters, rng);
    let mut best = (0, f64::INFINITY);
    for (i, c) in iterates.iter().enumerate() {
        let cost = space.cost(c);
        if cost < best.1 {
            best = (i, cost);
        }
    }
    (iterates[best.0].clone(), best.1)
}

/// Draws `sample_size` set indices uniformly with repetition and returns them
/// as `(set, multiplicity)` pairs in ascending set order.
pub fn sample_set_weights<R: Rng + ?Sized>(
    num_sets: usize,
    sample_size: usize,
    rng: &mut R,
) -> Vec<(usize, f64)> {
    let mut draws: Vec<usize> = (0..sample_size)
        .map(|_| rng.random_range(0..num_sets))
        .collect();
    draws.sort_unstable();
    let mut weights: Vec<(usize, f64)> = Vec::new();
    for j in draws {
        match weights.last_mut() {
            Some((last, w)) if *last == j => *w += 1.0,
            _ => weights.push((j, 1.0)),
        }
    }
    weights
}

/// Index of the candidate minimizing the cost on a uniform sample of
/// `sample_size` sets. Ties go to the lowest index.
pub fn select_candidate_index<S: CenterSpace, R: Rng + ?Sized>(
    space: &S,
    candidates: &[S::Center],
    sample_size: usize,
    rng: &mut R,
) -> usize {
    assert!(!candidates.is_empty(), "candidate list must be non-empty");
    let weights = sample_set_weights(space.num_sets(), sample_size, rng);
    let mut best = (0, f64::INFINITY);
    for (i, c) in candidates.iter().enumerate() {
        let cost = space.weighted_cost(c, &weights);
        if cost < best.1 {
            best = (i, cost);
        }
    }
    best.0
}

pub fn select_best_candidate<R: Rng + ?Sized>(
    candidates: &[Point],
    family: &SetFamily,
    sample_size: usize,
    rng: &mut R,
) -> Result<Point> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    for c in candidates {
        c.check_dim(family.dim())?;
    }
    let i = select_candidate_index(&EuclideanSpace::new(family), candidates, sample_size, rng);
    Ok(candidates[i].clone())
}

/// Random streams of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Phase {
    Init = 1,
    Descent = 2,
    Selection = 3,
    Sampling = 4,
}

/// Generator for `phase` of repetition `repetition`, seeded with
/// `seed XOR repetition` and one ChaCha stream per phase.
pub fn phase_rng(seed: u64, repetition: usize, phase: Phase) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ repetition as u64);
    rng.set_stream(phase as u64);
    rng
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations_total: usize,
    pub step_sizes_tried: usize,
    pub candidates_generated: usize,
    pub selection_sample_size: usize,
    pub repetitions: usize,
    pub winning_repetition: usize,
    /// Index of the selected center in the winning repetition's candidate list.
    pub selected_candidate: usize,
    pub radius_estimate: f64,
    pub repetition_costs: Vec<f64>,
    /// 1 for sampled locations, 2 for sampled realizations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presence_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled_sets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_sets_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<C = Point> {
    pub center: C,
    pub cost_estimate: f64,
    pub diagnostics: Diagnostics,
}

/// Outcome of one independent repetition.
#[derive(Debug, Clone)]
pub struct RepetitionOutcome<C> {
    pub center: C,
    pub cost: f64,
    pub radius_estimate: f64,
    pub step_sizes: Vec<f64>,
    pub iterations: usize,
    pub candidates: usize,
    pub selection_sample_size: usize,
    pub selected_candidate: usize,
}

/// Step sizes `s_j = 2^(j-1) * eps^3 * R~ / sqrt(l + 1)` for `j = 0..grid_len`.
pub fn step_sizes(cfg: &SolverConfig, r_tilde: f64) -> Vec<f64> {
    let l = cfg.iterations() as f64;
    (0..cfg.step_grid_len())
        .map(|j| 2f64.powi(j as i32 - 1) * cfg.epsilon.powi(3) * r_tilde / (l + 1.0).sqrt())
        .collect()
}

/// One full repetition of the pipeline, returning the selected candidate and its cost `f`.
pub fn run_repetition<S: CenterSpace>(
    space: &S,
    cfg: &SolverConfig,
    repetition: usize,
) -> RepetitionOutcome<S::Center> {
    let mut init_rng = phase_rng(cfg.seed, repetition, Phase::Init);
    let est = estimate_radius_in(space, cfg, &mut init_rng);
    if est.r_tilde == 0.0 {
        let cost = space.cost(&est.c0);
        return RepetitionOutcome {
            center: est.c0,
            cost,
            radius_estimate: 0.0,
            step_sizes: Vec::new(),
            iterations: 0,
            candidates: 1,
            selection_sample_size: 0,
            selected_candidate: 0,
        };
    }

    let iters = cfg.iterations();
    let steps = step_sizes(cfg, est.r_tilde);
    let mut descent_rng = phase_rng(cfg.seed, repetition, Phase::Descent);
    let mut collector = CandidateCollector::new(Retention::for_config(cfg));
    for &s in &steps {
        sgd_run(space, &est.c0, s, iters, &mut descent_rng, &mut collector);
    }
    let candidates = collector.into_candidates();

    let sample_size = cfg.selection_sample_size(candidates.len());
    let mut selection_rng = phase_rng(cfg.seed, repetition, Phase::Selection);
    let selected = select_candidate_index(space, &candidates, sample_size, &mut selection_rng);
    let num_candidates = candidates.len();
    let center = candidates.into_iter().nth(selected).expect("selected index in range");
    let cost = space.cost(&center);
    RepetitionOutcome {
        center,
        cost,
        radius_estimate: est.r_tilde,
        iterations: iters * steps.len(),
        step_sizes: steps,
        candidates: num_candidates,
        selection_sample_size: sample_size,
        selected_candidate: selected,
    }
}

/// Runs all repetitions (in parallel when `cfg.threads > 0`) and returns them in order.
pub fn run_repetitions<S: CenterSpace>(
    space: &S,
    cfg: &SolverConfig,
) -> Result<Vec<RepetitionOutcome<S::Center>>> {
    cfg.validate()?;
    let reps = cfg.repetitions();
    if cfg.threads == 0 || reps == 1 {
        return Ok((0..reps).map(|r| run_repetition(space, cfg, r)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool construction");
    Ok(pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| run_repetition(space, cfg, r))
            .collect()
    }))
}

/// The complete amplified pipeline on an arbitrary [`CenterSpace`]. The
/// returned cost is the space's own objective at the winning center.
pub fn solve_in_space<S: CenterSpace>(
    space: &S,
    cfg: &SolverConfig,
) -> Result<SolveResult<S::Center>> {
    let outcomes = run_repetitions(space, cfg)?;
    let mut winner = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.cost < outcomes[winner].cost {
            winner = i;
        }
    }
    let diagnostics = Diagnostics {
        iterations_total: outcomes.iter().map(|o| o.iterations).sum(),
        step_sizes_tried: outcomes.iter().map(|o| o.step_sizes.len()).sum(),
        candidates_generated: outcomes.iter().map(|o| o.candidates).sum(),
        selection_sample_size: outcomes[winner].selection_sample_size,
        repetitions: outcomes.len(),
        winning_repetition: winner,
        selected_candidate: outcomes[winner].selected_candidate,
        radius_estimate: outcomes[winner].radius_estimate,
        repetition_costs: outcomes.iter().map(|o| o.cost).collect(),
        ..Diagnostics::default()
    };
    let best = outcomes.into_iter().nth(winner).expect("at least one repetition");
    Ok(SolveResult {
        center: best.center,
        cost_estimate: best.cost,
        diagnostics,
    })
}

/// `(1 + eps)`-approximate set median. With `cfg.reduce_sets` the solver
/// queries approximate enclosing balls instead of the sets themselves; the
/// reported cost is always the exact objective at the returned center.
pub fn solve_set_median(family: &SetFamily, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let mut result = match cfg.reduce_sets {
        None => solve_in_space(&EuclideanSpace::new(family), cfg)?,
        Some(eps_meb) => {
            let space = crate::coreset::BallSpace::new(family, eps_meb)?;
            let mut r = solve_in_space(&space, cfg)?;
            r.diagnostics.reduced_sets_eps = Some(eps_meb);
            r
        }
    };
    result.cost_estimate = objective(&result.center, family)?;
    Ok(result)
}
