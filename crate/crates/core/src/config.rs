//! Solver configuration and the derived sizes used by the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which set of constants the solver runs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The constants of the correctness proof, all iterates kept as candidates.
    PaperFaithful,
    /// Smaller constants and a bounded candidate pool.
    Practical,
}

impl Mode {
    pub fn default_iteration_constant(self) -> f64 {
        match self {
            Mode::PaperFaithful => 68.0,
            Mode::Practical => 8.0,
        }
    }

    pub fn default_selection_constant(self) -> f64 {
        match self {
            Mode::PaperFaithful => 64.0,
            Mode::Practical => 16.0,
        }
    }
}

/// Failure probability allowed for the initial-center choice in the
/// correctness argument. Documentation only; never read at runtime.
pub const INITIAL_CENTER_FAILURE: f64 = 1.0 / 8.0;

/// Default number of thinned iterates kept per step-size run in practical mode.
pub const DEFAULT_CANDIDATE_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub eta: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Iteration constant: `l = ceil((c_iters / epsilon)^2)`.
    pub c_iters: f64,
    /// Selection constant for candidate selection and pSEB sample sizes.
    pub c_select: f64,
    pub candidate_budget: usize,
    /// Overrides `ceil(log2(1 / eta))` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    /// Overrides the `ceil(8k / epsilon)` rejection-sampling cap when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<usize>,
    /// Answer furthest-point queries from approximate enclosing balls built
    /// with this accuracy instead of scanning every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduce_sets: Option<f64>,
    /// Worker threads for independent repetitions; 0 runs sequentially.
    #[serde(default)]
    pub threads: usize,
}

impl SolverConfig {
    pub fn new(mode: Mode, epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            eta: 0.1,
            seed: 0,
            mode,
            c_iters: mode.default_iteration_constant(),
            c_select: mode.default_selection_constant(),
            candidate_budget: DEFAULT_CANDIDATE_BUDGET,
            repetitions: None,
            max_trials: None,
            reduce_sets: None,
            threads: 0,
        }
    }

    pub fn practical(epsilon: f64) -> Self {
        SolverConfig::new(Mode::Practical, epsilon)
    }

    pub fn paper_faithful(epsilon: f64) -> Self {
        SolverConfig::new(Mode::PaperFaithful, epsilon)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = Some(repetitions);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |name, value: f64| {
            if value > 0.0 && value < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must lie in (0, 1)",
                })
            }
        };
        open_unit("epsilon", self.epsilon)?;
        open_unit("eta", self.eta)?;
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                })
            }
        };
        positive("c_iters", self.c_iters)?;
        positive("c_select", self.c_select)?;
        positive("candidate_budget", self.candidate_budget as f64)?;
        if let Some(r) = self.repetitions {
            positive("repetitions", r as f64)?;
        }
        if let Some(t) = self.max_trials {
            positive("max_trials", t as f64)?;
        }
        if let Some(e) = self.reduce_sets {
            open_unit("reduce_sets", e)?;
        }
        Ok(())
    }

    /// Whether epsilon lies in `(0, 1/9)`, the range covered by the approximation guarantee.
    pub fn within_guarantee_range(&self) -> bool {
        self.epsilon > 0.0 && self.epsilon < 1.0 / 9.0
    }

    /// Iterations per step size, `ceil((c_iters / epsilon)^2)`.
    pub fn iterations(&self) -> usize {
        ceil_count((self.c_iters / self.epsilon).powi(2))
    }

    /// Number of step sizes tried, `ceil(log2(2 / epsilon^4)) + 1`.
    pub fn step_grid_len(&self) -> usize {
        ceil_count((2.0 / self.epsilon.powi(4)).log2()) + 1
    }

    /// Size of the sample used for the radius estimate, `ceil(1 / epsilon)`.
    pub fn radius_sample_size(&self) -> usize {
        ceil_count(1.0 / self.epsilon).max(1)
    }

    /// Sets sampled for candidate selection, `ceil(c_select / epsilon^2 * ln(8 |C|))`.
    pub fn selection_sample_size(&self, num_candidates: usize) -> usize {
        let c = num_candidates.max(1) as f64;
        ceil_count(self.c_select / self.epsilon.powi(2) * (8.0 * c).ln()).max(1)
    }

    /// Independent repetitions, `ceil(log2(1 / eta))` unless overridden.
    pub fn repetitions(&self) -> usize {
        self.repetitions
            .unwrap_or_else(|| ceil_count((1.0 / self.eta).log2()))
            .max(1)
    }

    /// Sample size of the probabilistic reduction, `ceil(c_select / epsilon^2 * ln(1 / epsilon))`.
    pub fn pseb_sample_size(&self) -> usize {
        ceil_count(self.c_select / self.epsilon.powi(2) * (1.0 / self.epsilon).ln()).max(1)
    }

    /// Rejection-sampling cap for `k` non-empty realizations, `ceil(8k / epsilon)` unless overridden.
    pub fn max_trials_for(&self, k: usize) -> usize {
        self.max_trials
            .unwrap_or_else(|| ceil_count(8.0 * k as f64 / self.epsilon))
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::practical(0.1)
    }
}

/// `ceil(x)` that ignores floating-point noise just above an integer, so
/// that e.g. `(8 / 0.1)^2` yields 6400 rather than 6401.
pub(crate) fn ceil_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}
