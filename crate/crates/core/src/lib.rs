//! Stochastic subgradient solvers for the set median problem and its
//! probabilistic and kernelized enclosing-ball variants.

pub mod cli;
pub mod config;
pub mod coreset;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod probseb;
pub mod setmedian;

pub use config::{Mode, SolverConfig};
pub use error::{Error, Result};
pub use geometry::{max_distance, objective, set_metric, Point, PointSet, SetFamily};
pub use kernels::{solve_psvdd, ImplicitCenter, Kernel};
pub use probseb::{expected_cost, solve_pseb, ProbInstance};
pub use setmedian::{solve_set_median, Diagnostics, SolveResult};
