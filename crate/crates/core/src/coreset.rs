//! Approximate minimum enclosing balls and the furthest-point query they answer.
//!
//! For a ball `B(center, r)` enclosing `P`, `||c - center|| + r` is an upper
//! bound on `m(c, P)`, and for the (approximately) smallest enclosing ball it
//! is within a factor `sqrt(2) * (1 + eps_meb)` of it. Replacing every
//! furthest-point scan by this query makes distance evaluations independent
//! of the set sizes.

use serde::{Deserialize, Serialize};

use crate::config::ceil_count;
use crate::error::{Error, Result};
use crate::geometry::{max_distance_unchecked, Point, PointSet, SetFamily};
use crate::setmedian::CenterSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &Point, slack: f64) -> bool {
        self.center.distance(p) <= self.radius + slack
    }
}

/// Badoiu-Clarkson iteration: starting from the first point, move the center
/// `1/(i+1)` of the way towards the current furthest point, for
/// `ceil(1/eps_meb^2)` rounds. The radius is the final furthest distance, so
/// the ball always encloses `P`.
pub fn approx_meb(set: &PointSet, eps_meb: f64) -> Result<Ball> {
    if !(eps_meb > 0.0 && eps_meb < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps_meb",
            value: eps_meb,
            reason: "must lie in (0, 1)",
        });
    }
    let rounds = ceil_count(1.0 / (eps_meb * eps_meb));
    let mut center = set.points()[0].clone();
    for i in 1..=rounds {
        let (d, far) = max_distance_unchecked(&center, set);
        if d == 0.0 {
            break;
        }
        center = center.lerp(&set.points()[far], 1.0 / (i as f64 + 1.0));
    }
    let (radius, _) = max_distance_unchecked(&center, set);
    Ok(Ball { center, radius })
}

/// Upper bound `||c - center|| + radius` on the furthest distance from `c`
/// to the set the ball was built from.
pub fn approx_furthest(ball: &Ball, c: &Point) -> f64 {
    c.distance(&ball.center) + ball.radius
}

/// Set median instance in which every set is replaced by its approximate
/// enclosing ball. A subgradient of `||c - center|| + r` is the unit vector
/// from the ball center to `c`, so steps move `c` towards the center.
#[derive(Debug, Clone)]
pub struct BallSpace {
    balls: Vec<Ball>,
    first_points: Vec<Point>,
    eps_meb: f64,
}

impl BallSpace {
    pub fn new(family: &SetFamily, eps_meb: f64) -> Result<Self> {
        let balls = family
            .sets()
            .iter()
            .map(|s| approx_meb(s, eps_meb))
            .collect::<Result<Vec<_>>>()?;
        let first_points = family.sets().iter().map(|s| s.points()[0].clone()).collect();
        Ok(BallSpace {
            balls,
            first_points,
            eps_meb,
        })
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn eps_meb(&self) -> f64 {
        self.eps_meb
    }
}

impl CenterSpace for BallSpace {
    type Center = Point;

    fn num_sets(&self) -> usize {
        self.balls.len()
    }

    fn initial_center(&self, set: usize) -> Point {
        self.first_points[set].clone()
    }

    fn max_distance(&self, c: &Point, set: usize) -> f64 {
        approx_furthest(&self.balls[set], c)
    }

    fn descend(&self, c: &Point, set: usize, step: f64) -> Point {
        // zero when c is the ball center, which is a valid subgradient there
        let dir = c.unit_direction_from(&self.balls[set].center);
        c.axpy(-step, &dir)
    }
}
