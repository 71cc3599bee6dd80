//! Points, point sets, families of point sets and the set median objective.
//!
//! The distance from a center `c` to a finite set `P` is the furthest-point
//! distance `m(c, P) = max_{p in P} ||c - p||`, and the set median objective
//! sums it over every member of a [`SetFamily`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Validating constructor: rejects empty and non-finite coordinate vectors.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some((axis, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { axis, value });
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sq_distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sq_distance(other).sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + factor * dir`
    pub fn axpy(&self, factor: f64, dir: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&dir.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    /// `(1 - t) * self + t * other`
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    /// Unit vector pointing from `to` towards `self`, or the zero vector when the two coincide.
    pub fn unit_direction_from(&self, to: &Point) -> Point {
        let diff = self.sub(to);
        let len = diff.norm();
        if len > 0.0 {
            diff.scale(1.0 / len)
        } else {
            Point::zeros(self.dim())
        }
    }

    fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// A finite, non-empty set of points sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point set"))?;
        let dim = first.dim();
        for p in &points {
            p.check_dim(dim)?;
        }
        Ok(PointSet { points })
    }

    /// Builds a set from raw coordinate rows, validating each one.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        PointSet::new(rows.into_iter().map(Point::new).collect::<Result<_>>()?)
    }

    pub fn singleton(p: Point) -> Self {
        PointSet { points: vec![p] }
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    fn canonical(&self) -> Vec<&Point> {
        let mut sorted: Vec<&Point> = self.points.iter().collect();
        sorted.sort_by(|a, b| a.lex_cmp(b));
        sorted.dedup_by(|a, b| a.lex_cmp(b) == Ordering::Equal);
        sorted
    }
}

/// The input family `{P_1, ..., P_N}` of the set median problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFamily {
    sets: Vec<PointSet>,
    dim: usize,
    max_set_size: usize,
}

impl SetFamily {
    pub fn new(sets: Vec<PointSet>) -> Result<Self> {
        let first = sets.first().ok_or(Error::Empty("set family"))?;
        let dim = first.dim();
        for s in &sets {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        let max_set_size = sets.iter().map(PointSet::len).max().unwrap_or(0);
        Ok(SetFamily {
            sets,
            dim,
            max_set_size,
        })
    }

    /// A family of singleton sets, one per point.
    pub fn singletons(points: Vec<Point>) -> Result<Self> {
        SetFamily::new(points.into_iter().map(PointSet::singleton).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sets `N`.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `n = max |P_i|`.
    pub fn max_set_size(&self) -> usize {
        self.max_set_size
    }

    pub fn sets(&self) -> &[PointSet] {
        &self.sets
    }

    pub fn set(&self, index: usize) -> &PointSet {
        &self.sets[index]
    }
}

/// Furthest-point distance from `c` to `set`, with the index of the attaining
/// point. Ties go to the lowest index.
pub fn max_distance(c: &Point, set: &PointSet) -> Result<(f64, usize)> {
    c.check_dim(set.dim())?;
    Ok(max_distance_unchecked(c, set))
}

pub(crate) fn max_distance_unchecked(c: &Point, set: &PointSet) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut witness = 0;
    for (i, p) in set.iter().enumerate() {
        let d = c.sq_distance(p);
        if d > best {
            best = d;
            witness = i;
        }
    }
    (best.sqrt(), witness)
}

/// Max-distance between two sets, patched to 0 when the sets are equal so
/// that it forms a metric on finite non-empty subsets of `R^d`.
pub fn set_metric(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (ca, cb) = (a.canonical(), b.canonical());
    if ca.len() == cb.len() && ca.iter().zip(&cb).all(|(x, y)| x.coords() == y.coords()) {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for x in a.iter() {
        for y in b.iter() {
            best = best.max(x.sq_distance(y));
        }
    }
    Ok(best.sqrt())
}

/// The set median cost `f(c) = sum_i m(c, P_i)`.
pub fn objective(c: &Point, family: &SetFamily) -> Result<f64> {
    c.check_dim(family.dim())?;
    Ok(family
        .sets()
        .iter()
        .map(|s| max_distance_unchecked(c, s).0)
        .sum())
}
