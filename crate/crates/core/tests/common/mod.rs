//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use setmedian::probseb::{DiscreteDistribution, Entry};
use setmedian::{Point, PointSet, ProbInstance, SetFamily};

pub fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Point {
    Point::new((0..dim).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// `sets` sets of `size` points each, coordinates uniform in `[0, 10)`.
pub fn random_family(rng: &mut ChaCha8Rng, sets: usize, size: usize, dim: usize) -> SetFamily {
    SetFamily::new(
        (0..sets)
            .map(|_| PointSet::new((0..size).map(|_| random_point(rng, dim, 0.0, 10.0)).collect()).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Like [`random_family`] but with set sizes drawn from `1..=max_size`.
pub fn ragged_family(rng: &mut ChaCha8Rng, sets: usize, max_size: usize, dim: usize) -> SetFamily {
    SetFamily::new(
        (0..sets)
            .map(|_| {
                let size = rng.random_range(1..=max_size);
                PointSet::new((0..size).map(|_| random_point(rng, dim, -5.0, 5.0)).collect()).unwrap()
            })
            .collect(),
    )
    .unwrap()
}

/// `n` distributions with `z` entries each in `[0, 10)^dim`. With `absent`
/// set, the last entry is the absent outcome with that probability and the
/// present entries share the rest; otherwise all `z` entries are locations.
pub fn random_prob(rng: &mut ChaCha8Rng, n: usize, z: usize, dim: usize, absent: Option<f64>) -> ProbInstance {
    let dists = (0..n)
        .map(|i| {
            let present = if absent.is_some() { z - 1 } else { z };
            let w: Vec<f64> = (0..present).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            let mass = 1.0 - absent.unwrap_or(0.0);
            let mut entries: Vec<Entry> = w
                .iter()
                .map(|x| Entry {
                    loc: Some(random_point(rng, dim, 0.0, 10.0)),
                    p: mass * x / total,
                })
                .collect();
            if let Some(a) = absent {
                entries.push(Entry { loc: None, p: a });
            }
            let sum: f64 = entries.iter().map(|e| e.p).sum();
            entries[0].p += 1.0 - sum;
            DiscreteDistribution::new(entries, i).unwrap()
        })
        .collect();
    ProbInstance::new(dim, dists).unwrap()
}

/// An instance whose total presence mass is `mass`, spread evenly over the
/// distributions.
pub fn low_mass_prob(rng: &mut ChaCha8Rng, n: usize, z: usize, dim: usize, mass: f64) -> ProbInstance {
    random_prob(rng, n, z, dim, Some(1.0 - mass / n as f64))
}
