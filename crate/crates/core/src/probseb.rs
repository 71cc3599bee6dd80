//! Probabilistic smallest enclosing ball.
//!
//! Each input point is an independent discrete distribution over locations
//! in `R^d` plus the "absent" outcome. The goal is a center minimizing the
//! expected furthest distance to a random realization, where an empty
//! realization costs 0.
//!
//! The solver reduces to a set median instance built from samples:
//!
//! * if the total probability mass of present locations is at most `eps`,
//!   sample `k` locations proportionally to their probability (the expected
//!   cost is then within a `1 - eps` factor of a weighted 1-median);
//! * otherwise sample `k` non-empty realizations by rejection.

use rand::Rng;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet, SetFamily};
use crate::setmedian::{phase_rng, solve_set_median, Phase, SolveResult};

/// Tolerance on the probability sum of a distribution.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Default cap on `z^n` for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    /// `None` is the absent outcome.
    pub loc: Option<Point>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    entries: Vec<Entry>,
}

impl DiscreteDistribution {
    /// Validates probabilities and merges repeated absent entries into one.
    /// `index` only labels errors.
    pub fn new(entries: Vec<Entry>, index: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("distribution"));
        }
        let mut merged: Vec<Entry> = Vec::with_capacity(entries.len());
        let mut absent: Option<usize> = None;
        let mut sum = 0.0;
        for e in entries {
            if !(0.0..=1.0).contains(&e.p) {
                return Err(Error::ProbabilityRange { index, value: e.p });
            }
            sum += e.p;
            match (&e.loc, absent) {
                (None, Some(k)) => merged[k].p += e.p,
                (None, None) => {
                    absent = Some(merged.len());
                    merged.push(e);
                }
                (Some(_), _) => merged.push(e),
            }
        }
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::ProbabilitySum { index, sum });
        }
        Ok(DiscreteDistribution { entries: merged })
    }

    /// A distribution that always realizes at `p`.
    pub fn certain(p: Point) -> Self {
        DiscreteDistribution {
            entries: vec![Entry { loc: Some(p), p: 1.0 }],
        }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Probability of the absent outcome.
    pub fn absent_probability(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.loc.is_none())
            .map(|e| e.p)
            .sum()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&Point> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for e in &self.entries {
            acc += e.p;
            if u < acc {
                return e.loc.as_ref();
            }
        }
        // rounding left u above the cumulative sum: take the last entry with mass
        self.entries
            .iter()
            .rev()
            .find(|e| e.p > 0.0)
            .and_then(|e| e.loc.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbInstance {
    distributions: Vec<DiscreteDistribution>,
    dim: usize,
}

impl ProbInstance {
    pub fn new(dim: usize, distributions: Vec<DiscreteDistribution>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if distributions.is_empty() {
            return Err(Error::Empty("instance"));
        }
        for d in &distributions {
            for e in d.entries() {
                if let Some(p) = &e.loc {
                    p.check_dim(dim)?;
                }
            }
        }
        Ok(ProbInstance { distributions, dim })
    }

    /// Every distribution concentrated on one point.
    pub fn deterministic(points: Vec<Point>) -> Result<Self> {
        let dim = points.first().map(Point::dim).ok_or(Error::Empty("instance"))?;
        ProbInstance::new(dim, points.into_iter().map(DiscreteDistribution::certain).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }

    pub fn distributions(&self) -> &[DiscreteDistribution] {
        &self.distributions
    }

    /// Present locations with their probabilities, in input order.
    pub fn locations(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.distributions
            .iter()
            .flat_map(|d| d.entries().iter())
            .filter_map(|e| e.loc.as_ref().map(|p| (p, e.p)))
    }

    /// Probability that a realization contains at least one point.
    pub fn nonempty_probability(&self) -> f64 {
        1.0 - self
            .distributions
            .iter()
            .map(DiscreteDistribution::absent_probability)
            .product::<f64>()
    }

    /// Number of index tuples `prod_i |D_i|` an exact enumeration visits.
    pub fn realization_count(&self) -> f64 {
        self.distributions
            .iter()
            .map(|d| d.entries().len() as f64)
            .product()
    }
}

/// Sum of the probabilities of all present locations over all distributions.
pub fn presence_mass(inst: &ProbInstance) -> f64 {
    inst.locations().map(|(_, p)| p).sum()
}

/// Single-pass weighted sampler keeping one item with probability
/// proportional to its weight. Each item receives the key `u^(1/w)` and the
/// largest key wins; keys are compared in log space.
#[derive(Debug, Clone)]
pub struct WeightedReservoir<T> {
    best: Option<(f64, T)>,
}

impl<T> Default for WeightedReservoir<T> {
    fn default() -> Self {
        WeightedReservoir { best: None }
    }
}

impl<T> WeightedReservoir<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn offer<R: Rng + ?Sized>(&mut self, item: T, weight: f64, rng: &mut R) {
        if weight <= 0.0 {
            return;
        }
        // 1 - u lies in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        let key = u.ln() / weight;
        if self.best.as_ref().is_none_or(|(k, _)| key > *k) {
            self.best = Some((key, item));
        }
    }

    pub fn sample(&self) -> Option<&T> {
        self.best.as_ref().map(|(_, t)| t)
    }

    pub fn into_sample(self) -> Option<T> {
        self.best.map(|(_, t)| t)
    }
}

/// `k` independent draws of a present location, each with probability
/// `p_ij / presence_mass`, from `k` weighted reservoirs fed in one pass.
/// Returned as a family of `k` singletons.
pub fn sample_locations_weighted<R: Rng + ?Sized>(
    inst: &ProbInstance,
    k: usize,
    rng: &mut R,
) -> Result<SetFamily> {
    if k == 0 {
        return Err(Error::Empty("sample"));
    }
    if presence_mass(inst) <= 0.0 {
        return Err(Error::NoPresentLocation);
    }
    let mut reservoirs: Vec<WeightedReservoir<&Point>> =
        (0..k).map(|_| WeightedReservoir::new()).collect();
    for (loc, p) in inst.locations() {
        for r in reservoirs.iter_mut() {
            r.offer(loc, p, rng);
        }
    }
    let points = reservoirs
        .into_iter()
        .map(|r| r.into_sample().expect("positive mass").clone())
        .collect();
    SetFamily::singletons(points)
}

#[derive(Debug, Clone)]
pub struct RealizationSample {
    pub family: SetFamily,
    pub trials: usize,
}

/// Draws full realizations and keeps the non-empty ones until `k` are
/// collected. Fails after `max_trials` draws.
pub fn sample_nonempty_realizations<R: Rng + ?Sized>(
    inst: &ProbInstance,
    k: usize,
    max_trials: usize,
    rng: &mut R,
) -> Result<RealizationSample> {
    if k == 0 {
        return Err(Error::Empty("sample"));
    }
    if inst.nonempty_probability() <= 0.0 {
        return Err(Error::NoPresentLocation);
    }
    let mut sets = Vec::with_capacity(k);
    let mut trials = 0;
    while sets.len() < k {
        if trials == max_trials {
            return Err(Error::TrialsExhausted {
                trials,
                collected: sets.len(),
                requested: k,
            });
        }
        trials += 1;
        let points: Vec<Point> = inst
            .distributions()
            .iter()
            .filter_map(|d| d.draw(rng).cloned())
            .collect();
        if !points.is_empty() {
            sets.push(PointSet::new(points)?);
        }
    }
    Ok(RealizationSample {
        family: SetFamily::new(sets)?,
        trials,
    })
}

/// Calls `visit(probability, points)` for every index tuple of the instance.
pub fn for_each_realization<F>(inst: &ProbInstance, cap: usize, mut visit: F) -> Result<()>
where
    F: FnMut(f64, &[&Point]),
{
    let size = inst.realization_count();
    if size > cap as f64 {
        return Err(Error::EnumerationCap { size, cap });
    }
    let dists = inst.distributions();
    let mut idx = vec![0usize; dists.len()];
    let mut points: Vec<&Point> = Vec::with_capacity(dists.len());
    loop {
        let mut prob = 1.0;
        points.clear();
        for (d, &j) in dists.iter().zip(&idx) {
            let e = &d.entries()[j];
            prob *= e.p;
            if let Some(p) = &e.loc {
                points.push(p);
            }
        }
        visit(prob, &points);

        let mut axis = 0;
        loop {
            if axis == idx.len() {
                return Ok(());
            }
            idx[axis] += 1;
            if idx[axis] < dists[axis].entries().len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Exact `E[m(c, X)]` by enumerating every realization, with `m(c, {}) = 0`.
pub fn expected_cost(c: &Point, inst: &ProbInstance) -> Result<f64> {
    expected_cost_capped(c, inst, DEFAULT_ENUMERATION_CAP)
}

pub fn expected_cost_capped(c: &Point, inst: &ProbInstance, cap: usize) -> Result<f64> {
    c.check_dim(inst.dim())?;
    let mut total = 0.0;
    for_each_realization(inst, cap, |prob, points| {
        if prob > 0.0 {
            let far = points
                .iter()
                .map(|p| c.sq_distance(p))
                .fold(0.0, f64::max)
                .sqrt();
            total += prob * far;
        }
    })?;
    Ok(total)
}

/// `sum_ij p_ij ||c - q_ij||`, the weighted 1-median surrogate that brackets
/// the expected cost when the presence mass is small.
pub fn weighted_median_cost(c: &Point, inst: &ProbInstance) -> Result<f64> {
    c.check_dim(inst.dim())?;
    Ok(inst.locations().map(|(q, p)| p * c.distance(q)).sum())
}

/// The set median instance sampled from a probabilistic instance.
#[derive(Debug, Clone)]
pub struct SampledFamily {
    pub family: SetFamily,
    /// 1 for sampled locations, 2 for sampled realizations.
    pub case: u8,
    pub presence_mass: f64,
    pub trials: usize,
    /// Multiplies the average per-set cost of the sample into an estimate of
    /// the expected cost.
    pub cost_scale: f64,
}

/// Builds the sampled set median instance with `k = cfg.pseb_sample_size()`.
pub fn sample_family(inst: &ProbInstance, cfg: &SolverConfig) -> Result<SampledFamily> {
    cfg.validate()?;
    let mass = presence_mass(inst);
    if mass <= 0.0 {
        return Err(Error::NoPresentLocation);
    }
    let k = cfg.pseb_sample_size();
    let mut rng = phase_rng(cfg.seed, 0, Phase::Sampling);
    if mass <= cfg.epsilon {
        let family = sample_locations_weighted(inst, k, &mut rng)?;
        Ok(SampledFamily {
            family,
            case: 1,
            presence_mass: mass,
            trials: k,
            cost_scale: mass / k as f64,
        })
    } else {
        let s = sample_nonempty_realizations(inst, k, cfg.max_trials_for(k), &mut rng)?;
        Ok(SampledFamily {
            family: s.family,
            case: 2,
            presence_mass: mass,
            trials: s.trials,
            cost_scale: inst.nonempty_probability() / k as f64,
        })
    }
}

/// `(1 + eps)`-approximate probabilistic smallest enclosing ball center.
///
/// The reported cost is an estimate of the expected cost from the sample:
/// in case 1 the mass-weighted average distance to the sampled locations, in
/// case 2 the average furthest distance over sampled realizations times the
/// probability of a non-empty realization.
pub fn solve_pseb(inst: &ProbInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    let sampled = sample_family(inst, cfg)?;
    let mut result = solve_set_median(&sampled.family, cfg)?;
    result.cost_estimate *= sampled.cost_scale;
    annotate(&mut result.diagnostics, &sampled);
    Ok(result)
}

pub(crate) fn annotate(diag: &mut crate::setmedian::Diagnostics, sampled: &SampledFamily) {
    diag.case = Some(sampled.case);
    diag.presence_mass = Some(sampled.presence_mass);
    diag.sampled_sets = Some(sampled.family.len());
    diag.sampling_trials = Some(sampled.trials);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn entry(loc: Option<&[f64]>, p: f64) -> Entry {
        Entry { loc: loc.map(pt), p }
    }

    fn dist(entries: Vec<Entry>) -> DiscreteDistribution {
        DiscreteDistribution::new(entries, 0).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(matches!(
            DiscreteDistribution::new(vec![entry(Some(&[0.0]), 0.5)], 3),
            Err(Error::ProbabilitySum { index: 3, .. })
        ));
        assert!(matches!(
            DiscreteDistribution::new(vec![entry(Some(&[0.0]), 1.5), entry(None, -0.5)], 0),
            Err(Error::ProbabilityRange { .. })
        ));
        let d = dist(vec![entry(None, 0.2), entry(Some(&[1.0]), 0.5), entry(None, 0.3)]);
        assert_eq!(d.entries().len(), 2);
        assert!((d.absent_probability() - 0.5).abs() < 1e-15);
        assert!(ProbInstance::new(2, vec![dist(vec![entry(Some(&[1.0]), 1.0)])]).is_err());
    }

    #[test]
    fn presence_mass_examples() {
        let all_absent = ProbInstance::new(2, vec![dist(vec![entry(None, 1.0)])]).unwrap();
        assert_eq!(presence_mass(&all_absent), 0.0);
        let two = ProbInstance::deterministic(vec![pt(&[0.0, 0.0]), pt(&[1.0, 1.0])]).unwrap();
        assert_eq!(presence_mass(&two), 2.0);
        let one = ProbInstance::new(2, vec![dist(vec![entry(Some(&[0.0, 0.0]), 0.3), entry(None, 0.7)])]).unwrap();
        assert_eq!(presence_mass(&one), 0.3);
    }

    #[test]
    fn weighted_sampling_single_location() {
        let inst = ProbInstance::new(1, vec![
            dist(vec![entry(Some(&[4.0]), 0.05), entry(None, 0.95)]),
            dist(vec![entry(None, 1.0)]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = sample_locations_weighted(&inst, 25, &mut rng).unwrap();
        assert_eq!(f.len(), 25);
        assert!(f.sets().iter().all(|s| s.points() == [pt(&[4.0])]));
    }

    #[test]
    fn weighted_sampling_rejects_empty_instances() {
        let inst = ProbInstance::new(1, vec![dist(vec![entry(None, 1.0)])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_locations_weighted(&inst, 3, &mut rng).unwrap_err(), Error::NoPresentLocation);
        assert_eq!(
            sample_nonempty_realizations(&inst, 3, 100, &mut rng).unwrap_err(),
            Error::NoPresentLocation
        );
    }

    #[test]
    fn weighted_sampling_two_to_one() {
        let inst = ProbInstance::new(1, vec![
            dist(vec![entry(Some(&[0.0]), 0.2), entry(None, 0.8)]),
            dist(vec![entry(Some(&[1.0]), 0.1), entry(None, 0.9)]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 100_000;
        let f = sample_locations_weighted(&inst, draws, &mut rng).unwrap();
        let zeros = f.sets().iter().filter(|s| s.points()[0] == pt(&[0.0])).count();
        let expected = draws as f64 * 2.0 / 3.0;
        let sd = (draws as f64 * 2.0 / 9.0).sqrt();
        assert!((zeros as f64 - expected).abs() < 4.0 * sd, "{zeros}");
    }

    #[test]
    fn realization_sampling_deterministic_instance() {
        let pts = vec![pt(&[0.0, 1.0]), pt(&[2.0, 3.0]), pt(&[-1.0, 0.0])];
        let inst = ProbInstance::deterministic(pts.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_nonempty_realizations(&inst, 5, 5, &mut rng).unwrap();
        assert_eq!(s.trials, 5);
        assert!(s.family.sets().iter().all(|set| set.points() == pts.as_slice()));
    }

    #[test]
    fn realization_sampling_exhausts_trials() {
        let inst = ProbInstance::new(1, vec![dist(vec![entry(Some(&[0.0]), 0.01), entry(None, 0.99)])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = sample_nonempty_realizations(&inst, 100, 10, &mut rng).unwrap_err();
        assert!(matches!(err, Error::TrialsExhausted { trials: 10, requested: 100, .. }));
    }

    #[test]
    fn realization_sampling_geometric_trials() {
        let inst = ProbInstance::new(1, vec![dist(vec![entry(Some(&[0.0]), 0.5), entry(None, 0.5)])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = 100_000;
        let s = sample_nonempty_realizations(&inst, k, usize::MAX, &mut rng).unwrap();
        let per = s.trials as f64 / k as f64;
        // trials - k is negative binomial with sd sqrt(k * 0.5 / 0.25)
        assert!((per - 2.0).abs() < 4.0 * (2.0 * k as f64).sqrt() / k as f64, "{per}");
    }

    #[test]
    fn expected_cost_examples() {
        let pts = vec![pt(&[0.0, 0.0]), pt(&[3.0, 4.0]), pt(&[1.0, 1.0])];
        let inst = ProbInstance::deterministic(pts).unwrap();
        assert_eq!(expected_cost(&pt(&[0.0, 0.0]), &inst).unwrap(), 5.0);

        let inst = ProbInstance::new(2, vec![dist(vec![entry(Some(&[0.0, 0.0]), 0.5), entry(Some(&[2.0, 0.0]), 0.5)])]).unwrap();
        assert_eq!(expected_cost(&pt(&[1.0, 0.0]), &inst).unwrap(), 1.0);

        let inst = ProbInstance::new(2, vec![dist(vec![entry(None, 1.0)])]).unwrap();
        assert_eq!(expected_cost(&pt(&[5.0, 5.0]), &inst).unwrap(), 0.0);
    }

    #[test]
    fn expected_cost_two_independent_points() {
        // hand enumeration: {a}: 0.5*0.5, {b}: 0.5*0.5, {a,b}: 0.25, {}: 0.25
        let inst = ProbInstance::new(1, vec![
            dist(vec![entry(Some(&[1.0]), 0.5), entry(None, 0.5)]),
            dist(vec![entry(Some(&[-3.0]), 0.5), entry(None, 0.5)]),
        ])
        .unwrap();
        let c = pt(&[0.0]);
        let expected = 0.25 * 1.0 + 0.25 * 3.0 + 0.25 * 3.0;
        assert!((expected_cost(&c, &inst).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn enumeration_cap() {
        let d = dist(vec![entry(Some(&[0.0]), 0.5), entry(Some(&[1.0]), 0.5)]);
        let inst = ProbInstance::new(1, vec![d; 10]).unwrap();
        assert!(matches!(
            expected_cost_capped(&pt(&[0.0]), &inst, 1000),
            Err(Error::EnumerationCap { cap: 1000, .. })
        ));
        assert!(expected_cost_capped(&pt(&[0.0]), &inst, 1024).is_ok());
    }

    #[test]
    fn realization_weights_sum_to_one() {
        let inst = ProbInstance::new(1, vec![
            dist(vec![entry(Some(&[1.0]), 0.2), entry(None, 0.3), entry(Some(&[2.0]), 0.5)]),
            dist(vec![entry(Some(&[0.0]), 0.7), entry(None, 0.3)]),
            dist(vec![entry(Some(&[5.0]), 1.0)]),
        ])
        .unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for_each_realization(&inst, 100, |p, _| {
            total += p;
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 6);
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solve_single_certain_point() {
        let p = pt(&[2.0, -1.0]);
        let inst = ProbInstance::deterministic(vec![p.clone()]).unwrap();
        let r = solve_pseb(&inst, &SolverConfig::practical(0.1)).unwrap();
        assert_eq!(r.center, p);
        assert_eq!(r.cost_estimate, 0.0);
        assert_eq!(r.diagnostics.case, Some(2));
    }

    #[test]
    fn solve_takes_location_path_for_small_mass() {
        let inst = ProbInstance::new(2, vec![
            dist(vec![entry(Some(&[0.0, 0.0]), 0.03), entry(None, 0.97)]),
            dist(vec![entry(Some(&[1.0, 0.0]), 0.02), entry(None, 0.98)]),
        ])
        .unwrap();
        let r = solve_pseb(&inst, &SolverConfig::practical(0.1)).unwrap();
        assert_eq!(r.diagnostics.case, Some(1));
        assert!((r.diagnostics.presence_mass.unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn solve_unit_circle() {
        let pts = (0..8)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 8.0;
                pt(&[t.cos(), t.sin()])
            })
            .collect();
        let inst = ProbInstance::deterministic(pts).unwrap();
        let cfg = SolverConfig::practical(0.1).with_seed(5);
        let r = solve_pseb(&inst, &cfg).unwrap();
        let cost = expected_cost(&r.center, &inst).unwrap();
        assert!(cost <= 1.1, "{cost}");
        assert_eq!(r.diagnostics.case, Some(2));
    }

    #[test]
    fn solve_rejects_all_absent() {
        let inst = ProbInstance::new(2, vec![dist(vec![entry(None, 1.0)])]).unwrap();
        assert_eq!(solve_pseb(&inst, &SolverConfig::default()).unwrap_err(), Error::NoPresentLocation);
    }
}
