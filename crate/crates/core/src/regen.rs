//! Finite-resolution shifted β-stable regenerative sets on `[0,1]`.
//!
//! A set is a visit set at horizon `N` rescaled by `1/N`; its minimum plays
//! the role of the shift `V` with `P(V ≤ x) = x^{1−β}`.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::renewal::{common_time_in, ReturnLaw, VisitSampler, VisitSet};

pub const MIN_RESOLUTION: u64 = 1000;
pub const DEFAULT_RESOLUTION: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegenSetApprox {
    pub resolution: u64,
    points: Vec<f64>,
}

impl RegenSetApprox {
    pub fn from_visits(visits: &VisitSet) -> Self {
        let n = visits.n as f64;
        RegenSetApprox {
            resolution: visits.n,
            points: visits.times().iter().map(|&t| t as f64 / n).collect(),
        }
    }

    pub fn from_points(resolution: u64, mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("regenerative set approximation must be nonempty"));
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("points must lie in [0,1]"));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(RegenSetApprox { resolution, points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// The shift, i.e. the leftmost point.
    pub fn shift(&self) -> f64 {
        self.points[0]
    }

    /// Whether a point lies in the open interval `(a, b)`.
    pub fn hits_interval(&self, a: f64, b: f64) -> Result<bool> {
        if !(a < b) {
            return Err(invalid(format!("empty interval ({a}, {b})")));
        }
        Ok(self.hits_open(a, b))
    }

    pub(crate) fn hits_open(&self, a: f64, b: f64) -> bool {
        let i = self.points.partition_point(|&p| p <= a);
        i < self.points.len() && self.points[i] < b
    }

    /// Closed `[a, b]`, queried as `(a − ε, b + ε)` with `ε = 1/(2N)`.
    pub fn hits_closed(&self, a: f64, b: f64) -> Result<bool> {
        if !(a <= b) {
            return Err(invalid(format!("empty interval [{a}, {b}]")));
        }
        let eps = 0.5 / self.resolution as f64;
        Ok(self.hits_open(a - eps, b + eps))
    }

    /// Multiplies every point by `factor`, dropping points that leave `[0,1]`.
    /// Returns `None` when nothing remains.
    pub fn rescaled(&self, factor: f64) -> Option<Self> {
        let points: Vec<f64> = self.points.iter().map(|p| p * factor).filter(|p| (0.0..=1.0).contains(p)).collect();
        (!points.is_empty()).then_some(RegenSetApprox { resolution: self.resolution, points })
    }

    /// Sorted decimal list, one point per line.
    pub fn write_lines<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(w, "{p}")?;
        }
        Ok(())
    }
}

/// Reusable sampler at fixed `(β, N)`.
#[derive(Debug, Clone)]
pub struct RegenSampler {
    visits: VisitSampler,
}

impl RegenSampler {
    pub fn new(beta: f64, resolution: u64) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(invalid(format!("resolution must be >= {MIN_RESOLUTION}, got {resolution}")));
        }
        Ok(RegenSampler { visits: VisitSampler::new(ReturnLaw::power(beta)?, resolution)? })
    }

    pub fn beta(&self) -> f64 {
        self.visits.law().beta()
    }

    pub fn resolution(&self) -> u64 {
        self.visits.horizon()
    }

    pub fn visits(&self) -> &VisitSampler {
        &self.visits
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RegenSetApprox {
        RegenSetApprox::from_visits(&self.visits.sample(rng))
    }
}

pub fn sample_regen_set<R: Rng + ?Sized>(beta: f64, resolution: u64, rng: &mut R) -> Result<RegenSetApprox> {
    Ok(RegenSampler::new(beta, resolution)?.sample(rng))
}

/// Whether two independent sets at resolution `N` share a grid point.
pub fn share_grid_point<R: Rng + ?Sized>(sampler: &RegenSampler, rng: &mut R) -> bool {
    let x = sampler.visits.sample(rng);
    let y = sampler.visits.sample(rng);
    common_time_in(x.times(), y.times(), -0.5, x.n as f64 + 0.5)
}

/// Probability that two independent sets intersect at resolution `N`;
/// vanishes like `N^{2β−1}` for `β < 1/2`.
pub fn disjointness_mc<R: Rng + ?Sized>(beta: f64, resolution: u64, reps: u64, rng: &mut R) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidParameter(format!("disjointness requires beta in (0, 0.5), got {beta}")));
    }
    if reps < 1 {
        return Err(invalid("need at least one replicate"));
    }
    let sampler = RegenSampler::new(beta, resolution)?;
    let hits = (0..reps).filter(|_| share_grid_point(&sampler, rng)).count();
    Ok(hits as f64 / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_hits() {
        let s = RegenSetApprox::from_points(1000, vec![0.5]).unwrap();
        assert!(s.hits_interval(0.4, 0.6).unwrap());
        assert!(!s.hits_interval(0.6, 0.7).unwrap());
        assert!(!s.hits_interval(0.5, 0.7).unwrap());
        assert!(s.hits_closed(0.5, 0.7).unwrap());
        assert!(s.hits_interval(0.7, 0.6).is_err());
    }

    #[test]
    fn small_resolution_rejected() {
        let mut r = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_regen_set(0.3, 999, &mut r).is_err());
        assert!(disjointness_mc(0.5, 1000, 10, &mut r).is_err());
    }

    #[test]
    fn sampled_sets_are_well_formed() {
        let mut r = ChaCha8Rng::seed_from_u64(11);
        let sampler = RegenSampler::new(0.3, 10_000).unwrap();
        for _ in 0..500 {
            let s = sampler.sample(&mut r);
            let p = s.points();
            assert!(!p.is_empty());
            assert!(p.windows(2).all(|w| w[0] < w[1]));
            assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
            assert!(s.hits_closed(0.0, 1.0).unwrap());
            assert_eq!(s.shift(), p[0]);
        }
    }

    #[test]
    fn disjointness_is_reproducible() {
        let a = disjointness_mc(0.3, 1000, 2000, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = disjointness_mc(0.3, 1000, 2000, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn rescaling_keeps_order_and_range(
            pts in proptest::collection::vec(0.0f64..=1.0, 1..40),
            factor in 0.0f64..3.0,
        ) {
            let s = RegenSetApprox::from_points(1000, pts).unwrap();
            if let Some(t) = s.rescaled(factor) {
                prop_assert!(t.points().windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(t.points().iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }
}
