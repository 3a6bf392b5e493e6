//! The limiting random sup-measure `𝓜(B) = ⋁_j −ln Γ_j · 1{B ∩ R̄_j ≠ ∅}` on
//! finite interval families, and the closed-form laws of the associated
//! time-changed Gumbel extremal process.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::regen::{RegenSampler, RegenSetApprox};
use crate::stats::{ks_two_sample, Sample};

pub const DEFAULT_J_MAX: usize = 10_000;

/// A subinterval of `[0,1]`; open unless `closed` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::checked(lo, hi, false)
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::checked(lo, hi, true)
    }

    fn checked(lo: f64, hi: f64, closed: bool) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(invalid(format!("interval ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")));
        }
        Ok(Interval { lo, hi, closed })
    }

    pub fn hit_by(&self, set: &RegenSetApprox) -> bool {
        if self.closed {
            set.hits_closed(self.lo, self.hi).unwrap_or(false)
        } else {
            set.hits_open(self.lo, self.hi)
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn overlaps(&self, other: &Interval) -> bool {
        let (a, b) = if self.lo <= other.lo { (self, other) } else { (other, self) };
        b.lo < a.hi || (b.lo == a.hi && a.closed && b.closed)
    }
}

/// Pairwise disjoint intervals, sorted by left endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalFamily(Vec<Interval>);

impl IntervalFamily {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(invalid("interval family must be nonempty"));
        }
        for i in &intervals {
            Interval::checked(i.lo, i.hi, i.closed)?;
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if intervals.windows(2).any(|w| w[0].overlaps(&w[1])) {
            return Err(invalid("intervals must be pairwise disjoint"));
        }
        Ok(IntervalFamily(intervals))
    }

    pub fn single(interval: Interval) -> Self {
        IntervalFamily(vec![interval])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<Interval>> for IntervalFamily {
    type Error = crate::Error;

    fn try_from(v: Vec<Interval>) -> Result<Self> {
        IntervalFamily::new(v)
    }
}

impl From<IntervalFamily> for Vec<Interval> {
    fn from(f: IntervalFamily) -> Self {
        f.0
    }
}

/// A sup-measure value: either `−∞` or a finite real.
///
/// Only `max` is defined between values; `−∞` is never turned into a float
/// implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupValue {
    NegInf,
    Finite(f64),
}

impl SupValue {
    pub fn max(self, other: SupValue) -> SupValue {
        match (self, other) {
            (SupValue::NegInf, v) | (v, SupValue::NegInf) => v,
            (SupValue::Finite(a), SupValue::Finite(b)) => SupValue::Finite(a.max(b)),
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            SupValue::Finite(v) => Some(v),
            SupValue::NegInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, SupValue::Finite(_))
    }
}

impl PartialOrd for SupValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (SupValue::NegInf, SupValue::NegInf) => Some(Ordering::Equal),
            (SupValue::NegInf, _) => Some(Ordering::Less),
            (_, SupValue::NegInf) => Some(Ordering::Greater),
            (SupValue::Finite(a), SupValue::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for SupValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupValue::NegInf => f.write_str("-inf"),
            SupValue::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for SupValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SupValue::NegInf => s.serialize_str("-inf"),
            SupValue::Finite(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSupMeasureSample {
    /// `−ln Γ_j`, strictly decreasing.
    pub levels: Vec<f64>,
    #[serde(skip)]
    pub sets: Vec<RegenSetApprox>,
    /// `𝓜(I_i)` per interval.
    pub values: Vec<SupValue>,
    /// Index `j` (0-based) of the first set hitting each interval.
    pub first_hit: Vec<Option<usize>>,
    /// Set when `J_max` levels were drawn before every interval was hit.
    pub truncated: bool,
}

impl LimitSupMeasureSample {
    /// `𝓜` on the union of a subset of the family's intervals.
    pub fn union_value(&self, indices: &[usize]) -> SupValue {
        indices.iter().fold(SupValue::NegInf, |acc, &i| acc.max(self.values[i]))
    }
}

/// Sampler for `𝓜` at fixed `(β, N, J_max)`.
#[derive(Debug, Clone)]
pub struct LimitMeasureSampler {
    sets: RegenSampler,
    j_max: usize,
}

impl LimitMeasureSampler {
    pub fn new(beta: f64, resolution: u64, j_max: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(invalid(format!("limit sup-measure requires beta in (0, 0.5), got {beta}")));
        }
        if j_max < 1 {
            return Err(invalid("J_max must be >= 1"));
        }
        Ok(LimitMeasureSampler { sets: RegenSampler::new(beta, resolution)?, j_max })
    }

    pub fn beta(&self) -> f64 {
        self.sets.beta()
    }

    pub fn resolution(&self) -> u64 {
        self.sets.resolution()
    }

    /// Draws levels and sets in order until every interval has been hit.
    /// The first hit determines the value because levels decrease.
    pub fn sample<R: Rng + ?Sized>(&self, intervals: &IntervalFamily, rng: &mut R) -> LimitSupMeasureSample {
        let k = intervals.len();
        let mut values = vec![SupValue::NegInf; k];
        let mut first_hit = vec![None; k];
        let mut levels = Vec::new();
        let mut sets = Vec::new();
        let mut remaining = k;
        let mut gamma = 0.0;
        while remaining > 0 && levels.len() < self.j_max {
            let e: f64 = rng.sample(Exp1);
            gamma += e;
            let level = -gamma.ln();
            let set = self.sets.sample(rng);
            let j = levels.len();
            for (i, iv) in intervals.intervals().iter().enumerate() {
                if first_hit[i].is_none() && iv.hit_by(&set) {
                    first_hit[i] = Some(j);
                    values[i] = SupValue::Finite(level);
                    remaining -= 1;
                }
            }
            levels.push(level);
            sets.push(set);
        }
        LimitSupMeasureSample { levels, sets, values, first_hit, truncated: remaining > 0 }
    }
}

pub fn sample_limit_measure<R: Rng + ?Sized>(
    beta: f64,
    intervals: &IntervalFamily,
    resolution: u64,
    j_max: usize,
    rng: &mut R,
) -> Result<LimitSupMeasureSample> {
    Ok(LimitMeasureSampler::new(beta, resolution, j_max)?.sample(intervals, rng))
}

/// `P(𝓜([0,t]) ≤ x) = exp(−t^{1−β} e^{−x})`.
pub fn gumbel_marginal_cdf(t: f64, x: f64, beta: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid(format!("t must lie in (0,1], got {t}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0,1), got {beta}")));
    }
    Ok((-t.powf(1.0 - beta) * (-x).exp()).exp())
}

/// Joint CDF of `(𝓜([0,t_1]), …, 𝓜([0,t_k]))` at nondecreasing thresholds:
/// `exp{−Σ (t_i^{1−β} − t_{i−1}^{1−β}) e^{−x_i}}`.
pub fn extremal_fdd_cdf(times: &[f64], xs: &[f64], beta: f64) -> Result<f64> {
    if times.is_empty() || times.len() != xs.len() {
        return Err(invalid("times and thresholds must be nonempty and of equal length"));
    }
    if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("times must be positive and strictly increasing"));
    }
    if xs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("thresholds must be nondecreasing"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0,1), got {beta}")));
    }
    let mut prev = 0.0;
    let mut exponent = 0.0;
    for (&t, &x) in times.iter().zip(xs) {
        let s = t.powf(1.0 - beta);
        exponent += (s - prev) * (-x).exp();
        prev = s;
    }
    Ok((-exponent).exp())
}

fn finite_values<R: Rng + ?Sized>(
    sampler: &LimitMeasureSampler,
    family: &IntervalFamily,
    samples: usize,
    shift: f64,
    rng: &mut R,
) -> Result<Sample> {
    let vals: Vec<f64> = (0..samples)
        .filter_map(|_| sampler.sample(family, rng).values[0].finite())
        .map(|v| v + shift)
        .collect();
    Sample::new(vals)
}

/// Two-sample KS distance between `𝓜([0, a·t0])` and `𝓜([0, t0]) + (1−β) ln a`.
pub fn self_affinity_check<R: Rng + ?Sized>(
    beta: f64,
    a: f64,
    t0: f64,
    samples: usize,
    resolution: u64,
    rng: &mut R,
) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0 && t0 > 0.0 && t0 <= 1.0) {
        return Err(invalid(format!("self-affinity needs a in (0,1], t0 in (0,1], got a={a}, t0={t0}")));
    }
    let sampler = LimitMeasureSampler::new(beta, resolution, DEFAULT_J_MAX)?;
    let scaled = IntervalFamily::single(Interval::closed(0.0, a * t0)?);
    let base = IntervalFamily::single(Interval::closed(0.0, t0)?);
    let lhs = finite_values(&sampler, &scaled, samples, 0.0, rng)?;
    let rhs = finite_values(&sampler, &base, samples, (1.0 - beta) * a.ln(), rng)?;
    ks_two_sample(&lhs, &rhs)
}

/// Two-sample KS distance between `𝓜((r, r+t))` and `𝓜((0, t))`.
pub fn stationarity_check<R: Rng + ?Sized>(
    beta: f64,
    r: f64,
    t: f64,
    samples: usize,
    resolution: u64,
    rng: &mut R,
) -> Result<f64> {
    let sampler = LimitMeasureSampler::new(beta, resolution, DEFAULT_J_MAX)?;
    let shifted = IntervalFamily::single(Interval::open(r, r + t)?);
    let base = IntervalFamily::single(Interval::open(0.0, t)?);
    let lhs = finite_values(&sampler, &shifted, samples, 0.0, rng)?;
    let rhs = finite_values(&sampler, &base, samples, 0.0, rng)?;
    ks_two_sample(&lhs, &rhs)
}
