//! Exact simulation of the positive-jump component through its Poisson
//! series representation `X_t = Σ_j Ṽ(w/Γ_j) 1{t ∈ I_j}`, and the empirical
//! sup-measures of the resulting paths.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::limit::{Interval, IntervalFamily};
use crate::renewal::{ReturnLaw, VisitSampler, VisitSet, WanderingTable};
use crate::tail::{NormalizingSequences, TailModel, DEFAULT_QUANTILE_TOL};

/// Expected series length above which simulation is refused.
pub const MAX_EXPECTED_TERMS: f64 = 1e7;
pub const MIN_PATH_HORIZON: u64 = 100;

/// One realization of `(X_t)_{0 ≤ t ≤ n}`; unlisted times carry value 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub n: u64,
    /// `(time, value)` sorted by time, values strictly positive.
    entries: Vec<(u64, f64)>,
    pub term_count: u64,
}

impl PathSample {
    /// Sums jump sizes over the visit sets they are attached to.
    ///
    /// Contributions at each time are added in ascending order of size, so
    /// the result does not depend on the order of `terms`.
    pub fn from_terms<I>(n: u64, terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, VisitSet)>,
    {
        let mut contributions: Vec<(u64, f64)> = Vec::new();
        let mut term_count = 0;
        for (v, set) in terms {
            term_count += 1;
            contributions.extend(set.times().iter().map(|&t| (t, v)));
        }
        contributions.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut entries: Vec<(u64, f64)> = Vec::new();
        for (t, v) in contributions {
            match entries.last_mut() {
                Some(last) if last.0 == t => last.1 += v,
                _ => entries.push((t, v)),
            }
        }
        PathSample { n, entries, term_count }
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn value_at(&self, t: u64) -> f64 {
        match self.entries.binary_search_by_key(&t, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    /// Entries with `lo ≤ t ≤ hi` (integer bounds).
    fn range(&self, lo: u64, hi: u64) -> &[(u64, f64)] {
        let a = self.entries.partition_point(|e| e.0 < lo);
        let b = self.entries.partition_point(|e| e.0 <= hi);
        &self.entries[a..b.max(a)]
    }

    /// `time,value` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,value")?;
        for (t, v) in &self.entries {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Reusable path simulator for fixed `(model, law, n)`.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    model: TailModel,
    visits: VisitSampler,
    /// `ln` of the series cutoff `w ν̄(x₀)`: arrivals at or beyond it carry `Ṽ = 0`.
    log_cutoff: f64,
    log_mass: f64,
}

impl PathSimulator {
    pub fn new(model: TailModel, law: ReturnLaw, n: u64) -> Result<Self> {
        if n < MIN_PATH_HORIZON {
            return Err(invalid(format!("path horizon must be >= {MIN_PATH_HORIZON}, got {n}")));
        }
        // Check the budget before allocating the dense initial-point table.
        let expected = WanderingTable::new(law).wandering(n + 1) * model.nu_bar_x0();
        if !(expected <= MAX_EXPECTED_TERMS) {
            return Err(Error::Resource(format!(
                "horizon {n} needs about {expected:.3e} series terms (limit {MAX_EXPECTED_TERMS:e})"
            )));
        }
        let visits = VisitSampler::new(law, n)?;
        let log_mass = visits.mass().ln();
        let log_cutoff = log_mass + model.log_nu_bar_x0;
        Ok(PathSimulator { model, visits, log_cutoff, log_mass })
    }

    pub fn horizon(&self) -> u64 {
        self.visits.horizon()
    }

    pub fn model(&self) -> &TailModel {
        &self.model
    }

    /// The μ-mass `w` of paths visiting zero within `{0,…,n}`.
    pub fn mass(&self) -> f64 {
        self.log_mass.exp()
    }

    /// Series cutoff `w ν̄(x₀)`, also the mean number of terms.
    pub fn cutoff(&self) -> f64 {
        self.log_cutoff.exp()
    }

    /// Jump sizes `V(w/Γ_j)` with their visit sets, in arrival order.
    pub fn terms<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<(f64, VisitSet)>> {
        let cutoff = self.cutoff();
        let mut out = Vec::with_capacity(cutoff.ceil() as usize + 16);
        let mut gamma: f64 = 0.0;
        loop {
            let e: f64 = rng.sample(Exp1);
            gamma += e;
            if gamma >= cutoff {
                break;
            }
            let v = self.model.log_quantile_v(self.log_mass - gamma.ln(), DEFAULT_QUANTILE_TOL)?.exp();
            out.push((v, self.visits.sample(rng)));
        }
        Ok(out)
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PathSample> {
        Ok(PathSample::from_terms(self.horizon(), self.terms(rng)?))
    }
}

pub fn simulate_path<R: Rng + ?Sized>(model: &TailModel, law: ReturnLaw, n: u64, rng: &mut R) -> Result<PathSample> {
    PathSimulator::new(*model, law, n)?.simulate(rng)
}

/// Per-interval block maxima `M_n(I)` and optionally their normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSupMeasure {
    pub raw: Vec<f64>,
    pub normalized: Option<Vec<f64>>,
}

/// Integer time range `nI ∩ {0,…,n}` for an interval.
fn time_range(n: u64, iv: &Interval) -> Option<(u64, u64)> {
    let (lo, hi) = (iv.lo * n as f64, iv.hi * n as f64);
    let (a, b) = if iv.closed {
        (lo.ceil(), hi.floor())
    } else {
        (lo.floor() + 1.0, hi.ceil() - 1.0)
    };
    let b = b.min(n as f64);
    (a <= b).then_some((a.max(0.0) as u64, b as u64))
}

/// `M_n(I) = max_{t ∈ nI} X_t`, zero when no positive value falls in `nI`.
pub fn sup_measure_eval(path: &PathSample, intervals: &IntervalFamily) -> EmpiricalSupMeasure {
    let raw = intervals
        .intervals()
        .iter()
        .map(|iv| match time_range(path.n, iv) {
            Some((a, b)) => path.range(a, b).iter().map(|e| e.1).fold(0.0, f64::max),
            None => 0.0,
        })
        .collect();
    EmpiricalSupMeasure { raw, normalized: None }
}

/// `(M_n(I) − b_n) / a_n` per interval.
pub fn normalize(raw: &EmpiricalSupMeasure, norm: &NormalizingSequences) -> Result<EmpiricalSupMeasure> {
    if !(norm.a_n > 0.0) {
        return Err(invalid(format!("a_n must be > 0, got {}", norm.a_n)));
    }
    let normalized = raw.raw.iter().map(|m| (m - norm.b_n) / norm.a_n).collect();
    Ok(EmpiricalSupMeasure { raw: raw.raw.clone(), normalized: Some(normalized) })
}

/// `max_{s ≤ n t} X_s` on an increasing grid of `t ∈ (0,1]`.
pub fn running_max_path(path: &PathSample, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(invalid("grid must be strictly increasing within (0,1]"));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut running = 0.0f64;
    let mut idx = 0;
    let entries = path.entries();
    for &t in grid {
        let limit = (t * path.n as f64).floor() as u64;
        while idx < entries.len() && entries[idx].0 <= limit {
            running = running.max(entries[idx].1);
            idx += 1;
        }
        out.push(running);
    }
    Ok(out)
}
