//! Return-time law of the zero state, wandering rates, and zero-visit sets.
//!
//! Only the zero-return structure of the underlying null-recurrent chain is
//! represented: a visit set is the range of a delayed renewal process whose
//! increments have tail `F̄(n) = (n+1)^{−β} (1 + ln(1+n))^{−κ}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Return times are capped here; any horizon used in practice is far below.
pub const PHI_CAP: u64 = 1 << 62;

/// Prefix sums beyond this index use an Euler–Maclaurin tail.
const EXACT_PREFIX_CAP: u64 = 1 << 20;

/// Law of the first return time `φ ≥ 1` to the zero state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReturnLawSpec")]
pub struct ReturnLaw {
    beta: f64,
    kappa: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReturnLawSpec {
    beta: f64,
    #[serde(default)]
    kappa: f64,
}

impl TryFrom<ReturnLawSpec> for ReturnLaw {
    type Error = crate::Error;

    fn try_from(s: ReturnLawSpec) -> Result<Self> {
        ReturnLaw::new(s.beta, s.kappa)
    }
}

impl ReturnLaw {
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("beta must lie in (0,1), got {beta}")));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        Ok(ReturnLaw { beta, kappa })
    }

    /// Pure power law, `ℓ ≡ 1`.
    pub fn power(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `ln F̄(n)`, accepting real `n ≥ 0`.
    pub fn log_tail_f(&self, n: f64) -> f64 {
        let l = n.ln_1p();
        let mut out = -self.beta * l;
        if self.kappa != 0.0 {
            out -= self.kappa * l.ln_1p();
        }
        out
    }

    /// `ln F̄(n) = ln P(φ > n)`.
    pub fn log_tail(&self, n: u64) -> f64 {
        self.log_tail_f(n as f64)
    }

    pub fn tail(&self, n: u64) -> f64 {
        self.log_tail(n).exp()
    }

    /// `P(φ = n)` for `n ≥ 1`.
    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.tail(n) * (self.log_tail(n - 1) - self.log_tail(n)).exp_m1()
    }

    /// `ℓ(n) = F̄(n) (n+1)^β`.
    pub fn slowly_varying(&self, n: u64) -> f64 {
        (self.log_tail(n) + self.beta * (n as f64).ln_1p()).exp()
    }

    /// `sup_{1 ≤ n ≤ max_n} n P(φ=n) / F̄(n)`.
    pub fn assumption_diagnostic(&self, max_n: u64) -> f64 {
        (1..=max_n)
            .map(|n| n as f64 * (self.log_tail(n - 1) - self.log_tail(n)).exp_m1())
            .fold(0.0, f64::max)
    }

    /// Draws `φ` by inversion: `min{n ≥ 1 : F̄(n) < U}`.
    pub fn sample_phi<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        self.invert(u)
    }

    /// Smallest `n ≥ 1` with `F̄(n) < u`, for `u ∈ (0, 1]`.
    pub fn invert(&self, u: f64) -> u64 {
        let log_u = u.ln();
        // Power-law inversion; exact for κ = 0 and an upper bound otherwise.
        let y = (-log_u / self.beta).exp();
        if !(y < PHI_CAP as f64) {
            return PHI_CAP;
        }
        let mut n = (y.floor() as u64).max(1);
        let below = |n: u64| self.log_tail(n) < log_u;
        if self.kappa == 0.0 {
            while n > 1 && below(n - 1) {
                n -= 1;
            }
            while !below(n) {
                n += 1;
            }
            return n;
        }
        while !below(n) {
            n += 1;
        }
        // F̄ is decreasing: bisect for the first index below u.
        let (mut lo, mut hi) = (0u64, n);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if below(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Wandering rates `w_m = Σ_{k=1}^{m} F̄(k−1)` with `w_0 = 1`.
///
/// Exact prefix sums are cached on demand up to `2^20`; larger indices use
/// the cached sum plus an Euler–Maclaurin tail.
#[derive(Debug, Clone)]
pub struct WanderingTable {
    law: ReturnLaw,
    /// `prefix[m] = Σ_{k=0}^{m−1} F̄(k)`.
    prefix: Vec<f64>,
}

impl WanderingTable {
    pub fn new(law: ReturnLaw) -> Self {
        let mut t = WanderingTable { law, prefix: vec![0.0] };
        t.ensure(4096);
        t
    }

    pub fn law(&self) -> ReturnLaw {
        self.law
    }

    /// Extends the exact cache to cover `n` (bounded by the cache cap).
    pub fn ensure(&mut self, n: u64) {
        let target = n.min(EXACT_PREFIX_CAP) as usize;
        let mut acc = *self.prefix.last().expect("prefix is nonempty");
        while self.prefix.len() <= target {
            let k = (self.prefix.len() - 1) as u64;
            acc += self.law.tail(k);
            self.prefix.push(acc);
        }
    }

    pub fn wandering(&self, n: u64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let cached = (self.prefix.len() - 1) as u64;
        if n <= cached {
            return self.prefix[n as usize];
        }
        self.prefix[cached as usize] + self.euler_maclaurin_tail(cached, n)
    }

    /// `Σ_{i=m+1}^{n} g(i)` with `g(i) = F̄(i−1) = i^{−β}(1+ln i)^{−κ}`.
    fn euler_maclaurin_tail(&self, m: u64, n: u64) -> f64 {
        let beta = self.law.beta;
        let kappa = self.law.kappa;
        let g = |x: f64| (-beta * x.ln() - kappa * x.ln().ln_1p()).exp();
        let dg = |x: f64| g(x) * (-beta / x - kappa / (x * (1.0 + x.ln())));
        let (a, b) = (m as f64, n as f64);
        let integral = if kappa == 0.0 {
            (b.powf(1.0 - beta) - a.powf(1.0 - beta)) / (1.0 - beta)
        } else {
            // ∫ e^{(1−β)t} (1+t)^{−κ} dt over t ∈ [ln a, ln b], composite Simpson.
            let (ta, tb) = (a.ln(), b.ln());
            let panels = 4096usize;
            let h = (tb - ta) / panels as f64;
            let f = |t: f64| ((1.0 - beta) * t - kappa * t.ln_1p()).exp();
            let mut s = f(ta) + f(tb);
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(ta + h * i as f64);
            }
            s * h / 3.0
        };
        integral + 0.5 * (g(b) - g(a)) + (dg(b) - dg(a)) / 12.0
    }
}

/// A sampled zero-visit set `I_{j,n} ⊂ {0, …, n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VisitSet {
    pub n: u64,
    times: Vec<u64>,
}

impl VisitSet {
    /// Validates a sorted, distinct, nonempty set of times within `[0, n]`.
    pub fn new(n: u64, times: Vec<u64>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("visit set must be nonempty"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("visit times must be strictly increasing"));
        }
        if *times.last().unwrap() > n {
            return Err(invalid(format!("visit time beyond horizon {n}")));
        }
        Ok(VisitSet { n, times })
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn first(&self) -> u64 {
        self.times[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether some visit time `t` satisfies `lo < t < hi` (real bounds).
    pub fn hits_open_window(&self, lo: f64, hi: f64) -> bool {
        let i = self.times.partition_point(|&t| (t as f64) <= lo);
        i < self.times.len() && (self.times[i] as f64) < hi
    }

    /// Newline-delimited decimal times, for debugging dumps.
    pub fn write_lines<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.times {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }
}

/// Sampler for visit sets at a fixed horizon, with the initial-point law
/// precomputed.
///
/// The first visit `m₀` has `P(m₀ = m) ∝ F̄(m)` on `{0,…,n}`: a path of the
/// stationary chain conditioned to visit zero during `{0,…,n}` first does so
/// at `m` with mass `F̄(m)`. The total mass is `Σ_{k=0}^{n} F̄(k) = w_{n+1}`.
#[derive(Debug, Clone)]
pub struct VisitSampler {
    law: ReturnLaw,
    n: u64,
    /// `cum[m] = Σ_{k=0}^{m} F̄(k)`.
    cum: Vec<f64>,
}

impl VisitSampler {
    pub fn new(law: ReturnLaw, n: u64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("visit-set horizon must be >= 1"));
        }
        if n > 1 << 24 {
            return Err(crate::Error::Resource(format!("visit-set horizon {n} too large for a dense initial-point table")));
        }
        let mut cum = Vec::with_capacity(n as usize + 1);
        let mut acc = 0.0;
        for k in 0..=n {
            acc += law.tail(k);
            cum.push(acc);
        }
        Ok(VisitSampler { law, n, cum })
    }

    pub fn law(&self) -> ReturnLaw {
        self.law
    }

    pub fn horizon(&self) -> u64 {
        self.n
    }

    /// μ-mass of paths visiting zero in `{0,…,n}`, i.e. `w_{n+1}`.
    pub fn mass(&self) -> f64 {
        self.cum[self.n as usize]
    }

    /// `P(m₀ ≤ m)`.
    pub fn initial_cdf(&self, m: u64) -> f64 {
        self.cum[m.min(self.n) as usize] / self.mass()
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let target = rng.random::<f64>() * self.mass();
        let idx = self.cum.partition_point(|&c| c <= target);
        (idx as u64).min(self.n)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> VisitSet {
        let mut times = Vec::with_capacity(16);
        let mut t = self.sample_initial(rng);
        while t <= self.n {
            times.push(t);
            t = t.saturating_add(self.law.sample_phi(rng));
        }
        VisitSet { n: self.n, times }
    }
}

pub fn sample_phi<R: Rng + ?Sized>(law: &ReturnLaw, rng: &mut R) -> u64 {
    law.sample_phi(rng)
}

pub fn wandering(table: &WanderingTable, n: u64) -> f64 {
    table.wandering(n)
}

/// One visit set; builds the initial-point table on every call, so prefer
/// [`VisitSampler`] in loops.
pub fn sample_visit_set<R: Rng + ?Sized>(law: ReturnLaw, n: u64, rng: &mut R) -> Result<VisitSet> {
    Ok(VisitSampler::new(law, n)?.sample(rng))
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: u64,
}

impl McEstimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let k = values.len();
        if k < 2 {
            return Err(invalid(format!("need at least 2 replicates, got {k}")));
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        Ok(McEstimate { estimate: mean, stderr: (var / k as f64).sqrt(), reps: k as u64 })
    }

    pub fn from_counts(successes: u64, trials: u64) -> Result<Self> {
        if trials < 1 || successes > trials {
            return Err(invalid(format!("invalid counts {successes}/{trials}")));
        }
        let p = successes as f64 / trials as f64;
        Ok(McEstimate { estimate: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), reps: trials })
    }
}

/// Number of renewal epochs in `[0, n]` for the undelayed walk from 0.
pub fn sojourn_count<R: Rng + ?Sized>(law: &ReturnLaw, n: u64, rng: &mut R) -> u64 {
    let mut t = 0u64;
    let mut count = 0u64;
    while t <= n {
        count += 1;
        t = t.saturating_add(law.sample_phi(rng));
    }
    count
}

/// Whether the undelayed walk from 0 lands exactly on `n`.
pub fn hits_point<R: Rng + ?Sized>(law: &ReturnLaw, n: u64, rng: &mut R) -> bool {
    let mut t = 0u64;
    while t < n {
        t = t.saturating_add(law.sample_phi(rng));
    }
    t == n
}

pub fn mean_sojourn_mc<R: Rng + ?Sized>(law: &ReturnLaw, n: u64, reps: u64, rng: &mut R) -> Result<McEstimate> {
    if reps < 2 {
        return Err(invalid(format!("need at least 2 replicates, got {reps}")));
    }
    let values: Vec<f64> = (0..reps).map(|_| sojourn_count(law, n, rng) as f64).collect();
    McEstimate::from_values(&values)
}

pub fn hit_prob_mc<R: Rng + ?Sized>(law: &ReturnLaw, n: u64, reps: u64, rng: &mut R) -> Result<McEstimate> {
    let hits = (0..reps).filter(|_| hits_point(law, n, rng)).count() as u64;
    McEstimate::from_counts(hits, reps)
}

/// An open window `(a, b)` of the unit interval, scaled by the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub a: f64,
    pub b: f64,
}

impl Window {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(invalid(format!("window ({a}, {b}) must satisfy 0 <= a < b <= 1")));
        }
        Ok(Window { a, b })
    }

    pub fn unit() -> Self {
        Window { a: 0.0, b: 1.0 }
    }
}

/// Whether two visit sets share a time `t` with `lo < t < hi`, by sorted merge.
pub fn common_time_in(x: &[u64], y: &[u64], lo: f64, hi: f64) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        let (a, b) = (x[i], y[j]);
        if a == b {
            let t = a as f64;
            if t > lo && t < hi {
                return true;
            }
            if t >= hi {
                return false;
            }
            i += 1;
            j += 1;
        } else if a < b {
            i += 1;
        } else {
            j += 1;
        }
    }
    false
}

pub fn sets_intersect_in(x: &VisitSet, y: &VisitSet, window: Window) -> bool {
    let n = x.n as f64;
    common_time_in(x.times(), y.times(), n * window.a, n * window.b)
}

/// Annealed probability that two independent visit sets meet inside `nT`.
pub fn intersection_prob_mc<R: Rng + ?Sized>(
    law: ReturnLaw,
    n: u64,
    window: Window,
    reps: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    let window = Window::new(window.a, window.b)?;
    let sampler = VisitSampler::new(law, n)?;
    let hits = (0..reps)
        .filter(|_| {
            let x = sampler.sample(rng);
            let y = sampler.sample(rng);
            sets_intersect_in(&x, &y, window)
        })
        .count() as u64;
    McEstimate::from_counts(hits, reps)
}

/// Probability, conditional on `outer`, that a fresh visit set meets it inside `nT`.
pub fn quenched_given<R: Rng + ?Sized>(
    sampler: &VisitSampler,
    outer: &VisitSet,
    window: Window,
    inner_reps: u64,
    rng: &mut R,
) -> Result<f64> {
    if inner_reps < 100 {
        return Err(invalid(format!("quenched estimate needs >= 100 inner replicates, got {inner_reps}")));
    }
    let hits = (0..inner_reps)
        .filter(|_| sets_intersect_in(outer, &sampler.sample(rng), window))
        .count();
    Ok(hits as f64 / inner_reps as f64)
}

pub fn quenched_intersection_mc<R: Rng + ?Sized>(
    law: ReturnLaw,
    n: u64,
    window: Window,
    inner_reps: u64,
    rng: &mut R,
) -> Result<f64> {
    let window = Window::new(window.a, window.b)?;
    if inner_reps < 100 {
        return Err(invalid(format!("quenched estimate needs >= 100 inner replicates, got {inner_reps}")));
    }
    let sampler = VisitSampler::new(law, n)?;
    let outer = sampler.sample(rng);
    quenched_given(&sampler, &outer, window, inner_reps, rng)
}
