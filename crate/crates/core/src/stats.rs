//! Empirical CDFs, Kolmogorov–Smirnov distances, log-log slope fits and
//! binomial intervals.

use serde::Serialize;

use crate::error::{invalid, Result};

/// A sorted sample of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("sample contains non-finite value {v}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Sample(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fraction of observations `≤ x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.0.partition_point(|&v| v <= x) as f64 / self.0.len() as f64
    }
}

/// `sup_x |F_n(x) − F(x)|`, evaluated at the order statistics.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &Sample, cdf: F) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid("KS statistic of an empty sample"));
    }
    let n = data.len() as f64;
    let v = data.values();
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        // ties: the ECDF jumps once over the whole run
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let f = cdf(v[i]);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    Ok(d.clamp(0.0, 1.0))
}

/// `sup_x |F_a(x) − F_b(x)|` by merge scan.
pub fn ks_two_sample(a: &Sample, b: &Sample) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS statistic of an empty sample"));
    }
    let (x, y) = (a.values(), b.values());
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(invalid("slope fit needs equally long inputs"));
    }
    if xs.len() < 3 {
        return Err(invalid(format!("slope fit needs at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("slope fit needs finite positive inputs"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, intercept, stderr })
}

/// Normal-approximation interval `p̂ ± z √(p̂(1−p̂)/n)`, clipped to `[0,1]`.
pub fn binomial_ci(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials < 1 || successes > trials {
        return Err(invalid(format!("invalid binomial counts {successes}/{trials}")));
    }
    if !(z >= 0.0) {
        return Err(invalid(format!("z must be >= 0, got {z}")));
    }
    let p = successes as f64 / trials as f64;
    let half = z * (p * (1.0 - p) / trials as f64).sqrt();
    Ok(((p - half).max(0.0), (p + half).min(1.0)))
}

/// Standard Gumbel CDF `exp(−e^{−x})`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_cdf(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    #[test]
    fn ks_single_point() {
        let s = Sample::new(vec![0.5]).unwrap();
        assert_relative_eq!(ks_one_sample(&s, uniform_cdf).unwrap(), 0.5);
    }

    #[test]
    fn ks_degenerate_cdf() {
        let s = Sample::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert_relative_eq!(ks_one_sample(&s, |_| 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ks_of_own_draws_is_small() {
        let mut r = ChaCha8Rng::seed_from_u64(17);
        let s = Sample::new((0..10_000).map(|_| r.random::<f64>()).collect()).unwrap();
        assert!(ks_one_sample(&s, uniform_cdf).unwrap() < 0.03);
    }

    #[test]
    fn ks_at_midpoint_quantiles_is_half_step() {
        let n = 40;
        let s = Sample::new((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()).unwrap();
        let d = ks_one_sample(&s, uniform_cdf).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
        // a tied pair counts as one jump of 2/n
        let t = Sample::new(vec![0.25, 0.5, 0.5, 0.75]).unwrap();
        assert!((ks_one_sample(&t, uniform_cdf).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ks_two_sample_basics() {
        let a = Sample::new(vec![0.0]).unwrap();
        let b = Sample::new(vec![1.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert!(ks_two_sample(&a, &Sample::new(vec![]).unwrap()).is_err());
        assert!(ks_one_sample(&Sample::new(vec![]).unwrap(), uniform_cdf).is_err());
        assert!(Sample::new(vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn ks_two_sample_symmetric_and_bounded(
            a in proptest::collection::vec(-10.0f64..10.0, 1..60),
            b in proptest::collection::vec(-10.0f64..10.0, 1..60),
        ) {
            let (sa, sb) = (Sample::new(a).unwrap(), Sample::new(b).unwrap());
            let d1 = ks_two_sample(&sa, &sb).unwrap();
            let d2 = ks_two_sample(&sb, &sa).unwrap();
            prop_assert_eq!(d1, d2);
            prop_assert!((0.0..=1.0).contains(&d1));
        }

        #[test]
        fn noiseless_power_law_slope(p in -3.0f64..3.0, c in 0.01f64..100.0) {
            let xs = [1.0, 10.0, 100.0, 1e3];
            let ys: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(p)).collect();
            let fit = loglog_slope(&xs, &ys).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_examples() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = loglog_slope(&xs, &sq).unwrap();
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-14);
        assert!(fit.stderr < 1e-12);
        assert!(loglog_slope(&xs, &[3.0; 4]).unwrap().slope.abs() < 1e-14);
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(loglog_slope(&[1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn slope_with_noise_within_stderr() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..20).map(|i| 10f64.powf(1.0 + 0.2 * i as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(-0.4) * (1.0 + 0.02 * (r.random::<f64>() - 0.5))).collect();
        let fit = loglog_slope(&xs, &ys).unwrap();
        assert!((fit.slope + 0.4).abs() < 4.0 * fit.stderr, "{fit:?}");
    }

    #[test]
    fn binomial_intervals() {
        let (lo, hi) = binomial_ci(0, 50, 2.0).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
        assert_eq!(binomial_ci(50, 50, 2.0).unwrap().1, 1.0);
        let (lo, hi) = binomial_ci(50, 100, 2.0).unwrap();
        assert_relative_eq!(lo, 0.4, max_relative = 1e-12);
        assert_relative_eq!(hi, 0.6, max_relative = 1e-12);
        assert!(binomial_ci(3, 2, 2.0).is_err());
        assert!(binomial_ci(0, 0, 2.0).is_err());
    }
}
