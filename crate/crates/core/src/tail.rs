//! Gumbel-domain tail families and their quantile calculus.
//!
//! Every tail function here is evaluated in the variable `u = ln x`, and the
//! tail itself is carried as `ln ν̄`. The tails underflow a double long before
//! the quantile transforms leave a sane range, so exponentiation happens only
//! at the public boundary.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::renewal::{ReturnLaw, WanderingTable};

/// Step of the threshold search grid in `ln x`.
const X0_GRID_STEP: f64 = 1.0 / 1024.0;
/// Upper end of the threshold search grid in `ln x`.
const X0_GRID_MAX: f64 = 200.0;

/// Maximum bisection steps for quantile inversion.
pub const MAX_BISECTION_ITERS: usize = 200;
/// Default relative tolerance on the quantile argument (absolute tolerance in `ln s`).
pub const DEFAULT_QUANTILE_TOL: f64 = 1e-12;

/// A closed-form subexponential tail in the Gumbel domain of attraction.
///
/// `Lognormal`:      `c x^β (ln x)^ξ exp(−λ (ln x)^γ)`
///
/// `SuperLognormal`: `c x^β (ln x)^ξ exp(λ (ln x)^γ) exp(−ρ exp(μ (ln x)^α))`
///
/// `beta_t` is the power-law exponent of the tail, not the index of the
/// return-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailSpec", into = "TailSpec")]
pub enum TailFamily {
    Lognormal {
        c: f64,
        beta_t: f64,
        xi: f64,
        lambda: f64,
        gamma: f64,
    },
    SuperLognormal {
        c: f64,
        beta_t: f64,
        xi: f64,
        lambda: f64,
        gamma: f64,
        rho: f64,
        mu: f64,
        alpha: f64,
    },
}

/// Flat JSON form of a [`TailFamily`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailSpec {
    family: FamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default)]
    beta_t: f64,
    #[serde(default)]
    xi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FamilyTag {
    Lognormal,
    Superlognormal,
}

fn required(v: Option<f64>, name: &str, family: &str) -> Result<f64> {
    v.ok_or_else(|| invalid(format!("{family} tail requires field `{name}`")))
}

impl TryFrom<TailSpec> for TailFamily {
    type Error = Error;

    fn try_from(s: TailSpec) -> Result<Self> {
        match s.family {
            FamilyTag::Lognormal => TailFamily::lognormal(
                required(s.c, "c", "lognormal")?,
                s.beta_t,
                s.xi,
                required(s.lambda, "lambda", "lognormal")?,
                required(s.gamma, "gamma", "lognormal")?,
            ),
            FamilyTag::Superlognormal => TailFamily::super_lognormal(
                required(s.c, "c", "superlognormal")?,
                s.beta_t,
                s.xi,
                s.lambda.unwrap_or(0.0),
                s.gamma.unwrap_or(0.0),
                required(s.rho, "rho", "superlognormal")?,
                required(s.mu, "mu", "superlognormal")?,
                required(s.alpha, "alpha", "superlognormal")?,
            ),
        }
    }
}

impl From<TailFamily> for TailSpec {
    fn from(f: TailFamily) -> Self {
        match f {
            TailFamily::Lognormal { c, beta_t, xi, lambda, gamma } => TailSpec {
                family: FamilyTag::Lognormal,
                c: Some(c),
                beta_t,
                xi,
                lambda: Some(lambda),
                gamma: Some(gamma),
                rho: None,
                mu: None,
                alpha: None,
            },
            TailFamily::SuperLognormal { c, beta_t, xi, lambda, gamma, rho, mu, alpha } => TailSpec {
                family: FamilyTag::Superlognormal,
                c: Some(c),
                beta_t,
                xi,
                lambda: Some(lambda),
                gamma: Some(gamma),
                rho: Some(rho),
                mu: Some(mu),
                alpha: Some(alpha),
            },
        }
    }
}

fn check_finite(vals: &[(&str, f64)]) -> Result<()> {
    for (name, v) in vals {
        if !v.is_finite() {
            return Err(invalid(format!("parameter `{name}` must be finite, got {v}")));
        }
    }
    Ok(())
}

impl TailFamily {
    pub fn lognormal(c: f64, beta_t: f64, xi: f64, lambda: f64, gamma: f64) -> Result<Self> {
        check_finite(&[("c", c), ("beta_t", beta_t), ("xi", xi), ("lambda", lambda), ("gamma", gamma)])?;
        if c <= 0.0 {
            return Err(invalid(format!("c must be > 0, got {c}")));
        }
        if lambda <= 0.0 {
            return Err(invalid(format!("lambda must be > 0, got {lambda}")));
        }
        if gamma <= 1.0 {
            return Err(invalid(format!("gamma must be > 1, got {gamma}")));
        }
        Ok(TailFamily::Lognormal { c, beta_t, xi, lambda, gamma })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn super_lognormal(
        c: f64,
        beta_t: f64,
        xi: f64,
        lambda: f64,
        gamma: f64,
        rho: f64,
        mu: f64,
        alpha: f64,
    ) -> Result<Self> {
        check_finite(&[
            ("c", c),
            ("beta_t", beta_t),
            ("xi", xi),
            ("lambda", lambda),
            ("gamma", gamma),
            ("rho", rho),
            ("mu", mu),
            ("alpha", alpha),
        ])?;
        if c <= 0.0 {
            return Err(invalid(format!("c must be > 0, got {c}")));
        }
        if rho <= 0.0 || mu <= 0.0 {
            return Err(invalid(format!("rho and mu must be > 0, got rho={rho}, mu={mu}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
        }
        Ok(TailFamily::SuperLognormal { c, beta_t, xi, lambda, gamma, rho, mu, alpha })
    }

    fn c(&self) -> f64 {
        match *self {
            TailFamily::Lognormal { c, .. } | TailFamily::SuperLognormal { c, .. } => c,
        }
    }

    fn with_c(self, new_c: f64) -> Self {
        match self {
            TailFamily::Lognormal { beta_t, xi, lambda, gamma, .. } => {
                TailFamily::Lognormal { c: new_c, beta_t, xi, lambda, gamma }
            }
            TailFamily::SuperLognormal { beta_t, xi, lambda, gamma, rho, mu, alpha, .. } => {
                TailFamily::SuperLognormal { c: new_c, beta_t, xi, lambda, gamma, rho, mu, alpha }
            }
        }
    }

    /// `ln ν̄(e^u)` for `u ≥ 1`.
    pub fn log_tail_at_log(&self, u: f64) -> f64 {
        match *self {
            TailFamily::Lognormal { c, beta_t, xi, lambda, gamma } => {
                c.ln() + beta_t * u + xi_term(xi, u) - lambda * u.powf(gamma)
            }
            TailFamily::SuperLognormal { c, beta_t, xi, lambda, gamma, rho, mu, alpha } => {
                c.ln() + beta_t * u + xi_term(xi, u) + lambda_term(lambda, gamma, u)
                    - rho * (mu * u.powf(alpha)).exp()
            }
        }
    }

    /// Hazard index `x · (−d/dx ln ν̄(x))` at `x = e^u`, i.e. `x / h(x)`.
    pub fn hazard_index_at_log(&self, u: f64) -> f64 {
        match *self {
            TailFamily::Lognormal { beta_t, xi, lambda, gamma, .. } => {
                lambda * gamma * u.powf(gamma - 1.0) - xi / u - beta_t
            }
            TailFamily::SuperLognormal { beta_t, xi, lambda, gamma, rho, mu, alpha, .. } => {
                rho * alpha * mu * u.powf(alpha - 1.0) * (mu * u.powf(alpha)).exp()
                    - lambda * gamma * u.powf(gamma - 1.0)
                    - xi / u
                    - beta_t
            }
        }
    }
}

fn xi_term(xi: f64, u: f64) -> f64 {
    if xi == 0.0 {
        0.0
    } else {
        xi * u.ln()
    }
}

fn lambda_term(lambda: f64, gamma: f64, u: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * u.powf(gamma)
    }
}

/// A tail family together with its regularity threshold `x₀`.
///
/// On `[x₀, ∞)` the tail is strictly decreasing, bounded by one, and
/// `H̄_#(x) = ν̄(x)/ν̄(x₀)` is the normalized tail whose auxiliary function is
/// [`TailModel::aux_h`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub family: TailFamily,
    pub x0: f64,
    /// `ln x₀`, the exact grid point the threshold was rounded to.
    pub log_x0: f64,
    /// `ln ν̄(x₀)`.
    pub log_nu_bar_x0: f64,
}

impl TailModel {
    /// Locates the smallest grid point `x₀ ≥ e` from which the tail is
    /// strictly decreasing and at most one.
    pub fn new(family: TailFamily) -> Result<Self> {
        let log_x0 = threshold(&family, true)?;
        Ok(Self::at(family, log_x0))
    }

    /// Rescales `c` so that `ν̄(x₀) = 1`, with `x₀` located from the
    /// monotonicity condition alone. Keeps the expected series term count
    /// equal to the wandering rate.
    pub fn with_unit_mass(family: TailFamily) -> Result<Self> {
        let log_x0 = threshold(&family, false)?;
        let shift = family.log_tail_at_log(log_x0);
        let rescaled = family.with_c(family.c() * (-shift).exp());
        let mut model = Self::at(rescaled, log_x0);
        // Rescaling by exp(−shift) can leave a rounding residue of a few ulps.
        model.log_nu_bar_x0 = 0.0;
        Ok(model)
    }

    fn at(family: TailFamily, log_x0: f64) -> Self {
        TailModel {
            family,
            x0: log_x0.exp(),
            log_x0,
            log_nu_bar_x0: family.log_tail_at_log(log_x0),
        }
    }

    pub fn nu_bar_x0(&self) -> f64 {
        self.log_nu_bar_x0.exp()
    }

    pub fn log_nu_bar(&self, x: f64) -> Result<f64> {
        if !(x >= self.x0) || !x.is_finite() {
            return Err(domain(format!("tail evaluated at x={x} below x0={}", self.x0)));
        }
        let u = x.ln().max(self.log_x0);
        Ok(self.family.log_tail_at_log(u))
    }

    /// `ν̄(x)` for `x ≥ x₀`.
    pub fn nu_bar(&self, x: f64) -> Result<f64> {
        self.log_nu_bar(x).map(f64::exp)
    }

    /// Auxiliary (reciprocal hazard) function `h(x)`.
    pub fn aux_h(&self, x: f64) -> Result<f64> {
        if !(x >= self.x0) || !x.is_finite() {
            return Err(domain(format!("auxiliary function evaluated at x={x} below x0={}", self.x0)));
        }
        let d = self.family.hazard_index_at_log(x.ln().max(self.log_x0));
        if !(d > 0.0) {
            return Err(domain(format!("non-positive hazard at x={x}")));
        }
        Ok(x / d)
    }

    /// `ln V` where `V(y) = (1/ν̄)^←(y)`, given `ln y`.
    pub fn log_quantile_v(&self, log_y: f64, tol: f64) -> Result<f64> {
        if !log_y.is_finite() {
            return Err(domain(format!("quantile argument ln y = {log_y} is not finite")));
        }
        let target = -log_y;
        if target >= self.log_nu_bar_x0 {
            return Ok(self.log_x0);
        }
        let f = |u: f64| self.family.log_tail_at_log(u);
        let mut lo = self.log_x0;
        let mut hi = (2.0 * lo).max(lo + 1.0);
        while f(hi) > target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(domain(format!("quantile for ln y = {log_y} out of range")));
            }
        }
        for _ in 0..MAX_BISECTION_ITERS {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `V(y)`; values with `y ≤ 1/ν̄(x₀)` map to `x₀`.
    pub fn quantile_v(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y <= 0.0 {
            return Err(domain(format!("quantile argument y = {y} must be finite and positive")));
        }
        self.log_quantile_v(y.ln(), DEFAULT_QUANTILE_TOL).map(f64::exp)
    }

    /// `ln G(x)` for the normalized tail `H̄_#`, given `ln x`.
    pub fn log_quantile_g(&self, log_x: f64) -> Result<f64> {
        if !(log_x > 0.0) {
            return Err(domain(format!("G requires x > 1, got ln x = {log_x}")));
        }
        self.log_quantile_v(log_x - self.log_nu_bar_x0, DEFAULT_QUANTILE_TOL)
    }

    /// `G = (1/(1−H_#))^←`.
    pub fn quantile_g(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(domain(format!("G argument {x} is not finite")));
        }
        self.log_quantile_g(x.ln()).map(f64::exp)
    }

    /// Index function `ζ(x) = ln x · h(G(x)) / G(x)`.
    pub fn zeta(&self, x: f64) -> Result<f64> {
        if !(x > std::f64::consts::E) || !x.is_finite() {
            return Err(domain(format!("zeta requires finite x > e, got {x}")));
        }
        let log_x = x.ln();
        let u = self.log_quantile_g(log_x)?;
        let d = self.family.hazard_index_at_log(u);
        if !(d > 0.0) {
            return Err(domain(format!("non-positive hazard at G({x})")));
        }
        Ok(log_x / d)
    }
}

/// Grid search in `ln x` for the regularity threshold.
fn threshold(family: &TailFamily, require_unit_bound: bool) -> Result<f64> {
    let steps = ((X0_GRID_MAX - 1.0) / X0_GRID_STEP) as usize;
    let ok = |u: f64| {
        let d = family.hazard_index_at_log(u);
        let lt = family.log_tail_at_log(u);
        d > 0.0 && lt.is_finite() && (!require_unit_bound || lt <= 0.0)
    };
    let mut last_bad: Option<usize> = None;
    for i in 0..=steps {
        if !ok(1.0 + i as f64 * X0_GRID_STEP) {
            last_bad = Some(i);
        }
    }
    let idx = match last_bad {
        None => 0,
        Some(i) if i == steps => {
            return Err(invalid(format!(
                "no regularity threshold found below ln x = {X0_GRID_MAX} for {family:?}"
            )))
        }
        Some(i) => i + 1,
    };
    Ok(1.0 + idx as f64 * X0_GRID_STEP)
}

/// Centering and scaling for block maxima over the horizon `{0,…,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizingSequences {
    pub n: u64,
    pub w_n: f64,
    pub b_n: f64,
    pub a_n: f64,
    /// `V(1/F̄(n))`, the part of the centering not explained by the largest jump.
    pub centering_extra: f64,
}

/// `b_n = V(w_n) + V(1/F̄(n))`, `a_n = h(V(w_n))`.
pub fn normalizers(model: &TailModel, table: &WanderingTable, n: u64) -> Result<NormalizingSequences> {
    normalizers_with_tol(model, table, n, DEFAULT_QUANTILE_TOL)
}

pub fn normalizers_with_tol(
    model: &TailModel,
    table: &WanderingTable,
    n: u64,
    tol: f64,
) -> Result<NormalizingSequences> {
    if n < 2 {
        return Err(invalid(format!("normalizers need n >= 2, got {n}")));
    }
    let law = table.law();
    let w_n = table.wandering(n);
    let v_w = model.log_quantile_v(w_n.ln(), tol)?.exp();
    let extra = model.log_quantile_v(-law.log_tail(n), tol)?.exp();
    let a_n = model.aux_h(v_w)?;
    let out = NormalizingSequences { n, w_n, b_n: v_w + extra, a_n, centering_extra: extra };
    if !(out.a_n > 0.0 && out.a_n.is_finite() && out.b_n.is_finite()) {
        return Err(domain(format!("degenerate normalizers at n={n}: {out:?}")));
    }
    Ok(out)
}

/// `V(1/F̄(n)) / a_n`; tends to zero exactly when the single-big-jump
/// centering is correct.
pub fn centering_ratio(model: &TailModel, table: &WanderingTable, n: u64) -> Result<f64> {
    let norm = normalizers(model, table, n)?;
    Ok(norm.centering_extra / norm.a_n)
}

/// Convenience wrapper building a fresh wandering table.
pub fn centering_ratios(model: &TailModel, law: ReturnLaw, ns: &[u64]) -> Result<Vec<f64>> {
    let table = WanderingTable::new(law);
    ns.iter().map(|&n| centering_ratio(model, &table, n)).collect()
}

/// Finite-`x` ratios probing the growth properties of `G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mtg4Row {
    pub x: f64,
    /// `|G(x (ln x)^α) − G(x)| / (ln ln x · h(G(x)))`.
    pub r4: f64,
    /// `(G(x) − G(x 2^{−j})) / (j² h(G(x)))` for `j = 1, …, max(1, ⌊ρ ln x / ζ(x)⌋)`.
    pub r5: Vec<f64>,
    /// `G(x) / exp((ln ln x)^{1+δ} / (1+δ))`.
    pub growth: f64,
}

pub fn mtg4_diagnostics(model: &TailModel, x_grid: &[f64], alpha: f64, rho: f64, delta: f64) -> Result<Vec<Mtg4Row>> {
    if x_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("x_grid must be strictly increasing"));
    }
    if alpha == 0.0 {
        return Err(invalid("alpha must be non-zero"));
    }
    x_grid
        .iter()
        .map(|&x| {
            let lx = x.ln();
            if !(lx > 1.0) {
                return Err(domain(format!("diagnostics require x > e, got {x}")));
            }
            let llx = lx.ln();
            let g = model.quantile_g(x)?;
            let hg = model.aux_h(g)?;
            let shifted = model.log_quantile_g(lx + alpha * llx)?.exp();
            let r4 = (shifted - g).abs() / (llx * hg);
            let zeta = model.zeta(x)?;
            let j_max = ((rho * lx / zeta).floor() as u64).max(1);
            let mut r5 = Vec::with_capacity(j_max as usize);
            for j in 1..=j_max {
                let lxj = lx - j as f64 * std::f64::consts::LN_2;
                let gj = if lxj > 0.0 { model.log_quantile_g(lxj)?.exp() } else { model.x0 };
                r5.push((g - gj) / ((j * j) as f64 * hg));
            }
            let growth = (g.ln() - llx.powf(1.0 + delta) / (1.0 + delta)).exp();
            Ok(Mtg4Row { x, r4, r5, growth })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn ln_std() -> TailFamily {
        TailFamily::lognormal(1.0, 0.0, 0.0, 1.0, 2.0).unwrap()
    }

    fn sup_half() -> TailFamily {
        TailFamily::super_lognormal(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TailFamily::lognormal(0.0, 0.0, 0.0, 1.0, 2.0).is_err());
        assert!(TailFamily::lognormal(1.0, 0.0, 0.0, -1.0, 2.0).is_err());
        assert!(TailFamily::lognormal(1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(TailFamily::super_lognormal(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(TailFamily::super_lognormal(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.5).is_err());
        assert!(TailFamily::lognormal(f64::NAN, 0.0, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn nu_bar_closed_forms() {
        let m = TailModel::new(ln_std()).unwrap();
        assert_relative_eq!(m.x0, E, max_relative = 1e-15);
        assert_relative_eq!(m.nu_bar(E).unwrap(), (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(m.nu_bar(E * E).unwrap(), (-4.0f64).exp(), max_relative = 1e-14);
        let s = TailModel::new(sup_half()).unwrap();
        let x = 4.0f64.exp();
        assert_relative_eq!(s.nu_bar(x).unwrap(), (-(E * E)).exp(), max_relative = 1e-13);
    }

    #[test]
    fn nu_bar_below_threshold_is_domain_error() {
        let m = TailModel::new(ln_std()).unwrap();
        assert!(matches!(m.nu_bar(2.0), Err(Error::Domain(_))));
        assert!(matches!(m.aux_h(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn threshold_skips_increasing_region() {
        // x^2 exp(-(ln x)^2) increases until ln x = 1 and exceeds 1 up to ln x = 2.
        let f = TailFamily::lognormal(1.0, 2.0, 0.0, 1.0, 2.0).unwrap();
        let m = TailModel::new(f).unwrap();
        assert!(m.log_x0 >= 2.0 && m.log_x0 < 2.0 + 2.0 * X0_GRID_STEP, "{}", m.log_x0);
        assert!(m.nu_bar_x0() <= 1.0);
        let unit = TailModel::with_unit_mass(f).unwrap();
        assert!(unit.log_x0 > 1.0 && unit.log_x0 < 1.0 + 2.0 * X0_GRID_STEP);
        assert_relative_eq!(unit.nu_bar(unit.x0).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn aux_h_closed_form() {
        let m = TailModel::new(ln_std()).unwrap();
        for &x in &[10.0, 1e3, 1e8] {
            let expect = x / (2.0 * f64::ln(x));
            assert_relative_eq!(m.aux_h(x).unwrap(), expect, max_relative = 1e-14);
        }
        assert_relative_eq!(m.aux_h(E * E).unwrap(), E * E / 4.0, max_relative = 1e-14);
    }

    fn fd_h(m: &TailModel, x: f64) -> f64 {
        let dx = x * 1e-5;
        let d = m.log_nu_bar(x + dx).unwrap() - m.log_nu_bar(x - dx).unwrap();
        -2.0 * dx / d
    }

    #[test]
    fn aux_h_matches_finite_differences() {
        let fams = [
            ln_std(),
            TailFamily::lognormal(2.0, 0.5, -1.0, 0.7, 2.5).unwrap(),
            sup_half(),
            TailFamily::super_lognormal(1.0, -0.5, 1.0, 0.3, 1.5, 2.0, 0.8, 0.4).unwrap(),
        ];
        for f in fams {
            let m = TailModel::new(f).unwrap();
            let x = (m.x0 * 100.0).max(1e6);
            let rel = (m.aux_h(x).unwrap() - fd_h(&m, x)).abs() / m.aux_h(x).unwrap();
            assert!(rel < 1e-6, "{f:?}: rel {rel}");
        }
    }

    #[test]
    fn quantile_v_inverts_analytically() {
        let m = TailModel::new(ln_std()).unwrap();
        assert_relative_eq!(m.quantile_v(4.0f64.exp()).unwrap(), E * E, max_relative = 1e-11);
        // below 1/ν̄(x0) = e the transform is clamped to x0
        assert_eq!(m.quantile_v(2.0).unwrap(), m.x0);
        assert!(m.quantile_v(f64::INFINITY).is_err());
        assert!(m.quantile_v(f64::NAN).is_err());
    }

    #[test]
    fn quantile_v_round_trip() {
        for f in [ln_std(), sup_half()] {
            let m = TailModel::new(f).unwrap();
            for &y in &[1e2, 1e6, 1e12] {
                let v = m.quantile_v(y).unwrap();
                let back = 1.0 / m.nu_bar(v).unwrap();
                assert!(((back - y) / y).abs() < 1e-9, "{f:?} y={y} back={back}");
            }
        }
    }

    #[test]
    fn quantile_g_matches_shifted_analytic_root() {
        // x0 = e and ν̄(x0) = e^{-1}, so G(e^4) solves (ln s)^2 = 5.
        let m = TailModel::new(ln_std()).unwrap();
        let g = m.quantile_g(4.0f64.exp()).unwrap();
        assert_relative_eq!(g, 5.0f64.sqrt().exp(), max_relative = 1e-11);
        for &x in &[3.0, 1e4, 1e9] {
            let g = m.quantile_g(x).unwrap();
            let lhs = m.nu_bar(g).unwrap();
            assert!(((lhs - m.nu_bar_x0() / x) / lhs).abs() < 1e-9);
        }
        assert!(m.quantile_g(1.0).is_err());
    }

    #[test]
    fn zeta_lognormal_asymptotic() {
        let m = TailModel::new(ln_std()).unwrap();
        let x = 1e12;
        let ratio = m.zeta(x).unwrap() / (0.5 * f64::ln(x).sqrt());
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn zeta_super_lognormal_trend() {
        let m = TailModel::new(sup_half()).unwrap();
        let errs: Vec<f64> = [1e6, 1e9, 1e12, 1e15, 1e18]
            .iter()
            .map(|&x: &f64| {
                let z = m.zeta(x).unwrap();
                (z / (2.0 * x.ln().ln()) - 1.0).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn zeta_diverges() {
        for f in [ln_std(), sup_half()] {
            let m = TailModel::new(f).unwrap();
            let z: Vec<f64> = (1..8).map(|k| m.zeta(10f64.powi(3 * k)).unwrap()).collect();
            assert!(z.windows(2).all(|w| w[1] > w[0]), "{z:?}");
        }
        let m = TailModel::new(ln_std()).unwrap();
        assert!(m.zeta(2.0).is_err());
    }

    #[test]
    fn tail_json_round_trip_and_defaults() {
        let f: TailFamily =
            serde_json::from_str(r#"{"family":"lognormal","c":1,"lambda":1,"gamma":2}"#).unwrap();
        assert_eq!(f, ln_std());
        let s: TailFamily =
            serde_json::from_str(r#"{"family":"superlognormal","c":1,"rho":1,"mu":1,"alpha":0.5}"#).unwrap();
        assert_eq!(s, sup_half());
        let back: TailFamily = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<TailFamily>(r#"{"family":"lognormal","c":1,"lambda":1,"gamma":0.5}"#).is_err());
        assert!(serde_json::from_str::<TailFamily>(r#"{"family":"lognormal","c":1,"gamma":2}"#).is_err());
    }
}
