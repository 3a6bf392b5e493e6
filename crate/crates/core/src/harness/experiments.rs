use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use statrs::function::gamma::gamma;

use super::seed::{replicate_map, seed_substream, try_replicate_map};
use super::*;
use crate::limit::{extremal_fdd_cdf, gumbel_marginal_cdf, Interval, LimitMeasureSampler, SupValue};
use crate::process::{normalize, running_max_path, sup_measure_eval, PathSimulator};
use crate::regen::RegenSampler;
use crate::renewal::{
    hits_point, quenched_given, sets_intersect_in, sojourn_count, McEstimate, VisitSampler, WanderingTable,
    Window,
};
use crate::stats::{ks_one_sample, ks_two_sample, loglog_slope, Sample};
use crate::tail::{centering_ratio, mtg4_diagnostics, normalizers, TailModel};

/// Defaults for one experiment. Every threshold an experiment reads must be
/// listed here so that it shows up in the resolved config.
struct Defaults {
    tail: Option<TailFamily>,
    return_law: Option<ReturnLaw>,
    n: Option<u64>,
    n_grid: Option<Vec<u64>>,
    grid: Option<Vec<f64>>,
    resolution: Option<u64>,
    replicates: Option<u64>,
    params: &'static [(&'static str, f64)],
    thresholds: &'static [(&'static str, f64)],
}

impl Defaults {
    fn empty() -> Self {
        Defaults {
            tail: None,
            return_law: None,
            n: None,
            n_grid: None,
            grid: None,
            resolution: None,
            replicates: None,
            params: &[],
            thresholds: &[],
        }
    }
}

fn law(beta: f64) -> Option<ReturnLaw> {
    Some(ReturnLaw::power(beta).expect("valid default law"))
}

fn lognormal(lambda: f64) -> Option<TailFamily> {
    Some(TailFamily::lognormal(1.0, 0.0, 0.0, lambda, 2.0).expect("valid default tail"))
}

fn powers_of_ten(from: i32, to: i32, step: usize) -> Vec<f64> {
    (from..=to).step_by(step).map(|k| 10f64.powi(k)).collect()
}

fn defaults(e: Experiment) -> Defaults {
    let d = Defaults::empty();
    match e {
        Experiment::MarginalGumbel => Defaults {
            return_law: law(0.3),
            grid: Some(vec![0.25, 0.5, 1.0]),
            resolution: Some(10_000),
            replicates: Some(5_000),
            params: &[("j_max", 10_000.0), ("unit_replicates", 10_000.0)],
            thresholds: &[("ks_unit", 0.015), ("ks_partial", 0.03), ("max_truncated_fraction", 1e-3)],
            ..d
        },
        Experiment::HittingLaw => Defaults {
            return_law: law(0.3),
            n: Some(10_000),
            grid: Some(vec![0.25, 0.5]),
            resolution: Some(10_000),
            replicates: Some(10_000),
            thresholds: &[("sigma_mult", 3.0), ("allowance", 0.01), ("ks_min_law", 0.02)],
            ..d
        },
        Experiment::SelfAffinity => Defaults {
            return_law: law(0.3),
            resolution: Some(10_000),
            replicates: Some(5_000),
            params: &[("a", 0.5), ("t0", 1.0), ("j_max", 10_000.0)],
            thresholds: &[("ks", 0.04)],
            ..d
        },
        Experiment::Stationarity => Defaults {
            return_law: law(0.3),
            resolution: Some(10_000),
            replicates: Some(5_000),
            params: &[("r", 0.3), ("t", 0.4), ("j_max", 10_000.0)],
            thresholds: &[("ks", 0.04)],
            ..d
        },
        Experiment::IntersectionScaling => Defaults {
            return_law: law(0.3),
            n_grid: Some(vec![1_000, 10_000, 100_000]),
            replicates: Some(200_000),
            params: &[("window_lo", 0.0), ("window_hi", 1.0), ("quenched_outer", 200.0), ("quenched_inner", 1_000.0)],
            thresholds: &[("slope_tolerance", 0.1), ("sigma_mult", 3.0)],
            ..d
        },
        Experiment::RangeStats => Defaults {
            return_law: law(0.3),
            n: Some(100_000),
            replicates: Some(10_000),
            params: &[("point_beta", 0.5), ("point_n", 10_000.0), ("point_replicates", 1_000_000.0)],
            thresholds: &[("sojourn_rel_tol", 0.10), ("point_rel_tol", 0.15)],
            ..d
        },
        Experiment::CenteringPhenomenon => Defaults {
            tail: lognormal(0.25),
            return_law: law(0.3),
            n_grid: Some((0..7).map(|k| 10u64.pow(4 + 2 * k)).collect()),
            thresholds: &[("vanish_ratio", 0.5), ("diverge_ratio", 2.0)],
            ..d
        },
        Experiment::ProcessConvergence => Defaults {
            tail: lognormal(0.25),
            return_law: law(0.3),
            n: Some(100_000),
            grid: Some(vec![0.5, 1.0]),
            replicates: Some(2_000),
            thresholds: &[("ks_gumbel", 0.15), ("sigma_mult", 3.0)],
            ..d
        },
        Experiment::Mtg4Diagnostics => Defaults {
            tail: lognormal(1.0),
            grid: Some(powers_of_ten(6, 18, 1)),
            params: &[("alpha", 1.0), ("rho", 0.05), ("delta", 0.5)],
            thresholds: &[
                ("roundtrip_rel_tol", 1e-9),
                ("hazard_rel_tol", 1e-6),
                ("zeta_final_tol", 0.1),
                ("r4_bound", 10.0),
                ("r5_floor", 0.1),
            ],
            ..d
        },
    }
}

fn merge_map(
    name: &str,
    given: &BTreeMap<String, f64>,
    defaults: &[(&str, f64)],
) -> Result<BTreeMap<String, f64>> {
    if let Some(k) = given.keys().find(|k| !defaults.iter().any(|(d, _)| d == k)) {
        let known: Vec<_> = defaults.iter().map(|(d, _)| *d).collect();
        return Err(Error::Config(format!("unknown {name} key `{k}` (known: {})", known.join(", "))));
    }
    let mut out = BTreeMap::new();
    for &(k, v) in defaults {
        let v = given.get(k).copied().unwrap_or(v);
        if !v.is_finite() {
            return Err(Error::Config(format!("{name} `{k}` must be finite")));
        }
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

pub(super) fn resolve(c: &ExperimentConfig) -> Result<ExperimentConfig> {
    let e = c.kind()?;
    let d = defaults(e);
    let mut r = c.clone();
    r.experiment = e.name().to_string();
    r.tail = c.tail.or(d.tail);
    r.unit_mass = r.tail.map(|_| c.unit_mass.unwrap_or(true));
    r.return_law = c.return_law.or(d.return_law);
    r.n = c.n.or(d.n);
    r.n_grid = c.n_grid.clone().or(d.n_grid);
    r.grid = c.grid.clone().or(d.grid);
    r.resolution = c.resolution.or(d.resolution);
    r.replicates = c.replicates.or(d.replicates);
    r.params = merge_map("param", &c.params, d.params)?;
    r.thresholds = merge_map("threshold", &c.thresholds, d.thresholds)?;
    if e == Experiment::CenteringPhenomenon {
        r.expect = Some(match &c.expect {
            Some(x) if x == "vanishes" || x == "diverges" => x.clone(),
            Some(x) => return Err(Error::Config(format!("expect must be `vanishes` or `diverges`, got `{x}`"))),
            None => predicted_direction(r.tail.as_ref().expect("centering has a default tail"))?.to_string(),
        });
    } else if c.expect.is_some() {
        return Err(Error::Config(format!("`expect` only applies to {}", Experiment::CenteringPhenomenon)));
    }
    validate(&r)?;
    Ok(r)
}

/// Direction of `V(1/F̄(n))/a_n` predicted for the family.
fn predicted_direction(tail: &TailFamily) -> Result<&'static str> {
    match *tail {
        TailFamily::Lognormal { .. } => Ok("vanishes"),
        TailFamily::SuperLognormal { alpha, .. } if alpha < 0.5 => Ok("vanishes"),
        TailFamily::SuperLognormal { alpha, .. } if alpha > 0.5 => Ok("diverges"),
        TailFamily::SuperLognormal { .. } => Err(Error::Config(
            "no predicted direction at alpha = 0.5; set `expect` explicitly".into(),
        )),
    }
}

fn positive<T: PartialOrd + Default + fmt::Display>(name: &str, v: Option<T>) -> Result<()> {
    match v {
        Some(x) if !(x > T::default()) => Err(Error::Config(format!("`{name}` must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn validate(r: &ExperimentConfig) -> Result<()> {
    positive("n", r.n)?;
    positive("resolution", r.resolution)?;
    positive("replicates", r.replicates)?;
    positive("workers", r.workers)?;
    if let Some(g) = &r.n_grid {
        if g.is_empty() || g.contains(&0) {
            return Err(Error::Config("`n_grid` must be nonempty and positive".into()));
        }
    }
    if let Some(g) = &r.grid {
        if g.is_empty() || g.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Config("`grid` must be nonempty, positive and finite".into()));
        }
    }
    if r.kind()? != Experiment::Mtg4Diagnostics && r.kind()? != Experiment::CenteringPhenomenon {
        if let Some(iv) = &r.intervals {
            if iv.intervals().iter().any(|i| i.lo < 0.0 || i.hi > 1.0) {
                return Err(Error::Config("intervals must lie within [0,1]".into()));
            }
        }
    }
    Ok(())
}

fn tail_model(c: &ExperimentConfig) -> Result<TailModel> {
    let family = c.tail.ok_or_else(|| Error::Config(format!("{} needs a `tail`", c.experiment)))?;
    if c.unit_mass.unwrap_or(true) {
        TailModel::with_unit_mass(family)
    } else {
        TailModel::new(family)
    }
}

fn return_law(c: &ExperimentConfig) -> Result<ReturnLaw> {
    c.return_law.ok_or_else(|| Error::Config(format!("{} needs a `return_law`", c.experiment)))
}

fn reps(c: &ExperimentConfig) -> u64 {
    c.replicates.expect("resolved")
}

fn count_param(c: &ExperimentConfig, key: &str) -> Result<u64> {
    let v = c.param(key);
    if !(v >= 1.0 && v.fract() == 0.0) {
        return Err(Error::Config(format!("param `{key}` must be a positive integer, got {v}")));
    }
    Ok(v as u64)
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

pub(super) fn run(c: &ExperimentConfig, debug: &DebugOutputs) -> Result<ExperimentOutput> {
    write_debug(c, debug)?;
    let mut rec = ResultRecord::new(c);
    let csv = match c.kind()? {
        Experiment::MarginalGumbel => marginal_gumbel(c, &mut rec)?,
        Experiment::HittingLaw => hitting_law(c, &mut rec)?,
        Experiment::SelfAffinity => self_affinity(c, &mut rec)?,
        Experiment::Stationarity => stationarity(c, &mut rec)?,
        Experiment::IntersectionScaling => intersection_scaling(c, &mut rec)?,
        Experiment::RangeStats => range_stats(c, &mut rec)?,
        Experiment::CenteringPhenomenon => centering(c, &mut rec)?,
        Experiment::ProcessConvergence => process_convergence(c, &mut rec)?,
        Experiment::Mtg4Diagnostics => mtg4(c, &mut rec)?,
    };
    Ok(ExperimentOutput { record: rec, csv: Some(csv) })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_debug(c: &ExperimentConfig, debug: &DebugOutputs) -> Result<()> {
    if let Some(p) = &debug.visits_out {
        let law = return_law(c)?;
        let n = c.n.or(c.resolution).or_else(|| c.n_grid.as_ref().map(|g| g[0])).unwrap_or(10_000);
        let set = VisitSampler::new(law, n)?.sample(&mut seed_substream(c.seed, 0, "debug/visits"));
        set.write_lines(create(p)?)?;
    }
    if let Some(p) = &debug.path_csv {
        if c.kind()? != Experiment::ProcessConvergence {
            return Err(Error::Config(format!("path output applies to {} only", Experiment::ProcessConvergence)));
        }
        let sim = PathSimulator::new(tail_model(c)?, return_law(c)?, c.n.expect("resolved"))?;
        // Replicate 0 of the experiment itself.
        let path = sim.simulate(&mut seed_substream(c.seed, 0, PROCESS_TAG))?;
        path.write_csv(create(p)?)?;
    }
    Ok(())
}

/// Finite values of the first interval and the number of truncated samples.
fn limit_values(
    c: &ExperimentConfig,
    tag: &str,
    family: &IntervalFamily,
    count: u64,
    shift: f64,
) -> Result<(Sample, u64)> {
    let law = return_law(c)?;
    let sampler = LimitMeasureSampler::new(law.beta(), c.resolution.expect("resolved"), count_param(c, "j_max")? as usize)?;
    let draws = replicate_map(c.seed, tag, count, |_, rng| sampler.sample(family, rng).values[0]);
    let truncated = draws.iter().filter(|v| !v.is_finite()).count() as u64;
    let vals = draws.into_iter().filter_map(SupValue::finite).map(|v| v + shift).collect();
    Ok((Sample::new(vals)?, truncated))
}

fn marginal_gumbel(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let beta = return_law(c)?.beta();
    let j_max = count_param(c, "j_max")? as usize;
    let sampler = LimitMeasureSampler::new(beta, c.resolution.expect("resolved"), j_max)?;
    let mut csv = CsvTable::new(&["interval", "replicate", "value"]);
    rec.target_law("marginal_cdf", "exp(-t^(1-beta) e^(-x)) for an interval of length t");
    if let Some(family) = &c.intervals {
        // All intervals from one realization, plus the union by direct scan.
        let count = reps(c);
        let draws = replicate_map(c.seed, "marginal-gumbel/family", count, |_, rng| {
            let s = sampler.sample(family, rng);
            let all: Vec<usize> = (0..family.len()).collect();
            let direct = s
                .levels
                .iter()
                .zip(&s.sets)
                .find(|(_, set)| family.intervals().iter().any(|iv| iv.hit_by(set)))
                .map_or(SupValue::NegInf, |(&l, _)| SupValue::Finite(l));
            let additive = s.truncated || s.union_value(&all) == direct;
            (s.values, additive)
        });
        rec.check(Check::holds("max_additivity", draws.iter().all(|d| d.1)));
        for (k, iv) in family.intervals().iter().enumerate() {
            let values: Vec<SupValue> = draws.iter().map(|d| d.0[k]).collect();
            marginal_block(c, rec, &mut csv, beta, iv, &values)?;
        }
        return Ok(csv);
    }
    let grid = c.grid.clone().expect("resolved");
    if grid.iter().any(|&t| t > 1.0) {
        return Err(Error::Config("marginal-gumbel times must lie in (0,1]".into()));
    }
    for &t in &grid {
        let unit = t == 1.0;
        // Closed [0,1] is hit by every set at any resolution, so its value is
        // exactly the first level.
        let iv = Interval::closed(0.0, t)?;
        let count = if unit { count_param(c, "unit_replicates")? } else { reps(c) };
        let family = IntervalFamily::single(iv);
        let draws = replicate_map(c.seed, &format!("marginal-gumbel/t={t}"), count, |_, rng| {
            let s = sampler.sample(&family, rng);
            (s.values[0], s.levels[0])
        });
        if unit {
            let forced = draws.iter().all(|&(v, l)| v == SupValue::Finite(l));
            rec.check(Check::holds("unit_value_is_first_level", forced));
        }
        let values: Vec<SupValue> = draws.iter().map(|d| d.0).collect();
        marginal_block(c, rec, &mut csv, beta, &iv, &values)?;
    }
    Ok(csv)
}

fn interval_label(iv: &Interval) -> String {
    if iv.closed {
        format!("[{},{}]", iv.lo, iv.hi)
    } else {
        format!("({},{})", iv.lo, iv.hi)
    }
}

fn marginal_block(
    c: &ExperimentConfig,
    rec: &mut ResultRecord,
    csv: &mut CsvTable,
    beta: f64,
    iv: &Interval,
    values: &[SupValue],
) -> Result<()> {
    let label = interval_label(iv);
    let len = iv.len();
    let key = if len >= 1.0 { "ks_unit" } else { "ks_partial" };
    for (i, v) in values.iter().enumerate() {
        csv.push([format!("\"{label}\""), i.to_string(), v.to_string()]);
    }
    let truncated = values.iter().filter(|v| !v.is_finite()).count();
    let sample = Sample::new(values.iter().filter_map(|v| v.finite()).collect())?;
    let ks = ks_one_sample(&sample, |x| gumbel_marginal_cdf(len.min(1.0), x, beta).expect("length in (0,1]"))?;
    let name = format!("ks_{label}");
    rec.ks(&name, ks);
    rec.check(Check::lt(&name, ks, c.threshold(key), key));
    let frac = truncated as f64 / values.len() as f64;
    let name = format!("truncated_fraction_{label}");
    rec.estimate(&name, frac, 0.0);
    rec.check(Check::lt(name, frac, c.threshold("max_truncated_fraction"), "max_truncated_fraction"));
    Ok(())
}

fn hitting_law(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let law = return_law(c)?;
    let beta = law.beta();
    let count = reps(c);
    let sets = RegenSampler::new(beta, c.resolution.expect("resolved"))?;
    let (k, allow) = (c.threshold("sigma_mult"), c.threshold("allowance"));
    let mut csv = CsvTable::new(&["t", "estimate", "stderr", "target"]);
    for &t in c.grid.as_ref().expect("resolved") {
        if t > 1.0 {
            return Err(Error::Config("hitting-law times must lie in (0,1]".into()));
        }
        let hits = replicate_map(c.seed, &format!("hitting-law/t={t}"), count, |_, rng| {
            sets.sample(rng).hits_closed(0.0, t).expect("0 < t")
        });
        let est = McEstimate::from_counts(hits.iter().filter(|&&h| h).count() as u64, count)?;
        let target = t.powf(1.0 - beta);
        let name = format!("hit_t={t}");
        rec.estimate(&name, est.estimate, est.stderr);
        rec.target(&name, target, "t^(1-beta), the shift law of the regenerative set");
        let mut chk = Check::lt(&name, (est.estimate - target).abs(), k * est.stderr + allow, "sigma_mult");
        chk.threshold_key = Some("sigma_mult*stderr+allowance".into());
        rec.check(chk);
        csv.push([fmt_f(t), fmt_f(est.estimate), fmt_f(est.stderr), fmt_f(target)]);
    }
    // Law of the rescaled first visit.
    let n = c.n.expect("resolved");
    let sampler = VisitSampler::new(law, n)?;
    let mins = replicate_map(c.seed, "hitting-law/min", count, |_, rng| {
        sampler.sample_initial(rng) as f64 / n as f64
    });
    let ks = ks_one_sample(&Sample::new(mins)?, |x| x.clamp(0.0, 1.0).powf(1.0 - beta))?;
    rec.ks("min_law", ks);
    rec.target_law("min_law", "x^(1-beta)");
    rec.check(Check::lt("ks_min_law", ks, c.threshold("ks_min_law"), "ks_min_law"));
    Ok(csv)
}

fn two_sample(
    c: &ExperimentConfig,
    rec: &mut ResultRecord,
    lhs: (&str, Interval, f64),
    rhs: (&str, Interval, f64),
) -> Result<CsvTable> {
    let count = reps(c);
    let (a, ta) = limit_values(c, lhs.0, &IntervalFamily::single(lhs.1), count, lhs.2)?;
    let (b, tb) = limit_values(c, rhs.0, &IntervalFamily::single(rhs.1), count, rhs.2)?;
    let ks = ks_two_sample(&a, &b)?;
    rec.ks("two_sample", ks);
    rec.estimate("truncated_lhs", ta as f64, 0.0);
    rec.estimate("truncated_rhs", tb as f64, 0.0);
    rec.check(Check::lt("ks", ks, c.threshold("ks"), "ks"));
    let mut csv = CsvTable::new(&["side", "value"]);
    for (side, s) in [("lhs", &a), ("rhs", &b)] {
        for &v in s.values() {
            csv.push([side.to_string(), fmt_f(v)]);
        }
    }
    Ok(csv)
}

fn self_affinity(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let beta = return_law(c)?.beta();
    let (a, t0) = (c.param("a"), c.param("t0"));
    if !(a > 0.0 && a <= 1.0 && t0 > 0.0 && t0 <= 1.0) {
        return Err(Error::Config(format!("self-affinity needs a, t0 in (0,1], got a={a}, t0={t0}")));
    }
    let shift = (1.0 - beta) * a.ln();
    rec.target("shift", shift, "(1-beta) ln a, self-affinity of the limit sup-measure");
    two_sample(
        c,
        rec,
        ("self-affinity/scaled", Interval::closed(0.0, a * t0)?, 0.0),
        ("self-affinity/base", Interval::closed(0.0, t0)?, shift),
    )
}

fn stationarity(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let (r, t) = (c.param("r"), c.param("t"));
    if !(r >= 0.0 && t > 0.0 && r + t <= 1.0) {
        return Err(Error::Config(format!("stationarity needs 0 <= r, 0 < t, r + t <= 1, got r={r}, t={t}")));
    }
    rec.target("shift", 0.0, "translation invariance of the limit sup-measure");
    two_sample(
        c,
        rec,
        ("stationarity/shifted", Interval::open(r, r + t)?, 0.0),
        ("stationarity/base", Interval::open(0.0, t)?, 0.0),
    )
}

fn intersection_scaling(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let law = return_law(c)?;
    let window = Window::new(c.param("window_lo"), c.param("window_hi"))?;
    let ns = c.n_grid.clone().expect("resolved");
    if ns.len() < 3 {
        return Err(Error::Config("intersection-scaling needs at least three horizons".into()));
    }
    let count = reps(c);
    let mut csv = CsvTable::new(&["n", "estimate", "stderr"]);
    let mut ys = Vec::new();
    for &n in &ns {
        let sampler = VisitSampler::new(law, n)?;
        let hits = replicate_map(c.seed, &format!("intersection/n={n}"), count, |_, rng| {
            let x = sampler.sample(rng);
            let y = sampler.sample(rng);
            sets_intersect_in(&x, &y, window)
        });
        let est = McEstimate::from_counts(hits.iter().filter(|&&h| h).count() as u64, count)?;
        if est.estimate == 0.0 {
            return Err(Error::Resource(format!("no intersections observed at n={n}; increase replicates")));
        }
        rec.estimate(&format!("p_n={n}"), est.estimate, est.stderr);
        csv.push([n.to_string(), fmt_f(est.estimate), fmt_f(est.stderr)]);
        ys.push(est.estimate);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = loglog_slope(&xs, &ys)?;
    let target = 2.0 * law.beta() - 1.0;
    rec.slopes.push(SlopeEntry { name: "intersection".into(), slope: fit.slope, stderr: fit.stderr });
    rec.target("slope", target, "2 beta - 1, from p_n of order n^beta / (w_n L(n))");
    rec.check(Check::lt(
        "slope_deviation",
        (fit.slope - target).abs(),
        c.threshold("slope_tolerance"),
        "slope_tolerance",
    ));

    // Annealed probability as the mean of quenched ones, at the smallest horizon.
    let n0 = ns[0];
    let sampler = VisitSampler::new(law, n0)?;
    let inner = count_param(c, "quenched_inner")?;
    let quenched = try_replicate_map(c.seed, "intersection/quenched", count_param(c, "quenched_outer")?, |_, rng| {
        let outer = sampler.sample(rng);
        quenched_given(&sampler, &outer, window, inner, rng)
    })?;
    let q = McEstimate::from_values(&quenched)?;
    let annealed = &rec.estimates[0];
    let (pa, sa) = (annealed.estimate, annealed.stderr);
    rec.estimate(&format!("quenched_mean_n={n0}"), q.estimate, q.stderr);
    let combined = (q.stderr * q.stderr + sa * sa).sqrt();
    let k = c.threshold("sigma_mult");
    let mut chk = Check::lt("annealed_equals_mean_quenched", (q.estimate - pa).abs(), k * combined, "sigma_mult");
    chk.threshold_key = Some("sigma_mult*combined_stderr".into());
    rec.check(chk);
    Ok(csv)
}

fn range_stats(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let law = return_law(c)?;
    let n = c.n.expect("resolved");
    let beta = law.beta();
    let counts = replicate_map(c.seed, "range/sojourn", reps(c), |_, rng| sojourn_count(&law, n, rng) as f64);
    let soj = McEstimate::from_values(&counts)?;
    let soj_target = (n as f64).powf(beta) / (gamma(1.0 + beta) * gamma(1.0 - beta)) / law.slowly_varying(n);
    rec.estimate("mean_sojourn", soj.estimate, soj.stderr);
    rec.target("mean_sojourn", soj_target, "n^beta / (Gamma(1+beta) Gamma(1-beta) L(n))");
    rec.check(Check::lt(
        "sojourn_rel_error",
        (soj.estimate / soj_target - 1.0).abs(),
        c.threshold("sojourn_rel_tol"),
        "sojourn_rel_tol",
    ));

    let point = ReturnLaw::new(c.param("point_beta"), 0.0)?;
    let pn = count_param(c, "point_n")?;
    let pr = count_param(c, "point_replicates")?;
    let hits = replicate_map(c.seed, "range/point", pr, |_, rng| hits_point(&point, pn, rng));
    let hit = McEstimate::from_counts(hits.iter().filter(|&&h| h).count() as u64, pr)?;
    let pb = point.beta();
    let hit_target = (pn as f64).powf(pb - 1.0) / (gamma(pb) * gamma(1.0 - pb)) / point.slowly_varying(pn);
    rec.estimate("point_hit", hit.estimate, hit.stderr);
    rec.target("point_hit", hit_target, "n^(beta-1) / (Gamma(beta) Gamma(1-beta) L(n))");
    rec.check(Check::lt(
        "point_rel_error",
        (hit.estimate / hit_target - 1.0).abs(),
        c.threshold("point_rel_tol"),
        "point_rel_tol",
    ));

    let mut csv = CsvTable::new(&["statistic", "beta", "n", "estimate", "stderr", "target"]);
    csv.push([
        "mean_sojourn".into(),
        fmt_f(beta),
        n.to_string(),
        fmt_f(soj.estimate),
        fmt_f(soj.stderr),
        fmt_f(soj_target),
    ]);
    csv.push([
        "point_hit".into(),
        fmt_f(pb),
        pn.to_string(),
        fmt_f(hit.estimate),
        fmt_f(hit.stderr),
        fmt_f(hit_target),
    ]);
    Ok(csv)
}

fn centering(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let model = tail_model(c)?;
    let table = WanderingTable::new(return_law(c)?);
    let ns = c.n_grid.clone().expect("resolved");
    if ns.len() < 2 {
        return Err(Error::Config("centering-phenomenon needs at least two horizons".into()));
    }
    let mut csv = CsvTable::new(&["n", "ratio", "a_n", "b_n", "centering_extra"]);
    let mut ratios = Vec::with_capacity(ns.len());
    for &n in &ns {
        let norm = normalizers(&model, &table, n)?;
        let r = centering_ratio(&model, &table, n)?;
        csv.push([n.to_string(), fmt_f(r), fmt_f(norm.a_n), fmt_f(norm.b_n), fmt_f(norm.centering_extra)]);
        ratios.push(r);
    }
    rec.series.push(Series { name: "centering_ratio".into(), x: ns.iter().map(|&n| n as f64).collect(), y: ratios.clone() });
    let last_first = ratios[ratios.len() - 1] / ratios[0];
    rec.estimate("last_over_first", last_first, 0.0);
    if c.expect.as_deref() == Some("diverges") {
        rec.check(Check::holds("strictly_increasing", ratios.windows(2).all(|w| w[1] > w[0])));
        rec.check(Check::gt("last_over_first", last_first, c.threshold("diverge_ratio"), "diverge_ratio"));
    } else {
        rec.check(Check::holds("strictly_decreasing", ratios.windows(2).all(|w| w[1] < w[0])));
        rec.check(Check::lt("last_over_first", last_first, c.threshold("vanish_ratio"), "vanish_ratio"));
    }
    Ok(csv)
}

const PROCESS_TAG: &str = "process-convergence";

fn process_convergence(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let model = tail_model(c)?;
    let law = return_law(c)?;
    let n = c.n.expect("resolved");
    let times = c.grid.clone().expect("resolved");
    if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|&t| t > 1.0) {
        return Err(Error::Config("process-convergence times must increase within (0,1]".into()));
    }
    let sim = PathSimulator::new(model, law, n)?;
    let norm = normalizers(&model, &WanderingTable::new(law), n)?;
    let family = c.intervals.clone().unwrap_or_else(|| IntervalFamily::single(Interval::closed(0.0, 1.0).expect("unit")));
    let count = reps(c);
    let rows = try_replicate_map(c.seed, PROCESS_TAG, count, |_, rng| -> Result<_> {
        let path = sim.simulate(rng)?;
        let m = normalize(&sup_measure_eval(&path, &family), &norm)?;
        let run: Vec<f64> = running_max_path(&path, &times)?.into_iter().map(|v| (v - norm.b_n) / norm.a_n).collect();
        Ok((m.raw, m.normalized.expect("normalized"), run, path.term_count))
    })?;

    let beta = law.beta();
    for (k, iv) in family.intervals().iter().enumerate() {
        let label = interval_label(iv);
        let ms: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
        let len = iv.len().min(1.0);
        let ks = ks_one_sample(&Sample::new(ms)?, |x| gumbel_marginal_cdf(len, x, beta).expect("length in (0,1]"))?;
        let name = format!("ks_gumbel_{label}");
        rec.ks(&name, ks);
        rec.check(Check::lt(name, ks, c.threshold("ks_gumbel"), "ks_gumbel"));
    }
    rec.target_law("limit", "exp(-t^(1-beta) e^(-x)) for (M_n(I) - b_n)/a_n, I of length t");

    let terms: Vec<f64> = rows.iter().map(|r| r.3 as f64).collect();
    let t = McEstimate::from_values(&terms)?;
    let expected = sim.cutoff();
    rec.estimate("term_count", t.estimate, t.stderr);
    rec.target("term_count", expected, "w nu_bar(x0), the Poisson mean of retained arrivals");
    let k = c.threshold("sigma_mult");
    let mut chk = Check::lt(
        "term_count_mean",
        (t.estimate - expected).abs(),
        k * (expected / count as f64).sqrt(),
        "sigma_mult",
    );
    chk.threshold_key = Some("sigma_mult*sqrt(mean/replicates)".into());
    rec.check(chk);
    let monotone = rows.iter().all(|r| r.2.windows(2).all(|w| w[0] <= w[1]));
    rec.check(Check::holds("running_max_monotone", monotone));

    // Finite-dimensional comparison against the extremal process: diagnostic only.
    let levels = [-0.5, 0.5, 1.5];
    let mut max_dev: f64 = 0.0;
    for (i, &x1) in levels.iter().enumerate() {
        for &x2 in &levels[i..] {
            let xs: Vec<f64> = std::iter::once(x1).chain(std::iter::repeat(x2)).take(times.len()).collect();
            let target = extremal_fdd_cdf(&times, &xs, beta)?;
            let hits = rows.iter().filter(|r| r.2.iter().zip(&xs).all(|(v, x)| v <= x)).count() as u64;
            let est = McEstimate::from_counts(hits, count)?;
            let name = format!("fdd_x1={x1}_x2={x2}");
            rec.estimate(&name, est.estimate, est.stderr);
            rec.target(&name, target, "extremal process joint CDF at the running-max times");
            max_dev = max_dev.max((est.estimate - target).abs());
        }
    }
    rec.estimate("fdd_max_abs_deviation", max_dev, 0.0);
    rec.estimate("normalizer_a_n", norm.a_n, 0.0);
    rec.estimate("normalizer_b_n", norm.b_n, 0.0);
    rec.estimate("centering_extra", norm.centering_extra, 0.0);

    let mut csv = CsvTable::new(&["replicate", "interval", "max_raw", "max_normalized", "term_count"]);
    for (i, r) in rows.iter().enumerate() {
        for (k, iv) in family.intervals().iter().enumerate() {
            csv.push([
                i.to_string(),
                format!("\"{}\"", interval_label(iv)),
                fmt_f(r.0[k]),
                fmt_f(r.1[k]),
                r.3.to_string(),
            ]);
        }
    }
    Ok(csv)
}

/// Closed-form large-`x` behaviour of `ζ`.
fn zeta_asymptote(family: &TailFamily, x: f64) -> f64 {
    let lx = x.ln();
    match *family {
        TailFamily::Lognormal { lambda, gamma, .. } => lx.powf(1.0 / gamma) / (gamma * lambda.powf(1.0 / gamma)),
        TailFamily::SuperLognormal { mu, alpha, .. } => {
            lx.ln().powf((1.0 - alpha) / alpha) / (alpha * mu.powf(1.0 / alpha))
        }
    }
}

fn mtg4(c: &ExperimentConfig, rec: &mut ResultRecord) -> Result<CsvTable> {
    let model = tail_model(c)?;
    let family = model.family;

    let mut worst: f64 = 0.0;
    for y in [1e2, 1e6, 1e12] {
        let v = model.quantile_v(y)?;
        worst = worst.max((1.0 / model.nu_bar(v)? - y).abs() / y);
    }
    rec.estimate("roundtrip_max_rel_error", worst, 0.0);
    rec.check(Check::lt("roundtrip", worst, c.threshold("roundtrip_rel_tol"), "roundtrip_rel_tol"));

    let x = (model.x0 * 100.0).max(1e6);
    let dx = x * 1e-5;
    let fd = -2.0 * dx / (model.log_nu_bar(x + dx)? - model.log_nu_bar(x - dx)?);
    let h = model.aux_h(x)?;
    let rel = (h - fd).abs() / h;
    rec.estimate("hazard_fd_rel_error", rel, 0.0);
    rec.check(Check::lt("hazard_fd", rel, c.threshold("hazard_rel_tol"), "hazard_rel_tol"));

    let grid = c.grid.clone().expect("resolved");
    let rows = mtg4_diagnostics(&model, &grid, c.param("alpha"), c.param("rho"), c.param("delta"))?;
    let mut zetas = Vec::with_capacity(grid.len());
    let mut ratios = Vec::with_capacity(grid.len());
    let mut csv = CsvTable::new(&["x", "zeta", "zeta_ratio", "r4", "r5_min", "growth"]);
    for r in &rows {
        let z = model.zeta(r.x)?;
        let ratio = z / zeta_asymptote(&family, r.x);
        let r5_min = r.r5.iter().copied().fold(f64::INFINITY, f64::min);
        csv.push([fmt_f(r.x), fmt_f(z), fmt_f(ratio), fmt_f(r.r4), fmt_f(r5_min), fmt_f(r.growth)]);
        zetas.push(z);
        ratios.push(ratio);
    }
    let x: Vec<f64> = rows.iter().map(|r| r.x).collect();
    rec.series.push(Series { name: "zeta".into(), x: x.clone(), y: zetas.clone() });
    rec.series.push(Series { name: "zeta_ratio".into(), x: x.clone(), y: ratios.clone() });
    rec.series.push(Series { name: "r4".into(), x: x.clone(), y: rows.iter().map(|r| r.r4).collect() });
    rec.series.push(Series { name: "growth".into(), x, y: rows.iter().map(|r| r.growth).collect() });

    rec.check(Check::holds("zeta_increasing", zetas.windows(2).all(|w| w[1] > w[0])));
    rec.check(Check::holds(
        "zeta_ratio_approaches_one",
        ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()),
    ));
    let last = (ratios[ratios.len() - 1] - 1.0).abs();
    rec.check(Check::lt("zeta_ratio_final", last, c.threshold("zeta_final_tol"), "zeta_final_tol"));
    let r4_spread = rows.iter().map(|r| r.r4.max(1.0 / r.r4)).fold(0.0, f64::max);
    rec.check(Check::lt("r4_bounded", r4_spread, c.threshold("r4_bound"), "r4_bound"));
    let r5_min = rows.iter().flat_map(|r| r.r5.iter().copied()).fold(f64::INFINITY, f64::min);
    rec.check(Check::gt("r5_floor", r5_min, c.threshold("r5_floor"), "r5_floor"));
    rec.check(Check::holds("growth_increasing", rows.windows(2).all(|w| w[1].growth > w[0].growth)));
    rec.target("zeta_ratio", 1.0, "closed-form asymptotic index of the tail family");
    Ok(csv)
}
