//! Named experiments with reproducible seeding and self-contained JSON
//! result records.

mod experiments;
mod seed;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::IntervalFamily;
use crate::renewal::ReturnLaw;
use crate::tail::TailFamily;

pub use seed::{replicate_map, seed_substream, try_replicate_map, StreamRng, BLOCK};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the configured master seed.
pub const SEED_ENV: &str = "EXTREMAL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    MarginalGumbel,
    HittingLaw,
    SelfAffinity,
    Stationarity,
    IntersectionScaling,
    RangeStats,
    CenteringPhenomenon,
    ProcessConvergence,
    Mtg4Diagnostics,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::MarginalGumbel,
        Experiment::HittingLaw,
        Experiment::SelfAffinity,
        Experiment::Stationarity,
        Experiment::IntersectionScaling,
        Experiment::RangeStats,
        Experiment::CenteringPhenomenon,
        Experiment::ProcessConvergence,
        Experiment::Mtg4Diagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MarginalGumbel => "marginal-gumbel",
            Experiment::HittingLaw => "hitting-law",
            Experiment::SelfAffinity => "self-affinity",
            Experiment::Stationarity => "stationarity",
            Experiment::IntersectionScaling => "intersection-scaling",
            Experiment::RangeStats => "range-stats",
            Experiment::CenteringPhenomenon => "centering-phenomenon",
            Experiment::ProcessConvergence => "process-convergence",
            Experiment::Mtg4Diagnostics => "mtg4-diagnostics",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!("unknown experiment `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Experiment configuration as read from JSON.
///
/// Unset fields are filled with the experiment's defaults by
/// [`ExperimentConfig::resolve`]; records echo the resolved form, so every
/// threshold used for a pass flag is visible there.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailFamily>,
    /// Rescale the tail so that `ν̄(x₀) = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_mass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_law: Option<ReturnLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    /// Real-valued grid: interval lengths, tail arguments, or time points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<IntervalFamily>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_out: Option<PathBuf>,
    /// Expected direction for the centering experiment: `vanishes` or `diverges`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn for_experiment(e: Experiment) -> Self {
        ExperimentConfig { experiment: e.name().to_string(), ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<Experiment> {
        self.experiment.parse()
    }

    /// Fills every unset field with the experiment's default and validates.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        experiments::resolve(self)
    }

    pub(crate) fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    pub(crate) fn threshold(&self, key: &str) -> f64 {
        self.thresholds[key]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub name: String,
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub name: String,
    /// Absent when the target is a distribution rather than a number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub provenance: String,
}

/// A sequence of `(x, y)` values, e.g. a ratio trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// One pass/fail decision, with everything needed to recompute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `lt`, `gt`, or `holds` (value is 1 for true).
    pub relation: String,
    pub threshold: f64,
    /// Key of the threshold in the config echo, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_key: Option<String>,
    pub pass: bool,
}

impl Check {
    pub fn lt(name: impl Into<String>, value: f64, threshold: f64, key: &str) -> Self {
        Check {
            name: name.into(),
            value,
            relation: "lt".into(),
            threshold,
            threshold_key: Some(key.into()),
            pass: value < threshold,
        }
    }

    pub fn gt(name: impl Into<String>, value: f64, threshold: f64, key: &str) -> Self {
        Check {
            name: name.into(),
            value,
            relation: "gt".into(),
            threshold,
            threshold_key: Some(key.into()),
            pass: value > threshold,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            relation: "holds".into(),
            threshold: 1.0,
            threshold_key: None,
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub estimates: Vec<EstimateEntry>,
    pub ks: Vec<NamedValue>,
    pub slopes: Vec<SlopeEntry>,
    pub targets: Vec<TargetEntry>,
    pub series: Vec<Series>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub seed: u64,
    pub wall_clock_secs: f64,
}

impl ResultRecord {
    fn new(config: &ExperimentConfig) -> Self {
        ResultRecord {
            schema: SCHEMA_VERSION,
            experiment: config.experiment.clone(),
            config: config.clone(),
            estimates: Vec::new(),
            ks: Vec::new(),
            slopes: Vec::new(),
            targets: Vec::new(),
            series: Vec::new(),
            checks: Vec::new(),
            pass: false,
            seed: config.seed,
            wall_clock_secs: 0.0,
        }
    }

    pub(crate) fn estimate(&mut self, name: &str, estimate: f64, stderr: f64) {
        self.estimates.push(EstimateEntry { name: name.into(), estimate, stderr });
    }

    pub(crate) fn ks(&mut self, name: &str, value: f64) {
        self.ks.push(NamedValue { name: name.into(), value });
    }

    pub(crate) fn target(&mut self, name: &str, value: f64, provenance: &str) {
        self.targets.push(TargetEntry { name: name.into(), value: Some(value), provenance: provenance.into() });
    }

    pub(crate) fn target_law(&mut self, name: &str, provenance: &str) {
        self.targets.push(TargetEntry { name: name.into(), value: None, provenance: provenance.into() });
    }

    pub(crate) fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Record without the wall-clock field, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        ResultRecord { wall_clock_secs: 0.0, ..self.clone() }
    }
}

/// A CSV table written verbatim with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Extra debug dumps requested alongside an experiment.
#[derive(Debug, Clone, Default)]
pub struct DebugOutputs {
    /// One sampled visit set, newline-delimited.
    pub visits_out: Option<PathBuf>,
    /// The first simulated path as `time,value` CSV.
    pub path_csv: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub record: ResultRecord,
    pub csv: Option<CsvTable>,
}

/// Resolves the configuration, runs the experiment on a pool of
/// `config.workers` threads (all cores when unset) and returns the record.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with(config, &DebugOutputs::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, debug: &DebugOutputs) -> Result<ExperimentOutput> {
    let resolved = config.resolve()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = resolved.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Resource(e.to_string()))?;
    let start = Instant::now();
    let mut out = pool.install(|| experiments::run(&resolved, debug))?;
    out.record.pass = !out.record.checks.is_empty() && out.record.checks.iter().all(|c| c.pass);
    out.record.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Writes the JSON record and CSV table to the configured paths.
pub fn write_outputs(out: &ExperimentOutput) -> Result<()> {
    let cfg = &out.record.config;
    if let Some(p) = &cfg.json_out {
        let f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        let mut w = std::io::BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, &out.record)?;
        writeln!(w)?;
    }
    if let (Some(p), Some(csv)) = (&cfg.csv_out, &out.csv) {
        let f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        csv.write(std::io::BufWriter::new(f))?;
    }
    Ok(())
}
