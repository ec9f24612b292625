//! Batch runner: config ingestion, subcommand dispatch, run manifests.
//!
//! Every subcommand resolves one config (TOML file, then flag overrides),
//! runs, and writes its outputs plus `manifest.json` into
//! `<root>/<timestamp>-<hash>/`, where `<root>` is `runs` or the value of
//! `STABLEDRIFT_RUNS_DIR`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::drift::{synth_besov_field, Drift, DriftSpec, GridDrift};
use crate::error::{Error, Result};
use crate::euler::{EulerConfig, EulerScheme, GridConfig};
use crate::heatkernel::{block_l1_sweep, density_unchecked, log_trapezoid};
use crate::io;
use crate::levy::{AtomConfig, Convention, ProcessConfig, ProcessSpec, SphereConfig, SphereKind};
use crate::littlewood_paley::{build_partition, Exponent, GridFunction};
use crate::stats::{mean_stderr, quantile_sorted, sorted_copy};
use crate::stream::stream;
use crate::weak_error::{
    control_plateaus, run_bounded_rate, run_distributional_rate, run_stability_probe, BoundedRateConfig,
    DistributionalRateConfig, RateReport, StabilityConfig,
};

pub mod validate;

/// Environment variable replacing the `runs` output root.
pub const RUNS_DIR_ENV: &str = "STABLEDRIFT_RUNS_DIR";

const CSV_HELP: &str = "\
Output files (in the run directory):
  sample      samples.csv       x0..x{d-1}, one increment per row
  besov       field.csv         x,value of the (mollified) field; besov.json
  heatkernel  block_l1.csv      t,j,l1 = ||R_j p_t||_1
              integrated.csv    j,integral,envelope over the time grid
              density.csv       x,value of the periodized p_t at t_max
  euler       laws/law.bin      binary law (magic, dim, count, f64 LE samples)
              laws/law.json     law manifest with content hash; summary.json
  rate        report.csv        series,n,error,stderr,excluded; report.json
Every run writes manifest.json. Exit codes: 0 success, 1 failure,
2 configuration error.";

#[derive(Debug, Parser)]
#[command(name = "stabledrift", version, about = "Weak-error experiments for stable-driven SDEs", after_help = CSV_HELP)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Exact run directory, bypassing `<root>/<timestamp>-<hash>`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suites.
    Validate {
        /// Exactness tier only.
        #[arg(long)]
        quick: bool,
    },
    /// Draw stable increments.
    Sample(SampleArgs),
    /// Besov norm report for a drift.
    Besov(BesovArgs),
    /// Block-L1 sweeps of the heat kernel.
    Heatkernel(HeatArgs),
    /// Simulate an Euler ensemble.
    Euler(EulerArgs),
    /// Weak-rate experiments.
    Rate(RateArgs),
    /// Re-run a manifest and compare every output hash.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dim: Option<u64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Cylindrical,
    Isotropic,
}

#[derive(Debug, Args)]
pub struct BesovArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replace the drift by a lacunary field of this regularity.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub levels: Option<u64>,
    /// Mollify the lacunary field at this level.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub grid_size: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct HeatArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<u64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EulerArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Bounded,
    Distributional,
    Stability,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Coupling exponent, or `auto` for `1/alpha`.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Comma-separated n-ladder (m-ladder for `stability`).
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn default_sample_count() -> usize {
    100_000
}

fn default_one() -> f64 {
    1.0
}

fn default_d() -> usize {
    1
}

fn default_kind() -> SphereKind {
    SphereKind::Cylindrical
}

/// Config of `sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub alpha: f64,
    #[serde(default = "default_kind")]
    pub kind: SphereKind,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default = "default_one")]
    pub dt: f64,
    #[serde(default = "default_sample_count")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_besov_drift() -> DriftSpec {
    DriftSpec::lacunary(0.2, 10, 1.0, 0)
}

fn default_inf() -> String {
    "inf".into()
}

/// Config of `besov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovConfig {
    #[serde(default = "default_besov_drift")]
    pub drift: DriftSpec,
    #[serde(default)]
    pub grid: GridConfig,
    /// Smoothness index; defaults to `-beta` of the drift (or 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default = "default_inf")]
    pub p: String,
    #[serde(default = "default_inf")]
    pub q: String,
}

fn default_heat_alpha() -> f64 {
    1.5
}

fn default_heat_period() -> f64 {
    64.0
}

fn default_heat_levels() -> Vec<i32> {
    (-1..=9).collect()
}

fn default_t_min() -> f64 {
    (-20.0f64).exp2()
}

fn default_per_octave() -> u32 {
    8
}

/// Config of `heatkernel` (one-dimensional).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    #[serde(default = "default_heat_alpha")]
    pub alpha: f64,
    #[serde(default = "default_heat_period")]
    pub period: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_heat_levels")]
    pub levels: Vec<i32>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_one")]
    pub t_max: f64,
    #[serde(default = "default_per_octave")]
    pub per_octave: u32,
}

fn default_grid_size() -> usize {
    1 << 16
}

/// Record of one run; replaying it reproduces every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand path, e.g. `["rate", "bounded"]`.
    pub command: Vec<String>,
    /// Fully resolved config.
    pub config: serde_json::Value,
    pub config_hash: String,
    /// Hash of the config file as read, when one was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
    pub seed: u64,
    pub samples: u64,
    pub threads: usize,
    /// Output path (relative to the run directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub started: String,
    pub wall_clock_secs: f64,
}

/// Files produced by a run, relative to the run directory.
type Outputs = Vec<(String, Vec<u8>)>;

/// Resolved job: what to run and with which config.
#[derive(Debug, Clone)]
enum Job {
    Sample(SampleConfig),
    Besov(BesovConfig),
    Heat(HeatConfig),
    Euler(EulerConfig),
    Bounded(BoundedRateConfig),
    Distributional(DistributionalRateConfig),
    Stability(StabilityConfig),
}

impl Job {
    fn command(&self) -> Vec<String> {
        let v: &[&str] = match self {
            Job::Sample(_) => &["sample"],
            Job::Besov(_) => &["besov"],
            Job::Heat(_) => &["heatkernel"],
            Job::Euler(_) => &["euler"],
            Job::Bounded(_) => &["rate", "bounded"],
            Job::Distributional(_) => &["rate", "distributional"],
            Job::Stability(_) => &["rate", "stability"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    fn config_json(&self) -> Result<serde_json::Value> {
        Ok(match self {
            Job::Sample(c) => serde_json::to_value(c)?,
            Job::Besov(c) => serde_json::to_value(c)?,
            Job::Heat(c) => serde_json::to_value(c)?,
            Job::Euler(c) => serde_json::to_value(c)?,
            Job::Bounded(c) => serde_json::to_value(c)?,
            Job::Distributional(c) => serde_json::to_value(c)?,
            Job::Stability(c) => serde_json::to_value(c)?,
        })
    }

    fn from_manifest(command: &[String], config: serde_json::Value) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::Config(format!("manifest config: {e}"));
        let path: Vec<&str> = command.iter().map(String::as_str).collect();
        Ok(match path.as_slice() {
            ["sample"] => Job::Sample(serde_json::from_value(config).map_err(bad)?),
            ["besov"] => Job::Besov(serde_json::from_value(config).map_err(bad)?),
            ["heatkernel"] => Job::Heat(serde_json::from_value(config).map_err(bad)?),
            ["euler"] => Job::Euler(serde_json::from_value(config).map_err(bad)?),
            ["rate", "bounded"] => Job::Bounded(serde_json::from_value(config).map_err(bad)?),
            ["rate", "distributional"] => Job::Distributional(serde_json::from_value(config).map_err(bad)?),
            ["rate", "stability"] => Job::Stability(serde_json::from_value(config).map_err(bad)?),
            other => return Err(Error::Config(format!("manifest names unknown command {other:?}"))),
        })
    }

    fn seed_and_samples(&self) -> (u64, u64) {
        match self {
            Job::Sample(c) => (c.seed, c.samples as u64),
            Job::Besov(c) => (drift_seed(&c.drift), 0),
            Job::Heat(_) => (0, 0),
            Job::Euler(c) => (c.seed, c.samples as u64),
            Job::Bounded(c) => (c.seed, c.samples as u64),
            Job::Distributional(c) => (c.seed, c.samples as u64),
            Job::Stability(c) => (c.seed, c.samples as u64),
        }
    }

    fn run(&self) -> Result<(Outputs, bool)> {
        match self {
            Job::Sample(c) => run_sample(c).map(|o| (o, true)),
            Job::Besov(c) => run_besov(c).map(|o| (o, true)),
            Job::Heat(c) => run_heat(c).map(|o| (o, true)),
            Job::Euler(c) => run_euler(c).map(|o| (o, true)),
            Job::Bounded(c) => report_outputs(run_bounded_rate(c)?),
            Job::Distributional(c) => {
                let r = run_distributional_rate(c)?;
                let ok = !c.control || control_plateaus(&r);
                let (o, passed) = report_outputs(r)?;
                Ok((o, passed && ok))
            }
            Job::Stability(c) => report_outputs(run_stability_probe(c)?),
        }
    }
}

fn drift_seed(d: &DriftSpec) -> u64 {
    match d {
        DriftSpec::Lacunary { seed, .. } => *seed,
        DriftSpec::Mollified { base, .. } => drift_seed(base),
        DriftSpec::Smooth { .. } => 0,
    }
}

fn report_outputs(r: RateReport) -> Result<(Outputs, bool)> {
    let passed = r.passed.unwrap_or(true);
    Ok((
        vec![
            ("report.json".into(), r.to_json()?.into_bytes()),
            ("report.csv".into(), r.to_csv().into_bytes()),
        ],
        passed,
    ))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

fn run_sample(c: &SampleConfig) -> Result<Outputs> {
    let spec = ProcessSpec::from_config(&ProcessConfig {
        alpha: c.alpha,
        sphere: SphereConfig {
            kind: c.kind,
            d: c.d,
            atoms: c.atoms.clone(),
        },
        convention: c.convention,
    })?;
    crate::error::ensure(c.dt > 0.0 && c.samples >= 1, || "need dt > 0 and samples >= 1".into())?;
    use rayon::prelude::*;
    let rows: Vec<Vec<f64>> = (0..c.samples as u64)
        .into_par_iter()
        .map(|i| spec.sample_increment(c.dt, &mut stream(c.seed, i)))
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(vec![("samples.csv".into(), io::samples_csv(&flat, spec.dim()).into_bytes())])
}

#[derive(Serialize)]
struct BesovReport {
    s: f64,
    p: String,
    q: String,
    norm: crate::littlewood_paley::BesovNorm,
    sup_norm: f64,
    /// `(j, ‖R_j f‖_∞)`.
    blocks: Vec<(i32, f64)>,
    declared_beta: Option<f64>,
}

fn run_besov(c: &BesovConfig) -> Result<Outputs> {
    let an = c.grid.analyzer()?;
    let field: GridFunction = match &c.drift {
        DriftSpec::Lacunary { .. } => synth_besov_field(&c.drift, &an)?,
        other => match Drift::build(other, Some(&an))? {
            Drift::Grid(g) => GridDrift::grid(&g).clone(),
            Drift::Smooth(f) => an.sample(|x| f.eval(x[0])),
        },
    };
    let s = c.s.unwrap_or_else(|| -c.drift.declared_beta().unwrap_or(0.0));
    let p: Exponent = c.p.parse()?;
    let q: Exponent = c.q.parse()?;
    let norm = an.besov_norm(&field, s, p, q)?;
    let blocks = an
        .blocks(&field)?
        .iter()
        .enumerate()
        .map(|(i, b)| (i as i32 - 1, b.sup_norm()))
        .collect();
    let report = BesovReport {
        s,
        p: p.to_string(),
        q: q.to_string(),
        norm,
        sup_norm: field.sup_norm(),
        blocks,
        declared_beta: c.drift.declared_beta(),
    };
    Ok(vec![
        ("besov.json".into(), json_bytes(&report)?),
        ("field.csv".into(), io::grid_csv(&field).into_bytes()),
    ])
}

fn run_heat(c: &HeatConfig) -> Result<Outputs> {
    use std::fmt::Write as _;
    crate::error::ensure(c.t_min > 0.0 && c.t_max > c.t_min && c.per_octave >= 1, || {
        "need 0 < t_min < t_max and per_octave >= 1".into()
    })?;
    let an = build_partition(1, c.period, c.grid_size)?;
    let spec = ProcessSpec::cylindrical(c.alpha, 1)?;
    let octaves = (c.t_max / c.t_min).log2();
    let steps = (octaves * c.per_octave as f64).ceil() as usize;
    let times: Vec<f64> = (0..=steps)
        .map(|k| c.t_min * (octaves * k as f64 / steps as f64).exp2())
        .collect();
    let sweep = block_l1_sweep(&spec, &times, &c.levels, &an)?;
    let mut table = String::from("t,j,l1\n");
    for (t, row) in times.iter().zip(&sweep) {
        for (j, v) in c.levels.iter().zip(row) {
            let _ = writeln!(table, "{t:e},{j},{v:e}");
        }
    }
    let mut integrated = String::from("j,integral,envelope\n");
    for (ji, j) in c.levels.iter().enumerate() {
        let col: Vec<f64> = sweep.iter().map(|r| r[ji]).collect();
        let env = times.iter().zip(&col).map(|(t, v)| t * v).fold(0.0, f64::max);
        let _ = writeln!(integrated, "{j},{:e},{env:e}", log_trapezoid(&times, &col));
    }
    let kg = density_unchecked(&spec, c.t_max, &an)?;
    Ok(vec![
        ("block_l1.csv".into(), table.into_bytes()),
        ("integrated.csv".into(), integrated.into_bytes()),
        ("density.csv".into(), io::grid_csv(&kg.density).into_bytes()),
    ])
}

#[derive(Serialize)]
struct EulerSummary {
    kept: usize,
    excluded: usize,
    level: Option<f64>,
    /// Per coordinate: mean, stderr, quartiles.
    coordinates: Vec<[f64; 5]>,
    content_hash: String,
}

fn run_euler(c: &EulerConfig) -> Result<Outputs> {
    let scheme = EulerScheme::new(c.clone())?;
    let law = scheme.simulate_ensemble()?;
    let coordinates = (0..law.dim())
        .map(|i| {
            let x = law.coordinate(i);
            let (m, se) = mean_stderr(&x);
            let s = sorted_copy(&x);
            [m, se, quantile_sorted(&s, 0.25), quantile_sorted(&s, 0.5), quantile_sorted(&s, 0.75)]
        })
        .collect();
    let summary = EulerSummary {
        kept: law.len(),
        excluded: law.manifest.excluded,
        level: scheme.level(),
        coordinates,
        content_hash: law.manifest.content_hash.clone(),
    };
    Ok(vec![
        ("laws/law.bin".into(), io::law_bytes(&law)),
        ("laws/law.json".into(), json_bytes(&law.manifest)?),
        ("summary.json".into(), json_bytes(&summary)?),
    ])
}

/// Reads a TOML file into a table (empty when no file is given).
fn load_table(path: Option<&Path>) -> Result<(toml::Table, Option<String>)> {
    let Some(path) = path else {
        return Ok((toml::Table::new(), None));
    };
    let text = io::read_text(path).map_err(|e| Error::Config(e.to_string()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    Ok((table, Some(io::sha256_hex(text.as_bytes()))))
}

fn typed<T: DeserializeOwned>(table: toml::Table, origin: &str) -> Result<T> {
    T::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(format!("{origin}: {}", e.message())))
}

fn set<V: Into<toml::Value>>(t: &mut toml::Table, key: &str, v: Option<V>) {
    if let Some(v) = v {
        t.insert(key.into(), v.into());
    }
}

fn int(v: Option<u64>) -> Result<Option<i64>> {
    v.map(|x| i64::try_from(x).map_err(|_| Error::Config(format!("{x} is too large"))))
        .transpose()
}

fn float_of(t: &toml::Table, key: &str) -> Option<f64> {
    match t.get(key)? {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn resolve(cmd: &Command) -> Result<(Job, Option<String>)> {
    let origin = |p: &Option<PathBuf>| p.as_ref().map_or("flags".to_string(), |p| p.display().to_string());
    match cmd {
        Command::Sample(a) => {
            let (mut t, src) = load_table(a.config.as_deref())?;
            set(&mut t, "alpha", a.alpha);
            set(&mut t, "d", int(a.dim)?);
            set(
                &mut t,
                "kind",
                a.kind.map(|k| match k {
                    KindArg::Cylindrical => "cylindrical",
                    KindArg::Isotropic => "isotropic",
                }),
            );
            set(&mut t, "dt", a.dt);
            set(&mut t, "samples", int(a.samples)?);
            set(&mut t, "seed", int(a.seed)?);
            Ok((Job::Sample(typed(t, &origin(&a.config))?), src))
        }
        Command::Besov(a) => {
            let (mut t, src) = load_table(a.config.as_deref())?;
            if let Some(beta) = a.beta {
                let mut d = toml::Table::new();
                d.insert("kind".into(), "lacunary".into());
                d.insert("beta".into(), beta.into());
                d.insert("levels".into(), int(a.levels)?.unwrap_or(10).into());
                d.insert("seed".into(), int(a.seed)?.unwrap_or(0).into());
                let drift = match a.m {
                    Some(m) => {
                        let mut w = toml::Table::new();
                        w.insert("kind".into(), "mollified".into());
                        w.insert("base".into(), d.into());
                        w.insert("m".into(), m.into());
                        w
                    }
                    None => d,
                };
                t.insert("drift".into(), drift.into());
            } else if a.levels.is_some() || a.m.is_some() || a.seed.is_some() {
                return Err(Error::Config("--levels, --m and --seed need --beta".into()));
            }
            set(&mut t, "s", a.s);
            set(&mut t, "p", a.p.clone());
            set(&mut t, "q", a.q.clone());
            if let Some(n) = int(a.grid_size)? {
                let g = t.entry("grid").or_insert_with(|| toml::Table::new().into());
                match g {
                    toml::Value::Table(g) => {
                        g.insert("size".into(), n.into());
                    }
                    _ => return Err(Error::Config("grid must be a table".into())),
                }
            }
            Ok((Job::Besov(typed(t, &origin(&a.config))?), src))
        }
        Command::Heatkernel(a) => {
            let (mut t, src) = load_table(a.config.as_deref())?;
            set(&mut t, "alpha", a.alpha);
            set(&mut t, "period", a.period);
            set(&mut t, "grid_size", int(a.grid_size)?);
            set(&mut t, "t_min", a.t_min);
            set(&mut t, "t_max", a.t_max);
            Ok((Job::Heat(typed(t, &origin(&a.config))?), src))
        }
        Command::Euler(a) => {
            let (mut t, src) = load_table(Some(&a.config))?;
            set(&mut t, "n", int(a.n)?);
            set(&mut t, "samples", int(a.samples)?);
            set(&mut t, "seed", int(a.seed)?);
            Ok((Job::Euler(typed(t, &a.config.display().to_string())?), src))
        }
        Command::Rate(a) => {
            let (mut t, src) = load_table(a.config.as_deref())?;
            set(&mut t, "alpha", a.alpha);
            set(&mut t, "beta", a.beta);
            set(&mut t, "samples", int(a.samples)?);
            set(&mut t, "seed", int(a.seed)?);
            let org = origin(&a.config);
            let job = match a.experiment {
                Experiment::Bounded => {
                    if a.beta.is_some() || a.gamma.is_some() {
                        return Err(Error::Config("--beta and --gamma do not apply to the bounded experiment".into()));
                    }
                    if let Some(l) = &a.ladder {
                        t.insert("ladder".into(), ladder_ints(l)?.into());
                    }
                    Job::Bounded(typed(t, &org)?)
                }
                Experiment::Distributional => {
                    if let Some(l) = &a.ladder {
                        t.insert("ladder".into(), ladder_ints(l)?.into());
                    }
                    let gamma = match a.gamma.as_deref() {
                        Some("auto") => None,
                        Some(g) => Some(g.parse::<f64>().map_err(|_| {
                            Error::Config(format!("--gamma expects a number or \"auto\", got {g:?}"))
                        })?),
                        None if t.contains_key("gamma") => Some(float_of(&t, "gamma").unwrap_or(f64::NAN)),
                        None => None,
                    };
                    let gamma = match gamma {
                        Some(g) => g,
                        None => {
                            let alpha = float_of(&t, "alpha")
                                .ok_or_else(|| Error::Config("alpha is required (flag --alpha or config key)".into()))?;
                            1.0 / alpha
                        }
                    };
                    t.insert("gamma".into(), gamma.into());
                    Job::Distributional(typed(t, &org)?)
                }
                Experiment::Stability => {
                    if a.gamma.is_some() {
                        return Err(Error::Config("--gamma does not apply to the stability probe".into()));
                    }
                    if let Some(l) = &a.ladder {
                        t.insert("m_ladder".into(), l.clone().into());
                    }
                    Job::Stability(typed(t, &org)?)
                }
            };
            Ok((job, src))
        }
        Command::Validate { .. } | Command::Replay { .. } => unreachable!(),
    }
}

fn ladder_ints(l: &[f64]) -> Result<Vec<i64>> {
    l.iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v < 9.0e15 {
                Ok(v as i64)
            } else {
                Err(Error::Config(format!("ladder entries must be positive integers, got {v}")))
            }
        })
        .collect()
}

fn runs_root() -> PathBuf {
    std::env::var_os(RUNS_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

fn fresh_dir(root: &Path, stamp: &str, hash: &str) -> PathBuf {
    let base = format!("{stamp}-{}", &hash[..12]);
    let mut dir = root.join(&base);
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{base}-{k}"));
        k += 1;
    }
    dir
}

/// Runs `job` and writes outputs and manifest. Returns the run directory,
/// the manifest, and whether the run's own acceptance check passed.
fn execute(
    job: &Job,
    source_hash: Option<String>,
    threads: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<(PathBuf, RunManifest, bool)> {
    let config = job.config_json()?;
    let config_hash = io::sha256_hex(serde_json::to_string(&config)?.as_bytes());
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    let used = pool.current_num_threads();
    let (outputs, passed) = pool.install(|| job.run())?;
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => fresh_dir(&runs_root(), &started.format("%Y%m%dT%H%M%SZ").to_string(), &config_hash),
    };
    let mut hashes = BTreeMap::new();
    for (name, bytes) in &outputs {
        io::write_bytes(&dir.join(name), bytes)?;
        hashes.insert(name.clone(), io::sha256_hex(bytes));
    }
    let (seed, samples) = job.seed_and_samples();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: job.command(),
        config,
        config_hash,
        source_hash,
        seed,
        samples,
        threads: used,
        outputs: hashes,
        started: started.to_rfc3339(),
        wall_clock_secs: clock.elapsed().as_secs_f64(),
    };
    io::write_bytes(&dir.join("manifest.json"), &json_bytes(&manifest)?)?;
    Ok((dir, manifest, passed))
}

/// Re-runs a manifest into `out_dir` (or a fresh run directory) and lists
/// the outputs whose hashes differ from the recorded ones.
pub fn replay(manifest_path: &Path, threads: Option<usize>, out_dir: Option<&Path>) -> Result<(PathBuf, Vec<String>)> {
    let text = io::read_text(manifest_path).map_err(|e| Error::Config(e.to_string()))?;
    let old: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;
    let job = Job::from_manifest(&old.command, old.config.clone())?;
    let (dir, new, _) = execute(&job, old.source_hash.clone(), threads.or(Some(old.threads)), out_dir)?;
    let mut diffs = Vec::new();
    for (name, hash) in &old.outputs {
        if new.outputs.get(name) != Some(hash) {
            diffs.push(name.clone());
        }
    }
    for name in new.outputs.keys() {
        if !old.outputs.contains_key(name) {
            diffs.push(name.clone());
        }
    }
    Ok((dir, diffs))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_configuration() {
        2
    } else {
        1
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit
/// code: 0 success, 1 failure, 2 configuration error.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads;
    let out_dir = cli.out_dir.as_deref();
    match &cli.command {
        Command::Validate { quick } => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: cannot start thread pool: {e}");
                    return 2;
                }
            };
            let ok = pool.install(|| validate::run(*quick));
            if ok {
                0
            } else {
                1
            }
        }
        Command::Replay { manifest } => match replay(manifest, threads, out_dir) {
            Ok((dir, diffs)) if diffs.is_empty() => {
                println!("replay reproduced every output in {}", dir.display());
                0
            }
            Ok((dir, diffs)) => {
                eprintln!("replay in {} differs in: {}", dir.display(), diffs.join(", "));
                1
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        cmd => {
            let result = resolve(cmd).and_then(|(job, src)| execute(&job, src, threads, out_dir));
            match result {
                Ok((dir, _, passed)) => {
                    println!("{}", dir.display());
                    if passed {
                        0
                    } else {
                        eprintln!("run finished but its acceptance check failed");
                        1
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}
