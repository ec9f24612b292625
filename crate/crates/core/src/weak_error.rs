//! Distances between empirical laws, log-log rate fits, and the weak-rate
//! experiments (bounded drift, mollified rough drift, stability in `m`).
//!
//! All experiments simulate their chains on one common noise path per
//! trajectory (see [`simulate_coupled`]). Each chain keeps the exact law of
//! its own scheme; the coupling only removes most of the Monte Carlo noise
//! from the differences between chains.

use std::fmt::Write as _;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::drift::{mollify, synth_besov_field, Drift, DriftSpec, KernelSpec, LacunaryProfile, PhaseMode, SmoothFunction};
use crate::error::{ensure, Error, Result};
use crate::euler::{content_hash, simulate_coupled, CoupledLevel, EmpiricalLaw, GridConfig};
use crate::levy::ProcessSpec;
use crate::littlewood_paley::GridFunction;
use crate::spectral::{wavenumbers, Spectral};
use crate::stats::{line_fit, mean_stderr, robust_scale, sorted_copy, quantile_sorted};
use crate::stream::{derive_seed, stream};

/// Jackknife block count for TV standard errors.
pub const JACKKNIFE_BLOCKS: usize = 20;

/// Lattice cells per bandwidth.
const CELLS_PER_BANDWIDTH: f64 = 8.0;

/// Kernel support kept on each side of the data, in bandwidths.
const PAD_BANDWIDTHS: f64 = 10.0;

/// Largest smoothing lattice.
const MAX_CELLS: usize = 1 << 20;

/// Silverman's rule `1.06 σ̂ N^{-1/5}` with a robust scale.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    1.06 * robust_scale(samples) * (samples.len() as f64).powf(-0.2)
}

/// Common lattice `origin + kΔ`, `Δ = h/8`, shared by both laws. Samples
/// outside `[lo, hi]` are collected into one atom per tail.
#[derive(Debug, Clone)]
struct TvGrid {
    origin: f64,
    delta: f64,
    lo: f64,
    hi: f64,
    cells: usize,
    spectral: Spectral,
    multiplier: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Binned {
    mass: Vec<f64>,
    left: f64,
    right: f64,
}

impl TvGrid {
    fn new(a: &[f64], b: &[f64], h: f64) -> Result<Self> {
        ensure(h > 0.0 && h.is_finite(), || format!("bandwidth must be positive, got {h}"))?;
        let delta = h / CELLS_PER_BANDWIDTH;
        let pad = (PAD_BANDWIDTHS * CELLS_PER_BANDWIDTH).ceil() as usize;
        let budget = MAX_CELLS - 2 * pad - 2;
        let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        pooled = sorted_copy(&pooled);
        let mut range = None;
        for trim in [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let lo = quantile_sorted(&pooled, trim);
            let hi = quantile_sorted(&pooled, 1.0 - trim);
            if (hi - lo) / delta < budget as f64 {
                range = Some((lo, hi, delta));
                break;
            }
        }
        let (lo, hi, delta) = range.unwrap_or_else(|| {
            let lo = quantile_sorted(&pooled, 1e-2);
            let hi = quantile_sorted(&pooled, 1.0 - 1e-2);
            warn!("sample spread too wide for bandwidth {h:e}; coarsening the smoothing lattice");
            (lo, hi, (hi - lo) / budget as f64)
        });
        let origin = (lo / delta).floor() * delta - pad as f64 * delta;
        let used = ((hi - origin) / delta).ceil() as usize + pad + 2;
        let cells = used.next_power_of_two();
        let multiplier = wavenumbers(cells, cells as f64 * delta)
            .iter()
            .map(|w| (-0.5 * (h * w).powi(2)).exp())
            .collect();
        Ok(Self {
            origin,
            delta,
            lo,
            hi,
            cells,
            spectral: Spectral::new(1, cells),
            multiplier,
        })
    }

    /// Linear binning of `x[range]` with weight `w` per sample.
    fn bin_into(&self, out: &mut Binned, x: &[f64], w: f64) {
        for &v in x {
            if v < self.lo {
                out.left += w;
            } else if v > self.hi {
                out.right += w;
            } else {
                let u = (v - self.origin) / self.delta;
                let i = u.floor();
                let f = u - i;
                let i = i as usize;
                out.mass[i] += w * (1.0 - f);
                out.mass[i + 1] += w * f;
            }
        }
    }

    fn empty(&self) -> Binned {
        Binned {
            mass: vec![0.0; self.cells],
            left: 0.0,
            right: 0.0,
        }
    }

    fn smooth(&self, b: &Binned) -> Vec<f64> {
        let mut spec = self.spectral.forward(&b.mass);
        for (c, m) in spec.iter_mut().zip(&self.multiplier) {
            *c *= m;
        }
        self.spectral.inverse_real(spec)
    }

    fn distance(&self, p: &Binned, q: &Binned) -> f64 {
        let sp = self.smooth(p);
        let sq = self.smooth(q);
        let body: f64 = sp.iter().zip(&sq).map(|(x, y)| (x - y).abs()).sum();
        let tails = (p.left - q.left).abs() + (p.right - q.right).abs();
        (0.5 * (body + tails)).clamp(0.0, 1.0)
    }

    fn law(&self, x: &[f64]) -> Binned {
        let mut b = self.empty();
        self.bin_into(&mut b, x, 1.0 / x.len() as f64);
        b
    }
}

/// Kernel-smoothed total variation `½∫|p̂₁ − p̂₂|` with a Gaussian kernel of
/// bandwidth `h`, in `[0, 1]`.
pub fn tv_smoothed(a: &[f64], b: &[f64], h: f64) -> Result<f64> {
    ensure(!a.is_empty() && !b.is_empty(), || "both laws must be nonempty".into())?;
    let grid = TvGrid::new(a, b, h)?;
    Ok(grid.distance(&grid.law(a), &grid.law(b)))
}

/// A TV-proxy estimate with its jackknife error and bandwidth sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub stderr: f64,
    pub bandwidth: f64,
    /// Value at `h/2`.
    pub half: f64,
    /// Value at `2h`.
    pub double: f64,
    /// Value after swapping each pair with probability ½ (paired samples
    /// only): the estimate's level when both laws coincide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

/// [`tv_smoothed`] with a delete-one-block jackknife over
/// [`JACKKNIFE_BLOCKS`] index blocks and the `h/2`, `2h` sensitivity pair.
/// With `paired = true` the samples are treated as coupled pairs (equal
/// lengths, matching indices) and the swap floor is computed with `seed`.
pub fn tv_estimate(a: &[f64], b: &[f64], h: f64, paired: bool, seed: u64) -> Result<TvEstimate> {
    ensure(a.len() >= JACKKNIFE_BLOCKS && b.len() >= JACKKNIFE_BLOCKS, || {
        format!("the jackknife needs at least {JACKKNIFE_BLOCKS} samples per law")
    })?;
    ensure(!paired || a.len() == b.len(), || "paired laws must have equal sizes".into())?;
    let grid = TvGrid::new(a, b, h)?;
    let (pa, pb) = (grid.law(a), grid.law(b));
    let value = grid.distance(&pa, &pb);
    let blocks = JACKKNIFE_BLOCKS;
    let mut reps = Vec::with_capacity(blocks);
    for k in 0..blocks {
        let drop = |x: &[f64], full: &Binned| {
            let (s, e) = (k * x.len() / blocks, (k + 1) * x.len() / blocks);
            let n = x.len() as f64;
            let kept = n - (e - s) as f64;
            let mut out = full.clone();
            for v in out.mass.iter_mut() {
                *v *= n / kept;
            }
            out.left *= n / kept;
            out.right *= n / kept;
            grid.bin_into(&mut out, &x[s..e], -1.0 / kept);
            out
        };
        reps.push(grid.distance(&drop(a, &pa), &drop(b, &pb)));
    }
    let bf = blocks as f64;
    let mean = reps.iter().sum::<f64>() / bf;
    let stderr = ((bf - 1.0) / bf * reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>()).sqrt();
    let half = tv_smoothed(a, b, 0.5 * h)?;
    let double = tv_smoothed(a, b, 2.0 * h)?;
    let floor = if paired {
        let mut rng = stream(seed, 0);
        let (mut sa, mut sb) = (Vec::with_capacity(a.len()), Vec::with_capacity(b.len()));
        for (&x, &y) in a.iter().zip(b) {
            if rand::Rng::random::<bool>(&mut rng) {
                sa.push(y);
                sb.push(x);
            } else {
                sa.push(x);
                sb.push(y);
            }
        }
        Some(grid.distance(&grid.law(&sa), &grid.law(&sb)))
    } else {
        None
    };
    Ok(TvEstimate {
        value,
        stderr,
        bandwidth: h,
        half,
        double,
        floor,
    })
}

/// [`tv_estimate`] on two one-dimensional laws at the same horizon, with
/// the Silverman bandwidth of `law2` unless `h` is given.
pub fn tv_laws(law1: &EmpiricalLaw, law2: &EmpiricalLaw, h: Option<f64>) -> Result<TvEstimate> {
    if law1.dim() != 1 || law2.dim() != 1 {
        return Err(Error::Unsupported(
            "total variation is one-dimensional; use the test-function dictionary for d > 1".into(),
        ));
    }
    ensure(!law1.is_empty() && !law2.is_empty(), || "both laws must be nonempty".into())?;
    ensure(law1.manifest.horizon == law2.manifest.horizon, || {
        format!(
            "laws at different horizons ({} vs {})",
            law1.manifest.horizon, law2.manifest.horizon
        )
    })?;
    let h = h.unwrap_or_else(|| silverman_bandwidth(&law2.samples));
    tv_estimate(&law1.samples, &law2.samples, h, false, 0)
}

/// Bounded test function for the dictionary distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    Constant { value: f64 },
    /// `tanh(k (x - c))`.
    Tanh { k: f64, c: f64 },
    /// `cos(ω x + φ)`.
    Cos { omega: f64, phase: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Tanh { k, c } => (k * (x - c)).tanh(),
            TestFunction::Cos { omega, phase } => (omega * x + phase).cos(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            TestFunction::Constant { value } => value.abs(),
            _ => 1.0,
        }
    }
}

/// `{tanh(k(x - c))}` over the product grid `ks × cs`.
pub fn tanh_dictionary(ks: &[f64], cs: &[f64]) -> Vec<TestFunction> {
    ks.iter()
        .flat_map(|&k| cs.iter().map(move |&c| TestFunction::Tanh { k, c }))
        .collect()
}

/// Dictionary distance with per-entry errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DictEstimate {
    pub value: f64,
    pub stderr: f64,
    pub argmax: usize,
    /// `(½|Δmean|, stderr)` per dictionary entry.
    pub entries: Vec<(f64, f64)>,
}

/// `max_φ ½|mean φ(a) − mean φ(b)|` over `dict`; the factor ½ puts it on the
/// same scale as [`tv_smoothed`]. Paired samples use the stderr of the mean
/// pairwise difference, unpaired ones combine the two stderrs.
pub fn weak_error_dict(a: &[f64], b: &[f64], dict: &[TestFunction], paired: bool) -> Result<DictEstimate> {
    if dict.is_empty() {
        return Err(Error::Usage("the test-function dictionary is empty".into()));
    }
    ensure(!a.is_empty() && !b.is_empty(), || "both laws must be nonempty".into())?;
    ensure(!paired || a.len() == b.len(), || "paired laws must have equal sizes".into())?;
    for (i, f) in dict.iter().enumerate() {
        ensure(f.sup_norm() <= 1.0, || format!("dictionary entry {i} has sup norm {} > 1", f.sup_norm()))?;
    }
    let entries: Vec<(f64, f64)> = dict
        .iter()
        .map(|f| {
            if paired {
                let diff: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| 0.5 * (f.eval(x) - f.eval(y))).collect();
                let (m, se) = mean_stderr(&diff);
                (m.abs(), se)
            } else {
                let fa: Vec<f64> = a.iter().map(|&x| f.eval(x)).collect();
                let fb: Vec<f64> = b.iter().map(|&x| f.eval(x)).collect();
                let (ma, sa) = mean_stderr(&fa);
                let (mb, sb) = mean_stderr(&fb);
                (0.5 * (ma - mb).abs(), 0.5 * sa.hypot(sb))
            }
        })
        .collect();
    let mut argmax = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.0 > entries[argmax].0 {
            argmax = i;
        }
    }
    Ok(DictEstimate {
        value: entries[argmax].0,
        stderr: entries[argmax].1,
        argmax,
        entries,
    })
}

/// One ladder point of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    /// Abscissa (`n`, or `m` for the stability probe).
    pub n: f64,
    pub error: f64,
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default)]
    pub excluded: bool,
}

impl RatePoint {
    pub fn new(n: f64, error: f64, stderr: f64) -> Self {
        Self {
            n,
            error,
            stderr,
            half: None,
            double: None,
            floor: None,
            excluded: false,
        }
    }

    fn from_tv(n: f64, tv: &TvEstimate) -> Self {
        Self {
            n,
            error: tv.value,
            stderr: tv.stderr,
            half: Some(tv.half),
            double: Some(tv.double),
            floor: tv.floor,
            excluded: false,
        }
    }
}

/// Fitted power law `error ≈ C n^slope` with its point set and context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub experiment: String,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% confidence interval of the slope.
    pub slope_ci: (f64, f64),
    /// Points with `error ≤ min_snr · stderr` (or at most twice the swap
    /// floor) are excluded from the fit.
    pub min_snr: f64,
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default)]
    pub reference: String,
    /// Content hashes of every sample set compared.
    #[serde(default)]
    pub law_hashes: Vec<String>,
    /// Theoretical exponent (a negative slope), when one applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<f64>,
    /// The fit passes when `slope ≤ threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub control: Vec<RatePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probe: Vec<RatePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_targets: Vec<ThetaTarget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Per-`θ` verdict of the stability probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaTarget {
    pub theta: f64,
    pub expected_slope: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Weighted least squares of `ln error` on `ln n`. The weight of a point is
/// `(error/stderr)²`, the inverse variance of `ln error`; if any kept point
/// has zero stderr all weights are equal.
pub fn rate_fit(mut points: Vec<RatePoint>, min_snr: f64) -> Result<RateReport> {
    ensure(points.len() >= 4, || format!("need at least 4 points, got {}", points.len()))?;
    ensure(min_snr >= 0.0, || format!("min_snr must be nonnegative, got {min_snr}"))?;
    for p in points.iter_mut() {
        ensure(p.n > 0.0 && p.error.is_finite() && p.stderr >= 0.0, || {
            format!("malformed point (n = {}, error = {}, stderr = {})", p.n, p.error, p.stderr)
        })?;
        let noisy = p.error <= min_snr * p.stderr || p.error <= 0.0;
        let floored = p.floor.is_some_and(|f| p.error <= 2.0 * f);
        p.excluded = noisy || floored;
        debug!("point n = {} error {:.3e} stderr {:.3e} floor {:?}", p.n, p.error, p.stderr, p.floor);
        if p.excluded {
            warn!(
                "point n = {} excluded: error {:.3e} within the noise floor (stderr {:.3e}, floor {:?})",
                p.n, p.error, p.stderr, p.floor
            );
        }
    }
    let kept: Vec<&RatePoint> = points.iter().filter(|p| !p.excluded).collect();
    if kept.len() < 4 {
        return Err(Error::FitRefused(format!(
            "only {} of {} points lie above the noise floor; at least 4 are needed",
            kept.len(),
            points.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.n.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.error.ln()).collect();
    let fit = if kept.iter().all(|p| p.stderr > 0.0) {
        let w: Vec<f64> = kept.iter().map(|p| (p.error / p.stderr).powi(2)).collect();
        line_fit(&xs, &ys, Some(&w))
    } else {
        line_fit(&xs, &ys, None)
    };
    let dof = (kept.len() - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
    let half = t * fit.slope_se;
    Ok(RateReport {
        experiment: "fit".into(),
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_se,
        slope_ci: (fit.slope - half, fit.slope + half),
        min_snr,
        config: serde_json::Value::Null,
        reference: String::new(),
        law_hashes: vec![],
        expected_slope: None,
        threshold: None,
        passed: None,
        control: vec![],
        probe: vec![],
        theta_targets: vec![],
        notes: vec![],
    })
}

impl RateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Flat `series,n,error,stderr,excluded` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,n,error,stderr,excluded\n");
        for (series, pts) in [("main", &self.points), ("control", &self.control), ("probe", &self.probe)] {
            for p in pts {
                let _ = writeln!(out, "{series},{},{:e},{:e},{}", p.n, p.error, p.stderr, p.excluded);
            }
        }
        out
    }
}

fn default_sign() -> SmoothFunction {
    SmoothFunction::Sign { amplitude: 1.0 }
}

fn default_ladder() -> Vec<u64> {
    vec![32, 64, 128, 256]
}

fn default_horizon() -> f64 {
    1.0
}

fn default_experiment_snr() -> f64 {
    5.0
}

fn default_ref_n_factor() -> u64 {
    64
}

fn default_ref_m_factor() -> f64 {
    8.0
}

fn default_true() -> bool {
    true
}

fn default_thetas() -> Vec<f64> {
    vec![0.5]
}

fn default_m_ladder() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}

fn default_m_ratio() -> f64 {
    4.0
}

fn default_stability_n() -> u64 {
    2048
}

fn default_stability_snr() -> f64 {
    2.0
}

fn default_levels() -> u32 {
    14
}

/// Bounded-drift experiment: `b` pointwise evaluable, reference at `n_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundedRateConfig {
    pub alpha: f64,
    #[serde(default = "default_sign")]
    pub drift: SmoothFunction,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<u64>,
    /// Defaults to `64 · max(ladder)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_experiment_snr")]
    pub min_snr: f64,
}

/// Rough-drift experiment: lacunary field of regularity `-β`, `m = n^γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionalRateConfig {
    pub alpha: f64,
    pub beta: f64,
    /// `None` selects `γ = 1/α`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<u64>,
    #[serde(default = "default_ref_n_factor")]
    pub ref_n_factor: u64,
    #[serde(default = "default_ref_m_factor")]
    pub ref_m_factor: f64,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub profile: LacunaryProfile,
    #[serde(default)]
    pub phases: PhaseMode,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_experiment_snr")]
    pub min_snr: f64,
    /// Also run the chains at a fixed level `control_m` for every `n`.
    #[serde(default = "default_true")]
    pub control: bool,
    /// Defaults to 2, low enough for the mollification bias to dominate
    /// the ladder range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_m: Option<f64>,
    /// Second horizon at which the ladder errors are also reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_time: Option<f64>,
}

/// Stability probe: laws at `m` and `ratio · m` compared at fixed `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "default_m_ladder")]
    pub m_ladder: Vec<f64>,
    #[serde(default = "default_m_ratio")]
    pub ratio: f64,
    #[serde(default = "default_stability_n")]
    pub n: u64,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub profile: LacunaryProfile,
    #[serde(default)]
    pub phases: PhaseMode,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_stability_snr")]
    pub min_snr: f64,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_amplitude() -> f64 {
    1.0
}

fn check_ladder(ladder: &[u64]) -> Result<()> {
    ensure(ladder.len() >= 4, || format!("the n-ladder needs at least 4 entries, got {}", ladder.len()))?;
    ensure(ladder.windows(2).all(|w| w[0] < w[1]) && ladder[0] >= 1, || {
        "the n-ladder must be strictly increasing and positive".into()
    })
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

fn snapshot<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

/// TV estimates of every chain against chain `reference`, with a bandwidth
/// from the reference sample.
fn against(samples: &[Vec<f64>], chains: &[usize], reference: usize, seed: u64) -> Result<Vec<TvEstimate>> {
    let r = &samples[reference];
    let h = silverman_bandwidth(r);
    chains
        .iter()
        .map(|&c| tv_estimate(&samples[c], r, h, true, derive_seed(seed, &format!("swap-{c}"))))
        .collect()
}

/// Weak rate for a bounded drift against a fine-scheme reference.
pub fn run_bounded_rate(cfg: &BoundedRateConfig) -> Result<RateReport> {
    check_ladder(&cfg.ladder)?;
    let max = *cfg.ladder.last().unwrap();
    let n_ref = cfg.n_ref.unwrap_or(64 * max);
    if n_ref < 64 * max {
        return Err(Error::Config(format!(
            "reference n_ref = {n_ref} must be at least 64 * max(ladder) = {}",
            64 * max
        )));
    }
    let n_fine = cfg.ladder.iter().fold(n_ref, |acc, &n| lcm(acc, n));
    ensure(n_fine == n_ref, || format!("n_ref = {n_ref} must be a multiple of every ladder entry"))
        .map_err(|e| Error::Config(e.to_string()))?;
    let spec = ProcessSpec::cylindrical(cfg.alpha, 1)?;
    let drift = Drift::build(&DriftSpec::smooth(cfg.drift), None)?;
    let mut levels: Vec<CoupledLevel> = cfg
        .ladder
        .iter()
        .map(|&n| CoupledLevel { n, drift: drift.clone() })
        .collect();
    levels.push(CoupledLevel { n: n_ref, drift });
    let ens = simulate_coupled(&spec, &levels, n_fine, cfg.x0, cfg.horizon, cfg.samples, cfg.seed)?;
    let chains: Vec<usize> = (0..cfg.ladder.len()).collect();
    let tvs = against(&ens.samples, &chains, cfg.ladder.len(), cfg.seed)?;
    let points = cfg.ladder.iter().zip(&tvs).map(|(&n, tv)| RatePoint::from_tv(n as f64, tv)).collect();
    let mut report = rate_fit(points, cfg.min_snr)?;
    let expected = -(cfg.alpha - 1.0) / cfg.alpha;
    report.experiment = "bounded".into();
    report.config = snapshot(cfg);
    report.reference = format!("same scheme at n_ref = {n_ref}, coupled noise");
    report.law_hashes = ens.samples.iter().map(|s| content_hash(s)).collect();
    report.expected_slope = Some(expected);
    report.threshold = Some(expected + 0.15);
    report.passed = Some(report.slope <= expected + 0.15);
    if ens.excluded > 0 {
        report.notes.push(format!("{} trajectories excluded", ens.excluded));
    }
    Ok(report)
}

/// Lacunary field at the experiment resolution.
fn rough_field(
    beta: f64,
    levels: u32,
    amplitude: f64,
    profile: LacunaryProfile,
    phases: PhaseMode,
    grid: &GridConfig,
    seed: u64,
) -> Result<(GridFunction, crate::littlewood_paley::DyadicAnalyzer)> {
    let an = grid.analyzer()?;
    let spec = DriftSpec::Lacunary {
        beta,
        levels,
        amplitude,
        seed: derive_seed(seed, "field"),
        profile,
        phases,
    };
    Ok((synth_besov_field(&spec, &an)?, an))
}

fn mollified(base: &GridFunction, m: f64, an: &crate::littlewood_paley::DyadicAnalyzer) -> Result<Drift> {
    Ok(Drift::Grid(crate::drift::GridDrift::new(mollify(base, m, KernelSpec::Bump, an)?)))
}

/// Weak rate of the mollified scheme `X^{m,n}`, `m = n^γ`, against the
/// reference `(m_ref, n_ref) = (8 m(max n), 64 max n)`. The control series
/// holds `m = control_m` fixed and should level off at the mollification bias.
pub fn run_distributional_rate(cfg: &DistributionalRateConfig) -> Result<RateReport> {
    check_ladder(&cfg.ladder)?;
    let alpha = cfg.alpha;
    let gamma = cfg.gamma.unwrap_or(1.0 / alpha);
    crate::euler::check_coupling(alpha, Some(cfg.beta), Some(gamma))?;
    ensure(cfg.ref_n_factor >= 64 && cfg.ref_m_factor >= 1.0, || {
        "the reference needs ref_n_factor >= 64 and ref_m_factor >= 1".into()
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    let max = *cfg.ladder.last().unwrap();
    let n_ref = cfg.ref_n_factor * max;
    let n_fine = cfg.ladder.iter().fold(n_ref, |acc, &n| lcm(acc, n));
    ensure(n_fine == n_ref, || format!("n_ref = {n_ref} must be a multiple of every ladder entry"))
        .map_err(|e| Error::Config(e.to_string()))?;
    let m_of = |n: u64| (n as f64).powf(gamma);
    let m_ref = cfg.ref_m_factor * m_of(max);
    let m_ctrl = cfg.control_m.unwrap_or(2.0);
    ensure(m_ctrl > 0.0, || format!("control_m must be positive, got {m_ctrl}"))?;
    let spec = ProcessSpec::cylindrical(alpha, 1)?;
    let (base, an) = rough_field(cfg.beta, cfg.levels, cfg.amplitude, cfg.profile, cfg.phases, &cfg.grid, cfg.seed)?;
    let k = cfg.ladder.len();
    let mut levels = Vec::with_capacity(2 * k + 1);
    for &n in &cfg.ladder {
        levels.push(CoupledLevel {
            n,
            drift: mollified(&base, m_of(n), &an)?,
        });
    }
    levels.push(CoupledLevel {
        n: n_ref,
        drift: mollified(&base, m_ref, &an)?,
    });
    if cfg.control {
        let d = mollified(&base, m_ctrl, &an)?;
        for &n in &cfg.ladder {
            levels.push(CoupledLevel { n, drift: d.clone() });
        }
    }
    let run = |horizon: f64, seed: u64| -> Result<(Vec<RatePoint>, Vec<RatePoint>, Vec<String>)> {
        let ens = simulate_coupled(&spec, &levels, n_fine, cfg.x0, horizon, cfg.samples, seed)?;
        let main: Vec<usize> = (0..k).collect();
        let tv = against(&ens.samples, &main, k, seed)?;
        let pts = cfg.ladder.iter().zip(&tv).map(|(&n, t)| RatePoint::from_tv(n as f64, t)).collect();
        let ctrl = if cfg.control {
            let idx: Vec<usize> = (k + 1..2 * k + 1).collect();
            let tv = against(&ens.samples, &idx, k, seed)?;
            cfg.ladder.iter().zip(&tv).map(|(&n, t)| RatePoint::from_tv(n as f64, t)).collect()
        } else {
            vec![]
        };
        Ok((pts, ctrl, ens.samples.iter().map(|s| content_hash(s)).collect()))
    };
    let (points, control, hashes) = run(cfg.horizon, cfg.seed)?;
    let probe = match cfg.probe_time {
        Some(t) => run(t, derive_seed(cfg.seed, "probe"))?.0,
        None => vec![],
    };
    let mut report = rate_fit(points, cfg.min_snr)?;
    let expected = -(alpha - 1.0 - 2.0 * cfg.beta) / alpha;
    let first = -((alpha - 1.0) / alpha - cfg.beta * (gamma + gamma.max(1.0 / alpha)));
    report.experiment = "distributional".into();
    report.config = snapshot(cfg);
    report.reference = format!(
        "mollified scheme at (m_ref, n_ref) = ({m_ref:.4}, {n_ref}), coupled noise; control at fixed m = {m_ctrl:.4}"
    );
    report.law_hashes = hashes;
    report.expected_slope = Some(expected);
    report.threshold = Some(expected + 0.2);
    report.passed = Some(report.slope <= expected + 0.2);
    let nearest = if (report.slope - first).abs() <= (report.slope - expected).abs() {
        "n^{-(alpha-1)/alpha + beta(gamma + max(gamma, 1/alpha))}"
    } else {
        "n^{-(alpha-1-2 beta)/alpha}"
    };
    report.notes.push(format!(
        "gamma = {gamma:.6}; exponents: first term {first:.4}, second term {expected:.4}; measured slope is nearest {nearest}"
    ));
    if !control.is_empty() {
        let (c0, c1) = (control[0].error, control[k - 1].error);
        report.notes.push(format!(
            "control at fixed m: error ratio last/first = {:.3}; main/control at max n = {:.3}",
            c1 / c0,
            report.points[k - 1].error / c1
        ));
    }
    report.control = control;
    report.probe = probe;
    Ok(report)
}

/// Plateau test for the fixed-`m` control: it keeps at least half of its
/// first error and stays above the coupled series at the largest `n`.
pub fn control_plateaus(report: &RateReport) -> bool {
    let (Some(c0), Some(c1), Some(main)) = (report.control.first(), report.control.last(), report.points.last())
    else {
        return false;
    };
    c1.error >= 0.5 * c0.error && c1.error > main.error
}

/// TV proxy between laws at `m` and `ratio · m` along `m_ladder`, fitted in `m`.
pub fn run_stability_probe(cfg: &StabilityConfig) -> Result<RateReport> {
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    for &theta in &cfg.thetas {
        ensure(theta > beta && theta < alpha - 1.0 - beta, || {
            format!(
                "theta = {theta} violates the stability hypothesis theta in (beta, alpha-1-beta) = ({beta}, {})",
                alpha - 1.0 - beta
            )
        })?;
    }
    ensure(!cfg.thetas.is_empty(), || "no theta given".into())?;
    ensure(cfg.m_ladder.len() >= 4, || "the m-ladder needs at least 4 entries".into())?;
    ensure(cfg.m_ladder.iter().all(|&m| m > 0.0) && cfg.ratio > 1.0, || {
        "m-ladder entries must be positive and ratio > 1".into()
    })?;
    let spec = ProcessSpec::cylindrical(alpha, 1)?;
    let (base, an) = rough_field(beta, cfg.levels, cfg.amplitude, cfg.profile, cfg.phases, &cfg.grid, cfg.seed)?;
    let mut ms: Vec<f64> = Vec::new();
    for &m in &cfg.m_ladder {
        for v in [m, cfg.ratio * m] {
            if !ms.contains(&v) {
                ms.push(v);
            }
        }
    }
    let levels = ms
        .iter()
        .map(|&m| Ok(CoupledLevel { n: cfg.n, drift: mollified(&base, m, &an)? }))
        .collect::<Result<Vec<_>>>()?;
    let ens = simulate_coupled(&spec, &levels, cfg.n, cfg.x0, cfg.horizon, cfg.samples, cfg.seed)?;
    let pos = |v: f64| ms.iter().position(|&m| m == v).unwrap();
    let mut points = Vec::with_capacity(cfg.m_ladder.len());
    for &m in &cfg.m_ladder {
        let (a, b) = (pos(m), pos(cfg.ratio * m));
        let h = silverman_bandwidth(&ens.samples[b]);
        let tv = tv_estimate(&ens.samples[a], &ens.samples[b], h, true, derive_seed(cfg.seed, &format!("swap-{m}")))?;
        points.push(RatePoint::from_tv(m, &tv));
    }
    let mut report = rate_fit(points, cfg.min_snr)?;
    report.experiment = "stability".into();
    report.config = snapshot(cfg);
    report.reference = format!("pairwise m vs {}m at n = {}, coupled noise", cfg.ratio, cfg.n);
    report.law_hashes = ens.samples.iter().map(|s| content_hash(s)).collect();
    report.theta_targets = cfg
        .thetas
        .iter()
        .map(|&theta| ThetaTarget {
            theta,
            expected_slope: -(theta - beta),
            threshold: -(theta - beta) + 0.15,
            passed: report.slope <= -(theta - beta) + 0.15,
        })
        .collect();
    let first = &report.theta_targets[0];
    report.expected_slope = Some(first.expected_slope);
    report.threshold = Some(first.threshold);
    report.passed = Some(report.theta_targets.iter().any(|t| t.passed));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::normal;

    fn gaussian(n: usize, shift: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, 0);
        (0..n).map(|_| normal(&mut rng) + shift).collect()
    }

    #[test]
    fn tv_zero_on_identical_and_one_on_separated() {
        let a = gaussian(20_000, 0.0, 1);
        assert_eq!(tv_smoothed(&a, &a, 0.05).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        let tv = tv_smoothed(&a, &b, 0.05).unwrap();
        assert!((1.0 - tv).abs() < 1e-6, "{tv}");
    }

    #[test]
    fn tv_is_symmetric_and_bounded() {
        let a = gaussian(5000, 0.0, 2);
        let b = gaussian(7000, 0.3, 3);
        let ab = tv_smoothed(&a, &b, 0.1).unwrap();
        let ba = tv_smoothed(&b, &a, 0.1).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab > 0.0 && ab <= 1.0);
    }

    #[test]
    fn heavy_tails_go_to_atoms() {
        let mut a = gaussian(10_000, 0.0, 4);
        a[0] = 1e11;
        a[1] = -1e11;
        let tv = tv_smoothed(&a, &a.iter().map(|x| x + 1e-3).collect::<Vec<_>>(), 0.05).unwrap();
        assert!(tv < 0.05, "{tv}");
    }

    #[test]
    fn jackknife_gives_a_sensible_error() {
        let a = gaussian(100_000, 0.0, 5);
        let b = gaussian(100_000, 0.5, 6);
        let est = tv_estimate(&a, &b, 0.1, false, 0).unwrap();
        let exact = 2.0 * crate::stats::normal_cdf(0.25 / (1.0f64 + 0.01).sqrt()) - 1.0;
        assert!((est.value - exact).abs() < 5.0 * est.stderr + 0.01, "{est:?} vs {exact}");
        assert!(est.stderr > 1e-4 && est.stderr < 0.01, "{est:?}");
        assert!(est.half > 0.0 && est.double > 0.0);
    }

    #[test]
    fn swap_floor_is_small_for_identical_pairs() {
        let a = gaussian(50_000, 0.0, 7);
        let est = tv_estimate(&a, &a, 0.1, true, 9).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.floor, Some(0.0));
    }

    #[test]
    fn dictionary_basics() {
        let a = gaussian(1000, 0.0, 8);
        let b = gaussian(1000, 1.0, 9);
        let one = [TestFunction::Constant { value: 1.0 }];
        assert_eq!(weak_error_dict(&a, &b, &one, false).unwrap().value, 0.0);
        let dict = tanh_dictionary(&[1.0, 4.0], &[0.0, 0.5]);
        assert_eq!(weak_error_dict(&a, &a, &dict, true).unwrap().value, 0.0);
        assert!(matches!(weak_error_dict(&a, &b, &[], false), Err(Error::Usage(_))));
        assert!(weak_error_dict(&a, &b, &[TestFunction::Constant { value: 2.0 }], false).is_err());
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<RatePoint> = [64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&n: &f64| RatePoint::new(n, 3.0 * n.powf(-0.7), 0.0))
            .collect();
        let r = rate_fit(pts, 2.0).unwrap();
        assert!((r.slope + 0.7).abs() < 1e-12, "{}", r.slope);
        assert!((r.intercept - 3.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fit_excludes_noise_floor_points() {
        let mut pts: Vec<RatePoint> = [32.0, 64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&n: &f64| RatePoint::new(n, n.powf(-0.5), 1e-4))
            .collect();
        pts[4].stderr = pts[4].error;
        let r = rate_fit(pts.clone(), 2.0).unwrap();
        assert!(r.points[4].excluded && !r.points[3].excluded);
        pts[3].stderr = pts[3].error;
        assert!(matches!(rate_fit(pts, 2.0), Err(Error::FitRefused(_))));
        assert!(rate_fit(vec![RatePoint::new(1.0, 1.0, 0.0); 3], 2.0).is_err());
    }

    #[test]
    fn ci_widens_with_stderr() {
        let mk = |se: f64| {
            let pts: Vec<RatePoint> = [32.0, 64.0, 128.0, 256.0]
                .iter()
                .enumerate()
                .map(|(i, &n): (usize, &f64)| {
                    let wobble = if i % 2 == 0 { 1.1 } else { 0.9 };
                    RatePoint::new(n, wobble * n.powf(-0.5), se * n.powf(-0.5))
                })
                .collect();
            let r = rate_fit(pts, 2.0).unwrap();
            r.slope_ci.1 - r.slope_ci.0
        };
        assert!(mk(0.2) > mk(0.05));
    }

    #[test]
    fn csv_lists_every_point() {
        let pts: Vec<RatePoint> = [1.0, 2.0, 4.0, 8.0].iter().map(|&n| RatePoint::new(n, 1.0 / n, 0.0)).collect();
        let r = rate_fit(pts, 2.0).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("series,n,error,stderr,excluded"));
        let back: RateReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn zero_drift_refuses_fit() {
        let cfg = BoundedRateConfig {
            alpha: 1.5,
            drift: SmoothFunction::Zero,
            ladder: vec![4, 8, 16, 32],
            n_ref: None,
            samples: 2000,
            seed: 1,
            x0: 0.0,
            horizon: 1.0,
            min_snr: 5.0,
        };
        assert!(matches!(run_bounded_rate(&cfg), Err(Error::FitRefused(_))));
        let bad = BoundedRateConfig { n_ref: Some(64), ..cfg };
        assert!(matches!(run_bounded_rate(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn stability_rejects_bad_theta() {
        let cfg = StabilityConfig {
            alpha: 1.8,
            beta: 0.1,
            thetas: vec![0.75],
            m_ladder: default_m_ladder(),
            ratio: 4.0,
            n: 64,
            levels: 10,
            amplitude: 1.0,
            profile: LacunaryProfile::Geometric,
            phases: PhaseMode::Seeded,
            grid: GridConfig::default(),
            samples: 100,
            seed: 0,
            x0: 0.0,
            horizon: 1.0,
            min_snr: 2.0,
        };
        let err = run_stability_probe(&cfg).unwrap_err().to_string();
        assert!(err.contains("alpha-1-beta"), "{err}");
    }
}
