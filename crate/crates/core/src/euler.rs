//! Euler scheme `X_{(k+1)/n} = X_{k/n} + b_m(X_{k/n})/n + σ(X_{k/n}) ΔL_k`
//! for SDEs driven by α-stable noise, with mollification level `m = n^γ`.
//!
//! The state is carried as `X_k = (x + D_k) + M_k`, where `D_k` accumulates
//! drift and `M_k` noise. For zero or constant drift this makes the terminal
//! value bitwise equal to `x + cT + L_T` computed from the same stream.

pub mod probes;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift::{Drift, DriftSpec};
use crate::error::{ensure, Error, Result};
use crate::levy::{IncrementSampler, ProcessConfig, ProcessSpec};
use crate::littlewood_paley::DyadicAnalyzer;
use crate::stream::stream;

/// States beyond this magnitude are treated as blown up.
pub const EXPLOSION_THRESHOLD: f64 = 1e12;

/// Largest tolerated fraction of excluded trajectories.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;

/// Left grid point `⌊tn⌋/n`, with `t = k/n` mapped to itself.
pub fn phi_n(t: f64, n: u64) -> f64 {
    assert!(t >= 0.0 && n >= 1);
    let nf = n as f64;
    let mut k = (t * nf).floor();
    if (k + 1.0) / nf <= t {
        k += 1.0;
    } else if k / nf > t {
        k -= 1.0;
    }
    k / nf
}

/// Noise coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sigma {
    #[default]
    Identity,
    /// Scalar `level + amplitude · sin(frequency · x_1)` times the identity;
    /// Lipschitz and uniformly elliptic when `level > |amplitude|`.
    Oscillating { level: f64, amplitude: f64, frequency: f64 },
}

impl Sigma {
    #[inline]
    fn scalar(&self, x: f64) -> f64 {
        match *self {
            Sigma::Identity => 1.0,
            Sigma::Oscillating {
                level,
                amplitude,
                frequency,
            } => level + amplitude * (frequency * x).sin(),
        }
    }

    /// Ellipticity constant `c0` with `|σ| ∈ [1/c0, c0]` on a sampling probe.
    pub fn ellipticity(&self) -> f64 {
        match *self {
            Sigma::Identity => 1.0,
            Sigma::Oscillating { frequency, .. } => {
                let (lo, hi) = (0..10_000).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
                    let x = 2.0 * std::f64::consts::PI * i as f64 / (10_000.0 * frequency.abs().max(1e-12));
                    let s = self.scalar(x).abs();
                    (lo.min(s), hi.max(s))
                });
                hi.max(1.0 / lo)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Sigma::Oscillating { level, amplitude, .. } = *self {
            ensure(level > amplitude.abs(), || {
                format!("sigma must stay elliptic: need level > |amplitude|, got {level} and {amplitude}")
            })?;
        }
        Ok(())
    }
}

fn default_period() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_grid_size() -> usize {
    1 << 16
}

/// Spatial grid carrying mollified drifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_grid_size")]
    pub size: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            period: default_period(),
            size: default_grid_size(),
        }
    }
}

impl GridConfig {
    pub fn analyzer(&self) -> Result<DyadicAnalyzer> {
        DyadicAnalyzer::new(1, self.period, self.size)
    }
}

fn default_horizon() -> f64 {
    1.0
}

/// Scheme and ensemble parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    /// Steps per unit time.
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub x0: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub drift: DriftSpec,
    pub noise: ProcessConfig,
    #[serde(default)]
    pub sigma: Sigma,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
}

/// Validated scheme ready for simulation.
#[derive(Debug, Clone)]
pub struct EulerScheme {
    config: EulerConfig,
    spec: ProcessSpec,
    sampler: IncrementSampler,
    drift: Drift,
    steps: u64,
    dt: f64,
    level: Option<f64>,
}

/// Mollification level `m` from `n` and the optional `m`/`γ` pair.
pub fn resolve_level(n: u64, m: Option<f64>, gamma: Option<f64>) -> Result<Option<f64>> {
    match (m, gamma) {
        (Some(m), Some(g)) => {
            let derived = (n as f64).powf(g);
            ensure((m - derived).abs() <= 1e-12 * derived, || {
                format!("m = {m} conflicts with m = n^gamma = {derived}")
            })?;
            Ok(Some(derived))
        }
        (None, Some(g)) => {
            ensure(g > 0.0, || format!("gamma must be positive, got {g}"))?;
            Ok(Some((n as f64).powf(g)))
        }
        (m, None) => Ok(m),
    }
}

/// Checks `γ < (α-1)/(2αβ)` and `β < (α-1)/2`.
pub fn check_coupling(alpha: f64, beta: Option<f64>, gamma: Option<f64>) -> Result<()> {
    if let Some(beta) = beta {
        ensure(beta > 0.0 && beta < (alpha - 1.0) / 2.0, || {
            format!(
                "drift regularity beta = {beta} must lie in (0, (alpha-1)/2) = (0, {})",
                (alpha - 1.0) / 2.0
            )
        })?;
        if let Some(gamma) = gamma {
            let bound = (alpha - 1.0) / (2.0 * alpha * beta);
            ensure(gamma > 0.0 && gamma < bound, || {
                format!(
                    "coupling m = n^gamma needs gamma in (0, (alpha-1)/(2 alpha beta)) = (0, {bound:.6}), got {gamma}"
                )
            })?;
        }
    } else if gamma.is_some() {
        warn!("gamma given for a drift without declared regularity; the coupling bound is not checked");
    }
    Ok(())
}

impl EulerScheme {
    pub fn new(config: EulerConfig) -> Result<Self> {
        ensure(config.n >= 1, || "n must be at least 1".into())?;
        ensure(config.horizon > 0.0 && config.horizon.is_finite(), || {
            format!("horizon must be positive, got {}", config.horizon)
        })?;
        let steps_f = config.horizon * config.n as f64;
        let steps = steps_f.round();
        ensure((steps_f - steps).abs() < 1e-9 && steps >= 1.0, || {
            format!(
                "horizon T = {} is not an integer multiple of 1/n = 1/{}",
                config.horizon, config.n
            )
        })?;
        let spec = ProcessSpec::from_config(&config.noise)?;
        ensure(config.x0.len() == spec.dim(), || {
            format!("x0 has length {} but the noise has dimension {}", config.x0.len(), spec.dim())
        })?;
        ensure(config.x0.iter().all(|x| x.is_finite()), || "x0 must be finite".into())?;
        config.sigma.validate()?;
        config.drift.validate()?;
        let level = resolve_level(config.n, config.m, config.gamma)?;
        check_coupling(spec.alpha(), config.drift.declared_beta(), config.gamma)?;
        let effective = match level {
            Some(m) => config.drift.with_level(m),
            None => config.drift.clone(),
        };
        let needs_grid = matches!(effective, DriftSpec::Mollified { .. });
        if needs_grid && spec.dim() != 1 {
            return Err(Error::Unsupported("mollified drifts are one-dimensional".into()));
        }
        let analyzer = if needs_grid { Some(config.grid.analyzer()?) } else { None };
        let drift = Drift::build(&effective, analyzer.as_ref())?;
        let sampler = spec.increment_sampler()?;
        Ok(Self {
            dt: 1.0 / config.n as f64,
            steps: steps as u64,
            level,
            config,
            spec,
            sampler,
            drift,
        })
    }

    pub fn config(&self) -> &EulerConfig {
        &self.config
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Mollification level actually used.
    pub fn level(&self) -> Option<f64> {
        self.level
    }

    fn run<F: FnMut(&[f64])>(&self, traj_index: u64, mut visit: F) -> Option<Vec<f64>> {
        let d = self.spec.dim();
        let x0 = &self.config.x0;
        let mut rng = stream(self.config.seed, traj_index);
        let mut drift_sum = vec![0.0; d];
        let mut noise_sum = vec![0.0; d];
        let mut inc = vec![0.0; d];
        let mut x = x0.clone();
        visit(&x);
        for _ in 0..self.steps {
            for i in 0..d {
                drift_sum[i] += self.drift.eval1(x[i]) * self.dt;
            }
            self.sampler.fill(self.dt, &mut rng, &mut inc);
            match self.config.sigma {
                Sigma::Identity => {
                    for i in 0..d {
                        noise_sum[i] += inc[i];
                    }
                }
                sigma => {
                    let s = sigma.scalar(x[0]);
                    for i in 0..d {
                        noise_sum[i] += s * inc[i];
                    }
                }
            }
            for i in 0..d {
                x[i] = (x0[i] + drift_sum[i]) + noise_sum[i];
                if x[i].is_nan() || x[i].abs() > EXPLOSION_THRESHOLD {
                    return None;
                }
            }
            visit(&x);
        }
        Some(x)
    }

    /// Terminal state of trajectory `traj_index`; `None` when it blew up.
    pub fn simulate_one(&self, traj_index: u64) -> Option<Vec<f64>> {
        self.run(traj_index, |_| {})
    }

    /// Grid skeleton of trajectory `traj_index`.
    pub fn simulate_path(&self, traj_index: u64) -> Option<crate::levy::Trajectory> {
        let mut states = Vec::with_capacity(self.steps as usize + 1);
        self.run(traj_index, |x| states.push(x.to_vec()))?;
        Some(crate::levy::Trajectory {
            times: (0..=self.steps).map(|k| k as f64 * self.dt).collect(),
            states,
            seed_id: traj_index,
        })
    }

    /// `N` terminal samples, generated in parallel and assembled in index order.
    pub fn simulate_ensemble(&self) -> Result<EmpiricalLaw> {
        ensure(self.config.samples >= 1, || "ensemble size N must be at least 1".into())?;
        let outcomes: Vec<Option<Vec<f64>>> = (0..self.config.samples as u64)
            .into_par_iter()
            .map(|i| self.simulate_one(i))
            .collect();
        let d = self.spec.dim();
        let mut samples = Vec::with_capacity(outcomes.len() * d);
        let mut excluded = 0usize;
        for o in outcomes {
            match o {
                Some(x) => samples.extend(x),
                None => excluded += 1,
            }
        }
        check_exclusions(excluded, self.config.samples)?;
        let mut resolved = self.config.clone();
        resolved.m = self.level;
        Ok(EmpiricalLaw::new(d, self.config.horizon, samples, excluded, resolved))
    }
}

fn check_exclusions(excluded: usize, total: usize) -> Result<()> {
    if excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
        return Err(Error::Unstable { excluded, total });
    }
    if excluded > 0 {
        warn!("{excluded} of {total} trajectories exceeded |X| > {EXPLOSION_THRESHOLD:e} and were excluded");
    }
    Ok(())
}

/// SHA-256 of the little-endian sample bytes.
pub fn content_hash(samples: &[f64]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Generation record of an [`EmpiricalLaw`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawManifest {
    pub version: String,
    pub config: EulerConfig,
    pub dim: usize,
    pub horizon: f64,
    pub kept: usize,
    pub excluded: usize,
    pub content_hash: String,
}

/// Terminal samples at time `horizon` (row-major `kept × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    pub samples: Vec<f64>,
    pub manifest: LawManifest,
}

impl EmpiricalLaw {
    pub fn new(dim: usize, horizon: f64, samples: Vec<f64>, excluded: usize, config: EulerConfig) -> Self {
        let manifest = LawManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            dim,
            horizon,
            kept: samples.len() / dim,
            excluded,
            content_hash: content_hash(&samples),
        };
        Self { samples, manifest }
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn len(&self) -> usize {
        self.manifest.kept
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.kept == 0
    }

    /// Coordinate `i` of every sample.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.samples.chunks(self.dim()).map(|c| c[i]).collect()
    }
}

/// One chain of a coupled simulation.
#[derive(Debug, Clone)]
pub struct CoupledLevel {
    pub n: u64,
    pub drift: Drift,
}

/// Terminal samples of several one-dimensional chains driven by one noise path.
#[derive(Debug, Clone)]
pub struct CoupledEnsemble {
    pub levels: Vec<u64>,
    /// `samples[l][i]`: chain `l`, trajectory `i` (excluded trajectories
    /// removed from every chain).
    pub samples: Vec<Vec<f64>>,
    pub excluded: usize,
}

/// Simulates every level on the same noise path, sampled at `n_fine` steps
/// per unit time; chain `l` reads the path at its own grid times. Each chain
/// has exactly the law of the uncoupled scheme at its `n`.
pub fn simulate_coupled(
    spec: &ProcessSpec,
    levels: &[CoupledLevel],
    n_fine: u64,
    x0: f64,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<CoupledEnsemble> {
    ensure(spec.dim() == 1, || "coupled simulation is one-dimensional".into())?;
    ensure(!levels.is_empty(), || "no levels to simulate".into())?;
    ensure(samples >= 1, || "ensemble size N must be at least 1".into())?;
    for l in levels {
        ensure(l.n >= 1 && n_fine.is_multiple_of(l.n), || {
            format!("level n = {} does not divide the fine step count {n_fine}", l.n)
        })?;
    }
    let fine_steps_f = horizon * n_fine as f64;
    ensure((fine_steps_f - fine_steps_f.round()).abs() < 1e-9 && fine_steps_f >= 1.0, || {
        format!("horizon {horizon} is not a multiple of 1/{n_fine}")
    })?;
    let fine_steps = fine_steps_f.round() as u64;
    let sampler = spec.increment_sampler()?;
    let scale = sampler.scale(1.0 / n_fine as f64);
    let strides: Vec<u64> = levels.iter().map(|l| n_fine / l.n).collect();
    let dts: Vec<f64> = levels.iter().map(|l| 1.0 / l.n as f64).collect();
    let outcomes: Vec<Option<Vec<f64>>> = (0..samples as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream(seed, idx);
            let mut noise = 0.0;
            let mut drift_sum = vec![0.0; levels.len()];
            let mut state = vec![x0; levels.len()];
            for step in 1..=fine_steps {
                noise += scale * sampler.standard_1d(&mut rng);
                for l in 0..levels.len() {
                    if step % strides[l] == 0 {
                        drift_sum[l] += levels[l].drift.eval1(state[l]) * dts[l];
                        let x = (x0 + drift_sum[l]) + noise;
                        if x.is_nan() || x.abs() > EXPLOSION_THRESHOLD {
                            return None;
                        }
                        state[l] = x;
                    }
                }
            }
            Some(state)
        })
        .collect();
    let mut out = vec![Vec::with_capacity(samples); levels.len()];
    let mut excluded = 0;
    for o in outcomes {
        match o {
            Some(states) => {
                for (col, s) in out.iter_mut().zip(states) {
                    col.push(s);
                }
            }
            None => excluded += 1,
        }
    }
    check_exclusions(excluded, samples)?;
    Ok(CoupledEnsemble {
        levels: levels.iter().map(|l| l.n).collect(),
        samples: out,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::SmoothFunction;
    use crate::levy::{Convention, SphereConfig, SphereKind};
    use crate::stats::{ks_two_sample, quantile_sorted, sorted_copy};
    use rand::Rng;

    fn noise(alpha: f64, d: usize) -> ProcessConfig {
        ProcessConfig {
            alpha,
            sphere: SphereConfig {
                kind: SphereKind::Cylindrical,
                d,
                atoms: vec![],
            },
            convention: Convention::CharExponent,
        }
    }

    fn config(drift: DriftSpec, n: u64) -> EulerConfig {
        EulerConfig {
            n,
            m: None,
            gamma: None,
            x0: vec![0.25],
            horizon: 1.0,
            drift,
            noise: noise(1.5, 1),
            sigma: Sigma::Identity,
            samples: 100,
            seed: 17,
            grid: GridConfig::default(),
        }
    }

    #[test]
    fn phi_n_examples() {
        assert_eq!(phi_n(0.349, 10), 0.3);
        for n in [3u64, 7, 10, 64, 100, 1000] {
            for k in 0..=n {
                let t = k as f64 / n as f64;
                assert_eq!(phi_n(t, n), t, "k={k} n={n}");
            }
        }
        let mut rng = stream(1, 0);
        for _ in 0..1_000_000 {
            let t: f64 = 5.0 * rng.random::<f64>();
            let n = rng.random_range(1..2000u64);
            let p = phi_n(t, n);
            assert!(p <= t && t - p < 1.0 / n as f64);
        }
    }

    #[test]
    fn zero_drift_reproduces_levy_path() {
        let scheme = EulerScheme::new(config(DriftSpec::smooth(SmoothFunction::Zero), 64)).unwrap();
        let spec = scheme.spec().clone();
        let grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        for i in 0..20 {
            let x = scheme.simulate_one(i).unwrap()[0];
            let l = spec.sample_path(&grid, i, &mut stream(17, i)).unwrap();
            assert_eq!(x, 0.25 + l.terminal()[0]);
        }
    }

    #[test]
    fn constant_drift_is_exact() {
        let scheme =
            EulerScheme::new(config(DriftSpec::smooth(SmoothFunction::Constant { value: 0.75 }), 64)).unwrap();
        let spec = scheme.spec().clone();
        let grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        for i in 0..20 {
            let x = scheme.simulate_one(i).unwrap()[0];
            let l = spec.sample_path(&grid, i, &mut stream(17, i)).unwrap();
            assert_eq!(x, (0.25 + 0.75 * 1.0) + l.terminal()[0]);
        }
    }

    #[test]
    fn rejects_fractional_horizon_and_bad_gamma() {
        let mut c = config(DriftSpec::smooth(SmoothFunction::Zero), 10);
        c.horizon = 0.35;
        assert!(matches!(EulerScheme::new(c), Err(Error::Parameter(_))));
        let mut c = config(DriftSpec::lacunary(0.1, 10, 1.0, 0), 64);
        c.noise = noise(1.8, 1);
        c.gamma = Some(3.0);
        let err = EulerScheme::new(c).unwrap_err().to_string();
        assert!(err.contains("(alpha-1)/(2 alpha beta)"), "{err}");
        let mut c = config(DriftSpec::lacunary(0.1, 10, 1.0, 0), 64);
        c.noise = noise(1.8, 1);
        assert!(matches!(EulerScheme::new(c), Err(Error::Usage(_))));
    }

    #[test]
    fn coupled_gamma_sets_level() {
        let mut c = config(DriftSpec::lacunary(0.1, 10, 1.0, 0), 64);
        c.noise = noise(1.8, 1);
        c.gamma = Some(1.0 / 1.8);
        c.grid = GridConfig {
            period: 2.0 * std::f64::consts::PI,
            size: 4096,
        };
        let scheme = EulerScheme::new(c).unwrap();
        assert!((scheme.level().unwrap() - 64f64.powf(1.0 / 1.8)).abs() < 1e-12);
    }

    #[test]
    fn ensemble_of_one_matches_single_run() {
        let mut c = config(
            DriftSpec::smooth(SmoothFunction::Sine {
                amplitude: 1.0,
                frequency: 1.0,
            }),
            32,
        );
        c.samples = 1;
        let scheme = EulerScheme::new(c).unwrap();
        let law = scheme.simulate_ensemble().unwrap();
        assert_eq!(law.samples, scheme.simulate_one(0).unwrap());
    }

    #[test]
    fn median_of_driftless_ensemble_is_start() {
        let mut c = config(DriftSpec::smooth(SmoothFunction::Zero), 16);
        c.samples = 20_000;
        let law = EulerScheme::new(c).unwrap().simulate_ensemble().unwrap();
        let sorted = sorted_copy(&law.samples);
        let med = quantile_sorted(&sorted, 0.5);
        // sd of the median ≈ 1/(2 f(0) sqrt N) with f(0) = Γ(1+1/α)/π
        assert!((med - 0.25).abs() < 3.0 * 0.014, "{med}");
    }

    #[test]
    fn ensemble_is_reproducible_and_thread_independent() {
        let mut c = config(DriftSpec::smooth(SmoothFunction::Sign { amplitude: 1.0 }), 32);
        c.samples = 2000;
        let scheme = EulerScheme::new(c).unwrap();
        let a = scheme.simulate_ensemble().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| scheme.simulate_ensemble().unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn coupled_chain_has_the_scheme_law() {
        let spec = ProcessSpec::cylindrical(1.5, 1).unwrap();
        let drift = Drift::Smooth(SmoothFunction::Sign { amplitude: 1.0 });
        let levels = [
            CoupledLevel {
                n: 8,
                drift: drift.clone(),
            },
            CoupledLevel { n: 64, drift },
        ];
        let coupled = simulate_coupled(&spec, &levels, 64, 0.0, 1.0, 20_000, 5).unwrap();
        let mut c = config(DriftSpec::smooth(SmoothFunction::Sign { amplitude: 1.0 }), 8);
        c.x0 = vec![0.0];
        c.samples = 20_000;
        c.seed = 99;
        let direct = EulerScheme::new(c).unwrap().simulate_ensemble().unwrap();
        assert!(ks_two_sample(&coupled.samples[0], &direct.samples).p_value > 0.001);
        // with zero drift every chain reads the same endpoint
        let zero = [
            CoupledLevel {
                n: 4,
                drift: Drift::Smooth(SmoothFunction::Zero),
            },
            CoupledLevel {
                n: 16,
                drift: Drift::Smooth(SmoothFunction::Zero),
            },
        ];
        let z = simulate_coupled(&spec, &zero, 16, 0.0, 1.0, 100, 1).unwrap();
        assert_eq!(z.samples[0], z.samples[1]);
    }

    #[test]
    fn explosive_runs_abort() {
        let mut c = config(DriftSpec::smooth(SmoothFunction::Constant { value: 1e13 }), 4);
        c.samples = 50;
        assert!(matches!(
            EulerScheme::new(c).unwrap().simulate_ensemble(),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn multiplicative_noise_plumbing() {
        let mut c = config(DriftSpec::smooth(SmoothFunction::Zero), 16);
        c.sigma = Sigma::Oscillating {
            level: 1.0,
            amplitude: 0.5,
            frequency: 1.0,
        };
        assert!((c.sigma.ellipticity() - 2.0).abs() < 1e-6);
        let scheme = EulerScheme::new(c.clone()).unwrap();
        assert!(scheme.simulate_one(0).unwrap()[0].is_finite());
        c.sigma = Sigma::Oscillating {
            level: 0.5,
            amplitude: 0.5,
            frequency: 1.0,
        };
        assert!(EulerScheme::new(c).is_err());
    }

    #[test]
    fn config_round_trip() {
        let mut c = config(DriftSpec::lacunary(0.1, 10, 1.0, 0), 64);
        c.gamma = Some(0.5);
        let text = toml::to_string(&c).unwrap();
        let back: EulerConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
