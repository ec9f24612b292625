//! Drifts: bounded closed-form functions, lacunary distributional fields of
//! prescribed negative Besov regularity, and their mollifications
//! `b_m = b ∗ K_m` with `K_m(x) = m K(mx)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::littlewood_paley::{DyadicAnalyzer, GridFunction};
use crate::stream::{derive_seed, stream};

/// Nodes of the trapezoidal rule for the bump on `[-1, 1]`. The bump is flat
/// to all orders at `±1`, so the rule converges faster than any power.
const KERNEL_NODES: usize = 4096;

/// Beyond this argument `|K̂|` is below `1e-18` and is set to zero.
const KERNEL_FREQ_CUTOFF: f64 = 2000.0;

/// Minimum number of grid cells across `supp K_m`.
pub const MIN_KERNEL_CELLS: f64 = 8.0;

/// Mollifier shape. Only the normalized bump `C e^{-1/(1-x²)}` on `|x| < 1`
/// is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Bump,
}

fn bump(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Tabulated bump with its normalization.
#[derive(Debug, Clone)]
pub struct Kernel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mass: f64,
}

impl Kernel {
    pub fn new(spec: KernelSpec) -> Self {
        match spec {
            KernelSpec::Bump => {
                let h = 2.0 / KERNEL_NODES as f64;
                let nodes: Vec<f64> = (1..KERNEL_NODES).map(|i| -1.0 + i as f64 * h).collect();
                let raw: Vec<f64> = nodes.iter().map(|&x| bump(x)).collect();
                let mass: f64 = raw.iter().sum::<f64>() * h;
                let weights = raw.iter().map(|v| v * h / mass).collect();
                Self { nodes, weights, mass }
            }
        }
    }

    /// Normalized density `K(x)`.
    pub fn density(&self, x: f64) -> f64 {
        bump(x) / self.mass
    }

    /// `K̂(ξ) = ∫ K(x) cos(ξx) dx` (the kernel is even).
    pub fn transform(&self, xi: f64) -> f64 {
        if xi.abs() > KERNEL_FREQ_CUTOFF {
            return 0.0;
        }
        if xi == 0.0 {
            return 1.0;
        }
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * (xi * x).cos())
            .sum()
    }
}

/// Amplitude profile of the lacunary series `Σ_j A_j cos(2^j x + θ_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LacunaryProfile {
    /// `A_j = 2^{jβ}`.
    #[default]
    Geometric,
    /// `A_0 = 1`, `A_j = 2^{jβ} - 2^{(j-1)β}`: partial sums are exactly
    /// `2^{kβ}`, so aligned phases saturate `‖b_m‖_∞ ≍ m^β`.
    Telescoping,
}

impl LacunaryProfile {
    pub fn amplitude(self, beta: f64, j: u32) -> f64 {
        let g = |k: f64| (k * beta).exp2();
        match self {
            LacunaryProfile::Geometric => g(j as f64),
            LacunaryProfile::Telescoping if j == 0 => 1.0,
            LacunaryProfile::Telescoping => g(j as f64) - g(j as f64 - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// `θ_j` uniform on `[0, 2π)`, drawn from the field seed.
    #[default]
    Seeded,
    /// `θ_j = 0`.
    Aligned,
}

/// Closed-form pointwise drifts, applied to each coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothFunction {
    Zero,
    Constant { value: f64 },
    Sine { amplitude: f64, frequency: f64 },
    /// `amplitude · sign(x)`, with `sign(0) = 0`. Bounded but discontinuous.
    Sign { amplitude: f64 },
    Tanh { amplitude: f64, scale: f64 },
}

impl SmoothFunction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SmoothFunction::Zero => 0.0,
            SmoothFunction::Constant { value } => value,
            SmoothFunction::Sine { amplitude, frequency } => amplitude * (frequency * x).sin(),
            SmoothFunction::Sign { amplitude } => {
                if x > 0.0 {
                    amplitude
                } else if x < 0.0 {
                    -amplitude
                } else {
                    0.0
                }
            }
            SmoothFunction::Tanh { amplitude, scale } => amplitude * (x / scale).tanh(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            SmoothFunction::Zero => 0.0,
            SmoothFunction::Constant { value } => value.abs(),
            SmoothFunction::Sine { amplitude, .. }
            | SmoothFunction::Sign { amplitude }
            | SmoothFunction::Tanh { amplitude, .. } => amplitude.abs(),
        }
    }
}

fn default_amplitude() -> f64 {
    1.0
}

/// Declarative drift description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Smooth { function: SmoothFunction },
    /// `a0 Σ_{j=0}^{J} A_j cos(2^j x + θ_j)` on the `2π`-torus.
    Lacunary {
        beta: f64,
        levels: u32,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        profile: LacunaryProfile,
        #[serde(default)]
        phases: PhaseMode,
    },
    Mollified {
        base: Box<DriftSpec>,
        m: f64,
        #[serde(default)]
        kernel: KernelSpec,
    },
}

impl DriftSpec {
    pub fn smooth(function: SmoothFunction) -> Self {
        DriftSpec::Smooth { function }
    }

    pub fn lacunary(beta: f64, levels: u32, amplitude: f64, seed: u64) -> Self {
        DriftSpec::Lacunary {
            beta,
            levels,
            amplitude,
            seed,
            profile: LacunaryProfile::Geometric,
            phases: PhaseMode::Seeded,
        }
    }

    pub fn mollified(self, m: f64) -> Self {
        DriftSpec::Mollified {
            base: Box::new(self),
            m,
            kernel: KernelSpec::Bump,
        }
    }

    /// Regularity index `β` with `b ∈ B^{-β}_{∞,∞}`, when known.
    pub fn declared_beta(&self) -> Option<f64> {
        match self {
            DriftSpec::Smooth { .. } => None,
            DriftSpec::Lacunary { beta, .. } => Some(*beta),
            DriftSpec::Mollified { base, .. } => base.declared_beta(),
        }
    }

    /// Pointwise evaluable without further construction.
    pub fn is_distributional(&self) -> bool {
        matches!(self, DriftSpec::Lacunary { .. })
    }

    /// Replaces the mollification level (for `m = n^γ` coupling).
    pub fn with_level(&self, m: f64) -> Self {
        match self {
            DriftSpec::Mollified { base, kernel, .. } => DriftSpec::Mollified {
                base: base.clone(),
                m,
                kernel: *kernel,
            },
            other => other.clone().mollified(m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftSpec::Smooth { function } => match *function {
                SmoothFunction::Tanh { scale, .. } => {
                    ensure(scale > 0.0, || format!("tanh scale must be positive, got {scale}"))
                }
                SmoothFunction::Constant { value } => {
                    ensure(value.is_finite(), || "constant drift must be finite".into())
                }
                _ => Ok(()),
            },
            DriftSpec::Lacunary { beta, amplitude, .. } => {
                ensure(*beta > 0.0 && *beta < 1.0, || format!("beta must lie in (0, 1), got {beta}"))?;
                ensure(amplitude.is_finite(), || "amplitude must be finite".into())
            }
            DriftSpec::Mollified { base, m, .. } => {
                ensure(*m > 0.0 && m.is_finite(), || format!("mollification level m must be positive, got {m}"))?;
                base.validate()
            }
        }
    }
}

fn lacunary_phases(seed: u64, levels: u32, mode: PhaseMode) -> Vec<f64> {
    match mode {
        PhaseMode::Aligned => vec![0.0; levels as usize + 1],
        PhaseMode::Seeded => {
            let mut rng = stream(derive_seed(seed, "lacunary-phases"), 0);
            (0..=levels).map(|_| 2.0 * PI * rng.random::<f64>()).collect()
        }
    }
}

fn check_two_pi_period(analyzer: &DyadicAnalyzer) -> Result<()> {
    let turns = analyzer.period() / (2.0 * PI);
    ensure(turns >= 1.0 && (turns - turns.round()).abs() < 1e-12, || {
        format!(
            "lacunary fields are 2π-periodic; analyzer period {} is not a multiple of 2π",
            analyzer.period()
        )
    })
}

/// Samples the lacunary field described by `spec` on the analyzer grid.
pub fn synth_besov_field(spec: &DriftSpec, analyzer: &DyadicAnalyzer) -> Result<GridFunction> {
    let DriftSpec::Lacunary {
        beta,
        levels,
        amplitude,
        seed,
        profile,
        phases,
    } = spec
    else {
        return Err(Error::Usage("synth_besov_field needs a lacunary drift spec".into()));
    };
    spec.validate()?;
    ensure(analyzer.dim() == 1, || "rough drifts are one-dimensional".into())
        .map_err(|e| Error::Unsupported(e.to_string()))?;
    check_two_pi_period(analyzer)?;
    if *levels as i32 > analyzer.j_max() {
        return Err(Error::Config(format!(
            "lacunary level count J = {levels} exceeds the analyzer's J_max = {}; increase grid_size",
            analyzer.j_max()
        )));
    }
    let theta = lacunary_phases(*seed, *levels, *phases);
    let amps: Vec<f64> = (0..=*levels).map(|j| amplitude * profile.amplitude(*beta, j)).collect();
    Ok(analyzer.sample(|x| {
        amps.iter()
            .zip(&theta)
            .enumerate()
            .map(|(j, (a, th))| a * ((j as f64).exp2() * x[0] + th).cos())
            .sum()
    }))
}

/// Periodic convolution of `base` with `K_m`, spectrally.
pub fn mollify(base: &GridFunction, m: f64, kernel: KernelSpec, analyzer: &DyadicAnalyzer) -> Result<GridFunction> {
    ensure(m > 0.0 && m.is_finite(), || format!("mollification level m must be positive, got {m}"))?;
    if analyzer.dim() != 1 {
        return Err(Error::Unsupported("mollification is implemented in d = 1".into()));
    }
    let cells = (2.0 / m) / analyzer.spacing();
    if cells < MIN_KERNEL_CELLS {
        let need = (MIN_KERNEL_CELLS * m * analyzer.period() / 2.0).ceil() as usize;
        return Err(Error::Resolution(format!(
            "supp K_m spans {cells:.2} grid cells (< {MIN_KERNEL_CELLS}) at m = {m}; use grid_size >= {}",
            need.next_power_of_two()
        )));
    }
    analyzer.check(base)?;
    let k = Kernel::new(kernel);
    let n = analyzer.grid_size();
    let half: Vec<f64> = analyzer.wavenumbers()[..=n / 2]
        .iter()
        .map(|xi| k.transform(xi.abs() / m))
        .collect();
    let mut spec = analyzer.forward(base);
    for (i, c) in spec.iter_mut().enumerate() {
        *c *= half[i.min(n - i)];
    }
    Ok(analyzer.inverse(spec))
}

/// Pointwise-evaluable drift.
#[derive(Debug, Clone)]
pub enum Drift {
    Smooth(SmoothFunction),
    /// Periodic grid samples evaluated by cubic interpolation.
    Grid(GridDrift),
}

impl Drift {
    /// Builds an evaluable drift. Raw distributional fields are rejected.
    pub fn build(spec: &DriftSpec, analyzer: Option<&DyadicAnalyzer>) -> Result<Self> {
        spec.validate()?;
        match spec {
            DriftSpec::Smooth { function } => Ok(Drift::Smooth(*function)),
            DriftSpec::Lacunary { .. } => Err(Error::Usage(
                "a distributional drift has no pointwise values; mollify it first".into(),
            )),
            DriftSpec::Mollified { base, m, kernel } => {
                let an = analyzer.ok_or_else(|| {
                    Error::Config("a mollified drift needs a spatial grid (grid.period, grid.size)".into())
                })?;
                let raw = match base.as_ref() {
                    DriftSpec::Lacunary { .. } => synth_besov_field(base, an)?,
                    DriftSpec::Smooth { function } => an.sample(|x| function.eval(x[0])),
                    DriftSpec::Mollified { .. } => match Drift::build(base, analyzer)? {
                        Drift::Grid(g) => g.grid,
                        Drift::Smooth(f) => an.sample(|x| f.eval(x[0])),
                    },
                };
                let values = mollify(&raw, *m, *kernel, an)?;
                Ok(Drift::Grid(GridDrift::new(values)))
            }
        }
    }

    #[inline]
    pub fn eval1(&self, x: f64) -> f64 {
        match self {
            Drift::Smooth(f) => f.eval(x),
            Drift::Grid(g) => g.eval(x),
        }
    }

    /// `b(t, x)`, time-independent, coordinatewise.
    pub fn evaluate(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| self.eval1(xi)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Drift::Smooth(f) => f.sup_norm(),
            Drift::Grid(g) => g.grid.sup_norm(),
        }
    }

    /// True when the drift is the same constant everywhere.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Drift::Smooth(SmoothFunction::Zero) => Some(0.0),
            Drift::Smooth(SmoothFunction::Constant { value }) => Some(*value),
            _ => None,
        }
    }
}

/// `evaluate` on a declarative spec: builds the drift and evaluates once.
pub fn evaluate(spec: &DriftSpec, analyzer: Option<&DyadicAnalyzer>, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    Ok(Drift::build(spec, analyzer)?.evaluate(t, x))
}

/// One-dimensional periodic grid drift with 4-point Lagrange interpolation.
#[derive(Debug, Clone)]
pub struct GridDrift {
    grid: GridFunction,
    inv_h: f64,
}

impl GridDrift {
    pub fn new(grid: GridFunction) -> Self {
        let inv_h = grid.grid_size as f64 / grid.period;
        Self { grid, inv_h }
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.grid_size;
        let u = (x * self.inv_h).rem_euclid(n as f64);
        let i = u.floor();
        let s = u - i;
        let i = i as usize % n;
        let v = &self.grid.values;
        let p0 = v[(i + n - 1) % n];
        let p1 = v[i];
        let p2 = v[(i + 1) % n];
        let p3 = v[(i + 2) % n];
        let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::build_partition;
    use crate::quad;
    use crate::stats::loglog_slope;

    #[test]
    fn kernel_mass_and_transform() {
        let k = Kernel::new(KernelSpec::Bump);
        let mass = quad::integrate(|x| k.density(x), -1.0, 1.0, 1e-14);
        assert!((mass - 1.0).abs() < 1e-10);
        assert_eq!(k.density(1.0), 0.0);
        assert_eq!(k.density(-1.5), 0.0);
        for xi in [0.5, 3.0, 17.0, 80.0] {
            let direct = quad::integrate(|x| k.density(x) * (xi * x).cos(), -1.0, 1.0, 1e-15);
            assert!((k.transform(xi) - direct).abs() < 1e-12, "xi={xi}");
        }
        assert!(k.transform(1999.0).abs() < 1e-17);
        // grid quadrature of K_m at a resolved level
        let an = build_partition(1, 2.0 * PI, 4096).unwrap();
        let m = 8.0;
        let h = an.spacing();
        let grid_mass: f64 = an.centered_nodes().iter().map(|&x| m * k.density(m * x)).sum::<f64>() * h;
        assert!((grid_mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lacunary_norm_and_growth() {
        let an = build_partition(1, 2.0 * PI, 1 << 14).unwrap();
        let mut last_sup = 0.0;
        for levels in [4, 8, 12] {
            let spec = DriftSpec::Lacunary {
                beta: 0.1,
                levels,
                amplitude: 1.0,
                seed: 3,
                profile: LacunaryProfile::Geometric,
                phases: PhaseMode::Aligned,
            };
            let b = synth_besov_field(&spec, &an).unwrap();
            let norm = an.besov_sup(&b, -0.1).unwrap();
            assert!((norm - 1.0).abs() < 1e-9, "J={levels}: {norm}");
            let sup = b.sup_norm();
            let series: f64 = (0..=levels).map(|j| (0.1 * j as f64).exp2()).sum();
            assert!((sup - series).abs() < 1e-9);
            assert!(sup > last_sup);
            last_sup = sup;
        }
    }

    #[test]
    fn lacunary_single_level_and_determinism() {
        let an = build_partition(1, 2.0 * PI, 1024).unwrap();
        let spec = DriftSpec::lacunary(0.3, 0, 2.0, 7);
        let b = synth_besov_field(&spec, &an).unwrap();
        assert!((b.sup_norm() - 2.0).abs() < 1e-6);
        let norm = an.besov_sup(&b, -0.3).unwrap();
        assert!((norm - 2.0).abs() < 1e-6);
        let again = synth_besov_field(&spec, &an).unwrap();
        assert_eq!(b, again);
        let too_deep = DriftSpec::lacunary(0.3, 9, 1.0, 7);
        assert!(matches!(synth_besov_field(&too_deep, &an), Err(Error::Config(_))));
        let wrong_period = build_partition(1, 7.0, 1024).unwrap();
        assert!(synth_besov_field(&spec, &wrong_period).is_err());
    }

    #[test]
    fn seeded_phases_keep_norm_within_factor_two() {
        let an = build_partition(1, 2.0 * PI, 1 << 14).unwrap();
        for seed in 0..5 {
            let spec = DriftSpec::lacunary(0.2, 12, 1.0, seed);
            let b = synth_besov_field(&spec, &an).unwrap();
            let norm = an.besov_sup(&b, -0.2).unwrap();
            assert!((0.5..=2.0).contains(&norm), "seed={seed}: {norm}");
        }
    }

    #[test]
    fn mollify_preserves_mean_and_constants() {
        let an = build_partition(1, 2.0 * PI, 4096).unwrap();
        let f = an.sample(|x| 0.7 + (3.0 * x[0]).sin());
        let g = mollify(&f, 8.0, KernelSpec::Bump, &an).unwrap();
        let mean = |h: &GridFunction| h.values.iter().sum::<f64>() / h.values.len() as f64;
        assert!((mean(&f) - mean(&g)).abs() < 1e-10);
        let c = DriftSpec::smooth(SmoothFunction::Constant { value: 1.3 });
        for m in [1.0, 10.0, 100.0] {
            let d = Drift::build(&c.clone().mollified(m), Some(&an)).unwrap();
            for x in [-5.0, 0.0, 0.3, 100.0] {
                assert!((d.eval1(x) - 1.3).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mollify_is_an_approximate_identity() {
        let an = build_partition(1, 2.0 * PI, 4096).unwrap();
        let f = an.sample(|x| (x[0]).sin() + 0.5 * (5.0 * x[0]).cos());
        let mut last = f64::INFINITY;
        for m in [8.0, 16.0, 32.0, 64.0] {
            let err = mollify(&f, m, KernelSpec::Bump, &an).unwrap().sub(&f).sup_norm();
            assert!(err < last, "m={m}");
            last = err;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn mollify_resolution_error() {
        let an = build_partition(1, 2.0 * PI, 1024).unwrap();
        let f = an.sample(|x| x[0].sin());
        // 2/m over h = 2π/1024 needs m ≤ 40.7
        assert!(mollify(&f, 40.0, KernelSpec::Bump, &an).is_ok());
        assert!(matches!(mollify(&f, 41.0, KernelSpec::Bump, &an), Err(Error::Resolution(_))));
    }

    #[test]
    fn aligned_telescoping_field_grows_like_m_beta() {
        let an = build_partition(1, 2.0 * PI, 1 << 16).unwrap();
        let ms: Vec<f64> = (1..=6).map(|k| (k as f64).exp2()).collect();
        for beta in [0.1, 0.2, 0.3] {
            let spec = DriftSpec::Lacunary {
                beta,
                levels: 14,
                amplitude: 1.0,
                seed: 0,
                profile: LacunaryProfile::Telescoping,
                phases: PhaseMode::Aligned,
            };
            let b = synth_besov_field(&spec, &an).unwrap();
            let base_norm = an.besov_sup(&b, -beta).unwrap();
            let sups: Vec<f64> = ms
                .iter()
                .map(|&m| {
                    let bm = mollify(&b, m, KernelSpec::Bump, &an).unwrap();
                    assert!(an.besov_sup(&bm, -beta).unwrap() <= base_norm * (1.0 + 1e-12));
                    bm.sup_norm()
                })
                .collect();
            let slope = loglog_slope(&ms, &sups);
            assert!((slope - beta).abs() < 0.05, "beta={beta}: slope {slope}");
        }
    }

    #[test]
    fn geometric_field_respects_upper_bound() {
        let an = build_partition(1, 2.0 * PI, 1 << 16).unwrap();
        let beta = 0.2;
        let b = synth_besov_field(&DriftSpec::lacunary(beta, 14, 1.0, 1), &an).unwrap();
        let norm = an.besov_sup(&b, -beta).unwrap();
        for m in [2.0, 8.0, 32.0, 64.0, 256.0] {
            let bm = mollify(&b, m, KernelSpec::Bump, &an).unwrap();
            // ‖b_m‖_∞ ≤ C m^β ‖b‖ with a modest constant
            assert!(bm.sup_norm() <= 10.0 * m.powf(beta) * norm, "m={m}");
        }
    }

    #[test]
    fn mollified_fields_converge_in_weaker_norm() {
        let an = build_partition(1, 2.0 * PI, 1 << 14).unwrap();
        let beta = 0.2;
        let b = synth_besov_field(&DriftSpec::lacunary(beta, 12, 1.0, 2), &an).unwrap();
        let theta = 0.4;
        let dist: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&m| {
                let a = mollify(&b, m, KernelSpec::Bump, &an).unwrap();
                let c = mollify(&b, 2.0 * m, KernelSpec::Bump, &an).unwrap();
                an.besov_sup(&a.sub(&c), -theta).unwrap()
            })
            .collect();
        for w in dist.windows(2) {
            assert!(w[1] < w[0], "{dist:?}");
        }
    }

    #[test]
    fn evaluation() {
        let sine = Drift::build(
            &DriftSpec::smooth(SmoothFunction::Sine {
                amplitude: 1.0,
                frequency: 1.0,
            }),
            None,
        )
        .unwrap();
        assert_eq!(sine.evaluate(0.0, &[PI / 2.0]), vec![1.0]);
        let raw = DriftSpec::lacunary(0.2, 4, 1.0, 0);
        assert!(matches!(Drift::build(&raw, None), Err(Error::Usage(_))));
        assert!(matches!(
            Drift::build(&raw.clone().mollified(4.0), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cubic_interpolation_accuracy() {
        let an = build_partition(1, 2.0 * PI, 4096).unwrap();
        let exact = |x: f64| x.sin() + 0.3 * (17.0 * x).cos() - 0.2 * (40.0 * x + 1.0).sin();
        let g = GridDrift::new(an.sample(|x| exact(x[0])));
        let mut worst: f64 = 0.0;
        for i in 0..20_000 {
            let x = -10.0 + 20.0 * i as f64 / 20_000.0 + 1e-4;
            worst = worst.max((g.eval(x) - exact(x)).abs());
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn spec_round_trip() {
        let spec = DriftSpec::Lacunary {
            beta: 0.1,
            levels: 14,
            amplitude: 1.0,
            seed: 9,
            profile: LacunaryProfile::Telescoping,
            phases: PhaseMode::Aligned,
        }
        .mollified(12.5);
        let text = toml::to_string(&spec).unwrap();
        let back: DriftSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let smooth = DriftSpec::smooth(SmoothFunction::Sign { amplitude: 2.0 });
        let text = toml::to_string(&smooth).unwrap();
        assert_eq!(toml::from_str::<DriftSpec>(&text).unwrap(), smooth);
        assert!(toml::from_str::<DriftSpec>("kind = \"lacunary\"\nbeta = 0.1\nlevels = 3\nbogus = 1\n").is_err());
    }
}
