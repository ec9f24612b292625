//! Dyadic frequency decomposition on a periodic grid.
//!
//! The cutoff `χ` equals 1 on `|ξ| ≤ 1`, vanishes for `|ξ| ≥ 3/2` and is
//! `C^∞` in between; `ψ(ξ) = χ(ξ) - χ(2ξ)` and `ψ_j(ξ) = ψ(2^{-j}ξ)`. The
//! block `R_j` multiplies the discrete spectrum by `ψ_j` (by `χ(2·)` for
//! `j = -1`), so `Σ_{j=-1}^{k} R_j = χ(2^{-k}D)` holds exactly on the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::spectral::{wavenumbers, Spectral};
use crate::stream::normal;

/// Spectral mass fraction above the last resolvable level that triggers the
/// leakage flag.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;

fn smooth_exp(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        (-1.0 / v).exp()
    }
}

/// `C^∞` transition from 1 (at `u ≤ 0`) to 0 (at `u ≥ 1`).
pub fn transition(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let a = smooth_exp(1.0 - u);
    a / (a + smooth_exp(u))
}

/// Radial cutoff `χ(r)`.
pub fn chi(r: f64) -> f64 {
    transition((r - 1.0) / 0.5)
}

/// Annulus function `ψ(r) = χ(r) - χ(2r)`, supported in `1/2 ≤ r ≤ 3/2`.
pub fn psi(r: f64) -> f64 {
    chi(r) - chi(2.0 * r)
}

/// Multiplier of the block `R_j` at radial frequency `r`.
pub fn block_multiplier(j: i32, r: f64) -> f64 {
    if j < 0 {
        chi(2.0 * r)
    } else {
        let s = (-j as f64).exp2();
        chi(s * r) - chi(2.0 * s * r)
    }
}

/// Lebesgue exponent, finite `≥ 1` or infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" => Ok(Exponent::Infinite),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("expected a number or \"inf\", got {t:?}")))
                .and_then(|p| Exponent::Finite(p).validate()),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl Exponent {
    fn validate(self) -> Result<Self> {
        if let Exponent::Finite(p) = self {
            ensure(p >= 1.0 && p.is_finite(), || format!("Lebesgue exponent must be >= 1, got {p}"))?;
        }
        Ok(self)
    }
}

/// Real samples of a periodic function on an analyzer grid (row-major in 2D).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub dim: usize,
    pub period: f64,
    pub grid_size: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn cell_measure(&self) -> f64 {
        (self.period / self.grid_size as f64).powi(self.dim as i32)
    }

    pub fn lp_norm(&self, p: Exponent) -> f64 {
        match p {
            Exponent::Infinite => self.sup_norm(),
            Exponent::Finite(p) => {
                let sum: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
                (sum * self.cell_measure()).powf(1.0 / p)
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            ..self.clone()
        }
    }
}

/// Besov norm with its leakage diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovNorm {
    pub value: f64,
    /// Relative L² spectral mass above the last resolvable level.
    pub leakage: f64,
    pub leaky: bool,
}

/// Periodic grid with its dyadic partition of the frequency lattice.
#[derive(Debug, Clone)]
pub struct DyadicAnalyzer {
    dim: usize,
    period: f64,
    grid_size: usize,
    j_max: i32,
    radius: Vec<f64>,
    wavenumbers: Vec<f64>,
    spectral: Spectral,
}

/// Builds the analyzer for a `dim`-dimensional grid of `grid_size` points per
/// axis on a torus of period `period`.
pub fn build_partition(dim: usize, period: f64, grid_size: usize) -> Result<DyadicAnalyzer> {
    DyadicAnalyzer::new(dim, period, grid_size)
}

impl DyadicAnalyzer {
    pub fn new(dim: usize, period: f64, grid_size: usize) -> Result<Self> {
        Self::with_min_levels(dim, period, grid_size, 2)
    }

    /// Like [`Self::new`] but only requires `J_max ≥ min_levels`; used for
    /// large boxes where only low levels matter.
    pub fn with_min_levels(dim: usize, period: f64, grid_size: usize, min_levels: i32) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("analyzer dimension must be 1 or 2, got {dim}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        if grid_size < 64 || !grid_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid_size must be a power of two >= 64, got {grid_size}"
            )));
        }
        let nyquist = PI * grid_size as f64 / period;
        let mut j_max = i32::MIN;
        let mut j = -1;
        while j < 60 && 1.5 * (j as f64).exp2() < nyquist {
            j_max = j;
            j += 1;
        }
        if j_max < min_levels {
            let need = (1.5 * (min_levels as f64).exp2() * period / PI).ceil() as usize;
            return Err(Error::Config(format!(
                "grid too coarse: J_max = {j_max} < {min_levels}; use grid_size >= {} for period {period}",
                need.next_power_of_two().max(64)
            )));
        }
        let k = wavenumbers(grid_size, period);
        let radius = match dim {
            1 => k.iter().map(|x| x.abs()).collect(),
            _ => {
                let mut r = Vec::with_capacity(grid_size * grid_size);
                for ky in &k {
                    for kx in &k {
                        r.push((kx * kx + ky * ky).sqrt());
                    }
                }
                r
            }
        };
        Ok(Self {
            dim,
            period,
            grid_size,
            j_max,
            radius,
            wavenumbers: k,
            spectral: Spectral::new(dim, grid_size),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Radial frequency `|ξ|` of each spectral coefficient.
    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    /// Per-axis angular wave numbers.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.grid_size as f64
    }

    /// Grid coordinates `x_i = i·L/N`, `i = 0..N`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.grid_size).map(|i| i as f64 * self.spacing()).collect()
    }

    /// Centered coordinates in `[-L/2, L/2)`, aligned with [`Self::nodes`]
    /// modulo the period.
    pub fn centered_nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        let n = self.grid_size;
        (0..n)
            .map(|i| if i < n / 2 { i as f64 * h } else { (i as f64 - n as f64) * h })
            .collect()
    }

    /// Samples `f` on the grid (1D: `f(&[x])`, 2D: `f(&[x, y])`, row index = y).
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> GridFunction {
        let x = self.nodes();
        let values = match self.dim {
            1 => x.iter().map(|&xi| f(&[xi])).collect(),
            _ => {
                let mut v = Vec::with_capacity(self.grid_size * self.grid_size);
                for &y in &x {
                    for &xi in &x {
                        v.push(f(&[xi, y]));
                    }
                }
                v
            }
        };
        self.wrap(values)
    }

    pub fn wrap(&self, values: Vec<f64>) -> GridFunction {
        GridFunction {
            dim: self.dim,
            period: self.period,
            grid_size: self.grid_size,
            values,
        }
    }

    pub fn check(&self, f: &GridFunction) -> Result<()> {
        ensure(
            f.dim == self.dim
                && f.grid_size == self.grid_size
                && f.period == self.period
                && f.values.len() == self.spectral.len(),
            || "grid function does not match the analyzer grid".into(),
        )
    }

    pub fn forward(&self, f: &GridFunction) -> Vec<Complex64> {
        self.spectral.forward(&f.values)
    }

    pub fn inverse(&self, spectrum: Vec<Complex64>) -> GridFunction {
        self.wrap(self.spectral.inverse_real(spectrum))
    }

    /// Applies a radial multiplier `m(|ξ|)`.
    pub fn apply_radial<M: Fn(f64) -> f64>(&self, f: &GridFunction, m: M) -> Result<GridFunction> {
        self.check(f)?;
        let mut spec = self.forward(f);
        for (c, &r) in spec.iter_mut().zip(&self.radius) {
            *c *= m(r);
        }
        Ok(self.inverse(spec))
    }

    fn check_level(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            return Err(Error::Range {
                level: j,
                max: self.j_max,
            });
        }
        Ok(())
    }

    /// `R_j f` for `-1 ≤ j ≤ J_max`.
    pub fn block(&self, f: &GridFunction, j: i32) -> Result<GridFunction> {
        self.check_level(j)?;
        self.apply_radial(f, |r| block_multiplier(j, r))
    }

    /// All blocks `R_{-1} f, …, R_{J_max} f` from one forward transform.
    pub fn blocks(&self, f: &GridFunction) -> Result<Vec<GridFunction>> {
        self.check(f)?;
        let spec = self.forward(f);
        Ok((-1..=self.j_max)
            .map(|j| {
                let s: Vec<Complex64> = spec
                    .iter()
                    .zip(&self.radius)
                    .map(|(c, &r)| c * block_multiplier(j, r))
                    .collect();
                self.inverse(s)
            })
            .collect())
    }

    /// Relative L² spectral mass not captured by `χ(2^{-J_max}·)`.
    pub fn leakage(&self, f: &GridFunction) -> Result<f64> {
        self.check(f)?;
        let spec = self.forward(f);
        let s = (-self.j_max as f64).exp2();
        let (mut out, mut total) = (0.0, 0.0);
        for (c, &r) in spec.iter().zip(&self.radius) {
            let e = c.norm_sqr();
            total += e;
            out += e * (1.0 - chi(s * r)).powi(2);
        }
        Ok(if total == 0.0 { 0.0 } else { (out / total).sqrt() })
    }

    /// `‖f‖_{B^s_{p,q}} = ‖(2^{sj}‖R_j f‖_p)_j‖_{ℓ^q}` over the resolvable levels.
    pub fn besov_norm(&self, f: &GridFunction, s: f64, p: Exponent, q: Exponent) -> Result<BesovNorm> {
        let p = p.validate()?;
        let q = q.validate()?;
        let blocks = self.blocks(f)?;
        let terms = blocks
            .iter()
            .zip(-1..)
            .map(|(b, j): (&GridFunction, i32)| (s * j as f64).exp2() * b.lp_norm(p));
        let value = match q {
            Exponent::Infinite => terms.fold(0.0, f64::max),
            Exponent::Finite(q) => terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q),
        };
        let leakage = self.leakage(f)?;
        Ok(BesovNorm {
            value,
            leakage,
            leaky: leakage > LEAKAGE_THRESHOLD,
        })
    }

    /// `‖f‖_{B^s_{∞,∞}}`.
    pub fn besov_sup(&self, f: &GridFunction, s: f64) -> Result<f64> {
        Ok(self.besov_norm(f, s, Exponent::Infinite, Exponent::Infinite)?.value)
    }

    /// Spectral derivative `∂^order` along `axis` (0 = x, 1 = y). Odd
    /// derivatives zero the Nyquist mode.
    pub fn derivative(&self, f: &GridFunction, axis: usize, order: u32) -> Result<GridFunction> {
        self.check(f)?;
        ensure(axis < self.dim, || format!("axis {axis} out of range"))?;
        let mut spec = self.forward(f);
        let n = self.grid_size;
        let factor = |k: usize| -> Complex64 {
            if order % 2 == 1 && k == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, self.wavenumbers[k]).powu(order)
        };
        for (idx, c) in spec.iter_mut().enumerate() {
            let k = if axis == 0 { idx % n } else { idx / n };
            *c *= factor(k);
        }
        Ok(self.inverse(spec))
    }

    /// Pointwise `|∇^k f|` (Euclidean/Frobenius) for `k ∈ {1, 2}`.
    pub fn gradient_magnitude(&self, f: &GridFunction, k: u32) -> Result<GridFunction> {
        ensure(k == 1 || k == 2, || format!("derivative order must be 1 or 2, got {k}"))?;
        if self.dim == 1 {
            let d = self.derivative(f, 0, k)?;
            return Ok(self.wrap(d.values.iter().map(|v| v.abs()).collect()));
        }
        let parts: Vec<(GridFunction, f64)> = if k == 1 {
            vec![(self.derivative(f, 0, 1)?, 1.0), (self.derivative(f, 1, 1)?, 1.0)]
        } else {
            let dx = self.derivative(f, 0, 1)?;
            vec![
                (self.derivative(f, 0, 2)?, 1.0),
                (self.derivative(&dx, 1, 1)?, 2.0),
                (self.derivative(f, 1, 2)?, 1.0),
            ]
        };
        let n = self.spectral.len();
        let values = (0..n)
            .map(|i| parts.iter().map(|(g, w)| w * g.values[i] * g.values[i]).sum::<f64>().sqrt())
            .collect();
        Ok(self.wrap(values))
    }

    /// `‖∇^k R_j f‖_∞ / (2^{kj} ‖R_j f‖_∞)`; undefined when `R_j f = 0`.
    pub fn bernstein_ratio(&self, f: &GridFunction, j: i32, k: u32) -> Result<f64> {
        self.check_level(j)?;
        let rj = self.block(f, j)?;
        let base = rj.sup_norm();
        if base <= 1e-13 * f.sup_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Undefined(format!("R_{j} f vanishes; the Bernstein ratio is undefined")));
        }
        let grad = self.gradient_magnitude(&rj, k)?.sup_norm();
        Ok(grad / ((k as f64 * j as f64).exp2() * base))
    }

    /// `‖f‖_∞ / (‖f‖_{B^{-β}}^θ ‖f‖_{B^{s}}^{1-θ})` with `θ = s/(s+β)`.
    pub fn interpolation_constant(&self, f: &GridFunction, beta: f64, s: f64) -> Result<f64> {
        ensure(beta > 0.0 && s > 0.0, || "interpolation needs beta > 0 and s > 0".into())?;
        let theta = s / (s + beta);
        let low = self.besov_sup(f, -beta)?;
        let high = self.besov_sup(f, s)?;
        Ok(f.sup_norm() / (low.powf(theta) * high.powf(1.0 - theta)))
    }

    /// `‖fg‖_{B^{-s}} / (‖f‖_{B^{s+ε}} ‖g‖_{B^{-s}})`.
    pub fn product_constant(&self, f: &GridFunction, g: &GridFunction, s: f64, eps: f64) -> Result<f64> {
        let fg = f.product(g);
        Ok(self.besov_sup(&fg, -s)? / (self.besov_sup(f, s + eps)? * self.besov_sup(g, -s)?))
    }

    /// Random real trigonometric polynomial with modes `|ξ| ≤ 2^{level}`;
    /// amplitudes decay like `|ξ|^{-decay}`.
    pub fn random_band_limited<R: Rng + ?Sized>(&self, level: f64, decay: f64, rng: &mut R) -> GridFunction {
        let cutoff = level.exp2();
        let mut spec = vec![Complex64::new(0.0, 0.0); self.spectral.len()];
        for (c, &r) in spec.iter_mut().zip(&self.radius) {
            if r <= cutoff {
                let a = (1.0 + r).powf(-decay);
                *c = Complex64::new(a * normal(rng), a * normal(rng));
            }
        }
        // real part of the inverse keeps only the Hermitian-symmetric part
        let f = self.inverse(spec);
        let scale = f.sup_norm();
        if scale > 0.0 {
            f.scaled(1.0 / scale)
        } else {
            f
        }
    }
}
