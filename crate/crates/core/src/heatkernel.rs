//! Densities `p_t` of stable laws by Fourier inversion on a periodic grid,
//! the semigroup `u(t) = p_t ∗ f`, and decay diagnostics.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::levy::CharacteristicExponent;
use crate::littlewood_paley::{block_multiplier, DyadicAnalyzer, GridFunction};
use crate::stats::line_fit;

/// Largest admissible `exp(-tψ)` at the Nyquist frequency.
pub const SPECTRAL_TAIL: f64 = 1e-14;
/// Largest admissible `P(|L_t| > L/2)`.
pub const SPATIAL_TAIL: f64 = 1e-4;

/// `p_t` sampled on an analyzer grid (FFT order: index `i` is `x = i·h`).
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub t: f64,
    pub alpha: f64,
    pub density: GridFunction,
}

/// `ψ(ξ)` at every spectral coefficient.
pub fn exponent_on_grid<E: CharacteristicExponent + ?Sized>(e: &E, an: &DyadicAnalyzer) -> Result<Vec<f64>> {
    ensure(e.dim() == an.dim(), || {
        format!("process dimension {} does not match grid dimension {}", e.dim(), an.dim())
    })?;
    let k = an.wavenumbers();
    Ok(match an.dim() {
        1 => k.iter().map(|&x| e.exponent(&[x])).collect(),
        _ => {
            let mut out = Vec::with_capacity(k.len() * k.len());
            for &ky in k {
                for &kx in k {
                    out.push(e.exponent(&[kx, ky]));
                }
            }
            out
        }
    })
}

/// Checks that `p_t` is resolved: negligible spectrum at Nyquist and
/// negligible mass outside the box.
pub fn resolution_check<E: CharacteristicExponent + ?Sized>(e: &E, t: f64, an: &DyadicAnalyzer) -> Result<()> {
    ensure(t > 0.0 && t.is_finite(), || format!("t must be positive, got {t}"))?;
    let nyquist = std::f64::consts::PI * an.grid_size() as f64 / an.period();
    let mut axis = vec![0.0; e.dim()];
    axis[0] = nyquist;
    let spectral = (-t * e.exponent(&axis)).exp();
    let spatial = e.tail_probability(t, an.period() / 2.0);
    if spectral < SPECTRAL_TAIL && spatial < SPATIAL_TAIL {
        return Ok(());
    }
    // P(|L_t| > r) ≈ t ν(|z|>r) ∝ t r^{-α}; ψ ∝ |ξ|^α
    let alpha = e.alpha();
    let period = if spatial >= SPATIAL_TAIL {
        an.period() * (spatial / SPATIAL_TAIL).powf(1.0 / alpha) * 1.25
    } else {
        an.period()
    };
    let unit = e.exponent(&{
        let mut v = vec![0.0; e.dim()];
        v[0] = 1.0;
        v
    });
    let xi_need = ((-SPECTRAL_TAIL.ln()) / (t * unit)).powf(1.0 / alpha);
    let size = ((xi_need * period / std::f64::consts::PI).ceil() as usize).next_power_of_two().max(64);
    Err(Error::Resolution(format!(
        "p_t at t = {t} is under-resolved (exp(-t psi(xi_max)) = {spectral:.2e}, P(|L_t| > L/2) ~ {spatial:.2e}); \
         try period >= {period:.4e} with grid_size >= {size}"
    )))
}

/// Density `p_t` by inverse FFT of `exp(-tψ)`, after [`resolution_check`].
pub fn density_fft<E: CharacteristicExponent + ?Sized>(e: &E, t: f64, an: &DyadicAnalyzer) -> Result<KernelGrid> {
    resolution_check(e, t, an)?;
    density_unchecked(e, t, an)
}

/// Periodized density without resolution checks.
pub fn density_unchecked<E: CharacteristicExponent + ?Sized>(e: &E, t: f64, an: &DyadicAnalyzer) -> Result<KernelGrid> {
    let psi = exponent_on_grid(e, an)?;
    let norm = (an.grid_size() as f64 / an.period()).powi(an.dim() as i32);
    let spec: Vec<Complex64> = psi.iter().map(|p| Complex64::new(norm * (-t * p).exp(), 0.0)).collect();
    Ok(KernelGrid {
        t,
        alpha: e.alpha(),
        density: an.inverse(spec),
    })
}

impl KernelGrid {
    /// Grid quadrature of `p_t`.
    pub fn mass(&self) -> f64 {
        self.density.values.iter().sum::<f64>() * self.density.cell_measure()
    }

    /// Most negative value (ringing).
    pub fn min_value(&self) -> f64 {
        self.density.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `u(t) = p_t ∗ f`, computed by multiplying the spectrum by `exp(-tψ)`.
pub fn semigroup_apply<E: CharacteristicExponent + ?Sized>(
    f: &GridFunction,
    t: f64,
    e: &E,
    an: &DyadicAnalyzer,
) -> Result<GridFunction> {
    an.check(f)?;
    ensure(t >= 0.0, || format!("t must be non-negative, got {t}"))?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let psi = exponent_on_grid(e, an)?;
    let mut spec = an.forward(f);
    for (c, p) in spec.iter_mut().zip(&psi) {
        *c *= (-t * p).exp();
    }
    Ok(an.inverse(spec))
}

/// Applies `-ψ(D)` to `f`.
pub fn generator_apply<E: CharacteristicExponent + ?Sized>(f: &GridFunction, e: &E, an: &DyadicAnalyzer) -> Result<GridFunction> {
    an.check(f)?;
    let psi = exponent_on_grid(e, an)?;
    let mut spec = an.forward(f);
    for (c, p) in spec.iter_mut().zip(&psi) {
        *c *= -p;
    }
    Ok(an.inverse(spec))
}

/// `‖∇^k u(t)‖_∞` along a list of times and the fitted log-log slope.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProbe {
    pub k: u32,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
}

fn derivative_sup(u: &GridFunction, k: u32, an: &DyadicAnalyzer) -> Result<f64> {
    if k == 0 {
        Ok(u.sup_norm())
    } else {
        Ok(an.gradient_magnitude(u, k)?.sup_norm())
    }
}

/// Fits the decay of `‖∇^k u(t)‖_∞`. Fails with a diagnostic when the norms
/// do not decrease monotonically (an under-resolved `f`).
pub fn gradient_decay_probe<E: CharacteristicExponent + ?Sized>(
    f: &GridFunction,
    times: &[f64],
    e: &E,
    an: &DyadicAnalyzer,
    k: u32,
) -> Result<DecayProbe> {
    ensure(k <= 1, || format!("derivative order must be 0 or 1, got {k}"))?;
    ensure(times.len() >= 2 && times.windows(2).all(|w| w[1] > w[0] && w[0] > 0.0), || {
        "times must be positive and increasing".into()
    })?;
    let norms = times
        .iter()
        .map(|&t| derivative_sup(&semigroup_apply(f, t, e, an)?, k, an))
        .collect::<Result<Vec<f64>>>()?;
    let tol = 1e-12 * norms[0].max(f64::MIN_POSITIVE);
    if norms.windows(2).any(|w| w[1] > w[0] + tol) {
        return Err(Error::Diagnostic(format!(
            "‖∇^{k} u(t)‖_∞ is not monotone in t ({norms:?}); refine the grid or smooth f"
        )));
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    Ok(DecayProbe {
        k,
        times: times.to_vec(),
        slope: line_fit(&lx, &ly, None).slope,
        norms,
    })
}

/// Smallest `C` with `‖∇u(t) - ∇u(s)‖_∞ ≤ C ‖f‖_∞ min(s^{-1/α}, s^{-(1+α)/α}(t-s))`
/// over the given `(s, t)` pairs.
pub fn continuity_constant<E: CharacteristicExponent + ?Sized>(
    f: &GridFunction,
    pairs: &[(f64, f64)],
    e: &E,
    an: &DyadicAnalyzer,
) -> Result<f64> {
    let alpha = e.alpha();
    let fnorm = f.sup_norm();
    let mut worst: f64 = 0.0;
    for &(s, t) in pairs {
        ensure(0.0 < s && s < t, || format!("need 0 < s < t, got ({s}, {t})"))?;
        let gs = an.derivative(&semigroup_apply(f, s, e, an)?, 0, 1)?;
        let gt = an.derivative(&semigroup_apply(f, t, e, an)?, 0, 1)?;
        let diff = gt.sub(&gs).sup_norm();
        let bound = s.powf(-1.0 / alpha).min(s.powf(-(1.0 + alpha) / alpha) * (t - s));
        worst = worst.max(diff / (bound * fnorm));
    }
    Ok(worst)
}

/// `∫ |x|^β |∇^k p_t(x)| dx` by grid quadrature on the centered box.
pub fn moment_integral(kg: &KernelGrid, an: &DyadicAnalyzer, beta: f64, k: u32) -> Result<f64> {
    ensure(beta >= 0.0 && beta < kg.alpha, || {
        format!("need 0 <= beta < alpha = {}; the integral diverges otherwise", kg.alpha)
    })?;
    ensure(k <= 2, || format!("derivative order must be 0, 1 or 2, got {k}"))?;
    an.check(&kg.density)?;
    let g = if k == 0 {
        kg.density.clone()
    } else {
        an.gradient_magnitude(&kg.density, k)?
    };
    let c = an.centered_nodes();
    let n = an.grid_size();
    let weight = |i: usize| -> f64 {
        let r2 = if an.dim() == 1 {
            c[i] * c[i]
        } else {
            c[i % n] * c[i % n] + c[i / n] * c[i / n]
        };
        if beta == 0.0 {
            1.0
        } else {
            r2.sqrt().powf(beta)
        }
    };
    let sum: f64 = g.values.iter().enumerate().map(|(i, v)| weight(i) * v.abs()).sum();
    Ok(sum * g.cell_measure())
}

/// `‖R_j p_t‖_1` for the density held in `kg`.
pub fn block_l1(kg: &KernelGrid, an: &DyadicAnalyzer, j: i32) -> Result<f64> {
    Ok(an.block(&kg.density, j)?.lp_norm(crate::littlewood_paley::Exponent::Finite(1.0)))
}

/// `‖R_j p_t‖_1` for every `(t, j)`; `out[ti][ji]`. Densities are built
/// spectrally without the resolution check, since the blocks themselves are
/// band-limited.
pub fn block_l1_sweep<E: CharacteristicExponent + ?Sized>(
    e: &E,
    times: &[f64],
    levels: &[i32],
    an: &DyadicAnalyzer,
) -> Result<Vec<Vec<f64>>> {
    for &j in levels {
        if j < -1 || j > an.j_max() {
            return Err(Error::Range { level: j, max: an.j_max() });
        }
    }
    let psi = exponent_on_grid(e, an)?;
    let norm = (an.grid_size() as f64 / an.period()).powi(an.dim() as i32);
    let cell = (an.period() / an.grid_size() as f64).powi(an.dim() as i32);
    let radius = an.radius();
    times
        .iter()
        .map(|&t| {
            ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
            Ok(levels
                .iter()
                .map(|&j| {
                    let spec: Vec<Complex64> = psi
                        .iter()
                        .zip(radius)
                        .map(|(p, &r)| {
                            let m = block_multiplier(j, r);
                            Complex64::new(if m == 0.0 { 0.0 } else { norm * m * (-t * p).exp() }, 0.0)
                        })
                        .collect();
                    an.spectral().inverse_real(spec).iter().map(|v| v.abs()).sum::<f64>() * cell
                })
                .collect())
        })
        .collect()
}

/// `∫_a^b g(s) ds` from samples on a geometric grid (trapezoid in `ln s`).
pub fn log_trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[0] * v[0] + t[1] * v[1]) * (t[1] / t[0]).ln())
        .sum()
}
