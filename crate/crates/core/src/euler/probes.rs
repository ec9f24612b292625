//! Monte Carlo moment probes along Euler paths.
//!
//! Every probe evaluates all ladder points on the same random draws per
//! trajectory, so the ratios between neighbouring points carry little noise.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::drift::Drift;
use crate::error::{ensure, Result};
use crate::levy::ProcessSpec;
use crate::stats::{line_fit, mean_stderr};
use crate::stream::{derive_seed, stream};

/// Estimates `E|Y(x)|^p` along a ladder of `x` with the fitted log-log slope.
#[derive(Debug, Clone, Serialize)]
pub struct MomentProbe {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub slope: f64,
}

fn finish(xs: Vec<f64>, per_traj: Vec<Vec<f64>>) -> MomentProbe {
    let cols = xs.len();
    let mut values = Vec::with_capacity(cols);
    let mut stderrs = Vec::with_capacity(cols);
    for c in 0..cols {
        let col: Vec<f64> = per_traj.iter().map(|r| r[c]).collect();
        let (m, se) = mean_stderr(&col);
        values.push(m);
        stderrs.push(se);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let slope = line_fit(&lx, &ly, None).slope;
    MomentProbe {
        xs,
        values,
        stderrs,
        slope,
    }
}

/// `E|X^n_r - X^n_{φ_n(r)}|^p` with `r` uniform on `(0, 1]`, for each `n`.
///
/// The scheme runs to `φ_n(r)`; the last partial step adds the drift over
/// `r - φ_n(r)` and an exact noise increment over the same gap.
pub fn increment_gap(
    spec: &ProcessSpec,
    drift: &Drift,
    x0: f64,
    ladder: &[u64],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentProbe> {
    ensure(spec.dim() == 1, || "probe is one-dimensional".into())?;
    ensure(p > 0.0 && p < spec.alpha(), || format!("need 0 < p < alpha, got p = {p}"))?;
    let sampler = spec.increment_sampler()?;
    let side = derive_seed(seed, "gap-position");
    let rows: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut aux = stream(side, i);
            let r = 1.0 - aux.random::<f64>();
            let z = sampler.standard_1d(&mut aux);
            ladder
                .iter()
                .map(|&n| {
                    let dt = 1.0 / n as f64;
                    let phi = super::phi_n(r, n);
                    let k = (phi * n as f64).round() as u64;
                    let mut rng = stream(seed, i);
                    let (mut d, mut l) = (0.0, 0.0);
                    let mut x = x0;
                    for _ in 0..k {
                        d += drift.eval1(x) * dt;
                        l += sampler.scale(dt) * sampler.standard_1d(&mut rng);
                        x = (x0 + d) + l;
                    }
                    let gap = r - phi;
                    (drift.eval1(x) * gap + sampler.scale(gap) * z).abs().powf(p)
                })
                .collect()
        })
        .collect();
    Ok(finish(ladder.iter().map(|&n| n as f64).collect(), rows))
}

/// `E|∫_τ^{τ+δ} g_s dL_s|^p` for the predictable step process
/// `g = hi` if `L_{k/M} > 0` else `lo` on `[k/M, (k+1)/M)`, with `τ` uniform
/// on `[0, 1/2]`. Requires `δ ≤ 1/M`, so at most one switch occurs.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_integral(
    spec: &ProcessSpec,
    switches: u64,
    lo: f64,
    hi: f64,
    deltas: &[f64],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentProbe> {
    ensure(spec.dim() == 1, || "probe is one-dimensional".into())?;
    let grid = 1.0 / switches as f64;
    ensure(deltas.iter().all(|&d| d > 0.0 && d <= grid), || {
        format!("all deltas must lie in (0, 1/M] = (0, {grid}]")
    })?;
    let sampler = spec.increment_sampler()?;
    let g = |l: f64| if l > 0.0 { hi } else { lo };
    let rows: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let tau = 0.5 * rng.random::<f64>();
            let k = (tau / grid).floor();
            let left = k * grid;
            let right = left + grid;
            let draw = |rng: &mut crate::stream::Stream, dt: f64| {
                if dt > 0.0 {
                    sampler.scale(dt) * sampler.standard_1d(rng)
                } else {
                    0.0
                }
            };
            let l_left = draw(&mut rng, left);
            let l_tau = l_left + draw(&mut rng, tau - left);
            let z1 = sampler.standard_1d(&mut rng);
            let z2 = sampler.standard_1d(&mut rng);
            deltas
                .iter()
                .map(|&delta| {
                    let end = tau + delta;
                    let value = if end <= right {
                        g(l_left) * sampler.scale(delta) * z1
                    } else {
                        let first = sampler.scale(right - tau) * z1;
                        let l_right = l_tau + first;
                        g(l_left) * first + g(l_right) * sampler.scale(end - right) * z2
                    };
                    value.abs().powf(p)
                })
                .collect()
        })
        .collect();
    Ok(finish(deltas.to_vec(), rows))
}

/// `E|∫_τ^{τ+δ} f(X_r) dr|^p` along one Euler path per trajectory with step
/// `1/n`, drift `drift`, test function `f`, and `τ` a uniform grid time in
/// `[0, 1 - max δ]`. Integrals are left Riemann sums on the scheme grid.
#[allow(clippy::too_many_arguments)]
pub fn krylov(
    spec: &ProcessSpec,
    drift: &Drift,
    f: &Drift,
    n: u64,
    deltas: &[f64],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentProbe> {
    ensure(spec.dim() == 1, || "probe is one-dimensional".into())?;
    let steps: Vec<u64> = deltas.iter().map(|d| (d * n as f64).round() as u64).collect();
    ensure(
        steps.iter().zip(deltas).all(|(&s, &d)| s >= 1 && (s as f64 - d * n as f64).abs() < 1e-9),
        || "every delta must be a positive multiple of 1/n".into(),
    )?;
    let longest = *steps.iter().max().unwrap_or(&1);
    ensure(longest < n, || "deltas must be shorter than the horizon".into())?;
    let sampler = spec.increment_sampler()?;
    let dt = 1.0 / n as f64;
    let scale = sampler.scale(dt);
    let rows: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let start = rng.random_range(0..=(n - longest));
            let (mut d, mut l, mut x) = (0.0, 0.0, 0.0);
            let mut acc = vec![0.0; steps.len()];
            for k in 0..(start + longest) {
                if k >= start {
                    let fx = f.eval1(x) * dt;
                    for (a, &s) in acc.iter_mut().zip(&steps) {
                        if k < start + s {
                            *a += fx;
                        }
                    }
                }
                d += drift.eval1(x) * dt;
                l += scale * sampler.standard_1d(&mut rng);
                x = d + l;
            }
            acc.into_iter().map(|a: f64| a.abs().powf(p)).collect()
        })
        .collect();
    Ok(finish(deltas.to_vec(), rows))
}
