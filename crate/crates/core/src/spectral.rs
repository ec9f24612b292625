//! Periodic FFT helpers on square grids in one or two dimensions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Angular wave numbers `2πk/L` in FFT order; the Nyquist mode is negative.
pub fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * signed / period
        })
        .collect()
}

/// Planned forward/inverse transforms for an `n` (or `n × n`) periodic grid.
#[derive(Clone)]
pub struct Spectral {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(dim == 1 || dim == 2);
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        plan.process(buf);
        if self.dim == 2 {
            transpose(buf, self.n);
            plan.process(buf);
            transpose(buf, self.n);
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&self.forward, &mut buf);
        buf
    }

    /// Inverse DFT normalized by the grid size; returns the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.len());
        self.run(&self.inverse, &mut spectrum);
        let scale = 1.0 / self.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let n = 16;
        let sp = Spectral::new(2, n);
        let vals: Vec<f64> = (0..n * n).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let back = sp.inverse_real(sp.forward(&vals));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_wavenumber() {
        let n = 64;
        let period = 2.0 * PI;
        let sp = Spectral::new(1, n);
        let vals: Vec<f64> = (0..n).map(|i| (3.0 * period * i as f64 / n as f64).cos()).collect();
        let spec = sp.forward(&vals);
        let k = wavenumbers(n, period);
        for (c, xi) in spec.iter().zip(&k) {
            if (xi.abs() - 3.0).abs() < 1e-9 {
                assert!((c.re - n as f64 / 2.0).abs() < 1e-10);
            } else {
                assert!(c.norm() < 1e-10);
            }
        }
    }
}
