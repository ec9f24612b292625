//! Small statistics toolkit: moments, quantiles, two-sample KS and
//! least-squares slopes.

use statrs::function::erf::erfc;

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Empirical quantile with linear interpolation on a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Robust scale: `min(sd, IQR / 1.349)`.
pub fn robust_scale(values: &[f64]) -> f64 {
    let sorted = sorted_copy(values);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let (mean, _) = mean_stderr(values);
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len().max(2) as f64).sqrt();
    let r = iqr / 1.349;
    if r > 0.0 && r.is_finite() {
        sd.min(r)
    } else {
        sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
/// distribution for the p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let a = sorted_copy(a);
    let b = sorted_copy(b);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Result of a (weighted) straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    /// Reduced chi-square (or residual variance for unit weights).
    pub chi2_red: f64,
}

/// Weighted least squares. With `weights = None` every point counts equally
/// and the slope error comes from the residual scatter.
pub fn line_fit(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> LineFit {
    let n = xs.len();
    assert_eq!(n, ys.len());
    assert!(n >= 2, "need at least two points for a line");
    let unit = vec![1.0; n];
    let w = weights.unwrap_or(&unit);
    let sw: f64 = w.iter().sum();
    let xm = xs.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(w).map(|(x, w)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .zip(w)
        .map(|((x, y), w)| w * (x - xm) * (y - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: f64 = xs
        .iter()
        .zip(ys)
        .zip(w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let dof = (n as f64 - 2.0).max(1.0);
    let chi2_red = chi2 / dof;
    let slope_se = match weights {
        Some(_) => (chi2_red.max(1.0) / sxx).sqrt(),
        None => (chi2_red / sxx).sqrt(),
    };
    LineFit {
        slope,
        intercept,
        slope_se,
        chi2_red,
    }
}

/// Unweighted slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    line_fit(&lx, &ly, None).slope
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_samples_accepts() {
        let a: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.618).fract()).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn ks_shifted_samples_rejects() {
        let a: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.618).fract()).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.2).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.3581) = 0.05, Q(1.6276) = 0.01
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = line_fit(&xs, &ys, None);
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let v = normal_cdf(1.959_963_984_540_054);
        assert!((v - 0.975).abs() < 1e-10, "{v:e}");
    }
}
