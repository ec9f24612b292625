//! Invariant suites behind `stabledrift validate`.

use std::f64::consts::PI;
use std::time::Instant;

use statrs::function::gamma::gamma;

use crate::drift::{DriftSpec, SmoothFunction};
use crate::euler::{phi_n, EulerConfig, EulerScheme};
use crate::heatkernel::density_fft;
use crate::levy::{levy_constant, sample_1d_standard, ProcessSpec, StableMarginal};
use crate::littlewood_paley::{block_multiplier, build_partition};
use crate::stats::mean_stderr;
use crate::stream::stream;
use crate::weak_error::{rate_fit, tv_smoothed, RatePoint};

type Check = fn() -> Result<String, String>;

fn verdict(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn partition_of_unity() -> Result<String, String> {
    let an = build_partition(1, 2.0 * PI, 1024).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for &r in an.radius() {
        let sum: f64 = (-1..=an.j_max() + 1).map(|j| block_multiplier(j, r)).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    verdict(worst < 1e-12, format!("max |Σ_j ψ_j - 1| = {worst:e}"))
}

fn block_reproduction() -> Result<String, String> {
    let an = build_partition(1, 2.0 * PI, 1024).map_err(|e| e.to_string())?;
    let f = an.random_band_limited(7.5, 0.0, &mut stream(4, 0));
    let mut worst = 0.0f64;
    for j in 0..=an.j_max() {
        let rj = an.block(&f, j).map_err(|e| e.to_string())?;
        let mut tilde = rj.clone();
        for nb in [j - 1, j + 1] {
            if (-1..=an.j_max()).contains(&nb) {
                let b = an.block(&f, nb).map_err(|e| e.to_string())?;
                for (t, v) in tilde.values.iter_mut().zip(&b.values) {
                    *t += v;
                }
            }
        }
        let again = an.block(&tilde, j).map_err(|e| e.to_string())?;
        worst = worst.max(again.sub(&rj).sup_norm());
    }
    verdict(worst < 1e-10, format!("max |R_j R~_j f - R_j f| = {worst:e}"))
}

fn euler_config(value: f64) -> EulerConfig {
    EulerConfig {
        n: 64,
        m: None,
        gamma: None,
        x0: vec![0.25],
        horizon: 1.0,
        drift: DriftSpec::smooth(SmoothFunction::Constant { value }),
        noise: ProcessSpec::cylindrical(1.5, 1).unwrap().to_config(),
        sigma: Default::default(),
        samples: 100,
        seed: 17,
        grid: Default::default(),
    }
}

fn euler_exactness() -> Result<String, String> {
    let grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
    for c in [0.0, 0.75] {
        let scheme = EulerScheme::new(euler_config(c)).map_err(|e| e.to_string())?;
        for i in 0..100 {
            let x = scheme.simulate_one(i).ok_or("trajectory blew up")?[0];
            let l = scheme.spec().sample_path(&grid, i, &mut stream(17, i)).map_err(|e| e.to_string())?;
            if x != (0.25 + c) + l.terminal()[0] {
                return Err(format!("b = {c}: trajectory {i} differs from the direct path"));
            }
        }
    }
    Ok("b = 0 and b = 0.75 bitwise equal to direct path sampling".into())
}

fn fit_exact() -> Result<String, String> {
    let pts = [64.0f64, 128.0, 256.0, 512.0]
        .iter()
        .map(|&n| RatePoint::new(n, 3.0 * n.powf(-0.7), 0.0))
        .collect();
    let r = rate_fit(pts, 2.0).map_err(|e| e.to_string())?;
    verdict((r.slope + 0.7).abs() < 1e-12, format!("slope {}", r.slope))
}

fn left_endpoint() -> Result<String, String> {
    let cases = [(0.0, 8, 0.0), (0.125, 8, 0.125), (0.124999, 8, 0.0), (1.0, 8, 1.0), (0.3, 10, 0.3)];
    for (t, n, want) in cases {
        let got = phi_n(t, n);
        if got != want {
            return Err(format!("phi_{n}({t}) = {got}, expected {want}"));
        }
    }
    Ok("boundary inputs map to the left grid point".into())
}

fn levy_closed_form() -> Result<String, String> {
    let mut worst = 0.0f64;
    for alpha in [1.1, 1.5, 1.9] {
        let exact = PI / (gamma(1.0 + alpha) * (PI * alpha / 2.0).sin());
        worst = worst.max((levy_constant(alpha) / exact - 1.0).abs());
    }
    verdict(worst < 1e-9, format!("max relative error {worst:e}"))
}

fn tv_identity() -> Result<String, String> {
    let mut rng = stream(1, 0);
    let a = sample_1d_standard(1.5, 10_000, &mut rng).map_err(|e| e.to_string())?;
    let b = sample_1d_standard(1.5, 10_000, &mut rng).map_err(|e| e.to_string())?;
    let zero = tv_smoothed(&a, &a, 0.1).map_err(|e| e.to_string())?;
    let ab = tv_smoothed(&a, &b, 0.1).map_err(|e| e.to_string())?;
    let ba = tv_smoothed(&b, &a, 0.1).map_err(|e| e.to_string())?;
    verdict(zero == 0.0 && (ab - ba).abs() < 1e-12, format!("d(a,a) = {zero}, |d(a,b) - d(b,a)| = {:e}", (ab - ba).abs()))
}

fn config_round_trip() -> Result<String, String> {
    let c = euler_config(0.5);
    let text = toml::to_string(&c).map_err(|e| e.to_string())?;
    let back: EulerConfig = toml::from_str(&text).map_err(|e| e.to_string())?;
    verdict(back == c, "EulerConfig survives TOML round trip".into())
}

fn cauchy_density() -> Result<String, String> {
    let an = build_partition(1, 16384.0, 1 << 18).map_err(|e| e.to_string())?;
    let e = StableMarginal::new(1.0).map_err(|e| e.to_string())?;
    let kg = density_fft(&e, 1.0, &an).map_err(|e| e.to_string())?;
    let err = (kg.density.values[0] - 1.0 / PI).abs();
    verdict(err < 1e-6, format!("|p_1(0) - 1/pi| = {err:e}, mass {}", kg.mass()))
}

fn characteristic_function() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (k, alpha) in [1.3, 1.5, 1.8].into_iter().enumerate() {
        let x = sample_1d_standard(alpha, 200_000, &mut stream(2, k as u64)).map_err(|e| e.to_string())?;
        for xi in [0.5, 1.0, 2.0] {
            let c: Vec<f64> = x.iter().map(|v| (xi * v).cos()).collect();
            let (m, se) = mean_stderr(&c);
            worst = worst.max((m - (-f64::powf(xi, alpha)).exp()).abs() / se);
        }
    }
    verdict(worst < 4.0, format!("largest deviation {worst:.2} stderr"))
}

const QUICK: &[(&str, Check)] = &[
    ("partition of unity", partition_of_unity),
    ("block reproduction", block_reproduction),
    ("euler exactness", euler_exactness),
    ("rate fit exactness", fit_exact),
    ("left-endpoint convention", left_endpoint),
    ("levy constant closed form", levy_closed_form),
    ("tv pseudometric basics", tv_identity),
    ("config round trip", config_round_trip),
];

const FULL: &[(&str, Check)] = &[
    ("cauchy heat kernel", cauchy_density),
    ("sampler characteristic function", characteristic_function),
];

/// Runs the suites, printing one line per check; true when all pass.
pub fn run(quick: bool) -> bool {
    let mut ok = true;
    let checks = QUICK.iter().chain(if quick { &[][..] } else { FULL });
    for (name, check) in checks {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("PASS {name}: {detail} ({:.2}s)", t.elapsed().as_secs_f64()),
            Err(detail) => {
                ok = false;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    ok
}
