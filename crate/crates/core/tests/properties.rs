use proptest::prelude::*;

use stabledrift::drift::{Kernel, KernelSpec, SmoothFunction};
use stabledrift::euler::{phi_n, EulerConfig, GridConfig};
use stabledrift::levy::{ProcessSpec, StandardSampler};
use stabledrift::littlewood_paley::{block_multiplier, chi};
use stabledrift::stream::stream;
use stabledrift::weak_error::{
    rate_fit, tanh_dictionary, tv_smoothed, weak_error_dict, BoundedRateConfig, DistributionalRateConfig, RatePoint,
    StabilityConfig, TestFunction,
};

fn draws(alpha: f64, n: usize, seed: u64, shift: f64, scale: f64) -> Vec<f64> {
    let s = StandardSampler::new(alpha);
    let mut rng = stream(seed, 0);
    (0..n).map(|_| shift + scale * s.sample(&mut rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_is_homogeneous_and_even(alpha in 1.05f64..1.95, x in -5.0f64..5.0, y in -5.0f64..5.0, lam in 0.1f64..10.0) {
        for spec in [ProcessSpec::cylindrical(alpha, 2).unwrap(), ProcessSpec::isotropic(alpha, 2).unwrap()] {
            let p = spec.characteristic_exponent(&[x, y]);
            let scaled = spec.characteristic_exponent(&[lam * x, lam * y]);
            let mirrored = spec.characteristic_exponent(&[-x, -y]);
            prop_assert!(p >= 0.0);
            prop_assert!((scaled - lam.powf(alpha) * p).abs() <= 1e-9 * (1.0 + scaled.abs()));
            prop_assert!((mirrored - p).abs() <= 1e-12 * (1.0 + p));
        }
    }

    #[test]
    fn increment_scale_follows_self_similarity(alpha in 1.05f64..1.95, dt in 1e-6f64..10.0, lam in 0.01f64..100.0) {
        let s = ProcessSpec::cylindrical(alpha, 1).unwrap().increment_sampler().unwrap();
        let lhs = s.scale(lam * dt);
        let rhs = lam.powf(1.0 / alpha) * s.scale(dt);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn dyadic_blocks_sum_to_one(r in 0.0f64..1e6) {
        let top = (r.max(1.0).log2().ceil() as i32) + 2;
        let sum: f64 = (-1..=top).map(|j| block_multiplier(j, r)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for j in -1..=top {
            let m = block_multiplier(j, r);
            prop_assert!((0.0..=1.0).contains(&m));
        }
        prop_assert!((0.0..=1.0).contains(&chi(r)));
    }

    #[test]
    fn kernel_transform_is_a_contraction(xi in -3000.0f64..3000.0) {
        let k = Kernel::new(KernelSpec::Bump);
        let v = k.transform(xi);
        prop_assert!(v.abs() <= 1.0 + 1e-12);
        prop_assert!((k.transform(-xi) - v).abs() < 1e-12);
    }

    #[test]
    fn left_endpoint_lies_on_grid(t in 0.0f64..10.0, n in 1u64..5000) {
        let p = phi_n(t, n);
        let k = p * n as f64;
        prop_assert!(p <= t);
        prop_assert!(t - p < 1.0 / n as f64);
        prop_assert!((k - k.round()).abs() < 1e-9);
        prop_assert_eq!(phi_n(p, n), p);
    }

    #[test]
    fn tv_is_a_pseudometric(alpha in 1.2f64..1.9, s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000,
                            shift in -1.0f64..1.0, h in 0.05f64..0.5) {
        let a = draws(alpha, 400, s1, 0.0, 1.0);
        let b = draws(alpha, 300, s2, shift, 1.0);
        let c = draws(alpha, 500, s3, 0.5 * shift, 1.2);
        let ab = tv_smoothed(&a, &b, h).unwrap();
        let ba = tv_smoothed(&b, &a, h).unwrap();
        let ac = tv_smoothed(&a, &c, h).unwrap();
        let cb = tv_smoothed(&c, &b, h).unwrap();
        prop_assert_eq!(tv_smoothed(&a, &a, h).unwrap(), 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(ab <= ac + cb + 1e-12, "{} > {} + {}", ab, ac, cb);
    }

    #[test]
    fn fit_recovers_slopes_and_ignores_scale(slope in -2.0f64..0.5, c in 1e-3f64..1e3, k in 1e-3f64..1e3) {
        let ns = [16.0f64, 32.0, 64.0, 128.0, 256.0];
        let pts = |mult: f64| -> Vec<RatePoint> {
            ns.iter().map(|&n| RatePoint::new(n, mult * c * n.powf(slope), 0.0)).collect()
        };
        let base = rate_fit(pts(1.0), 2.0).unwrap();
        let scaled = rate_fit(pts(k), 2.0).unwrap();
        prop_assert!((base.slope - slope).abs() < 1e-10);
        prop_assert!((scaled.slope - base.slope).abs() < 1e-10);
        prop_assert!((scaled.intercept - base.intercept - k.ln()).abs() < 1e-9);
    }

    #[test]
    fn enlarging_the_dictionary_never_decreases(s1 in 0u64..100, s2 in 0u64..100, extra in 1usize..6) {
        let a = draws(1.5, 500, s1, 0.0, 1.0);
        let b = draws(1.5, 500, s2, 0.3, 1.0);
        let small = tanh_dictionary(&[1.0], &[0.0]);
        let mut big = small.clone();
        for i in 0..extra {
            big.push(TestFunction::Tanh { k: 2.0 + i as f64, c: 0.1 * i as f64 });
            big.push(TestFunction::Cos { omega: 1.0 + i as f64, phase: 0.0 });
        }
        let d0 = weak_error_dict(&a, &b, &small, false).unwrap().value;
        let d1 = weak_error_dict(&a, &b, &big, false).unwrap().value;
        prop_assert!(d1 >= d0);
    }

    #[test]
    fn experiment_configs_round_trip(alpha in 1.1f64..1.95, beta in 0.01f64..0.4, seed in 0u64..1_000_000,
                                     samples in 1usize..10_000_000, snr in 0.0f64..10.0) {
        let bounded = BoundedRateConfig {
            alpha,
            drift: SmoothFunction::Tanh { amplitude: beta, scale: alpha },
            ladder: vec![8, 16, 32, 64],
            n_ref: Some(4096),
            samples,
            seed,
            x0: beta,
            horizon: 1.0,
            min_snr: snr,
        };
        let back: BoundedRateConfig = toml::from_str(&toml::to_string(&bounded).unwrap()).unwrap();
        prop_assert_eq!(back, bounded);
        let dist: DistributionalRateConfig =
            toml::from_str(&format!("alpha = {alpha}\nbeta = {beta}\nseed = {seed}\nsamples = {samples}\nmin_snr = {snr}\n")).unwrap();
        let back: DistributionalRateConfig = toml::from_str(&toml::to_string(&dist).unwrap()).unwrap();
        prop_assert_eq!(back, dist);
        let stab: StabilityConfig =
            toml::from_str(&format!("alpha = {alpha}\nbeta = {beta}\nseed = {seed}\nthetas = [{}]\n", beta + 0.1)).unwrap();
        let back: StabilityConfig = toml::from_str(&toml::to_string(&stab).unwrap()).unwrap();
        prop_assert_eq!(back, stab);
    }

    #[test]
    fn euler_config_round_trips(n in 1u64..100_000, x0 in -10.0f64..10.0, seed in 0u64..1_000_000, gamma in 0.1f64..1.0,
                                size_exp in 6u32..20) {
        let text = format!(
            "n = {n}\ngamma = {gamma}\nx0 = [{x0}]\nsamples = 10\nseed = {seed}\n\
             drift = {{ kind = \"mollified\", m = 4.0, base = {{ kind = \"lacunary\", beta = 0.2, levels = 5 }} }}\n\
             noise = {{ alpha = 1.5, sphere = {{ kind = \"isotropic\", d = 1 }} }}\n\
             grid = {{ size = {} }}\n",
            1u64 << size_exp
        );
        let cfg: EulerConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(cfg.grid, GridConfig { size: 1 << size_exp, ..GridConfig::default() });
        let back: EulerConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn unknown_keys_are_rejected_everywhere() {
    assert!(toml::from_str::<BoundedRateConfig>("alpha = 1.5\nsurprise = 1\n").is_err());
    assert!(toml::from_str::<StabilityConfig>("alpha = 1.8\nbeta = 0.1\nn_steps = 3\n").is_err());
    let euler = "n = 4\nx0 = [0.0]\nsamples = 1\nseed = 0\ndrift = { kind = \"smooth\", function = { name = \"zero\" } }\n\
                 noise = { alpha = 1.5, sphere = { kind = \"cylindrical\", d = 1, extra = 2 } }\n";
    let err = toml::from_str::<EulerConfig>(euler).unwrap_err().to_string();
    assert!(err.contains("extra"), "{err}");
}
