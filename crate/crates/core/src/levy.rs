//! Symmetric non-degenerate α-stable processes.
//!
//! A process is described by its stability index `alpha ∈ (1, 2)` and a
//! finite symmetric spherical measure `Σ`; the Lévy measure is
//! `ν(A) = ∫_0^∞ ∫_{S^{d-1}} 1_A(rθ) Σ(dθ) r^{-1-α} dr`.
//!
//! Two normalizations are supported. Under [`Convention::LevyMeasure`] the
//! process has exactly that Lévy measure; under [`Convention::CharExponent`]
//! it is rescaled so that the one-dimensional marginals have characteristic
//! exponent `|ξ|^α`. The ratio between the two is the constant
//! `K_α = 2 ∫_0^∞ (1 - cos r) r^{-1-α} dr`, computed here by quadrature.
//!
//! Increments are drawn exactly from the stable marginal (Chambers–Mallows–Stuck
//! for the symmetric law, Kanter's representation for the positive stable
//! subordinator used by the isotropic case). No jump-by-jump construction is
//! needed because only grid values of paths are ever used.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Error, Result};
use crate::quad;
use crate::stream::{exp1, normal, open01};

/// Symmetric standard α-stable draw from a uniform angle `v ∈ (-π/2, π/2)`
/// and a standard exponential `w`. Characteristic function `exp(-|ξ|^α)`.
#[inline]
pub fn cms_symmetric(alpha: f64, v: f64, w: f64) -> f64 {
    if alpha == 1.0 {
        return v.tan();
    }
    let s = (alpha * v).sin();
    let c = v.cos();
    let t = ((1.0 - alpha) * v).cos();
    s * (-(c.ln()) / alpha + (1.0 - alpha) / alpha * (t.ln() - w.ln())).exp()
}

/// Positive `a`-stable draw (`0 < a < 1`) with Laplace transform
/// `E exp(-λS) = exp(-λ^a)`, from a uniform angle `u ∈ (0, π)` and a standard
/// exponential `w` (Kanter's representation).
#[inline]
pub fn kanter_positive(a: f64, u: f64, w: f64) -> f64 {
    let num = (a * u).sin().ln() + (1.0 - a) / a * (((1.0 - a) * u).sin().ln() - w.ln());
    (num - u.sin().ln() / a).exp()
}

/// Draws `count` i.i.d. standard symmetric α-stable samples with
/// `E e^{iξX} = e^{-|ξ|^α}`. Accepts `alpha ∈ (0, 2)`.
pub fn sample_1d_standard<R: Rng + ?Sized>(alpha: f64, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    ensure(alpha > 0.0 && alpha < 2.0, || {
        format!("alpha must lie in (0, 2) for the standard sampler, got {alpha}")
    })?;
    let sampler = StandardSampler::new(alpha);
    Ok((0..count).map(|_| sampler.sample(rng)).collect())
}

/// Hot-loop sampler for the standard symmetric law with precomputed constants.
#[derive(Debug, Clone, Copy)]
pub struct StandardSampler {
    alpha: f64,
    inv_alpha: f64,
    tail_exp: f64,
}

impl StandardSampler {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            tail_exp: (1.0 - alpha) / alpha,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (open01(rng) - 0.5);
        let w = exp1(rng);
        if self.alpha == 1.0 {
            return v.tan();
        }
        let s = (self.alpha * v).sin();
        let c = v.cos();
        let t = ((1.0 - self.alpha) * v).cos();
        s * (-(c.ln()) * self.inv_alpha + self.tail_exp * (t.ln() - w.ln())).exp()
    }
}

/// `1 - cos r` without cancellation for small `r`.
#[inline]
pub fn one_minus_cos(r: f64) -> f64 {
    let h = (0.5 * r).sin();
    2.0 * h * h
}

/// `K_α = 2 ∫_0^∞ (1 - cos r) r^{-1-α} dr`: the characteristic-exponent
/// constant of the one-dimensional Lévy measure `|z|^{-1-α} dz`.
pub fn levy_constant(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 2.0);
    // [0, 1] after r = s^p with p = 1/(2-α), which removes the r^{1-α} singularity.
    let p = 1.0 / (2.0 - alpha);
    let head = quad::integrate(
        |s: f64| {
            if s == 0.0 {
                return 0.5 * p;
            }
            let r = s.powf(p);
            one_minus_cos(r) * r.powf(-1.0 - alpha) * p * s.powf(p - 1.0)
        },
        0.0,
        1.0,
        1e-14,
    );
    // [1, 2πM] period by period, then an integration-by-parts tail.
    let periods = 400usize;
    let mut body = quad::integrate(|r: f64| one_minus_cos(r) * r.powf(-1.0 - alpha), 1.0, 2.0 * PI, 1e-15);
    for k in 1..periods {
        let a = 2.0 * PI * k as f64;
        body += quad::integrate(
            |r: f64| one_minus_cos(r) * r.powf(-1.0 - alpha),
            a,
            a + 2.0 * PI,
            1e-16,
        );
    }
    let big = 2.0 * PI * periods as f64;
    let a = 1.0 + alpha;
    let cos_tail = a * big.powf(-a - 1.0) - a * (a + 1.0) * (a + 2.0) * big.powf(-a - 3.0);
    let tail = big.powf(-alpha) / alpha - cos_tail;
    2.0 * (head + body + tail)
}

/// Surface area of the unit sphere `S^{k}` in `R^{k+1}`.
fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// `∫_{S^{d-1}} |θ_1|^α σ(dθ)` for the surface measure σ.
fn isotropic_moment(alpha: f64, d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 4.0 * quad::integrate(|phi: f64| phi.cos().max(0.0).powf(alpha), 0.0, FRAC_PI_2, 1e-14),
        _ => {
            let e = (d as f64 - 3.0) / 2.0;
            sphere_area(d - 2)
                * 2.0
                * quad::integrate(|u: f64| u.powf(alpha) * (1.0 - u * u).max(0.0).powf(e), 0.0, 1.0, 1e-14)
        }
    }
}

fn sphere_mass(d: usize) -> f64 {
    match d {
        1 => 2.0,
        _ => sphere_area(d - 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Lévy measure exactly `Σ(dθ) r^{-1-α} dr`.
    LevyMeasure,
    /// Rescaled so one-dimensional marginals have exponent `|ξ|^α`.
    #[default]
    CharExponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereKind {
    Cylindrical,
    Isotropic,
    Atoms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub kind: SphereKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomConfig>,
}

/// Structured config block for a [`ProcessSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub alpha: f64,
    pub sphere: SphereConfig,
    #[serde(default)]
    pub convention: Convention,
}

/// Spherical measure of the Lévy measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Sphere {
    /// `Σ = Σ_i (δ_{e_i} + δ_{-e_i})`: independent coordinates.
    Cylindrical(usize),
    /// Surface measure on `S^{d-1}` (counting measure on `{±1}` for `d = 1`).
    Isotropic(usize),
    /// Finite symmetric atomic measure.
    Atoms(Vec<(Vec<f64>, f64)>),
}

impl Sphere {
    pub fn dim(&self) -> usize {
        match self {
            Sphere::Cylindrical(d) | Sphere::Isotropic(d) => *d,
            Sphere::Atoms(atoms) => atoms.first().map_or(0, |a| a.0.len()),
        }
    }

    /// `Σ(S^{d-1})`.
    pub fn total_mass(&self) -> f64 {
        match self {
            Sphere::Cylindrical(d) => 2.0 * *d as f64,
            Sphere::Isotropic(d) => sphere_mass(*d),
            Sphere::Atoms(atoms) => atoms.iter().map(|a| a.1).sum(),
        }
    }

    /// `∫ |θ·θ0| Σ(dθ)` for a unit `θ0`.
    pub fn projection_mass(&self, theta0: &[f64]) -> f64 {
        match self {
            Sphere::Cylindrical(_) => 2.0 * theta0.iter().map(|x| x.abs()).sum::<f64>(),
            // rotation invariant: ∫|θ_1| dσ
            Sphere::Isotropic(d) => isotropic_moment(1.0, *d),
            Sphere::Atoms(atoms) => atoms.iter().map(|(th, w)| w * dot(th, theta0).abs()).sum(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Validated description of the driving noise. Immutable and `Sync`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    alpha: f64,
    sphere: Sphere,
    convention: Convention,
    levy_constant: f64,
    /// `ψ(ξ) = c_norm · shape(ξ)` where the shape is `Σ|ξ_i|^α`, `|ξ|^α` or
    /// `½ Σ_k w_k |θ_k·ξ|^α`.
    c_norm: f64,
    /// Multiplier of `Σ(dθ) r^{-1-α} dr` in the actual Lévy measure.
    measure_scale: f64,
}

impl ProcessSpec {
    pub fn new(alpha: f64, sphere: Sphere, convention: Convention) -> Result<Self> {
        ensure(alpha > 1.0 && alpha < 2.0, || {
            format!("alpha must lie in the open interval (1, 2), got {alpha}")
        })?;
        validate_sphere(&sphere)?;
        let levy_constant = levy_constant(alpha);
        // Lévy-measure-convention exponent constant of the shape function.
        let natural = match &sphere {
            Sphere::Cylindrical(_) | Sphere::Atoms(_) => levy_constant,
            Sphere::Isotropic(d) => levy_constant * isotropic_moment(alpha, *d) / 2.0,
        };
        let (c_norm, measure_scale) = match convention {
            Convention::LevyMeasure => (natural, 1.0),
            Convention::CharExponent => (1.0, 1.0 / natural),
        };
        Ok(Self {
            alpha,
            sphere,
            convention,
            levy_constant,
            c_norm,
            measure_scale,
        })
    }

    pub fn cylindrical(alpha: f64, d: usize) -> Result<Self> {
        Self::new(alpha, Sphere::Cylindrical(d), Convention::CharExponent)
    }

    pub fn isotropic(alpha: f64, d: usize) -> Result<Self> {
        Self::new(alpha, Sphere::Isotropic(d), Convention::CharExponent)
    }

    pub fn from_config(cfg: &ProcessConfig) -> Result<Self> {
        let sphere = match cfg.sphere.kind {
            SphereKind::Cylindrical => Sphere::Cylindrical(cfg.sphere.d),
            SphereKind::Isotropic => Sphere::Isotropic(cfg.sphere.d),
            SphereKind::Atoms => {
                let atoms: Vec<_> = cfg
                    .sphere
                    .atoms
                    .iter()
                    .map(|a| (a.direction.clone(), a.weight))
                    .collect();
                if atoms.iter().any(|a| a.0.len() != cfg.sphere.d) {
                    return Err(Error::Config(format!(
                        "sphere.atoms directions must have length sphere.d = {}",
                        cfg.sphere.d
                    )));
                }
                Sphere::Atoms(atoms)
            }
        };
        Self::new(cfg.alpha, sphere, cfg.convention)
    }

    pub fn to_config(&self) -> ProcessConfig {
        let (kind, atoms) = match &self.sphere {
            Sphere::Cylindrical(_) => (SphereKind::Cylindrical, vec![]),
            Sphere::Isotropic(_) => (SphereKind::Isotropic, vec![]),
            Sphere::Atoms(a) => (
                SphereKind::Atoms,
                a.iter()
                    .map(|(d, w)| AtomConfig {
                        direction: d.clone(),
                        weight: *w,
                    })
                    .collect(),
            ),
        };
        ProcessConfig {
            alpha: self.alpha,
            sphere: SphereConfig {
                kind,
                d: self.dim(),
                atoms,
            },
            convention: self.convention,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.sphere.dim()
    }

    pub fn sphere(&self) -> &Sphere {
        &self.sphere
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// `K_α` of the one-dimensional Lévy measure `|z|^{-1-α} dz`.
    pub fn levy_constant(&self) -> f64 {
        self.levy_constant
    }

    /// `ψ(ξ) = ∫ (1 - cos(ξ·z)) ν(dz)`, so that `E e^{iξ·L_t} = e^{-tψ(ξ)}`.
    pub fn characteristic_exponent(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim());
        let a = self.alpha;
        let shape = match &self.sphere {
            Sphere::Cylindrical(_) => xi.iter().map(|x| x.abs().powf(a)).sum::<f64>(),
            Sphere::Isotropic(_) => dot(xi, xi).sqrt().powf(a),
            Sphere::Atoms(atoms) => 0.5 * atoms.iter().map(|(th, w)| w * dot(th, xi).abs().powf(a)).sum::<f64>(),
        };
        self.c_norm * shape
    }

    /// `∫_{lo ≤ |z| ≤ hi} g(|z|) ν(dz)`; `hi` may be infinite.
    pub fn radial_integral<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
        let a = self.alpha;
        // 0·∞ can only arise from underflow next to the origin
        let density = |r: f64| {
            let v = g(r) * r.powf(-1.0 - a);
            if v.is_nan() {
                0.0
            } else {
                v
            }
        };
        let finite_hi = if hi.is_finite() {
            hi
        } else {
            breaks.iter().copied().fold(lo.max(1.0), f64::max)
        };
        let mut value = quad::integrate_pieces(density, lo, finite_hi, breaks, 1e-15);
        if !hi.is_finite() {
            // ∫_c^∞ f(r) dr = ∫_0^1 f(c/u) c/u² du
            let c = finite_hi;
            value += quad::integrate(
                |u: f64| {
                    if u == 0.0 {
                        return 0.0;
                    }
                    let r = c / u;
                    g(r) * r.powf(-1.0 - a) * c / (u * u)
                },
                0.0,
                1.0,
                1e-15,
            );
        }
        self.measure_scale * self.sphere.total_mass() * value
    }

    /// `∫ (1 ∧ |λz|^p) ν(dz)`.
    pub fn truncated_moment(&self, lambda: f64, p: f64) -> f64 {
        let kink = 1.0 / lambda;
        self.radial_integral(|r| (lambda * r).powf(p).min(1.0), 0.0, f64::INFINITY, &[kink])
    }

    /// `ν({|z| > r})`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        self.measure_scale * self.sphere.total_mass() * r.powf(-self.alpha) / self.alpha
    }

    /// Smallest `∫|θ·θ0| Σ(dθ)` found over a discretization of the sphere.
    pub fn nondegeneracy_margin(&self) -> f64 {
        nondegeneracy_margin(&self.sphere)
    }

    /// Scale `s` such that a unit-time one-dimensional marginal is `s · Z`
    /// with `Z` standard.
    fn unit_scale(&self) -> f64 {
        match &self.sphere {
            Sphere::Atoms(atoms) => {
                let w: f64 = atoms.iter().map(|a| a.1).sum();
                (self.c_norm * w / 2.0).powf(1.0 / self.alpha)
            }
            _ => self.c_norm.powf(1.0 / self.alpha),
        }
    }

    /// Prepared sampler for increments of this process.
    pub fn increment_sampler(&self) -> Result<IncrementSampler> {
        if let Sphere::Atoms(_) = self.sphere {
            if self.dim() > 1 {
                return Err(Error::Unsupported(
                    "sampling atomic spherical measures in d > 1".into(),
                ));
            }
        }
        Ok(IncrementSampler {
            kind: match self.sphere {
                Sphere::Isotropic(d) if d > 1 => SamplerKind::Subordinated,
                _ => SamplerKind::Coordinates,
            },
            dim: self.dim(),
            alpha: self.alpha,
            standard: StandardSampler::new(self.alpha),
            unit_scale: self.unit_scale(),
        })
    }

    /// One increment over a time step `dt > 0`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
        ensure(dt > 0.0, || format!("dt must be positive, got {dt}"))?;
        let sampler = self.increment_sampler()?;
        let mut out = vec![0.0; self.dim()];
        sampler.fill(dt, rng, &mut out);
        Ok(out)
    }

    /// Grid values of a path started at the origin.
    pub fn sample_path<R: Rng + ?Sized>(&self, grid: &[f64], seed_id: u64, rng: &mut R) -> Result<Trajectory> {
        validate_grid(grid)?;
        let sampler = self.increment_sampler()?;
        let d = self.dim();
        let mut states = Vec::with_capacity(grid.len());
        let mut current = vec![0.0; d];
        let mut inc = vec![0.0; d];
        states.push(current.clone());
        for w in grid.windows(2) {
            sampler.fill(w[1] - w[0], rng, &mut inc);
            for (c, i) in current.iter_mut().zip(&inc) {
                *c += *i;
            }
            states.push(current.clone());
        }
        Ok(Trajectory {
            times: grid.to_vec(),
            states,
            seed_id,
        })
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    ensure(!grid.is_empty(), || "time grid must not be empty".into())?;
    ensure(grid[0] == 0.0, || "time grid must start at 0".into())?;
    ensure(grid.windows(2).all(|w| w[1] > w[0]), || {
        "time grid must be strictly increasing".into()
    })
}

fn validate_sphere(sphere: &Sphere) -> Result<()> {
    match sphere {
        Sphere::Cylindrical(d) | Sphere::Isotropic(d) => {
            ensure(*d >= 1, || "sphere dimension must be at least 1".into())
        }
        Sphere::Atoms(atoms) => {
            ensure(!atoms.is_empty(), || "atomic spherical measure has no atoms".into())?;
            let d = atoms[0].0.len();
            ensure(d >= 1, || "atom directions must be non-empty".into())?;
            for (dir, w) in atoms {
                ensure(dir.len() == d, || "atom directions must share one dimension".into())?;
                ensure(*w > 0.0 && w.is_finite(), || format!("atom weight must be positive, got {w}"))?;
                let norm = dot(dir, dir).sqrt();
                ensure((norm - 1.0).abs() < 1e-9, || {
                    format!("atom direction {dir:?} is not a unit vector")
                })?;
            }
            for (dir, w) in atoms {
                let mirrored = atoms.iter().any(|(other, w2)| {
                    other.iter().zip(dir).all(|(a, b)| (a + b).abs() < 1e-9)
                        && (w - w2).abs() <= 1e-12 * w.max(*w2)
                });
                ensure(mirrored, || {
                    format!("atom {dir:?} has no mirrored partner with equal weight (measure must be symmetric)")
                })?;
            }
            let margin = nondegeneracy_margin(sphere);
            ensure(margin > 1e-10, || {
                format!("spherical measure is degenerate (min projection mass {margin:e})")
            })
        }
    }
}

fn nondegeneracy_margin(sphere: &Sphere) -> f64 {
    let d = sphere.dim();
    match sphere {
        Sphere::Isotropic(_) => sphere.projection_mass(&unit(d, 0)),
        // min of Σ|θ0_i| over the unit sphere is 1, attained on the axes
        Sphere::Cylindrical(_) => 2.0,
        Sphere::Atoms(_) => directions(d)
            .iter()
            .map(|th| sphere.projection_mass(th))
            .fold(f64::INFINITY, f64::min),
    }
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

/// Deterministic covering of the unit sphere used by the degeneracy check.
fn directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..7200)
            .map(|k| {
                let t = PI * k as f64 / 7200.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let n = 20_000;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = crate::stream::stream(0x5eed, d as u64);
            let mut dirs: Vec<Vec<f64>> = (0..d).map(|i| unit(d, i)).collect();
            for _ in 0..50_000 {
                let v: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
                let n = dot(&v, &v).sqrt();
                dirs.push(v.into_iter().map(|x| x / n).collect());
            }
            dirs
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SamplerKind {
    Coordinates,
    Subordinated,
}

/// Increment sampler bound to one [`ProcessSpec`].
#[derive(Debug, Clone, Copy)]
pub struct IncrementSampler {
    kind: SamplerKind,
    dim: usize,
    alpha: f64,
    standard: StandardSampler,
    unit_scale: f64,
}

impl IncrementSampler {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Scale of a one-dimensional increment over `dt`.
    #[inline]
    pub fn scale(&self, dt: f64) -> f64 {
        self.unit_scale * dt.powf(1.0 / self.alpha)
    }

    /// Unscaled unit-time draw for `d = 1` (multiply by [`Self::scale`]).
    #[inline]
    pub fn standard_1d<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.standard.sample(rng)
    }

    pub fn fill<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        let scale = self.scale(dt);
        match self.kind {
            SamplerKind::Coordinates => {
                for o in out.iter_mut() {
                    *o = scale * self.standard.sample(rng);
                }
            }
            SamplerKind::Subordinated => {
                let a = self.alpha / 2.0;
                let s = kanter_positive(a, PI * open01(rng), exp1(rng));
                let radius = scale * (2.0 * s).sqrt();
                for o in out.iter_mut() {
                    *o = radius * normal(rng);
                }
            }
        }
    }
}

/// Grid skeleton of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub seed_id: u64,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Characteristic exponent interface shared by the heat-kernel code.
pub trait CharacteristicExponent: Sync {
    fn dim(&self) -> usize;
    fn alpha(&self) -> f64;
    fn exponent(&self, xi: &[f64]) -> f64;
    /// Estimate of `P(|L_t| > r)` from the Lévy measure, `≈ t ν(|z| > r)`.
    fn tail_probability(&self, t: f64, r: f64) -> f64;
}

impl CharacteristicExponent for ProcessSpec {
    fn dim(&self) -> usize {
        ProcessSpec::dim(self)
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn exponent(&self, xi: &[f64]) -> f64 {
        self.characteristic_exponent(xi)
    }
    fn tail_probability(&self, t: f64, r: f64) -> f64 {
        (t * self.tail_mass(r)).min(1.0)
    }
}

/// One-dimensional symmetric stable marginal `ψ(ξ) = |ξ|^α`, any `α ∈ (0, 2)`.
///
/// Used where the index must leave the process range, e.g. the Cauchy case
/// `α = 1` whose density is known in closed form.
#[derive(Debug, Clone, Copy)]
pub struct StableMarginal {
    alpha: f64,
    levy_constant: f64,
}

impl StableMarginal {
    pub fn new(alpha: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha < 2.0, || format!("alpha must lie in (0, 2), got {alpha}"))?;
        Ok(Self {
            alpha,
            levy_constant: levy_constant(alpha),
        })
    }
}

impl CharacteristicExponent for StableMarginal {
    fn dim(&self) -> usize {
        1
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn exponent(&self, xi: &[f64]) -> f64 {
        xi[0].abs().powf(self.alpha)
    }
    fn tail_probability(&self, t: f64, r: f64) -> f64 {
        (t * 2.0 * r.powf(-self.alpha) / (self.alpha * self.levy_constant)).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, mean_stderr};
    use crate::stream::stream;

    fn closed_form_levy_constant(alpha: f64) -> f64 {
        PI / (gamma(1.0 + alpha) * (PI * alpha / 2.0).sin())
    }

    #[test]
    fn levy_constant_matches_closed_form() {
        for alpha in [0.5, 1.0, 1.3, 1.5, 1.8, 1.95] {
            let k = levy_constant(alpha);
            let exact = closed_form_levy_constant(alpha);
            assert!((k / exact - 1.0).abs() < 1e-9, "alpha={alpha}: {k} vs {exact}");
        }
    }

    #[test]
    fn rejects_alpha_outside_open_interval() {
        for alpha in [1.0, 2.0, 0.5, 2.5, f64::NAN] {
            assert!(ProcessSpec::cylindrical(alpha, 1).is_err(), "alpha={alpha}");
        }
    }

    #[test]
    fn empty_draw() {
        let mut rng = stream(1, 0);
        assert!(sample_1d_standard(1.5, 0, &mut rng).unwrap().is_empty());
        assert!(sample_1d_standard(2.0, 3, &mut rng).is_err());
    }

    #[test]
    fn mirrored_angle_negates_sample() {
        for (v, w) in [(0.3, 0.7), (-1.2, 2.5), (1.5, 0.01)] {
            assert_eq!(cms_symmetric(1.5, -v, w), -cms_symmetric(1.5, v, w));
        }
    }

    #[test]
    fn exponent_examples() {
        let spec = ProcessSpec::cylindrical(1.5, 2).unwrap();
        assert_eq!(spec.characteristic_exponent(&[0.0, 0.0]), 0.0);
        assert!((spec.characteristic_exponent(&[1.0, 1.0]) - 2.0).abs() < 1e-15);
        for spec in [
            ProcessSpec::cylindrical(1.3, 3).unwrap(),
            ProcessSpec::isotropic(1.7, 2).unwrap(),
            ProcessSpec::new(1.5, Sphere::Cylindrical(2), Convention::LevyMeasure).unwrap(),
        ] {
            let xi: Vec<f64> = (0..spec.dim()).map(|i| 0.3 + i as f64).collect();
            let xi2: Vec<f64> = xi.iter().map(|x| 2.0 * x).collect();
            let ratio = spec.characteristic_exponent(&xi2) / spec.characteristic_exponent(&xi);
            assert!((ratio - 2f64.powf(spec.alpha())).abs() < 1e-12);
        }
    }

    #[test]
    fn cylindrical_exponent_matches_levy_integral() {
        // ψ(ξ) = Σ_i ∫(1 - cos(ξ_i z)) ν_1(dz) for the cylindrical measure
        let spec = ProcessSpec::new(1.5, Sphere::Cylindrical(2), Convention::LevyMeasure).unwrap();
        let xi = [1.0, 1.0];
        let one_axis = 2.0
            * quad::integrate_pieces(
                |r: f64| one_minus_cos(r) * r.powf(-2.5),
                0.0,
                2000.0 * PI,
                &(1..1000).map(|k| 2.0 * PI * k as f64).collect::<Vec<_>>(),
                1e-13,
            );
        // tail beyond 2000π is ≈ (2000π)^{-1.5}/1.5, included for completeness
        let tail = 2.0 * (2000.0 * PI).powf(-1.5) / 1.5;
        let direct = 2.0 * (one_axis + tail);
        assert!((spec.characteristic_exponent(&xi) - direct).abs() < 1e-6, "{direct}");
    }

    #[test]
    fn conventions_differ_by_levy_constant() {
        let a = ProcessSpec::new(1.6, Sphere::Cylindrical(1), Convention::LevyMeasure).unwrap();
        let b = ProcessSpec::new(1.6, Sphere::Cylindrical(1), Convention::CharExponent).unwrap();
        let r = a.characteristic_exponent(&[0.7]) / b.characteristic_exponent(&[0.7]);
        assert!((r - closed_form_levy_constant(1.6)).abs() < 1e-8);
    }

    #[test]
    fn isotropic_levy_convention_matches_direct_quadrature() {
        // d = 2: ψ(ξ) = (K_α/2) ∫_0^{2π} |cos φ|^α dφ |ξ|^α
        let spec = ProcessSpec::new(1.5, Sphere::Isotropic(2), Convention::LevyMeasure).unwrap();
        let direct = levy_constant(1.5) / 2.0
            * quad::integrate(|p: f64| p.cos().abs().powf(1.5), 0.0, 2.0 * PI, 1e-13);
        assert!((spec.characteristic_exponent(&[1.0, 0.0]) - direct).abs() < 1e-9);
    }

    #[test]
    fn atoms_validation() {
        let ok = Sphere::Atoms(vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 2.0),
            (vec![0.0, -1.0], 2.0),
        ]);
        let spec = ProcessSpec::new(1.5, ok, Convention::LevyMeasure).unwrap();
        assert!(spec.nondegeneracy_margin() > 1.9);
        assert!(matches!(spec.increment_sampler(), Err(Error::Unsupported(_))));

        let asym = Sphere::Atoms(vec![(vec![1.0], 1.0), (vec![-1.0], 2.0)]);
        assert!(ProcessSpec::new(1.5, asym, Convention::LevyMeasure).is_err());

        let degenerate = Sphere::Atoms(vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 1.0)]);
        assert!(ProcessSpec::new(1.5, degenerate, Convention::LevyMeasure).is_err());

        let atoms_1d = Sphere::Atoms(vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)]);
        let spec = ProcessSpec::new(1.5, atoms_1d, Convention::LevyMeasure).unwrap();
        let cyl = ProcessSpec::new(1.5, Sphere::Cylindrical(1), Convention::LevyMeasure).unwrap();
        let r = spec.characteristic_exponent(&[1.3]) / cyl.characteristic_exponent(&[1.3]);
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn truncated_moment_scales_like_lambda_alpha() {
        for spec in [
            ProcessSpec::cylindrical(1.5, 1).unwrap(),
            ProcessSpec::new(1.3, Sphere::Isotropic(3), Convention::LevyMeasure).unwrap(),
        ] {
            for p in [2.0, 3.0] {
                let base = spec.truncated_moment(1.0, p);
                for lambda in [0.5, 2.0] {
                    let v = spec.truncated_moment(lambda, p);
                    let expect = lambda.powf(spec.alpha()) * base;
                    assert!((v / expect - 1.0).abs() < 1e-8, "p={p} λ={lambda}: {v} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn integrability_split() {
        let spec = ProcessSpec::cylindrical(1.5, 1).unwrap();
        let a = spec.alpha();
        let near = spec.radial_integral(|r| r.powf(a + 0.1), 0.0, 1.0, &[]);
        let far = spec.radial_integral(|r| r.powf(a - 0.1), 1.0, f64::INFINITY, &[]);
        assert!(near.is_finite() && far.is_finite() && near > 0.0 && far > 0.0, "{near} {far}");
        // γ₂ = α - 0.1 near the origin: truncated integrals grow without bound
        let mut last = 0.0;
        for k in [2, 6, 12, 24, 48] {
            let eps = 10f64.powi(-k);
            let v = spec.radial_integral(|r| r.powf(a - 0.1), eps, 1.0, &[]);
            assert!(v > last * 1.2, "eps=1e-{k}: {v} not growing past {last}");
            last = v;
        }
        assert!(last > 100.0 * near);
    }

    #[test]
    fn tail_mass_matches_quadrature() {
        let spec = ProcessSpec::isotropic(1.6, 2).unwrap();
        let q = spec.radial_integral(|_| 1.0, 3.0, f64::INFINITY, &[]);
        assert!((q / spec.tail_mass(3.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kanter_laplace_transform() {
        let a = 0.75;
        let mut rng = stream(11, 0);
        let draws: Vec<f64> = (0..200_000)
            .map(|_| kanter_positive(a, PI * open01(&mut rng), exp1(&mut rng)))
            .collect();
        for lambda in [0.5, 1.0, 2.0] {
            let vals: Vec<f64> = draws.iter().map(|s| (-lambda * s).exp()).collect();
            let (m, se) = mean_stderr(&vals);
            let exact = (-lambda.powf(a)).exp();
            assert!((m - exact).abs() < 4.0 * se, "λ={lambda}: {m} vs {exact} (se {se})");
        }
    }

    #[test]
    fn isotropic_increment_char_function() {
        let spec = ProcessSpec::isotropic(1.5, 2).unwrap();
        let mut rng = stream(3, 0);
        let xi = [0.6, -0.8];
        let vals: Vec<f64> = (0..200_000)
            .map(|_| {
                let x = spec.sample_increment(0.5, &mut rng).unwrap();
                (xi[0] * x[0] + xi[1] * x[1]).cos()
            })
            .collect();
        let (m, se) = mean_stderr(&vals);
        let exact = (-0.5 * spec.characteristic_exponent(&xi)).exp();
        assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact}");
    }

    #[test]
    fn path_on_single_point_grid() {
        let spec = ProcessSpec::cylindrical(1.5, 2).unwrap();
        let traj = spec.sample_path(&[0.0], 9, &mut stream(1, 9)).unwrap();
        assert_eq!(traj.states, vec![vec![0.0, 0.0]]);
        assert!(spec.sample_path(&[0.0, 0.5, 0.5], 0, &mut stream(1, 0)).is_err());
        assert!(spec.sample_path(&[0.1, 0.5], 0, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn small_step_increments_are_small() {
        let spec = ProcessSpec::cylindrical(1.5, 1).unwrap();
        let mut rng = stream(5, 0);
        let n = 100_000;
        let big = (0..n)
            .filter(|_| spec.sample_increment(1e-6, &mut rng).unwrap()[0].abs() > 1.0)
            .count();
        // P(|ΔL| > 1) ≈ dt ν(|z|>1)
        let predicted = 1e-6 * spec.tail_mass(1.0);
        assert!(predicted < 1e-5);
        assert!((big as f64 / n as f64) < 1e-3);
    }

    #[test]
    fn terminal_law_does_not_depend_on_grid() {
        let spec = ProcessSpec::cylindrical(1.5, 1).unwrap();
        let coarse: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let fine: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let a: Vec<f64> = (0..4000)
            .map(|i| spec.sample_path(&coarse, i, &mut stream(21, i)).unwrap().terminal()[0])
            .collect();
        let b: Vec<f64> = (0..4000)
            .map(|i| spec.sample_path(&fine, i, &mut stream(22, i)).unwrap().terminal()[0])
            .collect();
        let one_shot: Vec<f64> = (0..4000)
            .map(|i| spec.sample_increment(1.0, &mut stream(23, i)).unwrap()[0])
            .collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &one_shot).p_value > 0.01);
    }

    #[test]
    fn identical_seed_gives_identical_path() {
        let spec = ProcessSpec::isotropic(1.4, 3).unwrap();
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
        let a = spec.sample_path(&grid, 4, &mut stream(8, 4)).unwrap();
        let b = spec.sample_path(&grid, 4, &mut stream(8, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_round_trip() {
        let spec = ProcessSpec::new(
            1.7,
            Sphere::Atoms(vec![(vec![1.0], 0.25), (vec![-1.0], 0.25)]),
            Convention::LevyMeasure,
        )
        .unwrap();
        let text = toml::to_string(&spec.to_config()).unwrap();
        let back: ProcessConfig = toml::from_str(&text).unwrap();
        assert_eq!(ProcessSpec::from_config(&back).unwrap(), spec);
        let bad = "alpha = 1.5\nextra = 1\n[sphere]\nkind = \"cylindrical\"\nd = 1\n";
        assert!(toml::from_str::<ProcessConfig>(bad).is_err());
    }
}
