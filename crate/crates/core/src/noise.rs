//! Truncated cylindrical Wiener noise W = Σ_k β_k e_k and the coefficients
//! g_k(x, ξ) of Φ(u) e_k = g_k(·, u(·)).
//!
//! Built-in coefficients are separable, g_k(x, ξ) = λ_k φ_k(x) h(clamp(ξ)), where the
//! clamp to [−R_clip, R_clip] realizes the Lipschitz approximation Φ^ε. The same clamped
//! model is used for every ε.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::grid::Field;
use crate::{Error, Result};

pub const DEFAULT_MODES: usize = 8;
pub const DEFAULT_R_CLIP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Additive,
    LinearMultiplicative,
    AffineMultiplicative,
    Custom,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Additive => "additive",
            NoiseKind::LinearMultiplicative => "linear_multiplicative",
            NoiseKind::AffineMultiplicative => "affine_multiplicative",
            NoiseKind::Custom => "custom",
        }
    }
}

/// Spatial profile φ_k of a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    Constant,
    /// sin(kπx)
    Sine(u32),
}

impl Basis {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Basis::Constant => 1.0,
            Basis::Sine(k) => (k as f64 * PI * x).sin(),
        }
    }

    fn lipschitz(self) -> f64 {
        match self {
            Basis::Constant => 0.0,
            Basis::Sine(k) => k as f64 * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub amplitude: f64,
    pub basis: Basis,
}

/// Modulus of continuity r in the ξ-continuity bound of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    /// r(s) = s
    #[default]
    Lipschitz,
    /// r(s) = s^α, 0 < α ≤ 1
    Holder(f64),
}

impl Modulus {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Modulus::Lipschitz => s,
            Modulus::Holder(alpha) => s.powf(alpha),
        }
    }
}

pub type CoefficientFn = dyn Fn(usize, f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    modes: Vec<Mode>,
    offset: f64,
    r_clip: f64,
    modulus: Modulus,
    custom: Option<(Arc<CoefficientFn>, f64)>,
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseModel")
            .field("kind", &self.kind)
            .field("modes", &self.modes)
            .field("offset", &self.offset)
            .field("r_clip", &self.r_clip)
            .field("modulus", &self.modulus)
            .finish()
    }
}

fn multiplicative_modes(sigma: f64, k: usize) -> Vec<Mode> {
    (1..=k)
        .map(|j| {
            if j == 1 {
                Mode { amplitude: sigma, basis: Basis::Constant }
            } else {
                Mode { amplitude: sigma / j as f64, basis: Basis::Sine(j as u32 - 1) }
            }
        })
        .collect()
}

impl NoiseModel {
    fn separable(kind: NoiseKind, modes: Vec<Mode>) -> Self {
        Self { kind, modes, offset: 1.0, r_clip: DEFAULT_R_CLIP, modulus: Modulus::Lipschitz, custom: None }
    }

    /// No noise (K = 0).
    pub fn zero() -> Self {
        Self::separable(NoiseKind::Additive, Vec::new())
    }

    /// g_k(x, ξ) = σ_k sin(kπx).
    pub fn additive(sigmas: &[f64]) -> Self {
        let modes =
            sigmas.iter().enumerate().map(|(j, &s)| Mode { amplitude: s, basis: Basis::Sine(j as u32 + 1) }).collect();
        Self::separable(NoiseKind::Additive, modes)
    }

    /// g_1 = σξ, g_k = (σ/k) sin((k−1)πx) ξ for k ≥ 2.
    pub fn linear_multiplicative(sigma: f64, k: usize) -> Self {
        Self::separable(NoiseKind::LinearMultiplicative, multiplicative_modes(sigma, k))
    }

    /// Same modes as [`Self::linear_multiplicative`] with h(ξ) = offset + ξ.
    pub fn affine_multiplicative(sigma: f64, k: usize, offset: f64) -> Self {
        let mut m = Self::separable(NoiseKind::AffineMultiplicative, multiplicative_modes(sigma, k));
        m.offset = offset;
        m
    }

    /// Explicit modes with a chosen ξ-dependence.
    pub fn from_modes(kind: NoiseKind, modes: Vec<Mode>) -> Result<Self> {
        if kind == NoiseKind::Custom {
            return Err(Error::InvalidArgument("custom noise needs a coefficient function".into()));
        }
        Ok(Self::separable(kind, modes))
    }

    /// Arbitrary coefficients g(k, x, ξ) with a declared constant L and modulus r.
    pub fn custom(k: usize, g: Arc<CoefficientFn>, l_const: f64, modulus: Modulus) -> Self {
        let modes = (0..k).map(|_| Mode { amplitude: 1.0, basis: Basis::Constant }).collect();
        Self {
            kind: NoiseKind::Custom,
            modes,
            offset: 0.0,
            r_clip: DEFAULT_R_CLIP,
            modulus,
            custom: Some((g, l_const)),
        }
    }

    pub fn with_clip(mut self, r_clip: f64) -> Self {
        self.r_clip = r_clip;
        self
    }

    pub fn with_modulus(mut self, modulus: Modulus) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn r_clip(&self) -> f64 {
        self.r_clip
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty() || (self.custom.is_none() && self.modes.iter().all(|m| m.amplitude == 0.0))
    }

    #[inline]
    fn shape(&self, xi: f64) -> f64 {
        let xi = xi.clamp(-self.r_clip, self.r_clip);
        match self.kind {
            NoiseKind::Additive => 1.0,
            NoiseKind::LinearMultiplicative => xi,
            NoiseKind::AffineMultiplicative => self.offset + xi,
            NoiseKind::Custom => unreachable!("custom coefficients are not separable"),
        }
    }

    /// g_k(x, ξ), zero-based mode index.
    #[inline]
    pub fn coefficient(&self, k: usize, x: f64, xi: f64) -> f64 {
        match &self.custom {
            Some((g, _)) => g(k, x, xi.clamp(-self.r_clip, self.r_clip)),
            None => {
                let m = self.modes[k];
                m.amplitude * m.basis.eval(x) * self.shape(xi)
            }
        }
    }

    /// G²(x, ξ) = Σ_k g_k(x, ξ)².
    pub fn g_squared(&self, x: f64, xi: f64) -> f64 {
        (0..self.n_modes()).map(|k| self.coefficient(k, x, xi).powi(2)).sum()
    }

    /// Constant L for which both coefficient bounds hold, derived from the mode
    /// amplitudes, basis Lipschitz constants and the clamp radius.
    pub fn declared_l(&self) -> f64 {
        if let Some((_, l)) = &self.custom {
            return *l;
        }
        let s2: f64 = self.modes.iter().map(|m| m.amplitude * m.amplitude).sum();
        let lip2: f64 = self.modes.iter().map(|m| (m.amplitude * m.basis.lipschitz()).powi(2)).sum();
        let r = self.r_clip;
        let (growth, h_sup, h_lip) = match self.kind {
            NoiseKind::Additive => (s2, 1.0, 0.0),
            NoiseKind::LinearMultiplicative => (s2, r, 1.0),
            NoiseKind::AffineMultiplicative => (2.0 * s2 * self.offset.powi(2).max(1.0), self.offset.abs() + r, 1.0),
            NoiseKind::Custom => unreachable!(),
        };
        let xi_part = 2.0 * s2 * h_lip * h_lip;
        let holder_factor = match self.modulus {
            Modulus::Lipschitz => 1.0,
            Modulus::Holder(alpha) => (2.0 * r).powf(1.0 - alpha).max(1.0),
        };
        let x_part = 2.0 * h_sup * h_sup * lip2;
        growth.max(xi_part * holder_factor).max(x_part).max(f64::MIN_POSITIVE)
    }

    /// Sampled checks of the growth bound Σ g_k² ≤ L(1 + ξ²) and of the continuity bound
    /// Σ (g_k(x,ξ) − g_k(y,ζ))² ≤ L(|x − y|² + |ξ − ζ| r(|ξ − ζ|)) on D × [−xi_range, xi_range].
    pub fn validate_bounds(&self, x_left: f64, x_right: f64, xi_range: f64) -> Result<()> {
        let l = self.declared_l();
        let tol = 1e-9;
        let (nx, nxi) = (41, 81);
        for i in 0..nx {
            let x = x_left + (x_right - x_left) * i as f64 / (nx - 1) as f64;
            for j in 0..nxi {
                let xi = -xi_range + 2.0 * xi_range * j as f64 / (nxi - 1) as f64;
                let g2 = self.g_squared(x, xi);
                if !g2.is_finite() || g2 > l * (1.0 + xi * xi) * (1.0 + tol) {
                    return Err(Error::Precondition(format!(
                        "noise growth bound fails at (x, ξ) = ({x}, {xi}): G² = {g2}, L = {l}"
                    )));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f697365);
        for _ in 0..4000 {
            let x = rng.random_range(x_left..=x_right);
            let y = if rng.random_bool(0.5) { x } else { rng.random_range(x_left..=x_right) };
            let xi = rng.random_range(-xi_range..=xi_range);
            let zeta = if rng.random_bool(0.3) {
                xi + rng.random_range(-1e-3..1e-3)
            } else {
                rng.random_range(-xi_range..=xi_range)
            };
            let lhs: f64 =
                (0..self.n_modes()).map(|k| (self.coefficient(k, x, xi) - self.coefficient(k, y, zeta)).powi(2)).sum();
            let s = (xi - zeta).abs();
            let rhs = l * ((x - y).powi(2) + s * self.modulus.eval(s));
            if lhs > rhs * (1.0 + tol) + 1e-14 {
                return Err(Error::Precondition(format!(
                    "noise continuity bound fails at x={x}, y={y}, ξ={xi}, ζ={zeta}: {lhs} > {rhs}"
                )));
            }
        }
        Ok(())
    }

    /// Per-cell coefficient table for a fixed set of cell centers.
    pub fn table(&self, centers: &[f64]) -> NoiseTable {
        let k = self.n_modes();
        let coeff = if self.custom.is_some() {
            Vec::new()
        } else {
            centers.iter().flat_map(|&x| self.modes.iter().map(move |m| m.amplitude * m.basis.eval(x))).collect()
        };
        NoiseTable { model: self.clone(), centers: centers.to_vec(), coeff, k }
    }
}

/// Coefficients λ_k φ_k(x_i) tabulated on a grid, so a step costs O(n·K) multiply-adds.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    model: NoiseModel,
    centers: Vec<f64>,
    coeff: Vec<f64>,
    k: usize,
}

impl NoiseTable {
    /// `out[i] += Σ_k g_k(x_i, u[i]) Δβ_k`.
    #[inline]
    pub fn add_increment(&self, u: &[f64], increments: &[f64], out: &mut [f64]) {
        debug_assert_eq!(increments.len(), self.k);
        if self.k == 0 {
            return;
        }
        if self.model.custom.is_some() {
            for (i, (o, &ui)) in out.iter_mut().zip(u).enumerate() {
                let x = self.centers[i];
                *o += increments.iter().enumerate().map(|(k, db)| self.model.coefficient(k, x, ui) * db).sum::<f64>();
            }
            return;
        }
        for (i, (o, &ui)) in out.iter_mut().zip(u).enumerate() {
            let row = &self.coeff[i * self.k..(i + 1) * self.k];
            let s: f64 = row.iter().zip(increments).map(|(c, db)| c * db).sum();
            *o += self.model.shape(ui) * s;
        }
    }
}

/// x ↦ Σ_k g_k(x, u(x)) Δβ_k at the cell centers.
pub fn noise_increment(model: &NoiseModel, u: &Field, step_increments: &[f64]) -> Result<Field> {
    if step_increments.len() != model.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "{} increments for {} noise modes",
            step_increments.len(),
            model.n_modes()
        )));
    }
    let table = model.table(u.grid().cell_centers());
    let mut out = vec![0.0; u.values().len()];
    table.add_increment(u.values(), step_increments, &mut out);
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("noise increment at cell {i}")));
    }
    Field::new(u.grid().clone(), out)
}

/// Increments Δβ_k over a uniform time grid, drawn i.i.d. N(0, dt).
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: u64,
    stream: u64,
    n_steps: usize,
    dt: f64,
    k: usize,
    increments: Vec<f64>,
}

impl WienerPath {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_modes(&self) -> usize {
        self.k
    }

    /// Row-major `n_steps × K`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Path with prescribed increments, row-major `n_steps × K`.
    pub fn from_increments(seed: u64, stream: u64, dt: f64, k: usize, increments: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if k == 0 || increments.is_empty() || !increments.len().is_multiple_of(k) {
            return Err(Error::InvalidArgument(format!(
                "{} increments do not fill whole steps of {k} modes",
                increments.len()
            )));
        }
        Ok(Self { seed, stream, n_steps: increments.len() / k, dt, k, increments })
    }

    /// Increments of step `n` (empty when K = 0).
    #[inline]
    pub fn step(&self, n: usize) -> &[f64] {
        &self.increments[n * self.k..(n + 1) * self.k]
    }
}

/// Path from `seed` on stream 0.
pub fn sample_path(seed: u64, n_steps: usize, dt: f64, k: usize) -> Result<WienerPath> {
    sample_path_stream(seed, 0, n_steps, dt, k)
}

/// Path `stream` of the family keyed by `master_seed`. ChaCha keeps a separate 64-bit
/// stream per path index, so path p is the same sequence however paths are scheduled.
pub fn sample_path_stream(master_seed: u64, stream: u64, n_steps: usize, dt: f64, k: usize) -> Result<WienerPath> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("a Wiener path needs at least one step".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    let sd = dt.sqrt();
    let increments = (0..n_steps * k)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .collect();
    Ok(WienerPath { seed: master_seed, stream, n_steps, dt, k, increments })
}
