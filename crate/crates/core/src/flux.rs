//! Flux laws A, their speeds a = A′, speed caps and monotone two-point fluxes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::BoundaryData;
use crate::{Error, Result};

/// Number of samples used when a maximum has no closed form.
pub const DENSE_SAMPLES: usize = 100_000;

/// What is known about the shape of ξ ↦ |a(ξ)|, used to pick a closed form for M_N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedShape {
    /// a is monotone: the maximum of |a| on [−N, N] sits at an endpoint.
    Monotone,
    /// a is even and |a| is nondecreasing on [0, ∞).
    EvenIncreasing,
    /// nothing declared, sample densely.
    General,
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied flux law. Extrema and Engquist–Osher integrals fall back to sampling
/// and composite Simpson quadrature.
pub struct CustomFlux {
    pub name: String,
    pub flux: Box<ScalarFn>,
    pub speed: Box<ScalarFn>,
    pub second: Option<Box<ScalarFn>>,
    pub shape: SpeedShape,
    pub convex: bool,
    /// Declared bound on |A″|, if the law claims one.
    pub second_bound: Option<f64>,
    /// |a(ξ)| ≤ growth.0 · (1 + |ξ|^growth.1)
    pub growth: (f64, i32),
}

impl fmt::Debug for CustomFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFlux").field("name", &self.name).field("shape", &self.shape).finish()
    }
}

#[derive(Debug, Clone)]
pub enum FluxLaw {
    /// A(ξ) = ξ²/2
    Burgers,
    /// A(ξ) = cξ
    Linear {
        c: f64,
    },
    /// A(ξ) = ξ³/3
    Cubic,
    Custom(Arc<CustomFlux>),
}

/// Flux A with derivative a = A′.
#[derive(Debug, Clone)]
pub struct FluxModel {
    law: FluxLaw,
}

impl FluxModel {
    pub fn burgers() -> Self {
        Self { law: FluxLaw::Burgers }
    }

    pub fn linear(c: f64) -> Self {
        Self { law: FluxLaw::Linear { c } }
    }

    pub fn cubic() -> Self {
        Self { law: FluxLaw::Cubic }
    }

    pub fn custom(custom: CustomFlux) -> Self {
        Self { law: FluxLaw::Custom(Arc::new(custom)) }
    }

    /// Built-in library lookup; `c` is only read by `linear`.
    pub fn by_name(name: &str, c: f64) -> Result<Self> {
        match name {
            "burgers" => Ok(Self::burgers()),
            "linear" => Ok(Self::linear(c)),
            "cubic" => Ok(Self::cubic()),
            _ => Err(Error::UnknownName { kind: "flux", name: name.to_string() }),
        }
    }

    pub fn law(&self) -> &FluxLaw {
        &self.law
    }

    pub fn name(&self) -> &str {
        match &self.law {
            FluxLaw::Burgers => "burgers",
            FluxLaw::Linear { .. } => "linear",
            FluxLaw::Cubic => "cubic",
            FluxLaw::Custom(c) => &c.name,
        }
    }

    #[inline]
    pub fn flux(&self, xi: f64) -> f64 {
        match &self.law {
            FluxLaw::Burgers => 0.5 * xi * xi,
            FluxLaw::Linear { c } => c * xi,
            FluxLaw::Cubic => xi * xi * xi / 3.0,
            FluxLaw::Custom(c) => (c.flux)(xi),
        }
    }

    #[inline]
    pub fn speed(&self, xi: f64) -> f64 {
        match &self.law {
            FluxLaw::Burgers => xi,
            FluxLaw::Linear { c } => *c,
            FluxLaw::Cubic => xi * xi,
            FluxLaw::Custom(c) => (c.speed)(xi),
        }
    }

    /// A″, when the law provides it.
    pub fn second_derivative(&self, xi: f64) -> Option<f64> {
        match &self.law {
            FluxLaw::Burgers => Some(1.0),
            FluxLaw::Linear { .. } => Some(0.0),
            FluxLaw::Cubic => Some(2.0 * xi),
            FluxLaw::Custom(c) => c.second.as_ref().map(|f| f(xi)),
        }
    }

    pub fn convex(&self) -> bool {
        match &self.law {
            FluxLaw::Burgers | FluxLaw::Linear { .. } => true,
            FluxLaw::Cubic => false,
            FluxLaw::Custom(c) => c.convex,
        }
    }

    /// Declared sup |A″| (the bounded-second-derivative hypothesis), if claimed.
    pub fn second_bound(&self) -> Option<f64> {
        match &self.law {
            FluxLaw::Burgers => Some(1.0),
            FluxLaw::Linear { .. } => Some(0.0),
            FluxLaw::Cubic => None,
            FluxLaw::Custom(c) => c.second_bound,
        }
    }

    pub fn speed_shape(&self) -> SpeedShape {
        match &self.law {
            FluxLaw::Burgers | FluxLaw::Linear { .. } => SpeedShape::Monotone,
            FluxLaw::Cubic => SpeedShape::EvenIncreasing,
            FluxLaw::Custom(c) => c.shape,
        }
    }

    fn growth(&self) -> (f64, i32) {
        match &self.law {
            FluxLaw::Burgers => (1.0, 1),
            FluxLaw::Linear { c } => (c.abs().max(1.0), 0),
            FluxLaw::Cubic => (1.0, 2),
            FluxLaw::Custom(c) => c.growth,
        }
    }

    /// Sampled checks of the flux hypotheses on ξ ∈ [−range, range]:
    /// consistency of a with A by central differences, polynomial growth of a,
    /// and the declared bound on |A″| when one is claimed.
    pub fn validate(&self, range: f64) -> Result<()> {
        let h = 1e-3;
        let (gc, deg) = self.growth();
        let n = 2001;
        for j in 0..n {
            let xi = -range + 2.0 * range * j as f64 / (n - 1) as f64;
            let a = self.speed(xi);
            if !a.is_finite() || !self.flux(xi).is_finite() {
                return Err(Error::NonFinite(format!("flux `{}` at ξ = {xi}", self.name())));
            }
            let fd = (self.flux(xi + h) - self.flux(xi - h)) / (2.0 * h);
            let poly = 1.0 + xi.abs().powi(deg.max(0));
            if (fd - a).abs() > 10.0 * poly * h * h + 1e-12 * self.flux(xi).abs() / h {
                return Err(Error::Precondition(format!(
                    "flux `{}`: derivative inconsistent with A at ξ = {xi} (fd {fd}, a {a})",
                    self.name()
                )));
            }
            if a.abs() > gc * poly * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!(
                    "flux `{}`: |a({xi})| = {} exceeds declared growth",
                    self.name(),
                    a.abs()
                )));
            }
            if let Some(bound) = self.second_bound() {
                let a2 =
                    self.second_derivative(xi).unwrap_or_else(|| (self.speed(xi + h) - self.speed(xi - h)) / (2.0 * h));
                if a2.abs() > bound * (1.0 + 1e-9) + 1e-9 {
                    return Err(Error::Precondition(format!(
                        "flux `{}`: |A''({xi})| = {} exceeds declared bound {bound}",
                        self.name(),
                        a2.abs()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Points where a vanishes; interval extrema of A live at these or the endpoints.
    fn critical_points(&self) -> &'static [f64] {
        match &self.law {
            FluxLaw::Burgers | FluxLaw::Cubic => &[0.0],
            _ => &[],
        }
    }

    /// (min, max) of A on [lo, hi].
    fn extrema(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (fa, fb) = (self.flux(lo), self.flux(hi));
        let (mut mn, mut mx) = (fa.min(fb), fa.max(fb));
        match &self.law {
            FluxLaw::Custom(_) => {
                let n = 256;
                for j in 1..n {
                    let v = self.flux(lo + (hi - lo) * j as f64 / n as f64);
                    mn = mn.min(v);
                    mx = mx.max(v);
                }
            }
            _ => {
                for &c in self.critical_points() {
                    if c > lo && c < hi {
                        let v = self.flux(c);
                        mn = mn.min(v);
                        mx = mx.max(v);
                    }
                }
            }
        }
        (mn, mx)
    }
}

/// max |a| on [−s, s] for s ≥ 0.
fn max_abs_speed(model: &FluxModel, s: f64) -> Result<f64> {
    let m = match model.speed_shape() {
        SpeedShape::Monotone => model.speed(-s).abs().max(model.speed(s).abs()),
        SpeedShape::EvenIncreasing => model.speed(s).abs(),
        SpeedShape::General => {
            let h = 2.0 * s / DENSE_SAMPLES as f64;
            let mut m = 0.0_f64;
            let mut arg = -s;
            for j in 0..=DENSE_SAMPLES {
                let xi = -s + j as f64 * h;
                let a = model.speed(xi);
                if !a.is_finite() {
                    return Err(Error::NonFinite(format!("speed of `{}` at ξ = {xi}", model.name())));
                }
                if a.abs() > m {
                    m = a.abs();
                    arg = xi;
                }
            }
            // polish an interior maximum between neighboring samples
            let refined = golden_max(|x| model.speed(x).abs(), (arg - h).max(-s), (arg + h).min(s));
            m.max(refined)
        }
    };
    if !m.is_finite() {
        return Err(Error::NonFinite(format!("speed of `{}` on [-{s}, {s}]", model.name())));
    }
    Ok(m)
}

/// M_N = max_{−N ≤ ξ ≤ N} |a(ξ)|.
pub fn max_speed(model: &FluxModel, n: f64) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("truncation level N must be positive, got {n}")));
    }
    max_abs_speed(model, n)
}

/// M_b: the speed cap over the range of both boundary data.
pub fn boundary_speed_cap(model: &FluxModel, b1: &BoundaryData, b2: &BoundaryData) -> Result<f64> {
    max_abs_speed(model, b1.sup_norm().max(b2.sup_norm()))
}

/// Speed caps at truncation level N and over the boundary-data range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedCap {
    pub n: f64,
    pub m_n: f64,
    pub m_b: f64,
}

impl SpeedCap {
    pub fn new(model: &FluxModel, n: f64, boundary_sup: f64) -> Result<Self> {
        Ok(Self { n, m_n: max_speed(model, n)?, m_b: max_abs_speed(model, boundary_sup)? })
    }
}

/// Two-point monotone numerical fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Godunov,
    EngquistOsher,
    LaxFriedrichs,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Godunov, Scheme::EngquistOsher, Scheme::LaxFriedrichs];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Godunov => "godunov",
            Scheme::EngquistOsher => "engquist_osher",
            Scheme::LaxFriedrichs => "lax_friedrichs",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "godunov" => Ok(Scheme::Godunov),
            "engquist_osher" | "eo" => Ok(Scheme::EngquistOsher),
            "lax_friedrichs" | "lf" => Ok(Scheme::LaxFriedrichs),
            _ => Err(Error::UnknownName { kind: "scheme", name: s.to_string() }),
        }
    }
}

/// Golden-section maximization of a unimodal `f` on [a, b].
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..80 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    f(0.5 * (a + b))
}

/// Roots of a on (lo, hi) found by sampling and bisection, in increasing order.
fn speed_roots(model: &FluxModel, lo: f64, hi: f64) -> Vec<f64> {
    const PIECES: usize = 64;
    let x = |j: usize| lo + (hi - lo) * j as f64 / PIECES as f64;
    let mut roots = Vec::new();
    for j in 0..PIECES {
        let (mut a, mut b) = (x(j), x(j + 1));
        let (fa, fb) = (model.speed(a), model.speed(b));
        if fa == 0.0 && j > 0 {
            roots.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        let neg_left = fa < 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (model.speed(m) < 0.0) == neg_left {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// Interface flux F(u_left, u_right). `speed_bound` is the global α of Lax–Friedrichs and
/// is ignored by the other schemes.
#[inline]
pub fn numerical_flux(model: &FluxModel, u_left: f64, u_right: f64, scheme: Scheme, speed_bound: f64) -> f64 {
    match scheme {
        Scheme::Godunov => godunov(model, u_left, u_right),
        Scheme::EngquistOsher => engquist_osher(model, u_left, u_right),
        Scheme::LaxFriedrichs => {
            0.5 * (model.flux(u_left) + model.flux(u_right)) - 0.5 * speed_bound * (u_right - u_left)
        }
    }
}

#[inline]
fn godunov(model: &FluxModel, ul: f64, ur: f64) -> f64 {
    match model.law() {
        FluxLaw::Burgers => {
            if ul <= ur {
                if ul > 0.0 {
                    0.5 * ul * ul
                } else if ur < 0.0 {
                    0.5 * ur * ur
                } else {
                    0.0
                }
            } else {
                0.5 * ul.abs().max(ur.abs()).powi(2)
            }
        }
        FluxLaw::Linear { c } => {
            if *c >= 0.0 {
                c * ul
            } else {
                c * ur
            }
        }
        FluxLaw::Cubic => ul * ul * ul / 3.0,
        FluxLaw::Custom(_) => {
            if ul <= ur {
                model.extrema(ul, ur).0
            } else {
                model.extrema(ur, ul).1
            }
        }
    }
}

#[inline]
fn engquist_osher(model: &FluxModel, ul: f64, ur: f64) -> f64 {
    match model.law() {
        FluxLaw::Burgers => {
            let p = ul.max(0.0);
            let m = ur.min(0.0);
            0.5 * p * p + 0.5 * m * m
        }
        FluxLaw::Linear { c } => c.max(0.0) * ul + c.min(0.0) * ur,
        FluxLaw::Cubic => ul * ul * ul / 3.0,
        FluxLaw::Custom(_) => {
            if ul == ur {
                return model.flux(ul);
            }
            // ∫ min(a, 0) equals the change of A over the pieces where a < 0
            let (lo, hi) = (ul.min(ur), ul.max(ur));
            let mut cuts = vec![lo];
            cuts.extend(speed_roots(model, lo, hi));
            cuts.push(hi);
            let neg: f64 = cuts
                .windows(2)
                .filter(|w| model.speed(0.5 * (w[0] + w[1])) < 0.0)
                .map(|w| model.flux(w[1]) - model.flux(w[0]))
                .sum();
            model.flux(ul) + if ul < ur { neg } else { -neg }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quartic() -> FluxModel {
        FluxModel::custom(CustomFlux {
            name: "quartic".into(),
            flux: Box::new(|x| x.powi(4) / 4.0 - x * x / 2.0),
            speed: Box::new(|x| x.powi(3) - x),
            second: Some(Box::new(|x| 3.0 * x * x - 1.0)),
            shape: SpeedShape::General,
            convex: false,
            second_bound: None,
            growth: (2.0, 3),
        })
    }

    fn brute_max_speed(model: &FluxModel, n: f64) -> f64 {
        (0..=DENSE_SAMPLES)
            .map(|j| model.speed(-n + 2.0 * n * j as f64 / DENSE_SAMPLES as f64).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn max_speed_examples() {
        assert_eq!(max_speed(&FluxModel::burgers(), 3.0).unwrap(), 3.0);
        assert_eq!(max_speed(&FluxModel::linear(-1.5), 5.0).unwrap(), 1.5);
        // max of ξ² on [−2, 2]
        assert_eq!(max_speed(&FluxModel::cubic(), 2.0).unwrap(), 4.0);
        assert!(max_speed(&FluxModel::burgers(), 0.0).is_err());
    }

    #[test]
    fn max_speed_matches_dense_sampling() {
        for model in [FluxModel::burgers(), FluxModel::linear(0.7), FluxModel::cubic(), quartic()] {
            for n in [0.3, 1.0, 2.5, 7.0] {
                let closed = max_speed(&model, n).unwrap();
                let brute = brute_max_speed(&model, n);
                assert!((closed - brute).abs() <= 1e-6 * brute.max(1e-300), "{} N={n}", model.name());
            }
        }
    }

    #[test]
    fn max_speed_nondecreasing_in_n() {
        for model in [FluxModel::burgers(), FluxModel::cubic(), quartic()] {
            let mut prev = 0.0;
            for j in 1..40 {
                let m = max_speed(&model, 0.1 * j as f64).unwrap();
                assert!(m >= prev - 1e-12, "{} N = {}", model.name(), 0.1 * j as f64);
                prev = m;
            }
        }
    }

    #[test]
    fn boundary_cap_examples() {
        let b = |s: f64| BoundaryData::constant(s, -s, 0.1, 3).unwrap();
        let burgers = FluxModel::burgers();
        assert_eq!(boundary_speed_cap(&burgers, &b(1.0), &b(0.5)).unwrap(), 1.0);
        assert_eq!(boundary_speed_cap(&burgers, &b(0.0), &b(0.0)).unwrap(), 0.0);
        assert_eq!(boundary_speed_cap(&FluxModel::linear(2.0), &b(3.0), &b(1.0)).unwrap(), 2.0);
    }

    #[test]
    fn flux_examples() {
        let b = FluxModel::burgers();
        assert_eq!(numerical_flux(&b, 1.0, -1.0, Scheme::Godunov, 0.0), 0.5);
        for s in Scheme::ALL {
            assert!((numerical_flux(&b, 0.3, 0.3, s, 1.0) - 0.045).abs() < 1e-15);
        }
        assert_eq!(numerical_flux(&b, -1.0, 1.0, Scheme::EngquistOsher, 0.0), 0.0);
        assert_eq!(numerical_flux(&b, -1.0, 1.0, Scheme::Godunov, 0.0), 0.0);
    }

    #[test]
    fn custom_godunov_matches_builtin() {
        let custom_burgers = FluxModel::custom(CustomFlux {
            name: "burgers-custom".into(),
            flux: Box::new(|x| 0.5 * x * x),
            speed: Box::new(|x| x),
            second: None,
            shape: SpeedShape::Monotone,
            convex: true,
            second_bound: Some(1.0),
            growth: (1.0, 1),
        });
        let b = FluxModel::burgers();
        for (l, r) in [(1.0, -1.0), (-1.0, 1.0), (0.2, 0.9), (-0.7, -0.1), (0.5, -2.0)] {
            let g = numerical_flux(&b, l, r, Scheme::Godunov, 0.0);
            let e = numerical_flux(&b, l, r, Scheme::EngquistOsher, 0.0);
            assert!((numerical_flux(&custom_burgers, l, r, Scheme::Godunov, 0.0) - g).abs() < 1e-4);
            assert!((numerical_flux(&custom_burgers, l, r, Scheme::EngquistOsher, 0.0) - e).abs() < 1e-10);
        }
        custom_burgers.validate(5.0).unwrap();
    }

    #[test]
    fn builtins_validate() {
        for m in [FluxModel::burgers(), FluxModel::linear(2.0), FluxModel::cubic(), quartic()] {
            m.validate(10.0).unwrap();
        }
        assert!(FluxModel::burgers().convex());
        assert_eq!(FluxModel::cubic().second_bound(), None);
    }

    #[test]
    fn inconsistent_speed_is_rejected() {
        let bad = FluxModel::custom(CustomFlux {
            name: "bad".into(),
            flux: Box::new(|x| 0.5 * x * x),
            speed: Box::new(|x| 2.0 * x),
            second: None,
            shape: SpeedShape::Monotone,
            convex: true,
            second_bound: None,
            growth: (4.0, 1),
        });
        assert!(bad.validate(2.0).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("roe".parse::<Scheme>().is_err());
    }

    #[test]
    fn consistency_on_random_states() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let models = [FluxModel::burgers(), FluxModel::linear(-0.8), FluxModel::cubic()];
        for _ in 0..1000 {
            let u: f64 = rng.random_range(-5.0..5.0);
            for m in &models {
                for s in Scheme::ALL {
                    assert_eq!(numerical_flux(m, u, u, s, 100.0), m.flux(u));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_in_each_argument(l in -3.0f64..3.0, r in -3.0f64..3.0, d in 0.0f64..1.0) {
            let models = [FluxModel::burgers(), FluxModel::linear(1.3), FluxModel::linear(-0.4), FluxModel::cubic()];
            for m in &models {
                let alpha = max_speed(m, 4.0).unwrap();
                for s in Scheme::ALL {
                    let f = numerical_flux(m, l, r, s, alpha);
                    prop_assert!(numerical_flux(m, l + d, r, s, alpha) >= f - 1e-12);
                    prop_assert!(numerical_flux(m, l, r + d, s, alpha) <= f + 1e-12);
                }
            }
        }
    }
}
