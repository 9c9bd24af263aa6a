//! Kinetic-formulation diagnostics.
//!
//! * f₊(u, ξ) = 1_{u > ξ} and its conjugate f₋ = f₊ − 1,
//! * the parabolic kinetic measure m^ε = ε|∇u^ε|² dx dt pushed forward to ξ = u^ε,
//! * the tail functions μ_m(ξ) = E m((ξ, ∞)) and μ_ν(ξ) = E ∫∫ ν_{t,x}((ξ, ∞)) dx dt,
//! * near-boundary kinetic traces f̄₊ and the truncated boundary defect measures m̄_N^±.
//!
//! Traces are stored as bin averages over the ξ-grid: f̄_j is the mean over layer cells of
//! (1/h)∫_{bin j} 1_{u > η} dη. With this representation the midpoint rule integrates the
//! trace term of m̄_N^± exactly for piecewise-linear speeds, and the discrete defect
//! densities are the partial sums of the discrete boundary inequality.

use serde::{Deserialize, Serialize};

use crate::flux::{max_speed, FluxModel};
use crate::grid::{BoundaryData, Side};
use crate::solver::Trajectory;
use crate::{Error, Result};

/// Uniform grid of n_bins cells on [−N, N] in the kinetic variable ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    n: f64,
    n_bins: usize,
    h: f64,
}

impl XiGrid {
    pub fn new(n: f64, n_bins: usize) -> Result<Self> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!("ξ-truncation N must be positive, got {n}")));
        }
        if n_bins < 8 {
            return Err(Error::InvalidArgument(format!("need at least 8 ξ-bins, got {n_bins}")));
        }
        Ok(Self { n, n_bins, h: 2.0 * n / n_bins as f64 })
    }

    /// Default truncation level 4·max(sup|u₀|, sup|u_b|, 1).
    pub fn default_level(data_sup: f64) -> f64 {
        4.0 * data_sup.max(1.0)
    }

    pub fn level(&self) -> f64 {
        self.n
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin width.
    pub fn width(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn edge(&self, j: usize) -> f64 {
        if j == self.n_bins {
            self.n
        } else {
            -self.n + j as f64 * self.h
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|j| self.edge(j)).collect()
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        -self.n + (j as f64 + 0.5) * self.h
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|j| self.center(j)).collect()
    }

    /// Bin holding `u`, or `None` when |u| > N.
    #[inline]
    pub fn bin(&self, u: f64) -> Option<usize> {
        if !(u >= -self.n && u <= self.n) {
            return None;
        }
        Some((((u + self.n) / self.h) as usize).min(self.n_bins - 1))
    }

    /// (1/h) ∫_{bin j} 1_{u > η} dη
    #[inline]
    pub fn bin_fraction_below(&self, u: f64, j: usize) -> f64 {
        ((u - self.edge(j)) / self.h).clamp(0.0, 1.0)
    }
}

/// f₊(u, ξ) = 1_{u > ξ}
#[inline]
pub fn kinetic_function(u: f64, xi: f64) -> f64 {
    if u > xi {
        1.0
    } else {
        0.0
    }
}

/// f₋(u, ξ) = f₊ − 1 = −1_{u ≤ ξ}
#[inline]
pub fn kinetic_conjugate(u: f64, xi: f64) -> f64 {
    kinetic_function(u, xi) - 1.0
}

/// ∫_{−N}^{N} (f₊(u, ξ) − 1_{ξ<0}) dξ by the midpoint rule on the ξ-grid; recovers u
/// to within one bin width when |u| ≤ N.
pub fn kinetic_reconstruction(u: f64, xi: &XiGrid) -> f64 {
    (0..xi.n_bins())
        .map(|j| {
            let c = xi.center(j);
            kinetic_function(u, c) - if c < 0.0 { 1.0 } else { 0.0 }
        })
        .sum::<f64>()
        * xi.width()
}

/// Nonnegative mass binned by the value of u, with overflow buckets for |u| > N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticHistogram {
    xi: XiGrid,
    mass: Vec<f64>,
    overflow_hi: f64,
    overflow_lo: f64,
}

impl KineticHistogram {
    pub fn new(xi: XiGrid) -> Self {
        let mass = vec![0.0; xi.n_bins()];
        Self { xi, mass, overflow_hi: 0.0, overflow_lo: 0.0 }
    }

    pub fn xi(&self) -> &XiGrid {
        &self.xi
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn overflow_hi(&self) -> f64 {
        self.overflow_hi
    }

    pub fn overflow_lo(&self) -> f64 {
        self.overflow_lo
    }

    pub fn total(&self) -> f64 {
        self.overflow_lo + self.mass.iter().sum::<f64>() + self.overflow_hi
    }

    #[inline]
    pub fn deposit(&mut self, u: f64, w: f64) {
        match self.xi.bin(u) {
            Some(j) => self.mass[j] += w,
            None if u > 0.0 => self.overflow_hi += w,
            None => self.overflow_lo += w,
        }
    }

    /// Adds ε·|∂ₓu|²·dx·dt to the bin of each u_i. Central differences inside,
    /// one-sided differences at the two boundary-adjacent cells.
    pub fn accumulate_defect(&mut self, u: &[f64], dx: f64, eps: f64, dt: f64) {
        if eps == 0.0 {
            return;
        }
        let n = u.len();
        let w = eps * dx * dt;
        for i in 0..n {
            let grad = if i == 0 {
                (u[1] - u[0]) / dx
            } else if i == n - 1 {
                (u[n - 1] - u[n - 2]) / dx
            } else {
                (u[i + 1] - u[i - 1]) / (2.0 * dx)
            };
            if grad != 0.0 {
                self.deposit(u[i], w * grad * grad);
            }
        }
    }

    /// Mass of (ξ, ∞). Mass is taken as uniform inside a bin, so the tail is exact at
    /// edges and piecewise linear between them.
    pub fn tail_above(&self, xi: f64) -> f64 {
        let g = &self.xi;
        let xi = xi.clamp(-g.level(), g.level());
        let s = (xi + g.level()) / g.width();
        let j = (s.floor() as usize).min(g.n_bins());
        let mut tail = self.overflow_hi;
        for k in (j + 1..g.n_bins()).rev() {
            tail += self.mass[k];
        }
        if j < g.n_bins() {
            let frac = (1.0 - (s - j as f64)).clamp(0.0, 1.0);
            tail += frac * self.mass[j];
        }
        tail
    }

    /// Mass of (−∞, ξ), the mirror of [`Self::tail_above`].
    pub fn tail_below(&self, xi: f64) -> f64 {
        let g = &self.xi;
        let xi = xi.clamp(-g.level(), g.level());
        let s = (xi + g.level()) / g.width();
        let j = (s.floor() as usize).min(g.n_bins());
        let mut tail = self.overflow_lo;
        for k in 0..j {
            tail += self.mass[k];
        }
        if j < g.n_bins() {
            tail += (s - j as f64).clamp(0.0, 1.0) * self.mass[j];
        }
        tail
    }

    /// Mass with |u| ≥ r, exact when r is an edge.
    pub fn mass_beyond(&self, r: f64) -> f64 {
        let r = r.abs();
        self.tail_above(r) + self.tail_below(-r)
    }

    pub fn merge(&mut self, other: &KineticHistogram) -> Result<()> {
        if self.xi != other.xi {
            return Err(Error::InvalidArgument("cannot merge histograms on different ξ-grids".into()));
        }
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        self.overflow_hi += other.overflow_hi;
        self.overflow_lo += other.overflow_lo;
        Ok(())
    }
}

fn clamp_level(xi: f64, n: f64, what: &str) -> f64 {
    if xi < -n || xi > n {
        log::warn!("{what}: ξ = {xi} outside [-{n}, {n}], clamped");
        xi.clamp(-n, n)
    } else {
        xi
    }
}

/// μ_m(ξ): path average of the kinetic-measure tail above ξ (overflow_hi included).
pub fn mu_m(ens: &[KineticHistogram], xi: f64) -> Result<f64> {
    let first = ens.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    let xi = clamp_level(xi, first.xi().level(), "mu_m");
    let tails: Vec<f64> = ens.iter().map(|h| h.tail_above(xi)).collect();
    Ok(crate::experiments::stats::pairwise_sum(&tails) / ens.len() as f64)
}

/// Left-rectangle time weights of a snapshot sequence: t_{n+1} − t_n, last weight 0.
pub(crate) fn snapshot_weights(times: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
    w.push(0.0);
    w
}

/// ∫∫ 1_{u(t,x) > ξ} dx dt for one trajectory by left-rectangle quadrature over snapshots.
pub fn young_tail(traj: &Trajectory, xi: f64) -> f64 {
    let dx = traj.grid().dx();
    snapshot_weights(traj.times())
        .iter()
        .zip(traj.u_snapshots())
        .map(|(w, u)| w * dx * u.values().iter().filter(|&&v| v > xi).count() as f64)
        .sum()
}

/// μ_ν(ξ) with ν_{t,x} = δ_{u(t,x)}: path average of [`young_tail`].
pub fn mu_nu(ens: &[Trajectory], xi: f64) -> Result<f64> {
    if ens.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let tails: Vec<f64> = ens.iter().map(|t| young_tail(t, xi)).collect();
    Ok(crate::experiments::stats::pairwise_sum(&tails) / ens.len() as f64)
}

/// ∫∫ |u|^p dx dt over the same snapshot quadrature as [`young_tail`].
pub fn young_moment(traj: &Trajectory, p: i32) -> f64 {
    let dx = traj.grid().dx();
    snapshot_weights(traj.times())
        .iter()
        .zip(traj.u_snapshots())
        .map(|(w, u)| w * dx * u.values().iter().map(|v| v.abs().powi(p)).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub xi: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// μ′(ξ) by central differences.
    pub slope_plus: f64,
    /// μ′(−ξ) by central differences.
    pub slope_minus: f64,
}

/// Slopes μ′(±ξ) of a sampled tail function at the requested levels; they should
/// vanish (also after weighting by ξ^p for μ_ν) as ξ grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub delta: f64,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    /// max over rows with ξ ≥ level of ξ^p (|μ′(ξ)| + |μ′(−ξ)|)
    pub fn weighted_slope_beyond(&self, level: f64, p: i32) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.xi >= level)
            .map(|r| r.xi.abs().powi(p) * (r.slope_plus.abs() + r.slope_minus.abs()))
            .fold(0.0, f64::max)
    }
}

pub fn tail_decay_report(mu: impl Fn(f64) -> f64, levels: &[f64], delta: f64) -> TailReport {
    let rows = levels
        .iter()
        .map(|&xi| {
            let slope = |c: f64| (mu(c + delta) - mu(c - delta)) / (2.0 * delta);
            TailRow { xi, mu_plus: mu(xi), mu_minus: mu(-xi), slope_plus: slope(xi), slope_minus: slope(-xi) }
        })
        .collect();
    TailReport { delta, rows }
}

/// Near-boundary kinetic trace f̄₊(t, ξ) on one side, one row per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    side: Side,
    layer_width: f64,
    n_layer_cells: usize,
    xi: XiGrid,
    times: Vec<f64>,
    f_bar: Vec<Vec<f64>>,
}

impl BoundaryTrace {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn layer_width(&self) -> f64 {
        self.layer_width
    }

    pub fn n_layer_cells(&self) -> usize {
        self.n_layer_cells
    }

    pub fn xi(&self) -> &XiGrid {
        &self.xi
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `f_bar()[t][j]`, bin-averaged.
    pub fn f_bar(&self) -> &[Vec<f64>] {
        &self.f_bar
    }

    /// Path average of traces taken on the same grids and snapshot times.
    pub fn average(traces: &[BoundaryTrace]) -> Result<BoundaryTrace> {
        let first = traces.first().ok_or_else(|| Error::InvalidArgument("no traces to average".into()))?;
        if traces.iter().any(|t| t.side != first.side || t.xi != first.xi || t.times != first.times) {
            return Err(Error::InvalidArgument("traces differ in side, ξ-grid or times".into()));
        }
        let n = traces.len() as f64;
        let f_bar = (0..first.times.len())
            .map(|ti| {
                (0..first.xi.n_bins())
                    .map(|j| {
                        let col: Vec<f64> = traces.iter().map(|t| t.f_bar[ti][j]).collect();
                        crate::experiments::stats::pairwise_sum(&col) / n
                    })
                    .collect()
            })
            .collect();
        Ok(BoundaryTrace { f_bar, ..first.clone() })
    }
}

/// Cells whose centers lie within `layer_width` of the boundary on `side`.
fn layer_cells(n_cells: usize, dx: f64, layer_width: f64, side: Side) -> std::ops::Range<usize> {
    let count = ((layer_width / dx - 0.5) * (1.0 + 1e-12)).floor() as isize + 1;
    let count = count.clamp(0, n_cells as isize) as usize;
    match side {
        Side::Left => 0..count,
        Side::Right => n_cells - count..n_cells,
    }
}

pub fn boundary_trace(traj: &Trajectory, side: Side, layer_width: f64, xi: &XiGrid) -> Result<BoundaryTrace> {
    let dx = traj.grid().dx();
    if !(layer_width >= dx * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!("layer width {layer_width} is below dx = {dx}")));
    }
    let cells = layer_cells(traj.grid().n_cells(), dx, layer_width, side);
    if cells.is_empty() {
        return Err(Error::InvalidArgument("trace layer contains no cells".into()));
    }
    let m = cells.len() as f64;
    let f_bar = traj
        .u_snapshots()
        .iter()
        .map(|u| {
            let layer = &u.values()[cells.clone()];
            (0..xi.n_bins()).map(|j| layer.iter().map(|&v| xi.bin_fraction_below(v, j)).sum::<f64>() / m).collect()
        })
        .collect();
    Ok(BoundaryTrace {
        side,
        layer_width,
        n_layer_cells: cells.len(),
        xi: xi.clone(),
        times: traj.times().to_vec(),
        f_bar,
    })
}

/// Truncated boundary defect densities m̄_N^±(t, ξ) at the ξ-grid edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectMeasure {
    pub side: Side,
    pub n: f64,
    pub m_n: f64,
    pub times: Vec<f64>,
    pub edges: Vec<f64>,
    pub m_bar_plus: Vec<Vec<f64>>,
    pub m_bar_minus: Vec<Vec<f64>>,
}

impl DefectMeasure {
    pub fn min_plus(&self) -> f64 {
        self.m_bar_plus.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_minus(&self) -> f64 {
        self.m_bar_minus.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// m̄⁻ rebuilt from m̄⁺ by m̄⁻(ξ) = m̄⁺(ξ) + M_N(ξ + N) + (A(ξ) − A(−N))·n. The direct and
    /// rebuilt densities differ by the constant m̄⁺(−N) in ξ.
    pub fn minus_from_plus(&self, flux: &FluxModel) -> Vec<Vec<f64>> {
        let normal = self.side.normal();
        let a_lo = flux.flux(-self.n);
        self.m_bar_plus
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.edges)
                    .map(|(mp, &xi)| mp + self.m_n * (xi + self.n) + (flux.flux(xi) - a_lo) * normal)
                    .collect()
            })
            .collect()
    }
}

fn check_level(trace: &BoundaryTrace, b: &BoundaryData, n: f64) -> Result<()> {
    if !(n > b.sup_norm()) {
        return Err(Error::Precondition(format!("truncation N = {n} must exceed sup|u_b| = {}", b.sup_norm())));
    }
    let level = trace.xi().level();
    if (level - n).abs() > 1e-12 * n {
        return Err(Error::InvalidArgument(format!("trace ξ-grid spans [-{level}, {level}], not [-{n}, {n}]")));
    }
    Ok(())
}

/// m̄⁺_N(t, ξ) = M_N (u_b(t) − ξ)⁺ − ∫_ξ^N (−a(η)·n) f̄₊(t, η) dη and
/// m̄⁻_N(t, ξ) = M_N (ξ − u_b(t))⁺ + ∫_{−N}^ξ (−a(η)·n) f̄₋(t, η) dη, the trace
/// integrals by the midpoint rule over ξ-bins.
pub fn defect_measure(trace: &BoundaryTrace, b: &BoundaryData, flux: &FluxModel, n: f64) -> Result<DefectMeasure> {
    check_level(trace, b, n)?;
    let xi = trace.xi();
    let h = xi.width();
    let m_n = max_speed(flux, n)?;
    let normal = trace.side().normal();
    let a_n: Vec<f64> = (0..xi.n_bins()).map(|j| flux.speed(xi.center(j)) * normal).collect();
    let edges = xi.edges();
    let nb = xi.n_bins();

    let mut plus_rows = Vec::with_capacity(trace.times().len());
    let mut minus_rows = Vec::with_capacity(trace.times().len());
    for (t, f) in trace.times().iter().zip(trace.f_bar()) {
        let ub = b.at(trace.side(), *t);
        let mut plus = vec![0.0; nb + 1];
        let mut acc = 0.0;
        for j in (0..=nb).rev() {
            if j < nb {
                acc += a_n[j] * f[j] * h;
            }
            plus[j] = m_n * (ub - edges[j]).max(0.0) + acc;
        }
        plus[nb] = 0.0_f64.max(m_n * (ub - edges[nb]).max(0.0));
        let mut minus = vec![0.0; nb + 1];
        let mut acc = 0.0;
        for j in 0..=nb {
            if j > 0 {
                acc -= a_n[j - 1] * (f[j - 1] - 1.0) * h;
            }
            minus[j] = m_n * (edges[j] - ub).max(0.0) + acc;
        }
        plus_rows.push(plus);
        minus_rows.push(minus);
    }
    Ok(DefectMeasure {
        side: trace.side(),
        n,
        m_n,
        times: trace.times().to_vec(),
        edges,
        m_bar_plus: plus_rows,
        m_bar_minus: minus_rows,
    })
}

/// M_N f^b_j + a(ξ_j)·n·f̄₊_j per snapshot and ξ-bin, f^b bin-averaged like the trace.
pub fn bln_values(trace: &BoundaryTrace, b: &BoundaryData, flux: &FluxModel, n: f64) -> Result<Vec<Vec<f64>>> {
    check_level(trace, b, n)?;
    let xi = trace.xi();
    let m_n = max_speed(flux, n)?;
    let normal = trace.side().normal();
    Ok(trace
        .times()
        .iter()
        .zip(trace.f_bar())
        .map(|(t, f)| {
            let ub = b.at(trace.side(), *t);
            (0..xi.n_bins())
                .map(|j| m_n * xi.bin_fraction_below(ub, j) + flux.speed(xi.center(j)) * normal * f[j])
                .collect()
        })
        .collect())
}

/// min over (t, ξ-bin) of M_N f^b + a·n f̄₊; nonnegative when the trace respects the
/// boundary entropy condition.
pub fn bln_check(trace: &BoundaryTrace, b: &BoundaryData, flux: &FluxModel, n: f64) -> Result<f64> {
    Ok(bln_values(trace, b, flux, n)?.iter().flatten().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Field};
    use crate::solver::Trajectory;
    use proptest::prelude::*;

    fn constant_trajectory(c: f64, n_cells: usize, times: Vec<f64>, xi: &XiGrid) -> Trajectory {
        let g = make_grid(0.0, 1.0, n_cells).unwrap();
        let snaps = vec![Field::constant(g.clone(), c); times.len()];
        Trajectory::from_snapshots(g, times, snaps, KineticHistogram::new(xi.clone()))
    }

    #[test]
    fn kinetic_function_examples() {
        assert_eq!(kinetic_function(0.5, 0.0), 1.0);
        assert_eq!(kinetic_function(0.0, 0.0), 0.0);
        assert_eq!(kinetic_conjugate(0.0, 0.0), -1.0);
    }

    #[test]
    fn xi_grid_is_symmetric() {
        let g = XiGrid::new(2.0, 64).unwrap();
        let e = g.edges();
        assert_eq!(e[0], -2.0);
        assert_eq!(e[64], 2.0);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        for j in 0..=64 {
            assert!((e[j] + e[64 - j]).abs() < 1e-14);
        }
        assert!(XiGrid::new(1.0, 4).is_err());
        assert_eq!(g.bin(2.0), Some(63));
        assert_eq!(g.bin(2.5), None);
    }

    #[test]
    fn defect_accumulation_examples() {
        let xi = XiGrid::new(4.0, 256).unwrap();
        let mut h = KineticHistogram::new(xi.clone());
        h.accumulate_defect(&[0.7; 10], 0.1, 0.5, 1.0);
        assert_eq!(h.total(), 0.0);

        let n = 50;
        let dx = 1.0 / n as f64;
        let u: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
        let mut h = KineticHistogram::new(xi.clone());
        h.accumulate_defect(&u, dx, 0.1, 1.0);
        assert!((h.total() - 0.1).abs() < 1e-12);
        // every deposit lands in a bin covering the range of u
        for (j, m) in h.mass().iter().enumerate() {
            if *m > 0.0 {
                assert!(xi.edge(j + 1) > 0.0 && xi.edge(j) < 1.0);
            }
        }

        let mut h0 = KineticHistogram::new(xi);
        h0.accumulate_defect(&u, dx, 0.0, 1.0);
        assert_eq!(h0.total(), 0.0);
    }

    #[test]
    fn mu_m_examples() {
        let xi = XiGrid::new(2.0, 16).unwrap();
        let mut a = KineticHistogram::new(xi.clone());
        let mut b = KineticHistogram::new(xi.clone());
        for (k, v) in [-1.7, -0.3, 0.2, 0.9, 1.99].iter().enumerate() {
            a.deposit(*v, 1.0 + k as f64);
            b.deposit(-v, 0.5);
        }
        a.deposit(3.0, 0.25);
        b.deposit(5.0, 0.75);
        let ens = [a.clone(), b.clone()];
        let total = 0.5 * (a.total() + b.total());
        assert!((mu_m(&ens, -2.0).unwrap() - total).abs() < 1e-14);
        assert_eq!(mu_m(&ens, 2.0).unwrap(), 0.5);
        let mut prev = f64::INFINITY;
        for j in 0..=400 {
            let v = mu_m(&ens, -2.0 + 4.0 * j as f64 / 400.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        // outside the grid the level is clamped
        assert_eq!(mu_m(&ens, 10.0).unwrap(), mu_m(&ens, 2.0).unwrap());
        assert!(mu_m(&[], 0.0).is_err());
    }

    #[test]
    fn mass_beyond_counts_both_tails() {
        let xi = XiGrid::new(4.0, 32).unwrap();
        let mut h = KineticHistogram::new(xi);
        h.deposit(0.5, 1.0);
        h.deposit(-1.5, 2.0);
        h.deposit(2.5, 4.0);
        h.deposit(-6.0, 8.0);
        assert_eq!(h.mass_beyond(1.0), 14.0);
        assert_eq!(h.mass_beyond(2.0), 12.0);
        assert_eq!(h.mass_beyond(4.0), 8.0);
        assert_eq!(h.mass_beyond(3.0), 8.0);
        assert_eq!(h.tail_below(0.25) + h.tail_above(0.25), h.total());
    }

    #[test]
    fn mu_nu_constant_solution() {
        let xi = XiGrid::new(4.0, 64).unwrap();
        let times: Vec<f64> = (0..=50).map(|n| n as f64 * 0.01).collect();
        let t_end = 0.5;
        let traj = constant_trajectory(0.3, 20, times, &xi);
        let ens = [traj];
        assert!((mu_nu(&ens, 0.29).unwrap() - t_end).abs() < 1e-12);
        assert!((mu_nu(&ens, -3.0).unwrap() - t_end).abs() < 1e-12);
        assert_eq!(mu_nu(&ens, 0.3).unwrap(), 0.0);
        assert_eq!(mu_nu(&ens, 1e9).unwrap(), 0.0);
    }

    #[test]
    fn trace_examples() {
        let xi = XiGrid::new(2.0, 16).unwrap();
        let traj = constant_trajectory(0.6, 20, vec![0.0, 0.1], &xi);
        let tr = boundary_trace(&traj, Side::Right, 4.0 * 0.05, &xi).unwrap();
        assert_eq!(tr.n_layer_cells(), 4);
        for row in tr.f_bar() {
            for (j, f) in row.iter().enumerate() {
                if xi.edge(j + 1) <= 0.6 {
                    assert_eq!(*f, 1.0);
                } else if xi.edge(j) >= 0.6 {
                    assert_eq!(*f, 0.0);
                } else {
                    assert!((f - (0.6 - xi.edge(j)) / xi.width()).abs() < 1e-12);
                }
            }
        }

        let g = make_grid(0.0, 1.0, 10).unwrap();
        let u = Field::new(g.clone(), vec![0.0, 1.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0]).unwrap();
        let traj = Trajectory::from_snapshots(g, vec![0.0], vec![u], KineticHistogram::new(xi.clone()));
        let tr = boundary_trace(&traj, Side::Left, 0.2, &xi).unwrap();
        let j = xi.bin(0.5).unwrap();
        assert_eq!(tr.f_bar()[0][j], 0.5);
        assert!(boundary_trace(&traj, Side::Left, 0.05, &xi).is_err());
    }

    fn trace_from_rows(side: Side, xi: &XiGrid, times: Vec<f64>, f_bar: Vec<Vec<f64>>) -> BoundaryTrace {
        BoundaryTrace { side, layer_width: 0.0, n_layer_cells: 1, xi: xi.clone(), times, f_bar }
    }

    #[test]
    fn defect_constant_state_closed_form() {
        // trace 1_{1 > η}, Burgers, right boundary, N = 2, u_b = 1:
        // m̄⁺(0) = 2·1 + ∫_0^1 η dη = 2.5
        let xi = XiGrid::new(2.0, 256).unwrap();
        let f: Vec<f64> = (0..256).map(|j| xi.bin_fraction_below(1.0, j)).collect();
        let tr = trace_from_rows(Side::Right, &xi, vec![0.0], vec![f]);
        let b = BoundaryData::constant(1.0, 1.0, 1.0, 1).unwrap();
        let d = defect_measure(&tr, &b, &FluxModel::burgers(), 2.0).unwrap();
        let j0 = 128;
        assert_eq!(d.edges[j0], 0.0);
        assert!((d.m_bar_plus[0][j0] - 2.5).abs() <= xi.width());
        assert_eq!(d.m_bar_plus[0][256], 0.0);
        for j in 0..=256 {
            if d.edges[j] >= 1.0 {
                assert!(d.m_bar_plus[0][j].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minus_density_matches_rebuilt_up_to_a_constant() {
        let xi = XiGrid::new(3.0, 96).unwrap();
        let f: Vec<f64> =
            (0..96).map(|j| 0.5 * xi.bin_fraction_below(0.4, j) + 0.5 * xi.bin_fraction_below(-1.1, j)).collect();
        for side in [Side::Left, Side::Right] {
            let tr = trace_from_rows(side, &xi, vec![0.0], vec![f.clone()]);
            let b = BoundaryData::constant(0.2, -0.7, 1.0, 1).unwrap();
            let flux = FluxModel::burgers();
            let d = defect_measure(&tr, &b, &flux, 3.0).unwrap();
            let rebuilt = d.minus_from_plus(&flux);
            let shift = rebuilt[0][0] - d.m_bar_minus[0][0];
            assert!((shift - d.m_bar_plus[0][0]).abs() < 1e-12);
            for (r, m) in rebuilt[0].iter().zip(&d.m_bar_minus[0]) {
                assert!((r - m - shift).abs() < 1e-10);
            }
            assert_eq!(d.m_bar_minus[0][0], 0.0);
        }
    }

    #[test]
    fn defect_requires_level_above_data() {
        let xi = XiGrid::new(1.0, 16).unwrap();
        let tr = trace_from_rows(Side::Left, &xi, vec![0.0], vec![vec![0.0; 16]]);
        let b = BoundaryData::constant(1.5, 0.0, 1.0, 1).unwrap();
        assert!(matches!(defect_measure(&tr, &b, &FluxModel::burgers(), 1.0), Err(Error::Precondition(_))));
        assert!(matches!(bln_check(&tr, &b, &FluxModel::burgers(), 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn bln_attained_data_is_nonnegative() {
        let xi = XiGrid::new(2.0, 64).unwrap();
        for side in [Side::Left, Side::Right] {
            for ub in [-1.3, 0.0, 0.37, 1.9] {
                let f: Vec<f64> = (0..64).map(|j| xi.bin_fraction_below(ub, j)).collect();
                let tr = trace_from_rows(side, &xi, vec![0.0], vec![f]);
                let b = BoundaryData::constant(ub, ub, 1.0, 1).unwrap();
                for flux in [FluxModel::burgers(), FluxModel::cubic(), FluxModel::linear(-1.0)] {
                    assert!(bln_check(&tr, &b, &flux, 2.0).unwrap() >= 0.0);
                    let d = defect_measure(&tr, &b, &flux, 2.0).unwrap();
                    assert!(d.min_plus() >= -1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn reconstruction_within_one_bin(u in -3.9f64..3.9) {
            let xi = XiGrid::new(4.0, 256).unwrap();
            prop_assert!((kinetic_reconstruction(u, &xi) - u).abs() <= xi.width());
        }

        #[test]
        fn trace_is_nonincreasing_in_xi(vals in prop::collection::vec(-3.0f64..3.0, 4..12)) {
            let xi = XiGrid::new(2.0, 32).unwrap();
            let g = make_grid(0.0, 1.0, vals.len()).unwrap();
            let traj = Trajectory::from_snapshots(
                g.clone(), vec![0.0], vec![Field::new(g.clone(), vals).unwrap()], KineticHistogram::new(xi.clone()));
            let tr = boundary_trace(&traj, Side::Left, 3.0 * g.dx(), &xi).unwrap();
            for w in tr.f_bar()[0].windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            prop_assert!(tr.f_bar()[0].iter().all(|f| (0.0..=1.0).contains(f)));
        }
    }
}
