//! L¹ contraction of two solutions driven by the same Wiener path.

use serde::{Deserialize, Serialize};

use super::ensemble::Scenario;
use super::stats::column_estimates;
use crate::data::ProblemData;
use crate::flux::boundary_speed_cap;
use crate::grid::{l1_distance, Side};
use crate::{Error, Result};

/// Multiplier C of the discretization margin C·(dx + √dt)·|D|.
pub const MARGIN_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// Monte Carlo mean of ‖u₁(t) − u₂(t)‖_{L¹}.
    pub lhs: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub rhs_init: f64,
    /// M_b ∫₀ᵗ (|u₁,b − u₂,b|(left) + |u₁,b − u₂,b|(right)) ds.
    pub rhs_boundary: Vec<f64>,
    pub m_b: f64,
    pub margin: f64,
    pub dx: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub n_aborted: usize,
}

impl ContractionReport {
    pub fn bound(&self, i: usize) -> f64 {
        self.rhs_init + self.rhs_boundary[i]
    }

    /// lhs ≤ bound + CI + margin at every snapshot.
    pub fn holds(&self) -> bool {
        (0..self.times.len()).all(|i| self.lhs[i] <= self.bound(i) + self.ci_halfwidth[i] + self.margin)
    }

    /// max(0, max_t (lhs − bound)), the excess the statistical and discretization
    /// allowances have to absorb.
    pub fn violation(&self) -> f64 {
        (0..self.times.len()).map(|i| self.lhs[i] - self.bound(i)).fold(0.0, f64::max)
    }

    /// max_t (CI + margin), the allowance granted on top of the bound.
    pub fn allowance(&self) -> f64 {
        self.ci_halfwidth.iter().map(|c| c + self.margin).fold(0.0, f64::max)
    }

    pub fn max_lhs(&self) -> f64 {
        self.lhs.iter().copied().fold(0.0, f64::max)
    }
}

pub fn contraction_experiment(sc: &Scenario, data1: &ProblemData, data2: &ProblemData) -> Result<ContractionReport> {
    if sc.n_paths < 2 {
        return Err(Error::InvalidArgument(format!("contraction needs at least 2 paths, got {}", sc.n_paths)));
    }
    let eps = sc.solver.eps;
    let tg = sc.time_grid(&[eps], data1.boundary.sup_bound().max(data2.boundary.sup_bound()))?;
    let p1 = sc.prepare(data1, &tg, eps)?;
    let p2 = sc.prepare(data2, &tg, eps)?;
    let dx = sc.grid.dx();

    let (rows, n_aborted) = sc.map_paths(|p| {
        let path = sc.path(p, &tg)?;
        let a = sc.run(&p1, &path)?;
        let b = sc.run(&p2, &path)?;
        Ok(a.u_snapshots()
            .iter()
            .zip(b.u_snapshots())
            .map(|(x, y)| l1_distance(dx, x.values(), y.values()))
            .collect::<Vec<f64>>())
    })?;
    if rows.is_empty() {
        return Err(Error::Precondition("every path blew up".into()));
    }

    let times = tg.snapshot_times();
    let est = column_estimates(&rows);
    let m_b = boundary_speed_cap(&sc.flux, &p1.b, &p2.b)?;
    let mut cumulative = Vec::with_capacity(tg.n_steps + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for n in 0..tg.n_steps {
        let jump = |s: Side| (p1.b.sample(s, n) - p2.b.sample(s, n)).abs();
        acc += (jump(Side::Left) + jump(Side::Right)) * tg.dt;
        cumulative.push(m_b * acc);
    }
    let rhs_boundary = tg.snapshot_steps().iter().map(|&n| cumulative[n]).collect();

    Ok(ContractionReport {
        lhs: est.iter().map(|e| e.mean).collect(),
        ci_halfwidth: est.iter().map(|e| e.ci).collect(),
        times,
        rhs_init: p1.u0.sub(&p2.u0)?.l1_norm(),
        rhs_boundary,
        m_b,
        margin: MARGIN_FACTOR * (dx + tg.dt.sqrt()) * sc.grid.length(),
        dx,
        dt: tg.dt,
        n_paths: sc.n_paths,
        n_aborted,
    })
}
