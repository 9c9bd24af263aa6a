//! Boundary lift: the heat problem ∂_t ũ = εΔũ in Q, ũ(0) = 0, ũ = u_b on Σ.
//!
//! Dirichlet data enters through ghost cells holding u_b. Backward Euler with a
//! tridiagonal solve is the default; forward Euler is kept for cross-checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{BoundaryData, Field, Grid, Side};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftScheme {
    #[default]
    Implicit,
    Explicit,
}

/// Sup norms certified along the lift trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LiftBounds {
    pub sup_u: f64,
    /// Interior faces only; the jump to the ghost value at t = 0⁺ is excluded.
    pub sup_grad: f64,
    pub sup_dt: f64,
    pub sup_eps_lap: f64,
}

#[derive(Debug, Clone)]
pub struct LiftTrajectory {
    fields: Vec<Field>,
    ghosts: Vec<(f64, f64)>,
    eps: f64,
    dt: f64,
    bounds: LiftBounds,
}

impl LiftTrajectory {
    /// ũ at step n, n = 0..=n_steps.
    pub fn field(&self, n: usize) -> &Field {
        &self.fields[n]
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    /// (left, right) ghost values at step n; they equal the u_b samples.
    pub fn ghosts(&self, n: usize) -> (f64, f64) {
        self.ghosts[n]
    }

    pub fn n_steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn bounds(&self) -> LiftBounds {
        self.bounds
    }
}

/// Solves (I − rΔ)x = rhs for constant r > 0 with Dirichlet ghosts folded into `rhs`.
fn solve_constant_tridiagonal(r: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    let (diag, off) = (1.0 + 2.0 * r, -r);
    // forward sweep
    scratch[0] = off / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let m = diag - off * scratch[i - 1];
        scratch[i] = off / m;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

pub fn solve_lift(
    grid: &Arc<Grid>,
    b: &BoundaryData,
    eps: f64,
    dt: f64,
    n_steps: usize,
    scheme: LiftScheme,
) -> Result<LiftTrajectory> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("viscosity must be nonnegative, got {eps}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let n = grid.n_cells();
    let dx = grid.dx();
    let r = eps * dt / (dx * dx);
    if scheme == LiftScheme::Explicit && r > 0.5 {
        return Err(Error::Stability(format!(
            "explicit lift needs dt ≤ dx²/(2ε) = {}, got {dt}",
            dx * dx / (2.0 * eps)
        )));
    }
    let ghost_at = |step: usize| {
        let t = step as f64 * dt;
        (b.at(Side::Left, t), b.at(Side::Right, t))
    };

    let mut fields = Vec::with_capacity(n_steps + 1);
    let mut ghosts = Vec::with_capacity(n_steps + 1);
    let mut cur = vec![0.0; n];
    fields.push(Field::zeros(grid.clone()));
    ghosts.push(ghost_at(0));
    let mut bounds = LiftBounds::default();
    let mut scratch = vec![0.0; n];
    let mut next = vec![0.0; n];

    for step in 0..n_steps {
        let (gl, gr) = ghost_at(step + 1);
        match scheme {
            LiftScheme::Implicit => {
                if r == 0.0 {
                    next.copy_from_slice(&cur);
                } else {
                    next.copy_from_slice(&cur);
                    next[0] += r * gl;
                    next[n - 1] += r * gr;
                    solve_constant_tridiagonal(r, &mut next, &mut scratch);
                }
            }
            LiftScheme::Explicit => {
                let (pl, pr) = ghosts[step];
                for i in 0..n {
                    let left = if i == 0 { pl } else { cur[i - 1] };
                    let right = if i == n - 1 { pr } else { cur[i + 1] };
                    next[i] = cur[i] + r * (left - 2.0 * cur[i] + right);
                }
            }
        }
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("lift at step {}, cell {i}", step + 1)));
        }
        for i in 0..n {
            bounds.sup_u = bounds.sup_u.max(next[i].abs());
            bounds.sup_dt = bounds.sup_dt.max(((next[i] - cur[i]) / dt).abs());
            let left = if i == 0 { gl } else { next[i - 1] };
            let right = if i == n - 1 { gr } else { next[i + 1] };
            let lap = (left - 2.0 * next[i] + right) / (dx * dx);
            bounds.sup_eps_lap = bounds.sup_eps_lap.max((eps * lap).abs());
            if i + 1 < n {
                bounds.sup_grad = bounds.sup_grad.max(((next[i + 1] - next[i]) / dx).abs());
            }
        }
        std::mem::swap(&mut cur, &mut next);
        fields.push(Field::new(grid.clone(), cur.clone())?);
        ghosts.push((gl, gr));
    }
    Ok(LiftTrajectory { fields, ghosts, eps, dt, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_data_gives_zero_lift() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let b = BoundaryData::constant(0.0, 0.0, 1e-3, 50).unwrap();
        let lift = solve_lift(&g, &b, 0.1, 1e-3, 50, LiftScheme::Implicit).unwrap();
        assert!(lift.fields().iter().all(|f| f.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn no_viscosity_keeps_interior_zero() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let b = BoundaryData::constant(1.0, -2.0, 1e-2, 30).unwrap();
        for scheme in [LiftScheme::Implicit, LiftScheme::Explicit] {
            let lift = solve_lift(&g, &b, 0.0, 1e-2, 30, scheme).unwrap();
            assert!(lift.fields().iter().all(|f| f.values().iter().all(|&v| v == 0.0)));
            assert_eq!(lift.ghosts(7), (1.0, -2.0));
        }
    }

    #[test]
    fn constant_data_rises_monotonically_to_one() {
        let g = make_grid(0.0, 1.0, 20).unwrap();
        let dt = 1e-3;
        let steps = 20_000;
        let b = BoundaryData::constant(1.0, 1.0, dt, steps).unwrap();
        let lift = solve_lift(&g, &b, 0.1, dt, steps, LiftScheme::Implicit).unwrap();
        for w in lift.fields().windows(2) {
            for (a, c) in w[0].values().iter().zip(w[1].values()) {
                assert!(c >= a && (0.0..=1.0).contains(c));
            }
        }
        let last = lift.field(steps);
        assert!(last.values().iter().all(|&v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn steady_state_is_linear_between_ghosts() {
        let g = make_grid(0.0, 1.0, 10).unwrap();
        let dt = 1e-2;
        let steps = 4000;
        let b = BoundaryData::constant(2.0, -1.0, dt, steps).unwrap();
        let lift = solve_lift(&g, &b, 0.5, dt, steps, LiftScheme::Implicit).unwrap();
        // ghost centers sit at x_left − dx/2 and x_right + dx/2
        let (x0, x1) = (-0.05, 1.05);
        for (x, v) in g.cell_centers().iter().zip(lift.field(steps).values()) {
            let exact = 2.0 + (x - x0) / (x1 - x0) * (-3.0);
            assert!((v - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn implicit_and_explicit_agree() {
        let g = make_grid(0.0, 1.0, 25).unwrap();
        let eps = 0.05;
        let dt = 0.2 * g.dx() * g.dx() / eps;
        let steps = 2000;
        let b = BoundaryData::from_fn(dt, steps, |t| ((3.0 * t).sin(), 0.5)).unwrap();
        let a = solve_lift(&g, &b, eps, dt, steps, LiftScheme::Implicit).unwrap();
        let c = solve_lift(&g, &b, eps, dt, steps, LiftScheme::Explicit).unwrap();
        let diff = a.field(steps).sub(c.field(steps)).unwrap().sup_norm();
        assert!(diff < 5e-3, "{diff}");
    }

    #[test]
    fn explicit_stability_violation_is_rejected() {
        let g = make_grid(0.0, 1.0, 10).unwrap();
        let b = BoundaryData::constant(1.0, 1.0, 1.0, 2).unwrap();
        assert!(matches!(solve_lift(&g, &b, 1.0, 1.0, 2, LiftScheme::Explicit), Err(Error::Stability(_))));
    }

    #[test]
    fn tridiagonal_solver_matches_dense_elimination() {
        let n = 7;
        let r = 0.8;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut x = rhs.clone();
        let mut scratch = vec![0.0; n];
        solve_constant_tridiagonal(r, &mut x, &mut scratch);
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            let ax = (1.0 + 2.0 * r) * x[i] - r * (left + right);
            assert!((ax - rhs[i]).abs() < 1e-13);
        }
    }
}
