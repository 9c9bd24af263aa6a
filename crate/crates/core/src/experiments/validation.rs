//! Deterministic oracle suite: Riemann problems for Burgers and a boundary layer where the
//! Dirichlet datum is not attained.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ensemble::Scenario;
use crate::data::{BoundarySpec, InitialProfile, ProblemData};
use crate::flux::FluxModel;
use crate::grid::{make_grid, Grid, Side};
use crate::kinetic::{bln_check, boundary_trace, defect_measure, XiGrid};
use crate::noise::NoiseModel;
use crate::solver::{SolverConfig, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    RiemannShock,
    RiemannRarefaction,
    BoundaryLayer,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::RiemannShock, Suite::RiemannRarefaction, Suite::BoundaryLayer];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::RiemannShock => "riemann_shock",
            Suite::RiemannRarefaction => "riemann_rarefaction",
            Suite::BoundaryLayer => "boundary_layer",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::UnknownName { kind: "validation suite", name: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=".
    pub relation: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<=".into(), passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: ">=".into(), passed: value >= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Zero-noise Burgers run on `grid`, one path.
fn deterministic_run(
    grid: Arc<Grid>,
    data: &ProblemData,
    eps: f64,
    t_end: f64,
    snapshots: usize,
) -> Result<Trajectory> {
    let xi = XiGrid::new(XiGrid::default_level(data.sup_bound()), 256)?;
    let mut solver = SolverConfig::new(eps, t_end, xi);
    solver.k = 0;
    let mut sc = Scenario::new(grid, FluxModel::burgers(), NoiseModel::zero(), solver);
    sc.snapshots = snapshots;
    let tg = sc.time_grid(&[eps], data.boundary.sup_bound())?;
    let prep = sc.prepare(data, &tg, eps)?;
    sc.run(&prep, &sc.path(0, &tg)?)
}

/// Position of the 1/2 level crossing of the (1, 0) Burgers shock started at 0 on
/// (−1, 1), linearly interpolated between cell centers.
pub fn shock_front(n_cells: usize, t_end: f64) -> Result<(f64, f64)> {
    let grid = make_grid(-1.0, 1.0, n_cells)?;
    let data =
        ProblemData::new(InitialProfile::Riemann { ul: 1.0, ur: 0.0, x0: 0.0 }, BoundarySpec::constant(1.0, 0.0));
    let tr = deterministic_run(grid.clone(), &data, 0.0, t_end, 1)?;
    let u = tr.final_u().values();
    let x = grid.cell_centers();
    let i = (0..u.len() - 1)
        .find(|&i| u[i] >= 0.5 && u[i + 1] < 0.5)
        .ok_or_else(|| Error::Precondition("no shock found".into()))?;
    let front = x[i] + (u[i] - 0.5) / (u[i] - u[i + 1]) * grid.dx();
    Ok((front, grid.dx()))
}

/// L¹ error at t_end of the (−1, 1) rarefaction on (−1, 1) against the cell averages of
/// u = clamp(x/t, −1, 1).
pub fn rarefaction_error(n_cells: usize, t_end: f64) -> Result<f64> {
    let grid = make_grid(-1.0, 1.0, n_cells)?;
    let data =
        ProblemData::new(InitialProfile::Riemann { ul: -1.0, ur: 1.0, x0: 0.0 }, BoundarySpec::constant(-1.0, 1.0));
    let tr = deterministic_run(grid.clone(), &data, 0.0, t_end, 1)?;
    let t = t_end;
    // antiderivative of clamp(x/t, −1, 1)
    let prim = |x: f64| if x.abs() <= t { x * x / (2.0 * t) } else { x.abs() - t / 2.0 };
    let dx = grid.dx();
    Ok(grid
        .cell_centers()
        .iter()
        .zip(tr.final_u().values())
        .map(|(&c, &u)| (u - (prim(c + dx / 2.0) - prim(c - dx / 2.0)) / dx).abs() * dx)
        .sum())
}

/// Outcome of the outflow boundary-layer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLayerOutcome {
    pub dx: f64,
    /// max |u − 1| over cells farther than the trace layer from either boundary.
    pub interior_deviation: f64,
    pub bln_left: f64,
    pub bln_right: f64,
    /// min of m̄⁺_N at the right boundary over ξ ∈ [0, 1/2] and all snapshots after t = 0.
    pub right_plus_min: f64,
    /// max |m̄⁺_N(·, N)| over both sides.
    pub plus_at_n: f64,
}

/// Burgers on (0, 1) with u₀ ≡ 1, u_b = 1 on the left and u_b = 0 on the right.
/// a(1) = 1 > 0 makes the right boundary an outflow boundary.
pub fn boundary_layer(n_cells: usize, eps: f64, t_end: f64) -> Result<BoundaryLayerOutcome> {
    let grid = make_grid(0.0, 1.0, n_cells)?;
    let data = ProblemData::new(InitialProfile::Constant { value: 1.0 }, BoundarySpec::constant(1.0, 0.0));
    let tr = deterministic_run(grid.clone(), &data, eps, t_end, 20)?;
    let dx = grid.dx();
    let layer = 4.0 * dx;
    let n = XiGrid::default_level(data.sup_bound());
    let xi = XiGrid::new(n, 256)?;
    let b = data.boundary.sample(tr.dt(), tr.n_steps())?;
    let flux = FluxModel::burgers();

    let interior_deviation = grid
        .cell_centers()
        .iter()
        .zip(tr.final_u().values())
        .filter(|(&x, _)| x > layer && x < 1.0 - layer)
        .map(|(_, &u)| (u - 1.0).abs())
        .fold(0.0, f64::max);

    let mut bln = [0.0; 2];
    let mut plus_at_n: f64 = 0.0;
    let mut right_plus_min = f64::INFINITY;
    for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
        let trace = boundary_trace(&tr, side, layer, &xi)?;
        bln[k] = bln_check(&trace, &b, &flux, n)?;
        let d = defect_measure(&trace, &b, &flux, n)?;
        plus_at_n = plus_at_n.max(d.m_bar_plus.iter().map(|row| row.last().unwrap().abs()).fold(0.0, f64::max));
        if side == Side::Right {
            for row in d.m_bar_plus.iter().skip(1) {
                for (e, m) in d.edges.iter().zip(row) {
                    if (0.0..=0.5).contains(e) {
                        right_plus_min = right_plus_min.min(*m);
                    }
                }
            }
        }
    }
    Ok(BoundaryLayerOutcome { dx, interior_deviation, bln_left: bln[0], bln_right: bln[1], right_plus_min, plus_at_n })
}

/// Resolutions of the rarefaction study; the constant is fitted on the first.
pub const RAREFACTION_CELLS: [usize; 3] = [100, 200, 400];

pub fn deterministic_validation(suite: Suite) -> Result<ValidationReport> {
    let checks = match suite {
        Suite::RiemannShock => {
            let (front, dx) = shock_front(200, 0.5)?;
            vec![Check::at_most("front_error", (front - 0.25).abs(), 2.0 * dx)]
        }
        Suite::RiemannRarefaction => {
            let rate = |n: usize| {
                let dx = 2.0 / n as f64;
                dx * (1.0 / dx).ln()
            };
            let errs = RAREFACTION_CELLS.iter().map(|&n| rarefaction_error(n, 0.5)).collect::<Result<Vec<_>>>()?;
            let c = errs[0] / rate(RAREFACTION_CELLS[0]);
            RAREFACTION_CELLS
                .iter()
                .zip(&errs)
                .skip(1)
                .map(|(&n, &e)| Check::at_most(&format!("l1_error_n{n}"), e, c * rate(n)))
                .collect()
        }
        Suite::BoundaryLayer => {
            let o = boundary_layer(200, 1e-3, 0.5)?;
            vec![
                Check::at_most("interior_deviation", o.interior_deviation, o.dx),
                Check::at_least("bln_left", o.bln_left, -1e-2),
                Check::at_least("bln_right", o.bln_right, -1e-2),
                Check::at_least("right_defect_min_on_0_half", o.right_plus_min, 0.1),
                Check::at_most("defect_at_level_n", o.plus_at_n, 0.0),
            ]
        }
    };
    Ok(ValidationReport { suite, checks })
}
