//! Named initial and boundary profiles used by scenarios and config files.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{BoundaryData, Field, Grid, Side};
use crate::Result;

/// Initial datum u_0, evaluated as exact cell averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant {
        value: f64,
    },
    /// `ul` left of `x0`, `ur` right of it.
    Riemann {
        ul: f64,
        ur: f64,
        x0: f64,
    },
    /// `offset + amp·sin(mode·π·(x − x_left)/|D|)`
    Sine {
        amp: f64,
        mode: u32,
        #[serde(default)]
        offset: f64,
    },
}

impl InitialProfile {
    pub fn sine(amp: f64, mode: u32) -> Self {
        InitialProfile::Sine { amp, mode, offset: 0.0 }
    }

    pub fn field(&self, grid: &Arc<Grid>) -> Result<Field> {
        let dx = grid.dx();
        let values = grid
            .cell_centers()
            .iter()
            .map(|&xc| {
                let (a, b) = (xc - 0.5 * dx, xc + 0.5 * dx);
                match *self {
                    InitialProfile::Constant { value } => value,
                    InitialProfile::Riemann { ul, ur, x0 } => {
                        let frac_left = ((x0 - a) / dx).clamp(0.0, 1.0);
                        frac_left * ul + (1.0 - frac_left) * ur
                    }
                    InitialProfile::Sine { amp, mode, offset } => {
                        if mode == 0 {
                            return offset;
                        }
                        let k = mode as f64 * PI / grid.length();
                        let (sa, sb) = (a - grid.x_left(), b - grid.x_left());
                        // exact average of sin(k s) over the cell
                        offset + amp * ((k * sa).cos() - (k * sb).cos()) / (k * dx)
                    }
                }
            })
            .collect();
        Field::new(grid.clone(), values)
    }

    /// sup |u_0|
    pub fn sup_bound(&self) -> f64 {
        match *self {
            InitialProfile::Constant { value } => value.abs(),
            InitialProfile::Riemann { ul, ur, .. } => ul.abs().max(ur.abs()),
            InitialProfile::Sine { amp, offset, .. } => offset.abs() + amp.abs(),
        }
    }
}

/// Time profile of the Dirichlet datum on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryProfile {
    Constant {
        value: f64,
    },
    /// Linear ramp from 0 at t = 0 to `value` at `t_ramp`, then constant.
    Ramp {
        value: f64,
        t_ramp: f64,
    },
    /// `mean + amp·sin(2π·freq·t)`
    Sine {
        mean: f64,
        amp: f64,
        freq: f64,
    },
}

impl BoundaryProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            BoundaryProfile::Constant { value } => value,
            BoundaryProfile::Ramp { value, t_ramp } => {
                if t_ramp <= 0.0 {
                    value
                } else {
                    value * (t / t_ramp).clamp(0.0, 1.0)
                }
            }
            BoundaryProfile::Sine { mean, amp, freq } => mean + amp * (2.0 * PI * freq * t).sin(),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match *self {
            BoundaryProfile::Constant { value } | BoundaryProfile::Ramp { value, .. } => value.abs(),
            BoundaryProfile::Sine { mean, amp, .. } => mean.abs() + amp.abs(),
        }
    }
}

impl Default for BoundaryProfile {
    fn default() -> Self {
        BoundaryProfile::Constant { value: 0.0 }
    }
}

/// Dirichlet data on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default)]
    pub left: BoundaryProfile,
    #[serde(default)]
    pub right: BoundaryProfile,
}

impl BoundarySpec {
    pub fn constant(left: f64, right: f64) -> Self {
        Self { left: BoundaryProfile::Constant { value: left }, right: BoundaryProfile::Constant { value: right } }
    }

    pub fn profile(&self, side: Side) -> &BoundaryProfile {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn sample(&self, dt: f64, n_steps: usize) -> Result<BoundaryData> {
        BoundaryData::from_fn(dt, n_steps, |t| (self.left.at(t), self.right.at(t)))
    }

    pub fn sup_bound(&self) -> f64 {
        self.left.sup_bound().max(self.right.sup_bound())
    }
}

/// Initial and boundary data of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemData {
    pub initial: InitialProfile,
    #[serde(default)]
    pub boundary: BoundarySpec,
}

impl ProblemData {
    pub fn new(initial: InitialProfile, boundary: BoundarySpec) -> Self {
        Self { initial, boundary }
    }

    pub fn sup_bound(&self) -> f64 {
        self.initial.sup_bound().max(self.boundary.sup_bound())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn riemann_cell_averages_split_the_jump_cell() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        let f = InitialProfile::Riemann { ul: 1.0, ur: 0.0, x0: 0.375 }.field(&g).unwrap();
        assert_eq!(f.values(), &[1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn sine_average_has_exact_mass() {
        let g = make_grid(0.0, 1.0, 7).unwrap();
        let f = InitialProfile::sine(1.0, 1).field(&g).unwrap();
        assert!((f.mass() - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn ramp_starts_at_zero() {
        let p = BoundaryProfile::Ramp { value: 2.0, t_ramp: 0.5 };
        assert_eq!(p.at(0.0), 0.0);
        assert_eq!(p.at(0.25), 1.0);
        assert_eq!(p.at(3.0), 2.0);
        assert_eq!(p.sup_bound(), 2.0);
    }
}
