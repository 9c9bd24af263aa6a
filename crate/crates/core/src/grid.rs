//! Uniform cell partition of the interval D = (x_left, x_right), cell-average
//! fields, and time-sampled Dirichlet boundary data.

use std::sync::Arc;

use crate::{Error, Result};

/// Side of the two-point boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Outward unit normal.
    pub fn normal(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    dx: f64,
    cell_centers: Vec<f64>,
}

impl Grid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !x_left.is_finite() || !x_right.is_finite() {
            return Err(Error::InvalidGrid(format!("endpoints must be finite, got ({x_left}, {x_right})")));
        }
        if x_left >= x_right {
            return Err(Error::InvalidGrid(format!("x_left = {x_left} must be below x_right = {x_right}")));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {n_cells}")));
        }
        let dx = (x_right - x_left) / n_cells as f64;
        let cell_centers = (0..n_cells).map(|i| x_left + (i as f64 + 0.5) * dx).collect();
        Ok(Self { x_left, x_right, n_cells, dx, cell_centers })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// |D|
    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn cell_centers(&self) -> &[f64] {
        &self.cell_centers
    }

    pub fn boundary_point(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.x_left,
            Side::Right => self.x_right,
        }
    }
}

/// Shorthand for [`Grid::new`] wrapped for sharing between fields.
pub fn make_grid(x_left: f64, x_right: f64, n_cells: usize) -> Result<Arc<Grid>> {
    Grid::new(x_left, x_right, n_cells).map(Arc::new)
}

/// Cell averages of a function on D.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    grid: Arc<Grid>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at cell {i}")));
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.n_cells()];
        Self { values, grid }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.n_cells()];
        Self { values, grid }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.cell_centers().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { values: self.values.iter().map(|v| c * v).collect(), grid: self.grid.clone() }
    }

    /// Cell-wise difference `self − other`; both must live on the same grid.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.grid.n_cells() != other.grid.n_cells() {
            return Err(Error::InvalidArgument("fields on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { values, grid: self.grid.clone() })
    }

    /// Midpoint quadrature of ∫_D |f| dx.
    pub fn l1_norm(&self) -> f64 {
        l1_norm(self)
    }

    /// Midpoint quadrature of ∫_D f dx.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }
}

pub fn l1_norm(f: &Field) -> f64 {
    f.grid.dx() * f.values.iter().map(|v| v.abs()).sum::<f64>()
}

/// L¹ distance between two cell-average arrays of spacing `dx`.
pub(crate) fn l1_distance(dx: f64, a: &[f64], b: &[f64]) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Dirichlet data u_b sampled on a uniform time grid t_n = n·dt.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    dt: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    sup_norm: f64,
}

impl BoundaryData {
    pub fn new(dt: f64, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("boundary sample spacing must be positive, got {dt}")));
        }
        if left.is_empty() || left.len() != right.len() {
            return Err(Error::InvalidArgument(format!(
                "boundary sequences must be non-empty and aligned ({} vs {})",
                left.len(),
                right.len()
            )));
        }
        if left.iter().chain(&right).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary sample".into()));
        }
        let sup_norm = left.iter().chain(&right).fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self { dt, left, right, sup_norm })
    }

    /// Time-constant data with `n_steps + 1` samples.
    pub fn constant(left: f64, right: f64, dt: f64, n_steps: usize) -> Result<Self> {
        Self::new(dt, vec![left; n_steps + 1], vec![right; n_steps + 1])
    }

    /// Samples `f(t) -> (left, right)` at t_n = n·dt, n = 0..=n_steps.
    pub fn from_fn(dt: f64, n_steps: usize, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (left, right): (Vec<f64>, Vec<f64>) = (0..=n_steps).map(|n| f(n as f64 * dt)).unzip();
        Self::new(dt, left, right)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.left.len()
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Value on `side` at sample index `n`, holding the last sample beyond the end.
    pub fn sample(&self, side: Side, n: usize) -> f64 {
        let seq = self.side(side);
        seq[n.min(seq.len() - 1)]
    }

    pub fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Linear interpolation between samples; constant extrapolation outside.
    pub fn at(&self, side: Side, t: f64) -> f64 {
        let seq = self.side(side);
        let s = t / self.dt;
        if s <= 0.0 {
            return seq[0];
        }
        let last = seq.len() - 1;
        let i = s.floor() as usize;
        if i >= last {
            return seq[last];
        }
        let w = s - i as f64;
        if w == 0.0 {
            seq[i]
        } else {
            (1.0 - w) * seq[i] + w * seq[i + 1]
        }
    }
}
