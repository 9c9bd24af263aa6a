//! Viscous stochastic problem in shifted form: v^ε solves the equation with zero Dirichlet
//! data and flux argument v^ε + ũ^ε, and u^ε = v^ε + ũ^ε.
//!
//! One step is an explicit monotone finite-volume update with explicit diffusion, followed
//! by the Euler–Maruyama noise increment evaluated at the step's start state.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::flux::{numerical_flux, FluxModel, Scheme, SpeedCap};
use crate::grid::{BoundaryData, Field, Grid};
use crate::kinetic::{KineticHistogram, XiGrid};
use crate::lift::{solve_lift, LiftScheme, LiftTrajectory};
use crate::noise::{NoiseModel, NoiseTable, WienerPath};
use crate::{Error, Result};

const TINY: f64 = 1e-300;

/// Exponents p of the recorded L^p energies.
pub const ENERGY_POWERS: [u32; 2] = [2, 4];

/// How the Dirichlet data reaches the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// v with zero data plus the heat lift.
    #[default]
    Shifted,
    /// u_b imposed on u through ghost cells; kept as a cross-check.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Number of noise modes.
    pub k: usize,
    pub seed: u64,
    pub record_every: usize,
    pub xi_grid: XiGrid,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default)]
    pub lift_scheme: LiftScheme,
}

impl SolverConfig {
    pub fn new(eps: f64, t_end: f64, xi_grid: XiGrid) -> Self {
        Self {
            eps,
            cfl: 0.5,
            t_end,
            scheme: Scheme::Godunov,
            k: 8,
            seed: 0,
            record_every: 1,
            xi_grid,
            boundary_mode: BoundaryMode::Shifted,
            lift_scheme: LiftScheme::Implicit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {}", self.eps)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// cfl · min(dx / M_N, dx² / (2ε))
pub fn cfl_dt(grid: &Grid, cap: &SpeedCap, eps: f64, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {eps}")));
    }
    if cap.m_n == 0.0 && eps == 0.0 {
        return Err(Error::Stability("no transport and no diffusion: the time step is unconstrained".into()));
    }
    let dx = grid.dx();
    Ok(cfl * (dx / cap.m_n.max(TINY)).min(dx * dx / (2.0 * eps + TINY)))
}

/// Uniform time grid covering [0, t_end] with steps no longer than `dt_max`.
pub fn time_grid(t_end: f64, dt_max: f64) -> Result<(usize, f64)> {
    if !(t_end > 0.0) || !(dt_max > 0.0) || !dt_max.is_finite() {
        return Err(Error::InvalidArgument(format!("bad time grid: t_end = {t_end}, dt_max = {dt_max}")));
    }
    let n = (t_end / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub time: f64,
    /// ‖v‖_p^p keyed by p.
    pub lp_norms: BTreeMap<u32, f64>,
    /// ε ∫₀ᵗ ∫ |v|^{p−2} |∂ₓv|² dx ds keyed by p.
    pub dissipation: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValues {
    pub lp_p: f64,
    pub dissipation: f64,
}

fn check_power(p: u32) -> Result<()> {
    if p < 2 || p % 2 == 1 {
        return Err(Error::InvalidArgument(format!("energy exponent must be an even integer ≥ 2, got {p}")));
    }
    Ok(())
}

/// dx Σ |v_i|^p
pub fn lp_power(v: &[f64], dx: f64, p: u32) -> f64 {
    dx * v.iter().map(|x| x.abs().powi(p as i32)).sum::<f64>()
}

/// Σ over interior faces of |v_i|^{p−2} ((v_{i+1} − v_i)/dx)² dx.
pub fn dissipation_density(v: &[f64], dx: f64, p: u32) -> f64 {
    v.windows(2)
        .map(|w| {
            let g = (w[1] - w[0]) / dx;
            w[0].abs().powi(p as i32 - 2) * g * g
        })
        .sum::<f64>()
        * dx
}

/// (dx Σ|v|^p, ε · grad_sq_accum), where the caller has accumulated
/// Σ_steps [`dissipation_density`] · dt.
pub fn energy_functional(v: &Field, grad_sq_accum: f64, p: u32, eps: f64) -> Result<EnergyValues> {
    check_power(p)?;
    Ok(EnergyValues { lp_p: lp_power(v.values(), v.grid().dx(), p), dissipation: eps * grad_sq_accum })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<Grid>,
    times: Vec<f64>,
    u_snapshots: Vec<Field>,
    v_snapshots: Vec<Field>,
    defect_hist: KineticHistogram,
    energy: Vec<EnergyRecord>,
    sup_lp: BTreeMap<u32, f64>,
    dt: f64,
    n_steps: usize,
}

impl Trajectory {
    /// Trajectory assembled from given snapshots with v = u and no energy records.
    pub fn from_snapshots(grid: Arc<Grid>, times: Vec<f64>, u: Vec<Field>, hist: KineticHistogram) -> Self {
        let n_steps = times.len().saturating_sub(1);
        let dt = if n_steps > 0 { times[1] - times[0] } else { 0.0 };
        Self {
            grid,
            times,
            v_snapshots: u.clone(),
            u_snapshots: u,
            defect_hist: hist,
            energy: Vec::new(),
            sup_lp: BTreeMap::new(),
            dt,
            n_steps,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn u_snapshots(&self) -> &[Field] {
        &self.u_snapshots
    }

    pub fn v_snapshots(&self) -> &[Field] {
        &self.v_snapshots
    }

    pub fn final_u(&self) -> &Field {
        self.u_snapshots.last().expect("trajectory has at least one snapshot")
    }

    pub fn defect_hist(&self) -> &KineticHistogram {
        &self.defect_hist
    }

    pub fn energy(&self) -> &[EnergyRecord] {
        &self.energy
    }

    /// sup over all steps of ‖v‖_p^p.
    pub fn sup_lp(&self, p: u32) -> Option<f64> {
        self.sup_lp.get(&p).copied()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
}

/// One explicit step of the viscous problem on a fixed grid.
pub struct Stepper {
    dx: f64,
    eps: f64,
    scheme: Scheme,
    flux: FluxModel,
    alpha: f64,
    table: NoiseTable,
    w: Vec<f64>,
    faces: Vec<f64>,
}

impl Stepper {
    /// `alpha` is the speed bound used by Lax–Friedrichs.
    pub fn new(grid: &Grid, eps: f64, scheme: Scheme, flux: FluxModel, noise: &NoiseModel, alpha: f64) -> Self {
        let n = grid.n_cells();
        Self {
            dx: grid.dx(),
            eps,
            scheme,
            flux,
            alpha,
            table: noise.table(grid.cell_centers()),
            w: vec![0.0; n],
            faces: vec![0.0; n + 1],
        }
    }

    /// Interface fluxes of the last step, faces 0..=n (0 and n on the boundary).
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Writes the new v into `out`. Flux arguments are w = v + lift with ghost values
    /// `flux_ghosts`; the diffusion stencil sees `diff_ghosts` outside the domain.
    #[allow(clippy::too_many_arguments)]
    pub fn advance(
        &mut self,
        v: &[f64],
        lift: &[f64],
        flux_ghosts: (f64, f64),
        diff_ghosts: (f64, f64),
        dt: f64,
        increments: &[f64],
        out: &mut [f64],
    ) {
        let n = v.len();
        for i in 0..n {
            self.w[i] = v[i] + lift[i];
        }
        let nf = |a: f64, b: f64| numerical_flux(&self.flux, a, b, self.scheme, self.alpha);
        self.faces[0] = nf(flux_ghosts.0, self.w[0]);
        for j in 1..n {
            self.faces[j] = nf(self.w[j - 1], self.w[j]);
        }
        self.faces[n] = nf(self.w[n - 1], flux_ghosts.1);
        let lam = dt / self.dx;
        let r = self.eps * dt / (self.dx * self.dx);
        for i in 0..n {
            let left = if i == 0 { diff_ghosts.0 } else { v[i - 1] };
            let right = if i == n - 1 { diff_ghosts.1 } else { v[i + 1] };
            out[i] = v[i] - lam * (self.faces[i + 1] - self.faces[i]) + r * (left - 2.0 * v[i] + right);
        }
        self.table.add_increment(&self.w, increments, out);
    }
}

fn speed_cap(cfg: &SolverConfig, flux: &FluxModel, b: &BoundaryData) -> Result<SpeedCap> {
    SpeedCap::new(flux, cfg.xi_grid.level(), b.sup_norm())
}

fn check_path(
    grid: &Grid,
    cfg: &SolverConfig,
    flux: &FluxModel,
    b: &BoundaryData,
    noise: &NoiseModel,
    path: &WienerPath,
) -> Result<()> {
    if path.n_modes() != noise.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "Wiener path has {} modes, noise model has {}",
            path.n_modes(),
            noise.n_modes()
        )));
    }
    let limit = cfl_dt(grid, &speed_cap(cfg, flux, b)?, cfg.eps, cfg.cfl)?;
    if path.dt() > limit * (1.0 + 1e-9) {
        return Err(Error::Stability(format!("path dt = {} exceeds the CFL limit {limit}", path.dt())));
    }
    let horizon = path.dt() * path.n_steps() as f64;
    if (horizon - cfg.t_end).abs() > 1e-9 * cfg.t_end {
        return Err(Error::InvalidArgument(format!(
            "path covers [0, {horizon}], configuration asks for [0, {}]",
            cfg.t_end
        )));
    }
    Ok(())
}

/// Lift matching a path's time grid.
pub fn lift_for(
    grid: &Arc<Grid>,
    cfg: &SolverConfig,
    b: &BoundaryData,
    dt: f64,
    n_steps: usize,
) -> Result<LiftTrajectory> {
    solve_lift(grid, b, cfg.eps, dt, n_steps, cfg.lift_scheme)
}

pub fn run(
    grid: &Arc<Grid>,
    cfg: &SolverConfig,
    u0: &Field,
    b: &BoundaryData,
    flux: &FluxModel,
    noise: &NoiseModel,
    path: &WienerPath,
) -> Result<Trajectory> {
    cfg.validate()?;
    let lift = lift_for(grid, cfg, b, path.dt(), path.n_steps())?;
    run_with_lift(grid, cfg, u0, b, &lift, flux, noise, path)
}

/// [`run`] with a precomputed lift, shared across the paths of an ensemble.
#[allow(clippy::too_many_arguments)]
pub fn run_with_lift(
    grid: &Arc<Grid>,
    cfg: &SolverConfig,
    u0: &Field,
    b: &BoundaryData,
    lift: &LiftTrajectory,
    flux: &FluxModel,
    noise: &NoiseModel,
    path: &WienerPath,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_path(grid, cfg, flux, b, noise, path)?;
    if u0.values().len() != grid.n_cells() {
        return Err(Error::InvalidArgument("initial field does not match the grid".into()));
    }
    let n_steps = path.n_steps();
    let dt = path.dt();
    if lift.n_steps() != n_steps || (lift.dt() - dt).abs() > 1e-15 * dt || lift.eps() != cfg.eps {
        return Err(Error::InvalidArgument("lift does not match the path time grid or viscosity".into()));
    }
    let alpha = speed_cap(cfg, flux, b)?.m_n;
    let mut stepper = Stepper::new(grid, cfg.eps, cfg.scheme, flux.clone(), noise, alpha);
    let n = grid.n_cells();
    let dx = grid.dx();
    let zeros = vec![0.0; n];
    let lift_at = |step: usize| -> &[f64] {
        match cfg.boundary_mode {
            BoundaryMode::Shifted => lift.field(step).values(),
            BoundaryMode::Direct => &zeros,
        }
    };

    let mut v = u0.values().to_vec();
    let mut next = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut hist = KineticHistogram::new(cfg.xi_grid.clone());
    let mut grad_acc: BTreeMap<u32, f64> = ENERGY_POWERS.iter().map(|&p| (p, 0.0)).collect();
    let mut sup_lp: BTreeMap<u32, f64> = BTreeMap::new();
    let n_snap = n_steps / cfg.record_every + 2;
    let mut times = Vec::with_capacity(n_snap);
    let mut u_snaps = Vec::with_capacity(n_snap);
    let mut v_snaps = Vec::with_capacity(n_snap);
    let mut energy = Vec::with_capacity(n_snap);

    for step in 0..=n_steps {
        let l = lift_at(step);
        for i in 0..n {
            u[i] = v[i] + l[i];
        }
        for &p in &ENERGY_POWERS {
            let e = lp_power(&v, dx, p);
            let s = sup_lp.entry(p).or_insert(e);
            *s = s.max(e);
        }
        if step % cfg.record_every == 0 || step == n_steps {
            let t = step as f64 * dt;
            times.push(t);
            u_snaps.push(Field::new(grid.clone(), u.clone())?);
            v_snaps.push(Field::new(grid.clone(), v.clone())?);
            energy.push(EnergyRecord {
                time: t,
                lp_norms: ENERGY_POWERS.iter().map(|&p| (p, lp_power(&v, dx, p))).collect(),
                dissipation: grad_acc.iter().map(|(&p, &g)| (p, cfg.eps * g)).collect(),
            });
        }
        if step == n_steps {
            break;
        }
        hist.accumulate_defect(&u, dx, cfg.eps, dt);
        if cfg.eps > 0.0 {
            for (&p, g) in grad_acc.iter_mut() {
                *g += dissipation_density(&v, dx, p) * dt;
            }
        }
        let ghosts = lift.ghosts(step);
        let diff_ghosts = match cfg.boundary_mode {
            BoundaryMode::Shifted => (0.0, 0.0),
            BoundaryMode::Direct => ghosts,
        };
        stepper.advance(&v, l, ghosts, diff_ghosts, dt, path.step(step), &mut next);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowUp { step: step + 1, time: (step + 1) as f64 * dt });
        }
        std::mem::swap(&mut v, &mut next);
    }

    Ok(Trajectory {
        grid: grid.clone(),
        times,
        u_snapshots: u_snaps,
        v_snapshots: v_snaps,
        defect_hist: hist,
        energy,
        sup_lp,
        dt,
        n_steps,
    })
}
