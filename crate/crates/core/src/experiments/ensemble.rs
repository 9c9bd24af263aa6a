//! Shared setup of an ensemble and the parallel map over path indices.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoundaryProfile, BoundarySpec, InitialProfile, ProblemData};
use crate::flux::{FluxModel, SpeedCap};
use crate::grid::{make_grid, BoundaryData, Field, Grid};
use crate::kinetic::XiGrid;
use crate::lift::LiftTrajectory;
use crate::noise::{sample_path_stream, NoiseModel, WienerPath};
use crate::solver::{cfl_dt, lift_for, run_with_lift, time_grid, SolverConfig, Trajectory};
use crate::{Error, Result};

/// Default number of snapshots per run.
pub const DEFAULT_SNAPSHOTS: usize = 50;

/// Grid, flux, noise and solver settings shared by every path of an experiment.
/// `solver.seed` is the master seed; path p draws its increments from stream p.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Arc<Grid>,
    pub flux: FluxModel,
    pub noise: NoiseModel,
    pub solver: SolverConfig,
    pub n_paths: usize,
    /// Worker threads; 0 lets the pool choose.
    pub workers: usize,
    pub snapshots: usize,
}

/// Data of one problem on a fixed time grid, with its lift.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub u0: Field,
    pub b: BoundaryData,
    pub lift: LiftTrajectory,
    pub cfg: SolverConfig,
}

/// Time grid shared by all runs of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n_steps: usize,
    pub dt: f64,
    pub record_every: usize,
}

impl TimeGrid {
    /// Times at which runs on this grid record snapshots.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = (0..=self.n_steps).step_by(self.record_every).map(|n| n as f64 * self.dt).collect();
        if !self.n_steps.is_multiple_of(self.record_every) {
            t.push(self.n_steps as f64 * self.dt);
        }
        t
    }

    /// Step index of each snapshot.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let mut s: Vec<usize> = (0..=self.n_steps).step_by(self.record_every).collect();
        if !self.n_steps.is_multiple_of(self.record_every) {
            s.push(self.n_steps);
        }
        s
    }
}

impl Scenario {
    pub fn new(grid: Arc<Grid>, flux: FluxModel, noise: NoiseModel, solver: SolverConfig) -> Self {
        Self { grid, flux, noise, solver, n_paths: 1, workers: 0, snapshots: DEFAULT_SNAPSHOTS }
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn master_seed(&self) -> u64 {
        self.solver.seed
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.noise.n_modes() != self.solver.k {
            return Err(Error::InvalidArgument(format!(
                "solver expects K = {} noise modes, noise model has {}",
                self.solver.k,
                self.noise.n_modes()
            )));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidArgument("need at least one snapshot".into()));
        }
        Ok(())
    }

    /// Largest stable step for every viscosity in `eps` and boundary data bounded by
    /// `boundary_sup`, rounded down to divide t_end.
    pub fn time_grid(&self, eps: &[f64], boundary_sup: f64) -> Result<TimeGrid> {
        self.validate()?;
        let cap = SpeedCap::new(&self.flux, self.solver.xi_grid.level(), boundary_sup)?;
        let mut dt_max = f64::INFINITY;
        for &e in eps {
            dt_max = dt_max.min(cfl_dt(&self.grid, &cap, e, self.solver.cfl)?);
        }
        let (n_steps, dt) = time_grid(self.solver.t_end, dt_max)?;
        Ok(TimeGrid { n_steps, dt, record_every: n_steps.div_ceil(self.snapshots).max(1) })
    }

    pub fn prepare(&self, data: &ProblemData, tg: &TimeGrid, eps: f64) -> Result<Prepared> {
        let mut cfg = self.solver.clone();
        cfg.eps = eps;
        cfg.record_every = tg.record_every;
        let u0 = data.initial.field(&self.grid)?;
        let b = data.boundary.sample(tg.dt, tg.n_steps)?;
        let lift = lift_for(&self.grid, &cfg, &b, tg.dt, tg.n_steps)?;
        Ok(Prepared { u0, b, lift, cfg })
    }

    pub fn path(&self, p: usize, tg: &TimeGrid) -> Result<WienerPath> {
        sample_path_stream(self.master_seed(), p as u64, tg.n_steps, tg.dt, self.noise.n_modes())
    }

    pub fn run(&self, prep: &Prepared, path: &WienerPath) -> Result<Trajectory> {
        run_with_lift(&self.grid, &prep.cfg, &prep.u0, &prep.b, &prep.lift, &self.flux, &self.noise, path)
    }

    pub fn map_paths<T, F>(&self, f: F) -> Result<(Vec<T>, usize)>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        map_paths(self.n_paths, self.workers, f)
    }
}

/// Runs `f` on path indices 0..n_paths with `workers` threads and returns the results in
/// index order, with blown-up paths removed and counted.
pub fn map_paths<T, F>(n_paths: usize, workers: usize, f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| (0..n_paths).into_par_iter().map(&f).collect());
    let mut done = Vec::with_capacity(n_paths);
    let mut aborted = 0;
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => done.push(v),
            Err(Error::BlowUp { step, time }) => {
                log::warn!("path {p} blew up at step {step} (t = {time})");
                aborted += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((done, aborted))
}

/// Burgers on (0, 1), u₀ = sin(πx), zero data, linear multiplicative noise σ = 0.25 with
/// K = 8 modes, T = 0.5, ξ-grid on [−4, 4] with 256 bins.
pub fn standard_burgers(n_cells: usize, eps: f64, n_paths: usize) -> Result<(Scenario, ProblemData)> {
    let data = ProblemData::new(InitialProfile::sine(1.0, 1), BoundarySpec::constant(0.0, 0.0));
    let xi = XiGrid::new(XiGrid::default_level(data.sup_bound()), 256)?;
    let solver = SolverConfig::new(eps, 0.5, xi);
    let sc = Scenario::new(
        make_grid(0.0, 1.0, n_cells)?,
        FluxModel::burgers(),
        NoiseModel::linear_multiplicative(0.25, 8),
        solver,
    )
    .with_paths(n_paths);
    Ok((sc, data))
}

/// The two data pairs of the contraction study: initial data differing in the interior
/// under zero boundary data, and equal initial data under differing left boundary data.
pub fn contraction_pairs() -> [(ProblemData, ProblemData); 2] {
    let zero = BoundarySpec::constant(0.0, 0.0);
    [
        (ProblemData::new(InitialProfile::sine(0.5, 1), zero), ProblemData::new(InitialProfile::sine(1.0, 1), zero)),
        (
            ProblemData::new(InitialProfile::sine(1.0, 1), zero),
            ProblemData::new(
                InitialProfile::sine(1.0, 1),
                BoundarySpec {
                    left: BoundaryProfile::Ramp { value: 0.5, t_ramp: 0.1 },
                    right: BoundaryProfile::Constant { value: 0.0 },
                },
            ),
        ),
    ]
}

/// Flux and noise models of the contraction matrix.
pub fn contraction_matrix() -> Vec<(FluxModel, NoiseModel)> {
    let fluxes = [FluxModel::burgers(), FluxModel::linear(1.0), FluxModel::cubic()];
    let noises = [
        NoiseModel::additive(&[0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125]),
        NoiseModel::linear_multiplicative(0.25, 8),
        NoiseModel::affine_multiplicative(0.25, 8, 0.5),
    ];
    fluxes.iter().flat_map(|f| noises.iter().map(move |n| (f.clone(), n.clone()))).collect()
}
