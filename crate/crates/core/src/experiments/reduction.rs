//! Indicator property of the kinetic function and the cross-path spread of f₊.
//!
//! For one path f₊(u, ξ) = 1_{u>ξ} only takes the values 0 and 1, so f₊(1 − f₊) vanishes
//! identically. The ensemble gap ∫∫ f̄(1 − f̄) dξ dx, with f̄ the path average at matched
//! (t, x, ξ), is then the cross-path variance of the indicator: it is zero for
//! deterministic ensembles and measures the spread of the solution law otherwise.

use serde::{Deserialize, Serialize};

use super::ensemble::Scenario;
use crate::data::ProblemData;
use crate::kinetic::kinetic_function;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub eps: f64,
    pub times: Vec<f64>,
    /// dx·h·Σ_{x,ξ} f̄(1 − f̄)
    pub gap: Vec<f64>,
    /// dx·h·Σ_{x,ξ} Var_paths(f₊) with the 1/n normalization.
    pub variance: Vec<f64>,
    /// max over paths, snapshots, cells and ξ of |f₊(1 − f₊)|.
    pub max_path_product: f64,
    pub n_paths: usize,
    pub n_aborted: usize,
}

impl ReductionReport {
    pub fn indicator_exact(&self) -> bool {
        self.max_path_product == 0.0
    }

    /// E f (1 − E f) ≥ Var f on every snapshot, up to rounding.
    pub fn gap_dominates_variance(&self) -> bool {
        self.gap.iter().zip(&self.variance).all(|(g, v)| *g >= v - 1e-12 * (1.0 + v.abs()))
    }

    pub fn max_gap(&self) -> f64 {
        self.gap.iter().copied().fold(0.0, f64::max)
    }
}

pub fn reduction_experiment(sc: &Scenario, data: &ProblemData) -> Result<ReductionReport> {
    if sc.n_paths < 2 {
        return Err(Error::InvalidArgument(format!("reduction needs at least 2 paths, got {}", sc.n_paths)));
    }
    let eps = sc.solver.eps;
    let tg = sc.time_grid(&[eps], data.boundary.sup_bound())?;
    let prep = sc.prepare(data, &tg, eps)?;
    let xi = sc.solver.xi_grid.clone();
    let centers = xi.centers();
    let n_cells = sc.grid.n_cells();
    let n_times = tg.snapshot_times().len();

    let (rows, n_aborted) = sc.map_paths(|p| {
        let traj = sc.run(&prep, &sc.path(p, &tg)?)?;
        Ok(traj.u_snapshots().iter().map(|u| u.values().to_vec()).collect::<Vec<_>>())
    })?;
    if rows.is_empty() {
        return Err(Error::Precondition("every path blew up".into()));
    }

    // indicator counts at every (t, x, ξ); integer sums do not depend on path order
    let n = rows.len() as f64;
    let mut counts = vec![0u32; n_times * n_cells * centers.len()];
    let mut max_path_product: f64 = 0.0;
    for snaps in &rows {
        for (ti, u) in snaps.iter().enumerate() {
            for (ix, &v) in u.iter().enumerate() {
                let base = (ti * n_cells + ix) * centers.len();
                for (j, &c) in centers.iter().enumerate() {
                    let f = kinetic_function(v, c);
                    max_path_product = max_path_product.max((f * (1.0 - f)).abs());
                    counts[base + j] += f as u32;
                }
            }
        }
    }
    let cell = sc.grid.dx() * xi.width();
    let block = n_cells * centers.len();
    let mut gap = Vec::with_capacity(n_times);
    let mut variance = Vec::with_capacity(n_times);
    for ti in 0..n_times {
        let mut g = 0.0;
        let mut v = 0.0;
        for &c in &counts[ti * block..(ti + 1) * block] {
            let m = c as f64 / n;
            g += m * (1.0 - m);
            // (1/n) Σ (f − m)² for 0/1 samples
            v += (c as f64 * (1.0 - m) * (1.0 - m) + (n - c as f64) * m * m) / n;
        }
        gap.push(cell * g);
        variance.push(cell * v);
    }
    Ok(ReductionReport {
        eps,
        times: tg.snapshot_times(),
        gap,
        variance,
        max_path_product,
        n_paths: sc.n_paths,
        n_aborted,
    })
}

/// Reduction reports over a list of viscosities, on the same path indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSweep {
    pub reports: Vec<ReductionReport>,
}

impl ReductionSweep {
    /// (ε, gap at the final time, max over t of the gap) per viscosity.
    pub fn gap_by_eps(&self) -> Vec<(f64, f64, f64)> {
        self.reports.iter().map(|r| (r.eps, *r.gap.last().unwrap_or(&0.0), r.max_gap())).collect()
    }

    /// Report of the smallest viscosity.
    pub fn finest(&self) -> &ReductionReport {
        self.reports.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).expect("nonempty sweep")
    }

    pub fn indicator_exact(&self) -> bool {
        self.reports.iter().all(ReductionReport::indicator_exact)
    }
}

pub fn reduction_over_eps(sc: &Scenario, data: &ProblemData, eps_list: &[f64]) -> Result<ReductionSweep> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty viscosity list".into()));
    }
    let reports = eps_list
        .iter()
        .map(|&e| {
            let mut s = sc.clone();
            s.solver.eps = e;
            reduction_experiment(&s, data)
        })
        .collect::<Result<_>>()?;
    Ok(ReductionSweep { reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ensemble::standard_burgers;
    use crate::noise::NoiseModel;

    #[test]
    fn zero_noise_ensemble_has_no_gap() {
        let (mut sc, data) = standard_burgers(40, 0.02, 5).unwrap();
        sc.noise = NoiseModel::zero();
        sc.solver.k = 0;
        let r = reduction_experiment(&sc, &data).unwrap();
        assert!(r.indicator_exact());
        assert!(r.gap.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn noisy_ensemble_spreads_and_matches_variance() {
        let (sc, data) = standard_burgers(40, 0.02, 16).unwrap();
        let r = reduction_experiment(&sc, &data).unwrap();
        assert!(r.indicator_exact());
        assert_eq!(r.gap[0], 0.0);
        assert!(r.max_gap() > 0.0);
        assert!(r.gap_dominates_variance());
        for (g, v) in r.gap.iter().zip(&r.variance) {
            assert!((g - v).abs() <= 1e-12 * (1.0 + g));
        }
    }

    #[test]
    fn sweep_reports_each_viscosity() {
        let (sc, data) = standard_burgers(30, 0.02, 6).unwrap();
        let s = reduction_over_eps(&sc, &data, &[0.1, 0.02]).unwrap();
        assert!(s.indicator_exact());
        assert_eq!(s.finest().eps, 0.02);
        assert_eq!(s.finest(), &reduction_experiment(&sc, &data).unwrap());
        assert_eq!(s.gap_by_eps().len(), 2);
        assert!(reduction_over_eps(&sc, &data, &[]).is_err());
    }
}
