//! Vanishing-viscosity sweep under coupled noise, and energy statistics per ε.

use serde::{Deserialize, Serialize};

use super::ensemble::{Scenario, TimeGrid};
use super::stats::{column_estimates, ls_slope, spearman, spearman_p_negative, Estimate};
use crate::data::ProblemData;
use crate::grid::l1_distance;
use crate::kinetic::snapshot_weights;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub eps: f64,
    /// E sup_t ‖v‖₂²
    pub sup_l2: Estimate,
    /// E sup_t ‖v‖₄⁴
    pub sup_l4: Estimate,
    /// E ε∫∫|∂ₓv|²
    pub dissipation: Estimate,
    /// E (ε∫∫|∂ₓv|²)²
    pub dissipation_sq: Estimate,
    pub lift_sup_u: f64,
    pub lift_sup_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub eps_list: Vec<f64>,
    /// E ‖u^{ε_k} − u^{ε_{k+1}}‖_{L¹(Q)}
    pub cauchy_l1: Vec<f64>,
    pub cauchy_ci: Vec<f64>,
    pub energy_rows: Vec<EnergyRow>,
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub n_aborted: usize,
}

impl SweepReport {
    /// c_{k+1} ≤ c_k within the sum of both confidence half-widths.
    pub fn cauchy_nonincreasing(&self) -> bool {
        (1..self.cauchy_l1.len())
            .all(|k| self.cauchy_l1[k] <= self.cauchy_l1[k - 1] + self.cauchy_ci[k] + self.cauchy_ci[k - 1])
    }

    /// max/min of E sup_t ‖v‖₂² over the sweep.
    pub fn energy_spread(&self) -> f64 {
        let m: Vec<f64> = self.energy_rows.iter().map(|r| r.sup_l2.mean).collect();
        let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// Spearman correlation of E sup_t ‖v‖₂² against ε, with the exact one-sided p-value
    /// for a negative association (growth as ε decreases).
    pub fn energy_trend(&self) -> (f64, Option<f64>) {
        let y: Vec<f64> = self.energy_rows.iter().map(|r| r.sup_l2.mean).collect();
        (spearman(&self.eps_list, &y), spearman_p_negative(&self.eps_list, &y))
    }
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty viscosity list".into()));
    }
    if eps_list.iter().any(|e| !(*e >= 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "viscosities must be nonnegative and strictly decreasing: {eps_list:?}"
        )));
    }
    Ok(())
}

/// One time grid for every ε: the step is the smallest of the per-ε stability limits,
/// so all runs of a path see the same increments.
pub fn shared_time_grid(sc: &Scenario, data: &ProblemData, eps_list: &[f64]) -> Result<TimeGrid> {
    check_eps_list(eps_list)?;
    sc.time_grid(eps_list, data.boundary.sup_bound())
}

struct PathSweep {
    cauchy: Vec<f64>,
    sup_l2: Vec<f64>,
    sup_l4: Vec<f64>,
    dissipation: Vec<f64>,
}

pub fn viscosity_sweep(sc: &Scenario, data: &ProblemData, eps_list: &[f64]) -> Result<SweepReport> {
    let tg = shared_time_grid(sc, data, eps_list)?;
    let preps = eps_list.iter().map(|&e| sc.prepare(data, &tg, e)).collect::<Result<Vec<_>>>()?;
    let dx = sc.grid.dx();
    let weights = snapshot_weights(&tg.snapshot_times());

    let (rows, n_aborted) = sc.map_paths(|p| {
        let path = sc.path(p, &tg)?;
        let mut out = PathSweep { cauchy: Vec::new(), sup_l2: Vec::new(), sup_l4: Vec::new(), dissipation: Vec::new() };
        let mut prev: Option<Vec<Vec<f64>>> = None;
        for prep in &preps {
            let tr = sc.run(prep, &path)?;
            let snaps: Vec<Vec<f64>> = tr.u_snapshots().iter().map(|u| u.values().to_vec()).collect();
            if let Some(prev) = &prev {
                let d = weights.iter().zip(prev.iter().zip(&snaps)).map(|(w, (a, b))| w * l1_distance(dx, a, b)).sum();
                out.cauchy.push(d);
            }
            out.sup_l2.push(tr.sup_lp(2).unwrap_or(f64::NAN));
            out.sup_l4.push(tr.sup_lp(4).unwrap_or(f64::NAN));
            out.dissipation.push(tr.energy().last().and_then(|e| e.dissipation.get(&2).copied()).unwrap_or(0.0));
            prev = Some(snaps);
        }
        Ok(out)
    })?;
    if rows.is_empty() {
        return Err(Error::Precondition("every path blew up".into()));
    }

    let cauchy = column_estimates(&rows.iter().map(|r| r.cauchy.clone()).collect::<Vec<_>>());
    let col = |f: &dyn Fn(&PathSweep) -> Vec<f64>| column_estimates(&rows.iter().map(f).collect::<Vec<_>>());
    let l2 = col(&|r| r.sup_l2.clone());
    let l4 = col(&|r| r.sup_l4.clone());
    let dis = col(&|r| r.dissipation.clone());
    let dis_sq = col(&|r| r.dissipation.iter().map(|d| d * d).collect());
    let energy_rows = eps_list
        .iter()
        .enumerate()
        .map(|(k, &eps)| EnergyRow {
            eps,
            sup_l2: l2[k],
            sup_l4: l4[k],
            dissipation: dis[k],
            dissipation_sq: dis_sq[k],
            lift_sup_u: preps[k].lift.bounds().sup_u,
            lift_sup_dt: preps[k].lift.bounds().sup_dt,
        })
        .collect();

    Ok(SweepReport {
        eps_list: eps_list.to_vec(),
        cauchy_l1: cauchy.iter().map(|e| e.mean).collect(),
        cauchy_ci: cauchy.iter().map(|e| e.ci).collect(),
        energy_rows,
        dt: tg.dt,
        n_steps: tg.n_steps,
        n_paths: sc.n_paths,
        n_aborted,
    })
}

/// Distance of viscous solutions to the inviscid one at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub eps_list: Vec<f64>,
    /// ‖u^ε(T) − u⁰(T)‖_{L¹}
    pub errors: Vec<f64>,
    /// Least-squares slope of log error against log ε.
    pub order: f64,
}

/// Runs the first path of `sc` at every ε and at ε = 0 on one shared time grid and
/// compares final states; meant for zero-noise scenarios.
pub fn viscous_rate(sc: &Scenario, data: &ProblemData, eps_list: &[f64]) -> Result<RateReport> {
    check_eps_list(eps_list)?;
    if eps_list.last() == Some(&0.0) {
        return Err(Error::InvalidArgument("the reference run is ε = 0; omit it from the list".into()));
    }
    let mut all = eps_list.to_vec();
    all.push(0.0);
    let tg = shared_time_grid(sc, data, &all)?;
    let path = sc.path(0, &tg)?;
    let finals = all
        .iter()
        .map(|&e| Ok(sc.run(&sc.prepare(data, &tg, e)?, &path)?.final_u().values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let reference = finals.last().expect("reference run");
    let dx = sc.grid.dx();
    let errors: Vec<f64> = finals[..eps_list.len()].iter().map(|u| l1_distance(dx, u, reference)).collect();
    let lx: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(RateReport { eps_list: eps_list.to_vec(), order: ls_slope(&lx, &ly), errors })
}
