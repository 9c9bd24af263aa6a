//! Ensemble kinetic diagnostics: tail functions, kinetic-measure mass at large |ξ|,
//! boundary traces and truncated defect measures.

use serde::{Deserialize, Serialize};

use super::ensemble::Scenario;
use super::stats::mean;
use crate::data::ProblemData;
use crate::grid::Side;
use crate::kinetic::{
    bln_values, boundary_trace, defect_measure, tail_decay_report, young_moment, young_tail, BoundaryTrace,
    DefectMeasure, KineticHistogram, TailReport,
};
use crate::{Error, Result};

/// Trace, defect densities and boundary inequality on one side, path-averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub side: Side,
    pub layer_width: f64,
    pub trace: BoundaryTrace,
    pub defect: DefectMeasure,
    /// M_N f^b + a·n f̄₊ per snapshot and ξ-bin.
    pub bln: Vec<Vec<f64>>,
    pub bln_min: f64,
    pub plus_min: f64,
    /// max over snapshots of |m̄⁺_N(t, N)|.
    pub plus_at_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticReport {
    /// max(sup|u₀|, sup|u_b|, 1)
    pub n0: f64,
    pub xi_edges: Vec<f64>,
    pub mu_m: Vec<f64>,
    pub mu_nu: Vec<f64>,
    pub mu_m_slope: Vec<f64>,
    pub mu_nu_slope: Vec<f64>,
    /// E m(ℝ)
    pub total_mass: f64,
    /// (R, E m(|ξ| ≥ R)) for R = N₀, 2N₀, 4N₀.
    pub mass_beyond: Vec<(f64, f64)>,
    /// E ∫∫|u|^p dx dt for p = 2, bounding ξ^p μ_ν(ξ) for ξ > 0.
    pub moment2: f64,
    pub tail: TailReport,
    pub sides: Vec<SideReport>,
    pub n_paths: usize,
    pub n_aborted: usize,
}

fn is_nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

impl KineticReport {
    pub fn tails_nonincreasing(&self) -> bool {
        is_nonincreasing(&self.mu_m) && is_nonincreasing(&self.mu_nu)
    }

    /// E m(|ξ| ≥ R) strictly decreasing over the R levels, or already zero.
    pub fn mass_beyond_decreasing(&self) -> bool {
        self.mass_beyond.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == 0.0)
    }

    /// E m(|ξ| ≥ 4N₀) / E m(ℝ)
    pub fn far_mass_fraction(&self) -> f64 {
        let far = self.mass_beyond.last().map_or(0.0, |m| m.1);
        if self.total_mass == 0.0 {
            0.0
        } else {
            far / self.total_mass
        }
    }

    /// sup over ξ > 0 of ξ² μ_ν(ξ), to compare with [`Self::moment2`].
    pub fn weighted_nu_tail(&self) -> f64 {
        self.xi_edges.iter().zip(&self.mu_nu).filter(|(x, _)| **x > 0.0).map(|(x, m)| x * x * m).fold(0.0, f64::max)
    }
}

fn central_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|j| {
            let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
            (y[b] - y[a]) / ((b - a) as f64 * h)
        })
        .collect()
}

struct PathKinetic {
    hist: KineticHistogram,
    young: Vec<f64>,
    moment2: f64,
    traces: Vec<BoundaryTrace>,
}

/// Runs the ensemble and computes all kinetic diagnostics with trace layers of
/// `layer_width` on both sides.
pub fn kinetic_experiment(sc: &Scenario, data: &ProblemData, layer_width: f64) -> Result<KineticReport> {
    let eps = sc.solver.eps;
    let tg = sc.time_grid(&[eps], data.boundary.sup_bound())?;
    let prep = sc.prepare(data, &tg, eps)?;
    let xi = sc.solver.xi_grid.clone();
    let edges = xi.edges();
    let sides = [Side::Left, Side::Right];

    let (rows, n_aborted) = sc.map_paths(|p| {
        let tr = sc.run(&prep, &sc.path(p, &tg)?)?;
        Ok(PathKinetic {
            young: edges.iter().map(|&e| young_tail(&tr, e)).collect(),
            moment2: young_moment(&tr, 2),
            traces: sides.iter().map(|&s| boundary_trace(&tr, s, layer_width, &xi)).collect::<Result<_>>()?,
            hist: tr.defect_hist().clone(),
        })
    })?;
    if rows.is_empty() {
        return Err(Error::Precondition("every path blew up".into()));
    }

    let hists: Vec<KineticHistogram> = rows.iter().map(|r| r.hist.clone()).collect();
    let mu_m: Vec<f64> = edges.iter().map(|&e| crate::kinetic::mu_m(&hists, e)).collect::<Result<_>>()?;
    let mu_nu: Vec<f64> =
        (0..edges.len()).map(|j| mean(&rows.iter().map(|r| r.young[j]).collect::<Vec<_>>())).collect();
    let h = xi.width();
    let n0 = data.sup_bound().max(1.0);
    let mass_beyond = [1.0, 2.0, 4.0]
        .iter()
        .map(|k| {
            let r = k * n0;
            (r, mean(&hists.iter().map(|hh| hh.mass_beyond(r)).collect::<Vec<_>>()))
        })
        .collect();
    let total_mass = mean(&hists.iter().map(KineticHistogram::total).collect::<Vec<_>>());

    let interp = |y: &[f64], x: f64| {
        let s = ((x - edges[0]) / h).clamp(0.0, (edges.len() - 1) as f64);
        let j = (s.floor() as usize).min(edges.len() - 2);
        let w = s - j as f64;
        (1.0 - w) * y[j] + w * y[j + 1]
    };
    let levels: Vec<f64> = (1..=8).map(|k| k as f64 * xi.level() / 8.0 - h).collect();
    let tail = tail_decay_report(|x| interp(&mu_nu, x), &levels, h);

    let mut side_reports = Vec::with_capacity(2);
    for (k, &side) in sides.iter().enumerate() {
        let per_path: Vec<BoundaryTrace> = rows.iter().map(|r| r.traces[k].clone()).collect();
        let trace = BoundaryTrace::average(&per_path)?;
        let defect = defect_measure(&trace, &prep.b, &sc.flux, xi.level())?;
        let bln = bln_values(&trace, &prep.b, &sc.flux, xi.level())?;
        let bln_min = bln.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        side_reports.push(SideReport {
            side,
            layer_width,
            plus_min: defect.min_plus(),
            plus_at_n: defect.m_bar_plus.iter().map(|r| r.last().unwrap().abs()).fold(0.0, f64::max),
            trace,
            defect,
            bln,
            bln_min,
        });
    }

    Ok(KineticReport {
        n0,
        mu_m_slope: central_slopes(&mu_m, h),
        mu_nu_slope: central_slopes(&mu_nu, h),
        xi_edges: edges,
        mu_m,
        mu_nu,
        total_mass,
        mass_beyond,
        moment2: mean(&rows.iter().map(|r| r.moment2).collect::<Vec<_>>()),
        tail,
        sides: side_reports,
        n_paths: sc.n_paths,
        n_aborted,
    })
}
