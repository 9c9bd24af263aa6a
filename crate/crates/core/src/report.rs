//! Artifact writers. Every file starts with the code version and the resolved
//! configuration, so it can be regenerated from its own header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::experiments::{ContractionReport, KineticReport, ReductionReport, SweepReport, ValidationReport};
use crate::solver::Trajectory;
use crate::{Result, VERSION};

/// Shortest round-trip representation in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub fn header_line(config: &Value) -> String {
    format!("# version={VERSION} config={config}")
}

fn io_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(e.to_string())
}

pub fn csv_string(config: &Value, columns: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut buf = header_line(config).into_bytes();
    buf.push(b'\n');
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(columns).map_err(io_err)?;
    for r in rows {
        w.write_record(r.iter().map(|x| fmt_f64(*x))).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| crate::Error::Io(e.to_string()))
}

pub fn write_csv(path: &Path, config: &Value, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    fs::write(path, csv_string(config, columns, rows)?)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Snapshot dump: a key=value header, then one line `t,u_1,…,u_n` per snapshot.
pub fn write_snapshots(path: &Path, traj: &Trajectory, config: &Value) -> Result<()> {
    let g = traj.grid();
    let mut f = fs::File::create(path)?;
    writeln!(
        f,
        "# version={VERSION} x_left={} x_right={} n_cells={} dt={} n_steps={} config={config}",
        fmt_f64(g.x_left()),
        fmt_f64(g.x_right()),
        g.n_cells(),
        fmt_f64(traj.dt()),
        traj.n_steps()
    )?;
    for (t, u) in traj.times().iter().zip(traj.u_snapshots()) {
        let mut line = fmt_f64(*t);
        for v in u.values() {
            line.push(',');
            line.push_str(&fmt_f64(*v));
        }
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// One acceptance predicate evaluated by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Predicate {
    pub fn new(name: &str, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value, threshold, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub experiment: String,
    pub passed: bool,
    pub predicates: Vec<Predicate>,
    pub master_seed: u64,
    pub n_paths: usize,
    pub artifacts: Vec<String>,
    pub config: Value,
}

impl Summary {
    pub fn new(experiment: &str, predicates: Vec<Predicate>, master_seed: u64, n_paths: usize, config: Value) -> Self {
        Self {
            version: VERSION.to_string(),
            experiment: experiment.into(),
            passed: predicates.iter().all(|p| p.passed),
            predicates,
            master_seed,
            n_paths,
            artifacts: Vec::new(),
            config,
        }
    }
}

pub fn contraction_rows(r: &ContractionReport) -> Vec<Vec<f64>> {
    (0..r.times.len())
        .map(|i| {
            vec![
                r.times[i],
                r.lhs[i],
                r.ci_halfwidth[i],
                r.rhs_init,
                r.rhs_boundary[i],
                r.bound(i) + r.ci_halfwidth[i] + r.margin,
            ]
        })
        .collect()
}

pub const CONTRACTION_COLUMNS: [&str; 6] = ["t", "lhs", "ci95", "rhs_init", "rhs_boundary", "bound_with_allowance"];

pub fn reduction_rows(r: &ReductionReport) -> Vec<Vec<f64>> {
    (0..r.times.len()).map(|i| vec![r.times[i], r.gap[i], r.variance[i]]).collect()
}

pub const REDUCTION_COLUMNS: [&str; 3] = ["t", "gap", "variance"];

pub fn sweep_rows(r: &SweepReport) -> Vec<Vec<f64>> {
    r.energy_rows
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (c, ci) =
                if k + 1 < r.eps_list.len() { (r.cauchy_l1[k], r.cauchy_ci[k]) } else { (f64::NAN, f64::NAN) };
            vec![
                e.eps,
                c,
                ci,
                e.sup_l2.mean,
                e.sup_l2.ci,
                e.sup_l4.mean,
                e.sup_l4.ci,
                e.dissipation.mean,
                e.dissipation_sq.mean,
                e.lift_sup_u,
                e.lift_sup_dt,
            ]
        })
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "eps",
    "cauchy_l1_to_next",
    "cauchy_ci95",
    "sup_l2",
    "sup_l2_ci95",
    "sup_l4",
    "sup_l4_ci95",
    "dissipation",
    "dissipation_sq",
    "lift_sup_u",
    "lift_sup_dt",
];

pub fn tail_rows(r: &KineticReport) -> Vec<Vec<f64>> {
    (0..r.xi_edges.len())
        .map(|j| vec![r.xi_edges[j], r.mu_m[j], r.mu_nu[j], r.mu_m_slope[j], r.mu_nu_slope[j]])
        .collect()
}

pub const TAIL_COLUMNS: [&str; 5] = ["xi", "mu_m", "mu_nu", "mu_m_slope", "mu_nu_slope"];

/// Rows (t, ξ_j, f̄₊, m̄⁺_N, bln) at bin centers; m̄⁺_N is averaged over the two bin edges.
pub fn side_rows(r: &KineticReport, k: usize) -> Vec<Vec<f64>> {
    let s = &r.sides[k];
    let xi = s.trace.xi();
    let mut rows = Vec::new();
    for (ti, t) in s.trace.times().iter().enumerate() {
        for j in 0..xi.n_bins() {
            let m = 0.5 * (s.defect.m_bar_plus[ti][j] + s.defect.m_bar_plus[ti][j + 1]);
            rows.push(vec![*t, xi.center(j), s.trace.f_bar()[ti][j], m, s.bln[ti][j]]);
        }
    }
    rows
}

pub const SIDE_COLUMNS: [&str; 5] = ["t", "xi", "f_bar_plus", "m_bar_plus", "bln_value"];

pub fn validation_rows(r: &ValidationReport) -> Vec<Vec<f64>> {
    r.checks.iter().map(|c| vec![c.value, c.threshold, if c.passed { 1.0 } else { 0.0 }]).collect()
}

pub const VALIDATION_COLUMNS: [&str; 3] = ["value", "threshold", "passed"];

/// Writes `name` into `dir` and returns its path.
pub fn write_table(dir: &Path, name: &str, config: &Value, columns: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
    let path = dir.join(name);
    write_csv(&path, config, columns, rows)?;
    Ok(path)
}
