//! Experiment execution and artifact persistence.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use skl_core::experiments::{
    contraction_experiment, deterministic_validation, kinetic_experiment, reduction_over_eps, viscosity_sweep,
    viscous_rate, Suite,
};
use skl_core::report::{self, Predicate, Summary};
use skl_core::solver::ENERGY_POWERS;
use skl_core::VERSION;

use crate::config::{Experiment, RunConfig};
use crate::CliError;

/// Lower bound on the truncated defect densities and the boundary inequality.
pub const TOL_DEFECT: f64 = 1e-2;
/// Largest accepted E m(|ξ| ≥ 4N₀) / E m(ℝ).
pub const FAR_MASS_FRACTION: f64 = 1e-3;
pub const MIN_RATE_ORDER: f64 = 0.8;
pub const TREND_ALPHA: f64 = 0.05;
pub const MAX_ENERGY_SPREAD: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub summary_path: PathBuf,
}

/// Collects artifact files written into one directory.
struct Artifacts<'a> {
    dir: &'a Path,
    config: Value,
    names: Vec<String>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &'a Path, config: Value) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create `{}`: {e}", dir.display())))?;
        Ok(Self { dir, config, names: Vec::new() })
    }

    fn table(&mut self, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        report::write_table(self.dir, name, &self.config, columns, rows)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, report: &impl Serialize) -> Result<(), CliError> {
        let doc = json!({ "version": VERSION, "config": self.config, "report": report });
        report::write_json(&self.dir.join(name), &doc)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn finish(self, stem: &str, mut summary: Summary) -> Result<RunOutcome, CliError> {
        summary.artifacts = self.names;
        let summary_path = self.dir.join(format!("{stem}_summary.json"));
        report::write_json(&summary_path, &summary)?;
        Ok(RunOutcome { summary, summary_path })
    }
}

fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Predicate {
    Predicate::new(name, passed, if passed { 1.0 } else { 0.0 }, 1.0, detail)
}

fn at_most(name: &str, value: f64, threshold: f64) -> Predicate {
    Predicate::new(name, value <= threshold, value, threshold, format!("{value:e} <= {threshold:e}"))
}

fn at_least(name: &str, value: f64, threshold: f64) -> Predicate {
    Predicate::new(name, value >= threshold, value, threshold, format!("{value:e} >= {threshold:e}"))
}

fn no_aborts(n_aborted: usize) -> Predicate {
    at_most("no_aborted_paths", n_aborted as f64, 0.0)
}

/// Runs the experiment named in `cfg` and writes its artifacts into `cfg.output_dir`.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let exp = cfg.experiment();
    let sc = cfg.scenario()?;
    let mut art = Artifacts::new(&cfg.output_dir, cfg.echo())?;
    let mut preds = Vec::new();
    match exp {
        Experiment::Solve => {
            let tg = sc.time_grid(&[sc.solver.eps], cfg.data.boundary.sup_bound())?;
            let prep = sc.prepare(&cfg.data, &tg, sc.solver.eps)?;
            let (rows, n_aborted) = sc.map_paths(|p| {
                let tr = sc.run(&prep, &sc.path(p, &tg)?)?;
                let name = format!("solve_path{p:04}.csv");
                report::write_snapshots(&cfg.output_dir.join(&name), &tr, &art.config)?;
                let energy: Vec<Vec<f64>> = tr
                    .energy()
                    .iter()
                    .map(|r| {
                        let mut row = vec![p as f64, r.time];
                        row.extend(ENERGY_POWERS.iter().map(|q| r.lp_norms[q]));
                        row.extend(ENERGY_POWERS.iter().map(|q| r.dissipation[q]));
                        row
                    })
                    .collect();
                Ok((name, energy))
            })?;
            let mut energy = Vec::new();
            for (name, e) in rows {
                art.names.push(name);
                energy.extend(e);
            }
            art.table("solve_energy.csv", &["path", "t", "lp2", "lp4", "dissipation2", "dissipation4"], &energy)?;
            preds.push(no_aborts(n_aborted));
        }
        Experiment::Contraction => {
            let d2 = cfg.data2.as_ref().ok_or_else(|| CliError::Config("key `data2`: missing".into()))?;
            let r = contraction_experiment(&sc, &cfg.data, d2)?;
            art.table("contraction.csv", &report::CONTRACTION_COLUMNS, &report::contraction_rows(&r))?;
            art.json("contraction_report.json", &r)?;
            let worst = (0..r.times.len())
                .map(|i| r.lhs[i] - (r.bound(i) + r.ci_halfwidth[i] + r.margin))
                .fold(f64::NEG_INFINITY, f64::max);
            preds.push(at_most("lhs_within_bound", worst, 0.0));
            preds.push(no_aborts(r.n_aborted));
        }
        Experiment::Reduction => {
            let eps = cfg.reduction.eps.clone().unwrap_or_else(|| vec![sc.solver.eps]);
            let sweep = reduction_over_eps(&sc, &cfg.data, &eps)?;
            let r = sweep.finest();
            art.table("reduction.csv", &report::REDUCTION_COLUMNS, &report::reduction_rows(r))?;
            let by_eps: Vec<Vec<f64>> = sweep.gap_by_eps().iter().map(|&(e, g, m)| vec![e, g, m]).collect();
            art.table("reduction_eps.csv", &["eps", "gap_final", "gap_max"], &by_eps)?;
            art.json("reduction_report.json", &sweep)?;
            let product = sweep.reports.iter().map(|r| r.max_path_product).fold(0.0, f64::max);
            preds.push(at_most("indicator_exact", product, 0.0));
            let dominated = sweep.reports.iter().all(|r| r.gap_dominates_variance());
            preds.push(flag("gap_dominates_variance", dominated, "E f(1 - E f) >= Var f"));
            if sc.noise.is_zero() {
                let gap = sweep.reports.iter().map(|r| r.max_gap()).fold(0.0, f64::max);
                preds.push(at_most("zero_noise_gap", gap, 0.0));
            }
            preds.push(no_aborts(sweep.reports.iter().map(|r| r.n_aborted).sum()));
        }
        Experiment::Sweep => {
            let r = viscosity_sweep(&sc, &cfg.data, &cfg.sweep.eps)?;
            art.table("sweep.csv", &report::SWEEP_COLUMNS, &report::sweep_rows(&r))?;
            art.json("sweep_report.json", &r)?;
            preds.push(flag("cauchy_nonincreasing", r.cauchy_nonincreasing(), format!("{:?}", r.cauchy_l1)));
            preds.push(Predicate::new(
                "energy_spread",
                r.energy_spread() < MAX_ENERGY_SPREAD,
                r.energy_spread(),
                MAX_ENERGY_SPREAD,
                "max/min of E sup |v|_2^2 must stay below the threshold",
            ));
            let (rho, p) = r.energy_trend();
            if let Some(p) = p {
                preds.push(Predicate::new(
                    "energy_no_growth_trend",
                    p >= TREND_ALPHA,
                    p,
                    TREND_ALPHA,
                    format!("spearman {rho:e}, one-sided p for negative correlation"),
                ));
            }
            if cfg.sweep.rate {
                let rate = viscous_rate(&sc, &cfg.data, &cfg.sweep.eps)?;
                art.json("sweep_rate.json", &rate)?;
                preds.push(at_least("viscous_rate_order", rate.order, MIN_RATE_ORDER));
            }
            preds.push(no_aborts(r.n_aborted));
        }
        Experiment::Kinetic => {
            let r = kinetic_experiment(&sc, &cfg.data, cfg.layer_width())?;
            art.table("kinetic_tail.csv", &report::TAIL_COLUMNS, &report::tail_rows(&r))?;
            for (k, s) in r.sides.iter().enumerate() {
                let name = format!("kinetic_{}.csv", s.side.name());
                art.table(&name, &report::SIDE_COLUMNS, &report::side_rows(&r, k))?;
            }
            art.json("kinetic_report.json", &r)?;
            preds.push(flag("tails_nonincreasing", r.tails_nonincreasing(), "mu_m and mu_nu"));
            preds.push(flag("mass_beyond_decreasing", r.mass_beyond_decreasing(), format!("{:?}", r.mass_beyond)));
            preds.push(at_most("far_mass_fraction", r.far_mass_fraction(), FAR_MASS_FRACTION));
            let at_n = r.sides.iter().map(|s| s.plus_at_n).fold(0.0, f64::max);
            preds.push(at_most("defect_at_level_n", at_n, 0.0));
            let plus_min = r.sides.iter().map(|s| s.plus_min).fold(f64::INFINITY, f64::min);
            preds.push(at_least("defect_plus_min", plus_min, -TOL_DEFECT));
            let bln_min = r.sides.iter().map(|s| s.bln_min).fold(f64::INFINITY, f64::min);
            preds.push(at_least("bln_min", bln_min, -TOL_DEFECT));
            preds.push(no_aborts(r.n_aborted));
        }
        Experiment::Validate => return Err(CliError::Config("validate takes a suite, not a config".into())),
    }
    let summary = Summary::new(exp.as_str(), preds, cfg.master_seed, cfg.n_paths, art.config.clone());
    art.finish(exp.as_str(), summary)
}

/// Runs one deterministic oracle suite.
pub fn execute_validation(suite: Suite, output_dir: &Path) -> Result<RunOutcome, CliError> {
    let config = json!({ "experiment": "validate", "suite": suite.as_str() });
    let mut art = Artifacts::new(output_dir, config.clone())?;
    let r = deterministic_validation(suite)?;
    let name = format!("validate_{suite}.csv");
    art.table(&name, &report::VALIDATION_COLUMNS, &report::validation_rows(&r))?;
    let preds = r
        .checks
        .iter()
        .map(|c| {
            Predicate::new(
                &c.name,
                c.passed,
                c.value,
                c.threshold,
                format!("{} {} {}", c.value, c.relation, c.threshold),
            )
        })
        .collect();
    let summary = Summary::new("validate", preds, 0, 1, config);
    art.finish(&format!("validate_{suite}"), summary)
}
