//! Run configuration. TOML is the primary encoding; JSON with the same schema is accepted.
//! Every section rejects unknown keys.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use skl_core::data::ProblemData;
use skl_core::experiments::Scenario;
use skl_core::flux::{FluxModel, Scheme};
use skl_core::grid::make_grid;
use skl_core::kinetic::XiGrid;
use skl_core::lift::LiftScheme;
use skl_core::noise::NoiseModel;
use skl_core::solver::{BoundaryMode, SolverConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Solve,
    Contraction,
    Reduction,
    Sweep,
    Kinetic,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Solve,
        Experiment::Contraction,
        Experiment::Reduction,
        Experiment::Sweep,
        Experiment::Kinetic,
        Experiment::Validate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Contraction => "contraction",
            Experiment::Reduction => "reduction",
            Experiment::Sweep => "sweep",
            Experiment::Kinetic => "kinetic",
            Experiment::Validate => "validate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub x_left: f64,
    #[serde(default = "one")]
    pub x_right: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub eps: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Number of noise modes K.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default)]
    pub lift_scheme: LiftScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSection {
    /// Truncation level N; 4·max(sup|data|, 1) when absent.
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    /// Width of the boundary trace layer; 4·dx when absent.
    #[serde(default)]
    pub layer_width: Option<f64>,
}

impl Default for KineticSection {
    fn default() -> Self {
        Self { level: None, n_bins: default_bins(), layer_width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    #[serde(default = "default_flux")]
    pub name: String,
    /// Speed of the `linear` flux.
    #[serde(default = "one")]
    pub c: f64,
}

impl Default for FluxSection {
    fn default() -> Self {
        Self { name: default_flux(), c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// zero | additive | linear_multiplicative | affine_multiplicative
    #[serde(default = "default_noise")]
    pub kind: String,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Per-mode amplitudes of additive noise; σ·2^{-k} when absent.
    #[serde(default)]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default)]
    pub r_clip: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { kind: default_noise(), sigma: default_sigma(), sigmas: None, offset: default_offset(), r_clip: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_eps_list")]
    pub eps: Vec<f64>,
    /// Also estimate the order of ‖u^ε − u⁰‖ on path 0.
    #[serde(default)]
    pub rate: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { eps: default_eps_list(), rate: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionSection {
    /// Viscosities to repeat the reduction run at; only solver.eps when absent.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_k() -> usize {
    8
}
fn default_snapshots() -> usize {
    50
}
fn default_bins() -> usize {
    256
}
fn default_flux() -> String {
    "burgers".into()
}
fn default_noise() -> String {
    "linear_multiplicative".into()
}
fn default_sigma() -> f64 {
    0.25
}
fn default_offset() -> f64 {
    0.5
}
fn default_eps_list() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn default_paths() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Fixed by the subcommand; a config that names a different one is rejected.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    /// Worker threads, 0 for the pool default. Never changes results.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    pub grid: GridSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub kinetic: KineticSection,
    #[serde(default)]
    pub flux: FluxSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub data: ProblemData,
    #[serde(default)]
    pub data2: Option<ProblemData>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub reduction: ReductionSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// JSON for a `.json` extension, TOML otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

/// Parses and validates a config for `experiment`, filling defaults.
pub fn parse_config(text: &str, format: Format, experiment: Experiment) -> Result<RunConfig, CliError> {
    let mut cfg: RunConfig = match format {
        Format::Toml => toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?,
        Format::Json => serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?,
    };
    match cfg.experiment {
        Some(e) if e != experiment => {
            return Err(CliError::Config(format!("key `experiment` is `{e}` but the subcommand is `{experiment}`")))
        }
        _ => cfg.experiment = Some(experiment),
    }
    cfg.resolve()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, experiment: Experiment) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
    parse_config(&text, Format::for_path(path), experiment)
}

fn bad(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("key `{key}`: {msg}"))
}

impl RunConfig {
    pub fn experiment(&self) -> Experiment {
        self.experiment.unwrap_or(Experiment::Solve)
    }

    /// Fills derived defaults and checks cross-key constraints.
    fn resolve(&mut self) -> Result<(), CliError> {
        let exp = self.experiment();
        if self.n_paths == 0 {
            return Err(bad("n_paths", "must be at least 1"));
        }
        if exp == Experiment::Contraction {
            if self.data2.is_none() {
                return Err(bad("data2", "required by the contraction experiment"));
            }
            if self.n_paths < 2 {
                return Err(bad("n_paths", "contraction needs at least 2 paths"));
            }
        }
        if exp == Experiment::Sweep && self.sweep.eps.len() < 2 {
            return Err(bad("sweep.eps", "needs at least two viscosities"));
        }
        if matches!(&self.reduction.eps, Some(e) if e.is_empty()) {
            return Err(bad("reduction.eps", "must not be empty"));
        }
        if self.kinetic.level.is_none() {
            let sup = self.data2.iter().chain([&self.data]).map(ProblemData::sup_bound).fold(0.0, f64::max);
            self.kinetic.level = Some(XiGrid::default_level(sup));
        }
        // build once to surface every remaining error at parse time
        self.scenario()?;
        Ok(())
    }

    pub fn xi_grid(&self) -> Result<XiGrid, CliError> {
        let level = self.kinetic.level.ok_or_else(|| bad("kinetic.level", "unresolved"))?;
        XiGrid::new(level, self.kinetic.n_bins).map_err(|e| bad("kinetic", e))
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        let n = &self.noise;
        let k = self.solver.k;
        let model = match n.kind.as_str() {
            "zero" => {
                if k != 0 {
                    return Err(bad("solver.k", "must be 0 with zero noise"));
                }
                NoiseModel::zero()
            }
            "additive" => {
                let sigmas: Vec<f64> = match &n.sigmas {
                    Some(s) if s.len() != k => {
                        return Err(bad("noise.sigmas", format!("has {} entries, K = {k}", s.len())))
                    }
                    Some(s) => s.clone(),
                    None => (0..k).map(|j| n.sigma * 2f64.powi(-(j as i32))).collect(),
                };
                NoiseModel::additive(&sigmas)
            }
            "linear_multiplicative" => NoiseModel::linear_multiplicative(n.sigma, k),
            "affine_multiplicative" => NoiseModel::affine_multiplicative(n.sigma, k, n.offset),
            other => return Err(bad("noise.kind", format!("unknown noise `{other}`"))),
        };
        if n.sigmas.is_some() && n.kind != "additive" {
            return Err(bad("noise.sigmas", "only read by additive noise"));
        }
        Ok(match n.r_clip {
            Some(r) if r.is_nan() || r <= 0.0 => return Err(bad("noise.r_clip", "must be positive")),
            Some(r) => model.with_clip(r),
            None => model,
        })
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let g = &self.grid;
        let grid = make_grid(g.x_left, g.x_right, g.n_cells).map_err(|e| bad("grid", e))?;
        let flux = FluxModel::by_name(&self.flux.name, self.flux.c).map_err(|e| bad("flux.name", e))?;
        let s = &self.solver;
        let mut solver = SolverConfig::new(s.eps, s.t_end, self.xi_grid()?);
        solver.cfl = s.cfl;
        solver.scheme = s.scheme;
        solver.k = s.k;
        solver.seed = self.master_seed;
        solver.boundary_mode = s.boundary_mode;
        solver.lift_scheme = s.lift_scheme;
        solver.validate().map_err(|e| bad("solver", e))?;
        let mut sc =
            Scenario::new(grid, flux, self.noise_model()?, solver).with_paths(self.n_paths).with_workers(self.workers);
        sc.snapshots = s.snapshots;
        sc.validate().map_err(|e| bad("solver", e))?;
        Ok(sc)
    }

    pub fn layer_width(&self) -> f64 {
        self.kinetic.layer_width.unwrap_or(4.0 * (self.grid.x_right - self.grid.x_left) / self.grid.n_cells as f64)
    }

    /// Resolved configuration as echoed in artifacts. `workers` and `output_dir` are left
    /// out since they do not affect results.
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("workers");
            m.remove("output_dir");
        }
        v
    }
}
