//! Monte Carlo experiment drivers. Every driver runs path p on Wiener stream p of the
//! scenario's master seed and reduces per-path results in index order, so reports do not
//! depend on the number of worker threads.

pub mod contraction;
pub mod diagnostics;
pub mod ensemble;
pub mod reduction;
pub mod stats;
pub mod sweep;
pub mod validation;

pub use contraction::{contraction_experiment, ContractionReport};
pub use diagnostics::{kinetic_experiment, KineticReport, SideReport};
pub use ensemble::{contraction_matrix, contraction_pairs, map_paths, standard_burgers, Prepared, Scenario, TimeGrid};
pub use reduction::{reduction_experiment, reduction_over_eps, ReductionReport, ReductionSweep};
pub use sweep::{viscosity_sweep, viscous_rate, EnergyRow, RateReport, SweepReport};
pub use validation::{deterministic_validation, Check, Suite, ValidationReport};
