//! TAP equations of the Sherrington–Kirkpatrick spin glass: disorder
//! sampling, the scalar order parameter, three fixed-point iteration schemes,
//! solution diagnostics, the Jacobian spectrum and a seeded experiment harness.

pub mod diagnostics;
pub mod disorder;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod order;
pub mod quadrature;
pub mod registry;
pub mod rng;
pub mod spectral;

pub use diagnostics::{classify, plefka_value, tap_free_energy, Acceptance, Criteria, SolutionDiagnostics};
pub use disorder::{uniform_start, Disorder, FieldOperator, Magnetization, ModelParams, OnsagerMode, StartShape};
pub use dynamics::{mae, mse, run, RunOutcome, RunStatus, Scheme, SchemeConfig, TwoStepInit};
pub use error::{Error, Result};
pub use harness::{builtin_presets, run_experiment, ExperimentSpec, RunOptions};
pub use order::{rs_free_energy, solve_q, solve_q_default, OrderParameter};
pub use quadrature::QuadratureRule;
pub use registry::{DistinctSet, Provenance, SolutionRecord};
pub use spectral::{build_jacobian, repulsion_fraction, semicircle_edge, spectrum, SpectrumReport};
