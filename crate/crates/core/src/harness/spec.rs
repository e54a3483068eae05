//! Declarative experiment description and its TOML schema.
//!
//! ```toml
//! name = "demo"
//! description = "free text"
//! onsager_mode = "empirical_qn"     # or "limiting_q" (default)
//! plefka_max = 1.0
//! dedup_threshold = 1e-7
//! outputs = ["diagnostics", "census"] # also "trace", "spectrum"
//! trace_every = 1
//! reference_fe = 1.6627             # optional vertical line for histograms
//! budget = 200000000                # maximum number of cells
//!
//! [grid]
//! n = [25]
//! beta = [3.0]                      # a list, or { start, step, count }
//! h = [0.5]
//! epsilon = { start = -0.705, step = -0.001, count = 21 }
//! scheme = ["epsilon_banach"]       # "banach", "two_step", "epsilon_banach"
//!
//! [realizations]
//! count = 50
//! base_seed = 1
//!
//! [starts]
//! count = 100
//! base_seed = 2
//! shape = "corners"                 # or "full_cube"
//!
//! [scheme_config]
//! max_iters = 1000
//! mae_target = 1e-7
//! two_step_init = "sqrt_q"          # or "from_start"
//!
//! [acceptance]
//! kind = "low_temperature"          # or "rs_window", "fe_window"
//! mae_max = 1e-7
//! ```

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Acceptance, FE_HALFWIDTH, GOOD_MSE_MAX, LOW_T_MAE_MAX, PLEFKA_MAX};
use crate::disorder::{OnsagerMode, StartShape};
use crate::dynamics::{Scheme, SchemeConfig, TwoStepInit, DEFAULT_MAE_TARGET, DEFAULT_MAX_ITERS};
use crate::error::{Error, Result};
use crate::registry::DEFAULT_DEDUP_THRESHOLD;

/// Default ceiling on the number of cells in one experiment.
pub const DEFAULT_BUDGET: u64 = 200_000_000;

/// Values of one real grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    /// `start + k·step` for `k = 0, …, count−1`.
    Range {
        start: f64,
        step: f64,
        count: usize,
    },
}

impl Default for Axis {
    fn default() -> Self {
        Axis::List(Vec::new())
    }
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::List(v) => v.clone(),
            Axis::Range { start, step, count } => (0..*count).map(|k| start + step * k as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::List(v) => v.len(),
            Axis::Range { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keeps every `stride`-th value, starting with the first.
    pub fn thinned(&self, stride: usize) -> Axis {
        let stride = stride.max(1);
        match self {
            Axis::List(v) => Axis::List(v.iter().step_by(stride).copied().collect()),
            Axis::Range { start, step, count } => {
                Axis::Range { start: *start, step: step * stride as f64, count: count.div_ceil(stride) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: Vec<usize>,
    pub beta: Axis,
    pub h: Axis,
    /// Used by `epsilon_banach` only.
    #[serde(default)]
    pub epsilon: Axis,
    pub scheme: Vec<Scheme>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realizations {
    pub count: u64,
    pub base_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Starts {
    pub count: u64,
    pub base_seed: u64,
    pub shape: StartShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeDefaults {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_mae_target")]
    pub mae_target: f64,
    #[serde(default)]
    pub two_step_init: TwoStepInit,
}

impl Default for SchemeDefaults {
    fn default() -> Self {
        SchemeDefaults {
            max_iters: DEFAULT_MAX_ITERS,
            mae_target: DEFAULT_MAE_TARGET,
            two_step_init: TwoStepInit::SqrtQ,
        }
    }
}

/// Acceptance rule of an experiment; `rs_window` centers the free-energy
/// window on the replica-symmetric value of each `(β, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcceptanceRule {
    RsWindow {
        #[serde(default = "default_halfwidth")]
        halfwidth: f64,
        #[serde(default = "default_mse_max")]
        mse_max: f64,
    },
    FeWindow {
        center: f64,
        #[serde(default = "default_halfwidth")]
        halfwidth: f64,
        #[serde(default = "default_mse_max")]
        mse_max: f64,
    },
    LowTemperature {
        #[serde(default = "default_mae_max")]
        mae_max: f64,
    },
}

impl AcceptanceRule {
    pub fn rs_window() -> Self {
        AcceptanceRule::RsWindow { halfwidth: FE_HALFWIDTH, mse_max: GOOD_MSE_MAX }
    }

    pub fn low_temperature() -> Self {
        AcceptanceRule::LowTemperature { mae_max: LOW_T_MAE_MAX }
    }

    /// Concrete rule for a point whose RS free energy is `rs_fe`.
    pub fn resolve(&self, rs_fe: f64) -> Acceptance {
        match *self {
            AcceptanceRule::RsWindow { halfwidth, mse_max } => {
                Acceptance::FeWindow { center: rs_fe, halfwidth, mse_max }
            }
            AcceptanceRule::FeWindow { center, halfwidth, mse_max } => {
                Acceptance::FeWindow { center, halfwidth, mse_max }
            }
            AcceptanceRule::LowTemperature { mae_max } => Acceptance::LowTemperature { mae_max },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Trace,
    Diagnostics,
    Spectrum,
    Census,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_mae_target() -> f64 {
    DEFAULT_MAE_TARGET
}
fn default_halfwidth() -> f64 {
    FE_HALFWIDTH
}
fn default_mse_max() -> f64 {
    GOOD_MSE_MAX
}
fn default_mae_max() -> f64 {
    LOW_T_MAE_MAX
}
fn default_plefka_max() -> f64 {
    PLEFKA_MAX
}
fn default_dedup() -> f64 {
    DEFAULT_DEDUP_THRESHOLD
}
fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Diagnostics]
}
fn default_trace_every() -> usize {
    1
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub onsager_mode: OnsagerMode,
    #[serde(default = "default_plefka_max")]
    pub plefka_max: f64,
    #[serde(default = "default_dedup")]
    pub dedup_threshold: f64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_fe: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub grid: Grid,
    pub realizations: Realizations,
    pub starts: Starts,
    #[serde(default)]
    pub scheme_config: SchemeDefaults,
    pub acceptance: AcceptanceRule,
}

/// One scheme together with its blend weight (0 for the non-ε schemes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub scheme: Scheme,
    pub epsilon: f64,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    /// Scheme axis expanded with the ε values, in grid order.
    pub fn variants(&self) -> Vec<Variant> {
        let eps = self.grid.epsilon.values();
        let mut out = Vec::new();
        for &scheme in &self.grid.scheme {
            if scheme == Scheme::EpsilonBanach {
                out.extend(eps.iter().map(|&epsilon| Variant { scheme, epsilon }));
            } else {
                out.push(Variant { scheme, epsilon: 0.0 });
            }
        }
        out
    }

    /// Number of cells, saturating on overflow.
    pub fn cell_count(&self) -> u64 {
        let factors = [
            self.grid.n.len() as u64,
            self.realizations.count,
            self.grid.beta.len() as u64,
            self.grid.h.len() as u64,
            self.variants().len() as u64,
            self.starts.count,
        ];
        factors.iter().fold(1u64, |acc, &f| acc.saturating_mul(f))
    }

    pub fn scheme_config(&self, variant: Variant) -> SchemeConfig {
        SchemeConfig {
            scheme: variant.scheme,
            epsilon: variant.epsilon,
            max_iters: self.scheme_config.max_iters,
            mae_target: self.scheme_config.mae_target,
            two_step_init: self.scheme_config.two_step_init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{}: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::Config("experiment name is empty".into()));
        }
        if self.grid.n.is_empty() || self.grid.beta.is_empty() || self.grid.h.is_empty() || self.grid.scheme.is_empty()
        {
            return bad("grid axes n, beta, h and scheme must be non-empty".into());
        }
        if let Some(&n) = self.grid.n.iter().find(|&&n| n < 2) {
            return bad(format!("n must be at least 2, got {n}"));
        }
        if self.grid.beta.values().iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("beta values must be finite and non-negative".into());
        }
        if self.grid.h.values().iter().any(|h| !h.is_finite()) {
            return bad("h values must be finite".into());
        }
        if self.grid.scheme.contains(&Scheme::EpsilonBanach) && self.grid.epsilon.is_empty() {
            return bad("epsilon_banach needs at least one epsilon value".into());
        }
        if self.realizations.count == 0 || self.starts.count == 0 {
            return bad("realization and start counts must be positive".into());
        }
        if !(self.dedup_threshold > 0.0) {
            return bad(format!("dedup_threshold must be positive, got {}", self.dedup_threshold));
        }
        if self.trace_every == 0 && self.wants(OutputKind::Trace) {
            return bad("trace output requires trace_every >= 1".into());
        }
        for v in self.variants() {
            self.scheme_config(v).validate().map_err(|e| Error::Config(format!("{}: {e}", self.name)))?;
        }
        let cells = self.cell_count();
        if cells > self.budget {
            return Err(Error::BudgetExceeded { cells, budget: self.budget });
        }
        Ok(())
    }

    /// Rescales the protocol: fewer realizations or starts, a thinned ε axis.
    pub fn scaled(mut self, realizations: Option<u64>, starts: Option<u64>, epsilon_stride: Option<usize>) -> Self {
        if let Some(r) = realizations {
            self.realizations.count = r;
        }
        if let Some(s) = starts {
            self.starts.count = s;
        }
        if let Some(k) = epsilon_stride {
            self.grid.epsilon = self.grid.epsilon.thinned(k);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_spec() -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            description: String::new(),
            onsager_mode: OnsagerMode::LimitingQ,
            plefka_max: PLEFKA_MAX,
            dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
            outputs: default_outputs(),
            trace_every: 1,
            reference_fe: None,
            budget: DEFAULT_BUDGET,
            grid: Grid {
                n: vec![10],
                beta: Axis::List(vec![0.3]),
                h: Axis::List(vec![0.5]),
                epsilon: Axis::default(),
                scheme: vec![Scheme::Banach],
            },
            realizations: Realizations { count: 1, base_seed: 1 },
            starts: Starts { count: 1, base_seed: 2, shape: StartShape::FullCube },
            scheme_config: SchemeDefaults::default(),
            acceptance: AcceptanceRule::low_temperature(),
        }
    }

    #[test]
    fn axis_forms() {
        let r = Axis::Range { start: -0.505, step: 0.001, count: 251 };
        let v = r.values();
        assert_eq!(v.len(), 251);
        assert!((v[250] - (-0.255)).abs() < 1e-12);
        let t = r.thinned(5);
        assert_eq!(t.len(), 51);
        let tv = t.values();
        for (k, x) in tv.iter().enumerate() {
            assert!((x - v[5 * k]).abs() < 1e-12);
        }
        assert_eq!(Axis::List(vec![1.0, 2.0, 3.0]).thinned(2).values(), vec![1.0, 3.0]);
    }

    #[test]
    fn variants_expand_epsilon_only_for_blend() {
        let mut s = tiny_spec();
        s.grid.scheme = vec![Scheme::TwoStep, Scheme::EpsilonBanach];
        s.grid.epsilon = Axis::List(vec![0.1, 0.2]);
        let v = s.variants();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], Variant { scheme: Scheme::TwoStep, epsilon: 0.0 });
        assert_eq!(v[2].epsilon, 0.2);
        assert_eq!(s.cell_count(), 3);
    }

    #[test]
    fn budget_is_enforced() {
        let mut s = tiny_spec();
        s.starts.count = 11;
        s.budget = 10;
        assert!(matches!(s.validate(), Err(Error::BudgetExceeded { cells: 11, budget: 10 })));
        s.budget = 11;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn invalid_specs() {
        let mut s = tiny_spec();
        s.grid.scheme = vec![Scheme::EpsilonBanach];
        assert!(s.validate().is_err());
        s.grid.epsilon = Axis::List(vec![1.0]);
        assert!(s.validate().is_err());
        let mut s = tiny_spec();
        s.grid.n = vec![1];
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let s = tiny_spec();
        let text = s.to_toml().unwrap();
        assert_eq!(ExperimentSpec::from_toml(&text).unwrap(), s);

        let minimal = r#"
            name = "m"
            [grid]
            n = [5]
            beta = { start = 0.0, step = 0.5, count = 3 }
            h = [0.0]
            scheme = ["banach"]
            [realizations]
            count = 2
            base_seed = 0
            [starts]
            count = 1
            base_seed = 0
            shape = "corners"
            [acceptance]
            kind = "rs_window"
        "#;
        let m = ExperimentSpec::from_toml(minimal).unwrap();
        assert_eq!(m.scheme_config, SchemeDefaults::default());
        assert_eq!(m.acceptance, AcceptanceRule::rs_window());
        assert_eq!(m.outputs, vec![OutputKind::Diagnostics]);
        assert_eq!(m.grid.beta.values(), vec![0.0, 0.5, 1.0]);
        assert!(matches!(ExperimentSpec::from_toml("name = 3"), Err(Error::Config(_))));
    }
}
