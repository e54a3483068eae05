//! The three iteration schemes for the TAP equations and their convergence
//! metrics.
//!
//! All schemes evaluate `F_i(m) = tanh(h + β·field_i(m) − β²(1−q*)·m_i)`:
//!
//! * `Banach`: `m⁽ᵏ⁺¹⁾ = F(m⁽ᵏ⁾)`.
//! * `TwoStep`: the Onsager term uses the delayed iterate `m⁽ᵏ⁻¹⁾`.
//! * `EpsilonBanach`: `m⁽ᵏ⁺¹⁾ = ε·m⁽ᵏ⁾ + (1−ε)·F(m⁽ᵏ⁾)`, componentwise.
//!
//! `q*` is the limiting `q` or the empirical `q_N` of the current iterate,
//! according to [`OnsagerMode`](crate::disorder::OnsagerMode).

use serde::{Deserialize, Serialize};

use crate::disorder::{inside_cube, Disorder, FieldOperator, Magnetization, ModelParams};
use crate::error::{Error, Result};

/// Components beyond this magnitude count as a numeric blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;
pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_MAE_TARGET: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Banach,
    TwoStep,
    EpsilonBanach,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Banach => "banach",
            Scheme::TwoStep => "two_step",
            Scheme::EpsilonBanach => "epsilon_banach",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "banach" => Ok(Scheme::Banach),
            "two_step" | "two-step" | "2steb" => Ok(Scheme::TwoStep),
            "epsilon_banach" | "epsilon-banach" | "epsilon" => Ok(Scheme::EpsilonBanach),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

/// How a two-step run obtains its first two iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TwoStepInit {
    /// `m⁽⁰⁾ = 0`, `m⁽¹⁾ = √q·1`; the start vector is ignored.
    #[default]
    SqrtQ,
    /// `m⁽⁰⁾ = start`, `m⁽¹⁾ = tanh(h + β·field(start))`.
    FromStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Blend weight, used only by `EpsilonBanach`.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_mae_target")]
    pub mae_target: f64,
    #[serde(default)]
    pub two_step_init: TwoStepInit,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_mae_target() -> f64 {
    DEFAULT_MAE_TARGET
}

impl SchemeConfig {
    pub fn new(scheme: Scheme) -> Self {
        SchemeConfig {
            scheme,
            epsilon: 0.0,
            max_iters: DEFAULT_MAX_ITERS,
            mae_target: DEFAULT_MAE_TARGET,
            two_step_init: TwoStepInit::SqrtQ,
        }
    }

    pub fn epsilon_banach(epsilon: f64) -> Self {
        SchemeConfig { epsilon, ..Self::new(Scheme::EpsilonBanach) }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_mae_target(mut self, mae_target: f64) -> Self {
        self.mae_target = mae_target;
        self
    }

    pub fn with_two_step_init(mut self, init: TwoStepInit) -> Self {
        self.two_step_init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheme == Scheme::EpsilonBanach && !(self.epsilon > -1.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (-1, 1), got {}", self.epsilon)));
        }
        if !(self.mae_target > 0.0) {
            return Err(Error::invalid(format!("mae_target must be positive, got {}", self.mae_target)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub m_curr: Magnetization,
    /// Preceding iterate; equal to `m_curr` before the first step.
    pub m_prev: Magnetization,
    pub k: usize,
    /// Onsager coefficient used by the last step (the limiting `q` initially).
    pub q_used: f64,
}

impl IterationState {
    pub fn from_start(start: Magnetization, q: f64) -> Self {
        IterationState { m_prev: start.clone(), m_curr: start, k: 0, q_used: q }
    }

    /// `m⁽⁰⁾ = 0`, `m⁽¹⁾ = √q·1`, `k = 1`.
    pub fn two_step_sqrt_q(n: usize, q: f64) -> Self {
        IterationState {
            m_prev: Magnetization::zeros(n),
            m_curr: Magnetization::constant(n, q.max(0.0).sqrt()),
            k: 1,
            q_used: q,
        }
    }

    fn advance(&self, next: Vec<f64>, q_used: f64) -> Self {
        IterationState { m_prev: self.m_curr.clone(), m_curr: Magnetization::new(next), k: self.k + 1, q_used }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    pub mse: f64,
    pub mae: f64,
    pub inside_cube: bool,
}

/// `N⁻¹ Σ (a_i − b_i)²`.
pub fn mse(a: &Magnetization, b: &Magnetization) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(mse_slice(a.values(), b.values()))
}

/// `max_i |a_i − b_i|`.
pub fn mae(a: &Magnetization, b: &Magnetization) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(mae_slice(a.values(), b.values()))
}

fn check_lengths(a: &Magnetization, b: &Magnetization) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::invalid("empty magnetization"));
    }
    Ok(())
}

#[inline]
pub(crate) fn mse_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

#[inline]
pub(crate) fn mae_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `F(m)` with Onsager term applied to `onsager_on`, given precomputed fields.
#[inline]
fn tap_map(params: &ModelParams, fields: &[f64], onsager_on: &[f64], q_star: f64, out: &mut [f64]) {
    let react = params.beta * params.beta * (1.0 - q_star);
    for ((o, &f), &m) in out.iter_mut().zip(fields).zip(onsager_on) {
        *o = (params.h + params.beta * f - react * m).tanh();
    }
}

fn fields(d: &Disorder, m: &Magnetization) -> Result<Vec<f64>> {
    d.check_len(m)?;
    let mut out = vec![0.0; d.n()];
    d.local_fields_into(m.values(), &mut out);
    Ok(out)
}

pub fn step_banach(params: &ModelParams, d: &Disorder, state: &IterationState) -> Result<IterationState> {
    let f = fields(d, &state.m_curr)?;
    let q_star = params.onsager_q(state.m_curr.values());
    let mut next = vec![0.0; d.n()];
    tap_map(params, &f, state.m_curr.values(), q_star, &mut next);
    Ok(state.advance(next, q_star))
}

pub fn step_two_step(params: &ModelParams, d: &Disorder, state: &IterationState) -> Result<IterationState> {
    let f = fields(d, &state.m_curr)?;
    d.check_len(&state.m_prev)?;
    let q_star = params.onsager_q(state.m_curr.values());
    let mut next = vec![0.0; d.n()];
    tap_map(params, &f, state.m_prev.values(), q_star, &mut next);
    Ok(state.advance(next, q_star))
}

pub fn step_epsilon(
    params: &ModelParams,
    d: &Disorder,
    state: &IterationState,
    epsilon: f64,
) -> Result<IterationState> {
    if !(epsilon > -1.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (-1, 1), got {epsilon}")));
    }
    let f = fields(d, &state.m_curr)?;
    let q_star = params.onsager_q(state.m_curr.values());
    let mut next = vec![0.0; d.n()];
    tap_map(params, &f, state.m_curr.values(), q_star, &mut next);
    for (x, &m) in next.iter_mut().zip(state.m_curr.values()) {
        *x = epsilon * m + (1.0 - epsilon) * *x;
    }
    Ok(state.advance(next, q_star))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    Diverged(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max_iters",
            RunStatus::Diverged(_) => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: IterationState,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub status: RunStatus,
    /// MSE and MAE of the last step; `None` if no step was taken.
    pub last_step: Option<(f64, f64)>,
}

impl RunOutcome {
    pub fn final_mse(&self) -> f64 {
        self.last_step.map_or(f64::NAN, |s| s.0)
    }

    pub fn final_mae(&self) -> f64 {
        self.last_step.map_or(f64::NAN, |s| s.1)
    }
}

/// In-place stepping with a dense field operator; shared by [`run`] and the
/// harness so that each run allocates its buffers once.
pub struct Stepper<'a> {
    params: ModelParams,
    config: SchemeConfig,
    op: &'a FieldOperator,
    fields: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(params: ModelParams, config: SchemeConfig, op: &'a FieldOperator) -> Self {
        let n = op.n();
        Stepper { params, config, op, fields: vec![0.0; n], scratch: vec![0.0; n] }
    }

    /// Writes the next iterate into `next` and returns the Onsager coefficient used.
    fn step(&mut self, curr: &[f64], prev: &[f64], next: &mut [f64]) -> f64 {
        self.op.apply(curr, &mut self.fields);
        let q_star = self.params.onsager_q(curr);
        match self.config.scheme {
            Scheme::Banach => tap_map(&self.params, &self.fields, curr, q_star, next),
            Scheme::TwoStep => tap_map(&self.params, &self.fields, prev, q_star, next),
            Scheme::EpsilonBanach => {
                tap_map(&self.params, &self.fields, curr, q_star, &mut self.scratch);
                let eps = self.config.epsilon;
                for ((x, &m), &t) in next.iter_mut().zip(curr).zip(&self.scratch) {
                    *x = eps * m + (1.0 - eps) * t;
                }
            }
        }
        q_star
    }

    fn initial_state(&mut self, start: Magnetization) -> IterationState {
        let n = self.op.n();
        match (self.config.scheme, self.config.two_step_init) {
            (Scheme::TwoStep, TwoStepInit::SqrtQ) => IterationState::two_step_sqrt_q(n, self.params.q),
            (Scheme::TwoStep, TwoStepInit::FromStart) => {
                // No Onsager term on the bootstrap step: m⁽⁻¹⁾ does not exist.
                self.op.apply(start.values(), &mut self.fields);
                let (h, beta) = (self.params.h, self.params.beta);
                let first = self.fields.iter().map(|f| (h + beta * f).tanh()).collect();
                IterationState { m_prev: start, m_curr: Magnetization::new(first), k: 1, q_used: self.params.q }
            }
            _ => IterationState::from_start(start, self.params.q),
        }
    }

    pub fn run(&mut self, start: Magnetization, trace_every: usize) -> RunOutcome {
        let mut state = self.initial_state(start);
        let mut trace = Vec::new();
        let mut last_step = None;
        let mut status = RunStatus::MaxIters;
        let mut prev = state.m_prev.clone().into_inner();
        let mut curr = state.m_curr.clone().into_inner();
        let mut next = vec![0.0; curr.len()];
        let mut k = state.k;
        let mut q_used = state.q_used;
        let mut last_traced = None;

        while k < self.config.max_iters {
            q_used = self.step(&curr, &prev, &mut next);
            k += 1;
            let step_mse = mse_slice(&next, &curr);
            let step_mae = mae_slice(&next, &curr);
            std::mem::swap(&mut prev, &mut curr);
            std::mem::swap(&mut curr, &mut next);
            last_step = Some((step_mse, step_mae));

            if let Some(i) = curr.iter().position(|x| !x.is_finite()) {
                status = RunStatus::Diverged(format!("non-finite component {i} at step {k}"));
                break;
            }
            if let Some(i) = curr.iter().position(|x| x.abs() > BLOWUP_LIMIT) {
                status = RunStatus::Diverged(format!("|m_{i}| > {BLOWUP_LIMIT:e} at step {k}"));
                break;
            }
            if trace_every > 0 && k.is_multiple_of(trace_every) {
                trace.push(TraceRecord { k, mse: step_mse, mae: step_mae, inside_cube: inside_cube(&curr) });
                last_traced = Some(k);
            }
            if step_mae <= self.config.mae_target {
                status = RunStatus::Converged;
                break;
            }
        }
        if let Some((step_mse, step_mae)) = last_step {
            if last_traced != Some(k) {
                trace.push(TraceRecord { k, mse: step_mse, mae: step_mae, inside_cube: inside_cube(&curr) });
            }
            state = IterationState { m_curr: Magnetization::new(curr), m_prev: Magnetization::new(prev), k, q_used };
        }
        RunOutcome { converged: status == RunStatus::Converged, state, trace, status, last_step }
    }
}

/// Iterates until `MAE ≤ mae_target` or `k = max_iters`.
///
/// The trace holds every `trace_every`-th step (none if 0) plus the final one.
/// Non-finite components, or any `|m_i| > 10⁶`, stop the run as diverged.
pub fn run(
    params: &ModelParams,
    d: &Disorder,
    config: &SchemeConfig,
    start: Magnetization,
    trace_every: usize,
) -> Result<RunOutcome> {
    config.validate()?;
    d.check_len(&start)?;
    if params.n != d.n() {
        return Err(Error::LengthMismatch { left: params.n, right: d.n() });
    }
    let op = FieldOperator::new(d);
    Ok(Stepper::new(*params, *config, &op).run(start, trace_every))
}
