//! C interface to `sk-tap`.
//!
//! Objects are opaque handles created by `*_new`/`sk_tap_run` and released
//! with the matching `*_free`. Every fallible call returns an `SkTapStatus`;
//! the message of the last failure on the calling thread is available from
//! `sk_tap_last_error`. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sk_tap::diagnostics::{classify, plefka_value, tap_free_energy, Acceptance, Criteria};
use sk_tap::disorder::{uniform_start, Disorder, FieldOperator, Magnetization, ModelParams, OnsagerMode, StartShape};
use sk_tap::dynamics::{RunOutcome, RunStatus, Scheme, SchemeConfig, Stepper, TwoStepInit};
use sk_tap::order::{rs_free_energy, solve_q_default};
use sk_tap::quadrature::QuadratureRule;
use sk_tap::spectral::{build_jacobian, repulsion_fraction, semicircle_edge, spectrum};
use sk_tap::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkTapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    NoConvergence = 4,
    OutsideHypercube = 5,
    DegenerateFactor = 6,
    TooLarge = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

pub const SK_TAP_SCHEME_BANACH: u32 = 0;
pub const SK_TAP_SCHEME_TWO_STEP: u32 = 1;
pub const SK_TAP_SCHEME_EPSILON_BANACH: u32 = 2;

pub const SK_TAP_ONSAGER_LIMITING_Q: u32 = 0;
pub const SK_TAP_ONSAGER_EMPIRICAL_QN: u32 = 1;

pub const SK_TAP_SHAPE_FULL_CUBE: u32 = 0;
pub const SK_TAP_SHAPE_CORNERS: u32 = 1;

pub const SK_TAP_RUN_CONVERGED: u32 = 0;
pub const SK_TAP_RUN_MAX_ITERS: u32 = 1;
pub const SK_TAP_RUN_DIVERGED: u32 = 2;

/// A disorder sample with its model parameters.
pub struct SkTapModel {
    params: ModelParams,
    disorder: Disorder,
    op: FieldOperator,
}

/// Final state and diagnostics of one run.
pub struct SkTapOutcome {
    outcome: RunOutcome,
    summary: SkTapRunSummary,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkTapRunSummary {
    /// One of `SK_TAP_RUN_*`.
    pub status: u32,
    pub converged: bool,
    pub iterations: usize,
    pub mse_final: f64,
    pub mae_final: f64,
    pub plefka: f64,
    /// NaN when the final state leaves the hypercube.
    pub tap_fe: f64,
    pub inside_cube: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SkTapStatus {
    match e {
        Error::InvalidParameter(_) | Error::IndexOutOfRange { .. } | Error::Config(_) | Error::UnknownPreset(_) => {
            SkTapStatus::InvalidArgument
        }
        Error::LengthMismatch { .. } => SkTapStatus::LengthMismatch,
        Error::NoConvergence { .. } => SkTapStatus::NoConvergence,
        Error::OutsideHypercube { .. } => SkTapStatus::OutsideHypercube,
        Error::DegenerateFactor { .. } => SkTapStatus::DegenerateFactor,
        Error::TooLarge { .. } | Error::BudgetExceeded { .. } => SkTapStatus::TooLarge,
        _ => SkTapStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SkTapStatusError>) -> SkTapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkTapStatus::Ok,
        Ok(Err(SkTapStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SkTapStatus::Internal
        }
    }
}

struct SkTapStatusError(SkTapStatus, String);

impl From<Error> for SkTapStatusError {
    fn from(e: Error) -> Self {
        SkTapStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> SkTapStatusError {
    SkTapStatusError(SkTapStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: String) -> SkTapStatusError {
    SkTapStatusError(SkTapStatus::InvalidArgument, msg)
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], SkTapStatusError> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], SkTapStatusError> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn model_ref<'a>(m: *const SkTapModel) -> Result<&'a SkTapModel, SkTapStatusError> {
    m.as_ref().ok_or_else(|| null("model"))
}

fn magnetization(model: &SkTapModel, values: &[f64]) -> Result<Magnetization, SkTapStatusError> {
    if values.len() != model.params.n {
        return Err(Error::LengthMismatch { left: values.len(), right: model.params.n }.into());
    }
    Ok(Magnetization::new(values.to_vec()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sk_tap_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or 0
/// if there is none.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Order parameter `q` and RS free energy at `(beta, h)`.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_order_parameter(
    beta: f64,
    h: f64,
    q_out: *mut f64,
    rs_fe_out: *mut f64,
) -> SkTapStatus {
    guard(|| {
        let op = solve_q_default(beta, h)?;
        if !q_out.is_null() {
            *q_out = op.q;
        }
        if !rs_fe_out.is_null() {
            *rs_fe_out = rs_free_energy(beta, h, op.q, &QuadratureRule::default());
        }
        Ok(())
    })
}

/// `−2β − β²(1−q)`.
#[no_mangle]
pub extern "C" fn sk_tap_semicircle_edge(beta: f64, q: f64) -> f64 {
    semicircle_edge(beta, q)
}

/// Samples couplings for `n` spins from `seed` and solves for `q`.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_model_new(
    n: usize,
    beta: f64,
    h: f64,
    onsager_mode: u32,
    seed: u64,
    out: *mut *mut SkTapModel,
) -> SkTapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mode = match onsager_mode {
            SK_TAP_ONSAGER_LIMITING_Q => OnsagerMode::LimitingQ,
            SK_TAP_ONSAGER_EMPIRICAL_QN => OnsagerMode::EmpiricalQN,
            other => return Err(invalid(format!("unknown onsager mode {other}"))),
        };
        let params = ModelParams::new(n, beta, h, mode)?;
        let disorder = Disorder::sample(n, seed)?;
        let op = FieldOperator::new(&disorder);
        *out = Box::into_raw(Box::new(SkTapModel { params, disorder, op }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sk_tap_model_free(model: *mut SkTapModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of spins, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_model_n(model: *const SkTapModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.n)
}

/// Limiting order parameter, NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_model_q(model: *const SkTapModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.params.q)
}

/// Fills `out[0..n]` with a random start of the given shape.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_uniform_start(
    n: usize,
    seed: u64,
    shape: u32,
    out: *mut f64,
    len: usize,
) -> SkTapStatus {
    guard(|| {
        let shape = match shape {
            SK_TAP_SHAPE_FULL_CUBE => StartShape::FullCube,
            SK_TAP_SHAPE_CORNERS => StartShape::Corners,
            other => return Err(invalid(format!("unknown start shape {other}"))),
        };
        let dst = output(out, len, "out")?;
        if len < n {
            return Err(SkTapStatusError(SkTapStatus::BufferTooSmall, format!("need {n} values, buffer holds {len}")));
        }
        let m = uniform_start(n, seed, shape)?;
        dst[..n].copy_from_slice(m.values());
        Ok(())
    })
}

/// Iterates from `start` (length n; ignored by the two-step scheme's default
/// initialization) and stores the result in `*out`.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_run(
    model: *const SkTapModel,
    scheme: u32,
    epsilon: f64,
    max_iters: usize,
    mae_target: f64,
    start: *const f64,
    len: usize,
    out: *mut *mut SkTapOutcome,
) -> SkTapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let model = model_ref(model)?;
        let scheme = match scheme {
            SK_TAP_SCHEME_BANACH => Scheme::Banach,
            SK_TAP_SCHEME_TWO_STEP => Scheme::TwoStep,
            SK_TAP_SCHEME_EPSILON_BANACH => Scheme::EpsilonBanach,
            other => return Err(invalid(format!("unknown scheme {other}"))),
        };
        let config = SchemeConfig { scheme, epsilon, max_iters, mae_target, two_step_init: TwoStepInit::SqrtQ };
        config.validate()?;
        let start = magnetization(model, input(start, len, "start")?)?;
        let outcome = Stepper::new(model.params, config, &model.op).run(start, 0);
        let m = &outcome.state.m_curr;
        let criteria = Criteria::new(Acceptance::low_temperature());
        let (_, diag) =
            classify(&model.params, &model.disorder, m, outcome.final_mae(), outcome.final_mse(), &criteria);
        let status = match outcome.status {
            RunStatus::Converged => SK_TAP_RUN_CONVERGED,
            RunStatus::MaxIters => SK_TAP_RUN_MAX_ITERS,
            RunStatus::Diverged(_) => SK_TAP_RUN_DIVERGED,
        };
        let summary = SkTapRunSummary {
            status,
            converged: outcome.converged,
            iterations: outcome.state.k,
            mse_final: outcome.final_mse(),
            mae_final: outcome.final_mae(),
            plefka: diag.plefka,
            tap_fe: diag.tap_fe.unwrap_or(f64::NAN),
            inside_cube: diag.inside_cube,
        };
        *out = Box::into_raw(Box::new(SkTapOutcome { outcome, summary }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sk_tap_outcome_free(outcome: *mut SkTapOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

#[no_mangle]
pub unsafe extern "C" fn sk_tap_outcome_summary(
    outcome: *const SkTapOutcome,
    out: *mut SkTapRunSummary,
) -> SkTapStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(|| null("outcome"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = o.summary;
        Ok(())
    })
}

/// Copies the final magnetization into `out[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_outcome_magnetization(
    outcome: *const SkTapOutcome,
    out: *mut f64,
    len: usize,
) -> SkTapStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(|| null("outcome"))?;
        let dst = output(out, len, "out")?;
        let m = o.outcome.state.m_curr.values();
        if len < m.len() {
            return Err(SkTapStatusError(
                SkTapStatus::BufferTooSmall,
                format!("need {} values, buffer holds {len}", m.len()),
            ));
        }
        dst[..m.len()].copy_from_slice(m);
        Ok(())
    })
}

/// Per-spin TAP free energy of `m`.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_free_energy(
    model: *const SkTapModel,
    m: *const f64,
    len: usize,
    out: *mut f64,
) -> SkTapStatus {
    guard(|| {
        let model = model_ref(model)?;
        let m = magnetization(model, input(m, len, "m")?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = tap_free_energy(&model.params, &model.disorder, &m)?;
        Ok(())
    })
}

/// `(β²/N) Σ (1 − m_i²)²`.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_plefka(
    model: *const SkTapModel,
    m: *const f64,
    len: usize,
    out: *mut f64,
) -> SkTapStatus {
    guard(|| {
        let model = model_ref(model)?;
        let m = magnetization(model, input(m, len, "m")?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = plefka_value(&model.params, &m);
        Ok(())
    })
}

/// Sorted Jacobian eigenvalues at `m` into `eigenvalues[0..n]`; the fraction
/// below −1 into `*repulsion` if it is not NULL.
#[no_mangle]
pub unsafe extern "C" fn sk_tap_jacobian_spectrum(
    model: *const SkTapModel,
    m: *const f64,
    len: usize,
    eigenvalues: *mut f64,
    eigenvalues_len: usize,
    repulsion: *mut f64,
) -> SkTapStatus {
    guard(|| {
        let model = model_ref(model)?;
        let m = magnetization(model, input(m, len, "m")?)?;
        let dst = output(eigenvalues, eigenvalues_len, "eigenvalues")?;
        let n = model.params.n;
        if eigenvalues_len < n {
            return Err(SkTapStatusError(
                SkTapStatus::BufferTooSmall,
                format!("need {n} values, buffer holds {eigenvalues_len}"),
            ));
        }
        let q_star = model.params.onsager_q(m.values());
        let report = spectrum(&build_jacobian(&model.params, &model.disorder, &m, q_star)?)?;
        dst[..n].copy_from_slice(report.eigenvalues());
        if !repulsion.is_null() {
            *repulsion = repulsion_fraction(&report);
        }
        Ok(())
    })
}
