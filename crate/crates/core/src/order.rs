//! Deterministic scalar quantities: the order parameter `q`, the AT-line
//! functional and the replica-symmetric free energy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

pub const DAMPING: f64 = 0.5;
pub const MAX_FIXED_POINT_ITERS: usize = 200_000;
pub const MAX_BISECTION_ITERS: usize = 200;
pub const DEFAULT_Q_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderParameter {
    pub q: f64,
    pub beta: f64,
    pub h: f64,
    /// `|q - E tanh²(h + β√q Z)|` at termination.
    pub residual: f64,
}

fn q_map(beta: f64, h: f64, q: f64, quad: &QuadratureRule) -> f64 {
    let s = beta * q.max(0.0).sqrt();
    quad.expect(|x| {
        let t = (h + s * x).tanh();
        t * t
    })
}

/// Solves `q = E tanh²(h + β√q Z)`.
///
/// Damped iteration `q ← ½q + ½·map(q)` from `tanh²(h) + 10⁻⁶`; if that does
/// not reach `tol` within [`MAX_FIXED_POINT_ITERS`] steps, falls back to
/// bisection of `q - map(q)` on `[0, 1]`. For `β > 1, h = 0` the equation has
/// the trivial root as well; the iteration start selects the non-trivial one.
pub fn solve_q(beta: f64, h: f64, tol: f64, quad: &QuadratureRule) -> Result<OrderParameter> {
    if !(beta >= 0.0 && beta.is_finite()) || !h.is_finite() {
        return Err(Error::invalid(format!("need finite beta >= 0 and h, got beta={beta}, h={h}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    let residual = |q: f64| q - q_map(beta, h, q, quad);

    let mut q = h.tanh().powi(2) + 1e-6;
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let r = residual(q);
        if r.abs() <= tol {
            return Ok(OrderParameter { q, beta, h, residual: r.abs() });
        }
        q = (q - DAMPING * r).clamp(0.0, 1.0);
    }

    // g(0) = -tanh²(h) <= 0 and g(1) = E sech²(..) > 0
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if residual(lo).abs() <= tol {
        return Ok(OrderParameter { q: 0.0, beta, h, residual: residual(0.0).abs() });
    }
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() <= tol {
            return Ok(OrderParameter { q: mid, beta, h, residual: r.abs() });
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON {
            break;
        }
    }
    Err(Error::NoConvergence { what: "order parameter q", iterations: MAX_FIXED_POINT_ITERS + MAX_BISECTION_ITERS })
}

/// [`solve_q`] with the default rule and [`DEFAULT_Q_TOL`].
pub fn solve_q_default(beta: f64, h: f64) -> Result<OrderParameter> {
    thread_local! {
        static RULE: QuadratureRule = QuadratureRule::default();
    }
    RULE.with(|rule| solve_q(beta, h, DEFAULT_Q_TOL, rule))
}

/// `β² E cosh⁻⁴(h + β√q Z)`; below the AT line iff `< 1`.
pub fn at_line_lhs(beta: f64, h: f64, q: f64, quad: &QuadratureRule) -> f64 {
    let s = beta * q.max(0.0).sqrt();
    beta * beta
        * quad.expect(|x| {
            let c = (h + s * x).cosh();
            1.0 / (c * c * c * c)
        })
}

/// Inverse temperature where the AT functional crosses 1 at field `h`.
///
/// Scans `β` upward in steps of 0.01 for the first crossing, then bisects.
pub fn at_line_beta(h: f64, quad: &QuadratureRule) -> Result<f64> {
    let lhs = |beta: f64| -> Result<f64> {
        let q = solve_q(beta, h, DEFAULT_Q_TOL, quad)?.q;
        Ok(at_line_lhs(beta, h, q, quad) - 1.0)
    };
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=1000 {
        let beta = 0.01 * k as f64;
        if lhs(beta)? >= 0.0 {
            hi = Some(beta);
            break;
        }
        lo = beta;
    }
    let mut hi = hi.ok_or(Error::NoConvergence { what: "AT-line bracket", iterations: 1000 })?;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Numerically stable `log cosh x`.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Replica-symmetric free energy `E log cosh(h + β√q Z) + β²(1-q)²/4`.
///
/// This is the scale of the per-spin TAP free energy in
/// [`crate::diagnostics::tap_free_energy`]: both omit the `log 2` entropy
/// constant of the usual replica-symmetric formula.
pub fn rs_free_energy(beta: f64, h: f64, q: f64, quad: &QuadratureRule) -> f64 {
    let s = beta * q.max(0.0).sqrt();
    quad.expect(|x| log_cosh(h + s * x)) + beta * beta * (1.0 - q).powi(2) / 4.0
}

/// Reference value of [`rs_free_energy`] at `β = 1, h = 0.5`.
pub const RS_REFERENCE_BETA1_H05: f64 = 0.353_830_694_835_91;
