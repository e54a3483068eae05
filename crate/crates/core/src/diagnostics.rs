//! Acceptance checks for candidate TAP solutions.

use serde::{Deserialize, Serialize};

use crate::disorder::{Disorder, Magnetization, ModelParams};
use crate::error::{Error, Result};

pub const PLEFKA_MAX: f64 = 1.0;
pub const GOOD_MSE_MAX: f64 = 1e-4;
pub const FE_HALFWIDTH: f64 = 0.05;
pub const LOW_T_MAE_MAX: f64 = 1e-7;

/// `(β²/N) Σ (1 − m_i²)²`.
pub fn plefka_value(params: &ModelParams, m: &Magnetization) -> f64 {
    let v = m.values();
    let s: f64 = v.iter().map(|x| (1.0 - x * x).powi(2)).sum();
    params.beta * params.beta * s / v.len() as f64
}

/// `((1+x)/2) log(1+x) + ((1−x)/2) log(1−x)`, with `0·log 0 = 0`.
pub fn binary_entropy_deficit(x: f64) -> f64 {
    let term = |p: f64| if p == 0.0 { 0.0 } else { 0.5 * p * p.ln() };
    term(1.0 + x) + term(1.0 - x)
}

/// Per-spin TAP free energy `f_TAP(m)`:
///
/// `N f = (β/√N) Σ_{i<j} g_ij m_i m_j + h Σ m_i + (β²/2N) Σ_{i<j} (1−m_i²)(1−m_j²) − Σ I(m_i)`.
pub fn tap_free_energy(params: &ModelParams, d: &Disorder, m: &Magnetization) -> Result<f64> {
    d.check_len(m)?;
    let v = m.values();
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| !(x.abs() <= 1.0)) {
        return Err(Error::OutsideHypercube { index, value });
    }
    let n = v.len();
    let nf = n as f64;

    let mut pair = 0.0;
    let mut k = 0;
    let g = d.couplings();
    for i in 0..n {
        let mut row = 0.0;
        for &vj in &v[i + 1..] {
            row += g[k] * vj;
            k += 1;
        }
        pair += v[i] * row;
    }

    let a: Vec<f64> = v.iter().map(|x| 1.0 - x * x).collect();
    let a_sum: f64 = a.iter().sum();
    let a_sq: f64 = a.iter().map(|x| x * x).sum();
    let onsager = 0.5 * (a_sum * a_sum - a_sq);

    let field: f64 = params.h * v.iter().sum::<f64>();
    let entropy: f64 = v.iter().map(|&x| binary_entropy_deficit(x)).sum();
    let beta = params.beta;
    Ok((beta / nf.sqrt() * pair + field + beta * beta / (2.0 * nf) * onsager - entropy) / nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionDiagnostics {
    pub plefka: f64,
    /// `None` when the vector leaves the hypercube.
    pub tap_fe: Option<f64>,
    pub inside_cube: bool,
    pub mae_final: f64,
    pub mse_final: f64,
}

/// Which acceptance rule [`classify`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Acceptance {
    /// High temperature: the free energy must land near a trusted reference.
    FeWindow {
        center: f64,
        #[serde(default = "default_halfwidth")]
        halfwidth: f64,
        #[serde(default = "default_mse_max")]
        mse_max: f64,
    },
    /// Low temperature (no trusted reference): MAE and Plefka bounds only.
    LowTemperature {
        #[serde(default = "default_mae_max")]
        mae_max: f64,
    },
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

impl Acceptance {
    pub fn fe_window(center: f64) -> Self {
        Acceptance::FeWindow { center, halfwidth: FE_HALFWIDTH, mse_max: GOOD_MSE_MAX }
    }

    pub fn low_temperature() -> Self {
        Acceptance::LowTemperature { mae_max: LOW_T_MAE_MAX }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    #[serde(default = "default_plefka_max")]
    pub plefka_max: f64,
    pub acceptance: Acceptance,
}

fn default_plefka_max() -> f64 {
    PLEFKA_MAX
}

impl Criteria {
    pub fn new(acceptance: Acceptance) -> Self {
        Criteria { plefka_max: PLEFKA_MAX, acceptance }
    }
}

/// Evaluates the diagnostics of `m` and decides whether it is a good solution.
pub fn classify(
    params: &ModelParams,
    d: &Disorder,
    m: &Magnetization,
    mae_final: f64,
    mse_final: f64,
    criteria: &Criteria,
) -> (bool, SolutionDiagnostics) {
    let inside = m.inside_cube();
    let tap_fe = if inside { tap_free_energy(params, d, m).ok() } else { None };
    let diag =
        SolutionDiagnostics { plefka: plefka_value(params, m), tap_fe, inside_cube: inside, mae_final, mse_final };
    let base = inside && diag.plefka <= criteria.plefka_max;
    let good = base
        && match criteria.acceptance {
            Acceptance::FeWindow { center, halfwidth, mse_max } => {
                mse_final < mse_max && tap_fe.is_some_and(|fe| (fe - center).abs() <= halfwidth)
            }
            Acceptance::LowTemperature { mae_max } => mae_final <= mae_max,
        };
    (good, diag)
}
