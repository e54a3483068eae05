//! Jacobian of the TAP map and its spectrum.
//!
//! The Jacobian of `F_i(m) = tanh(h + β·field_i − β²(1−q)·m_i)` factors as
//! `J = D·Ĵ`, with `Ĵ` symmetric (off-diagonal `(β/√N)·g_ij`, diagonal
//! `−β²(1−q)`) and `D = diag(1 − F_i²)` positive. `J` is therefore similar to
//! both `Ĵ·D` and the symmetric `D^{1/2} Ĵ D^{1/2}`, and its spectrum is real.

mod eigen;
mod semicircle;

pub use eigen::{jacobi_eigenvalues, tridiagonal_ql, SymMatrix, MAX_QL_ITERS};
pub use semicircle::{esd_vs_semicircle, ks_distance, semicircle_cdf, semicircle_edge, shifted_semicircle_cdf};

use serde::Serialize;

use crate::disorder::{Disorder, Magnetization, ModelParams};
use crate::error::{Error, Result};

/// Largest system handled by the dense spectral path.
pub const MAX_DENSE_N: usize = 2000;
/// Diagonal factors at or below this count as saturated spins.
pub const MIN_FACTOR: f64 = 1e-30;

#[derive(Debug, Clone)]
pub struct JacobianPieces {
    pub j_hat: SymMatrix,
    /// `1 − F_i(m)²`.
    pub d_factor: Vec<f64>,
    pub onsager_q: f64,
}

impl JacobianPieces {
    /// `J_ij = (1 − F_i²)·Ĵ_ij`, row-major.
    pub fn dense_jacobian(&self) -> Vec<f64> {
        let n = self.j_hat.n();
        let mut out = self.j_hat.as_slice().to_vec();
        for (row, &d) in out.chunks_exact_mut(n).zip(&self.d_factor) {
            row.iter_mut().for_each(|x| *x *= d);
        }
        out
    }

    /// `D^{1/2} Ĵ D^{1/2}`.
    pub fn symmetrized(&self) -> SymMatrix {
        let n = self.j_hat.n();
        let root: Vec<f64> = self.d_factor.iter().map(|d| d.sqrt()).collect();
        let mut data = self.j_hat.as_slice().to_vec();
        for (i, row) in data.chunks_exact_mut(n).enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x *= root[i] * root[j];
            }
        }
        SymMatrix::from_row_major(n, data).expect("square by construction")
    }
}

/// `1 − tanh²(x)` evaluated as `cosh⁻²(x)` to keep precision near saturation.
#[inline]
fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// Assembles `Ĵ` and `D` at `m` with Onsager coefficient `onsager_q`.
pub fn build_jacobian(params: &ModelParams, d: &Disorder, m: &Magnetization, onsager_q: f64) -> Result<JacobianPieces> {
    let n = d.n();
    if n > MAX_DENSE_N {
        return Err(Error::TooLarge { n, limit: MAX_DENSE_N });
    }
    d.check_len(m)?;
    if let Some(i) = m.values().iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite magnetization at spin {i}")));
    }
    let beta = params.beta;
    let diag = -beta * beta * (1.0 - onsager_q);
    let mut j_hat = SymMatrix::from_row_major(n, d.dense(beta / (n as f64).sqrt()))?;
    for i in 0..n {
        j_hat.set(i, i, diag);
    }

    let mut fields = vec![0.0; n];
    d.local_fields_into(m.values(), &mut fields);
    let mut d_factor = Vec::with_capacity(n);
    for (i, (&f, &mi)) in fields.iter().zip(m.values()).enumerate() {
        let factor = sech2(params.h + beta * f + diag * mi);
        if factor <= MIN_FACTOR {
            return Err(Error::DegenerateFactor { index: i, factor });
        }
        d_factor.push(factor);
    }
    Ok(JacobianPieces { j_hat, d_factor, onsager_q })
}

/// Sorted real eigenvalues with derived statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    eigenvalues: Vec<f64>,
}

impl SpectrumReport {
    /// Sorts the given values ascending.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        SpectrumReport { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Fraction of eigenvalues strictly below `threshold`.
    pub fn frac_below(&self, threshold: f64) -> f64 {
        if self.eigenvalues.is_empty() {
            return 0.0;
        }
        let count = self.eigenvalues.partition_point(|&x| x < threshold);
        count as f64 / self.eigenvalues.len() as f64
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

/// Spectrum of `J` through the symmetric similarity `D^{1/2} Ĵ D^{1/2}`.
pub fn spectrum(pieces: &JacobianPieces) -> Result<SpectrumReport> {
    if let Some(i) = pieces.d_factor.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateFactor { index: i, factor: pieces.d_factor[i] });
    }
    Ok(SpectrumReport::from_eigenvalues(pieces.symmetrized().eigenvalues()?))
}

/// Fraction of eigenvalues strictly below −1.
pub fn repulsion_fraction(report: &SpectrumReport) -> f64 {
    report.frac_below(-1.0)
}
