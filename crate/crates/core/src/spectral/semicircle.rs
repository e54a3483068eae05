//! Semicircle law and the Kolmogorov–Smirnov distance of an empirical
//! spectrum to its shifted and scaled version `βX − β²(1−q)`.

use std::f64::consts::PI;

use super::SpectrumReport;

/// Left edge `−2β − β²(1−q)` of the support of `βX − β²(1−q)`.
pub fn semicircle_edge(beta: f64, q: f64) -> f64 {
    -2.0 * beta - beta * beta * (1.0 - q)
}

/// CDF of the standard semicircle law with density `(2π)⁻¹ √(4 − x²)` on `[−2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// CDF of `βX − β²(1−q)`.
pub fn shifted_semicircle_cdf(y: f64, beta: f64, q: f64) -> f64 {
    let shift = -beta * beta * (1.0 - q);
    if beta == 0.0 {
        return if y >= shift { 1.0 } else { 0.0 };
    }
    semicircle_cdf((y - shift) / beta)
}

/// `sup_x |F_n(x) − F(x)|` for sorted samples.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// KS distance between the eigenvalue distribution and `βX − β²(1−q)`.
pub fn esd_vs_semicircle(report: &SpectrumReport, beta: f64, q: f64) -> f64 {
    ks_distance(report.eigenvalues(), |y| shifted_semicircle_cdf(y, beta, q))
}
