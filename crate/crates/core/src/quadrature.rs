//! Gauss–Hermite quadrature for expectations over a standard normal.

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 61;

/// Nodes and weights with `Σ w_k f(x_k) ≈ E f(Z)`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds an `n`-point rule. Nodes are the roots of the physicists'
    /// Hermite polynomial `H_n`, located by Newton's method on the orthonormal
    /// recurrence and then rescaled by `√2` (weights by `1/√π`).
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > 400 {
            return Err(Error::invalid(format!("node count must be in 1..=400, got {n}")));
        }
        const PI_M4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
        const MAX_NEWTON: usize = 100;

        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut converged = false;
            for _ in 0..MAX_NEWTON {
                let (p_n, p_prev) = orthonormal_hermite(n, z, PI_M4);
                let step = p_n / ((2.0 * nf).sqrt() * p_prev);
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence { what: "Gauss-Hermite root", iterations: MAX_NEWTON });
            }
            let (_, p_prev) = orthonormal_hermite(n, z, PI_M4);
            let derivative = (2.0 * nf).sqrt() * p_prev;
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (derivative * derivative);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let scale = 2f64.sqrt();
        let norm = std::f64::consts::PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = x.iter().zip(&w).map(|(&xi, &wi)| (xi * scale, wi / norm)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(QuadratureRule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k f(x_k)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES).expect("default rule")
    }
}

/// Orthonormal Hermite values `(p_n(z), p_{n-1}(z))`.
fn orthonormal_hermite(n: usize, z: f64, p0: f64) -> (f64, f64) {
    let mut p1 = p0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}
