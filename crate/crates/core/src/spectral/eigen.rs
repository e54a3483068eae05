//! Eigenvalues of dense real symmetric matrices: Householder reduction to
//! tridiagonal form followed by the implicit-shift QL iteration.

use crate::error::{Error, Result};

/// Maximum QL sweeps per eigenvalue.
pub const MAX_QL_ITERS: usize = 60;

/// Dense symmetric matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Wraps row-major data; only the lower triangle is read by the solver, the
    /// caller is responsible for symmetry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::LengthMismatch { left: data.len(), right: n * n });
        }
        Ok(SymMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (mut d, mut e) = tridiagonalize(self.clone());
        tridiagonal_ql(&mut d, &mut e)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }
}

/// Householder reduction. Returns the diagonal and the sub-diagonal, with the
/// sub-diagonal stored in `e[1..]` (`e[i]` couples rows `i-1` and `i`).
fn tridiagonalize(mut m: SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n;
    let a = &mut m.data;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return (d, e);
    }
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix, eigenvalues only.
/// On return `d` holds the (unsorted) eigenvalues.
pub fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_QL_ITERS {
                return Err(Error::NoConvergence { what: "tridiagonal QL", iterations: MAX_QL_ITERS });
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Cyclic Jacobi rotations; slow, used as an independent cross-check.
pub fn jacobi_eigenvalues(m: &SymMatrix, max_sweeps: usize) -> Result<Vec<f64>> {
    let n = m.n;
    let mut a = m.data.clone();
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) || off == 0.0 {
            let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            ev.sort_by(f64::total_cmp);
            return Ok(ev);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NoConvergence { what: "Jacobi sweeps", iterations: max_sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut r = rng::stream(seed);
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, r.sample(StandardNormal));
            }
        }
        m
    }

    #[test]
    fn diagonal_and_tiny_cases() {
        assert!(SymMatrix::zeros(0).eigenvalues().unwrap().is_empty());
        let mut m = SymMatrix::zeros(1);
        m.set(0, 0, 3.5);
        assert_eq!(m.eigenvalues().unwrap(), vec![3.5]);
        let mut m = SymMatrix::zeros(3);
        m.set(0, 0, 2.0);
        m.set(1, 1, -1.0);
        m.set(2, 2, 0.5);
        assert_eq!(m.eigenvalues().unwrap(), vec![-1.0, 0.5, 2.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 3.0);
        m.set(0, 1, 2.0);
        let ev = m.eigenvalues().unwrap();
        // trace 4, determinant -1
        let r = 5f64.sqrt();
        assert!((ev[0] - (2.0 - r)).abs() < 1e-14);
        assert!((ev[1] - (2.0 + r)).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_jacobi() {
        for (n, seed) in [(5, 1u64), (17, 2), (40, 3)] {
            let m = random_sym(n, seed);
            let ql = m.eigenvalues().unwrap();
            let jac = jacobi_eigenvalues(&m, 100).unwrap();
            for (a, b) in ql.iter().zip(&jac) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trace_and_frobenius_are_preserved() {
        let m = random_sym(120, 9);
        let ev = m.eigenvalues().unwrap();
        let tr: f64 = (0..120).map(|i| m.get(i, i)).sum();
        let fro: f64 = m.as_slice().iter().map(|x| x * x).sum();
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-9);
        assert!((ev.iter().map(|x| x * x).sum::<f64>() - fro).abs() < 1e-8 * fro);
    }

    #[test]
    fn repeated_eigenvalues() {
        // J = 1·1ᵀ has eigenvalues {0 (n-1 times), n}
        let n = 6;
        let m = SymMatrix::from_row_major(n, vec![1.0; n * n]).unwrap();
        let ev = m.eigenvalues().unwrap();
        for &x in &ev[..n - 1] {
            assert!(x.abs() < 1e-13);
        }
        assert!((ev[n - 1] - n as f64).abs() < 1e-13);
    }
}
