//! Couplings, model parameters and magnetization vectors.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order;
use crate::rng;

/// Which coefficient multiplies the Onsager reaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OnsagerMode {
    /// The solution `q` of the scalar fixed-point equation.
    #[default]
    LimitingQ,
    /// `q_N = N⁻¹ Σ m_i²` recomputed from the current iterate.
    #[serde(rename = "empirical_qn")]
    EmpiricalQN,
}

impl OnsagerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OnsagerMode::LimitingQ => "limiting_q",
            OnsagerMode::EmpiricalQN => "empirical_qn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    /// Limiting order parameter at `(beta, h)`.
    pub q: f64,
    pub onsager_mode: OnsagerMode,
}

impl ModelParams {
    /// Builds parameters and solves for `q` with the default quadrature.
    pub fn new(n: usize, beta: f64, h: f64, onsager_mode: OnsagerMode) -> Result<Self> {
        Self::validate(n, beta, h)?;
        let q = order::solve_q_default(beta, h)?.q;
        Ok(ModelParams { n, beta, h, q, onsager_mode })
    }

    /// Builds parameters with a caller-supplied `q`.
    pub fn with_q(n: usize, beta: f64, h: f64, q: f64, onsager_mode: OnsagerMode) -> Result<Self> {
        Self::validate(n, beta, h)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("q must lie in [0, 1], got {q}")));
        }
        Ok(ModelParams { n, beta, h, q, onsager_mode })
    }

    fn validate(n: usize, beta: f64, h: f64) -> Result<()> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        // beta = 0 is admitted as the coupling-free limit.
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be finite and non-negative, got {beta}")));
        }
        if !h.is_finite() {
            return Err(Error::invalid("h must be finite"));
        }
        Ok(())
    }

    /// Onsager coefficient `q*` for an iterate `m` under the configured mode.
    #[inline]
    pub fn onsager_q(&self, m: &[f64]) -> f64 {
        match self.onsager_mode {
            OnsagerMode::LimitingQ => self.q,
            OnsagerMode::EmpiricalQN => empirical_q(m),
        }
    }
}

/// `N⁻¹ Σ m_i²`.
#[inline]
pub fn empirical_q(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>() / m.len() as f64
}

/// Gaussian couplings `g_ij`, `i < j`, stored as a packed upper triangle in
/// row-major order: `(0,1), (0,2), …, (0,n-1), (1,2), …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Disorder {
    n: usize,
    couplings: Vec<f64>,
    seed: u64,
}

impl Disorder {
    /// Draws `n(n-1)/2` standard normals from the ChaCha8 stream for `seed`.
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        let mut rng = rng::stream(seed);
        let couplings = (0..n * (n - 1) / 2).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Ok(Disorder { n, couplings, seed })
    }

    /// Wraps explicit couplings (packed upper triangle).
    pub fn from_couplings(n: usize, couplings: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        if couplings.len() != n * (n - 1) / 2 {
            return Err(Error::LengthMismatch { left: couplings.len(), right: n * (n - 1) / 2 });
        }
        Ok(Disorder { n, couplings, seed: 0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    #[inline]
    fn packed_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Symmetric coupling `g_ij` with a zero diagonal.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.couplings[self.packed_index(i, j)],
            std::cmp::Ordering::Greater => self.couplings[self.packed_index(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// `(1/√N) Σ_{j≠i} g_ij m_j` for a 0-based index `i`.
    pub fn local_field(&self, m: &Magnetization, i: usize) -> Result<f64> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        self.check_len(m)?;
        let v = m.values();
        let s: f64 = (0..self.n).filter(|&j| j != i).map(|j| self.coupling(i, j) * v[j]).sum();
        Ok(s / (self.n as f64).sqrt())
    }

    /// All local fields at once, written into `out`. Reads the packed storage
    /// in a single pass.
    pub fn local_fields_into(&self, m: &[f64], out: &mut [f64]) {
        assert_eq!(m.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut k = 0;
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in i + 1..self.n {
                let g = self.couplings[k];
                acc += g * m[j];
                out[j] += g * m[i];
                k += 1;
            }
            out[i] += acc;
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        out.iter_mut().for_each(|x| *x *= scale);
    }

    /// Dense row-major symmetric matrix `scale · g` with zero diagonal.
    pub fn dense(&self, scale: f64) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let g = scale * self.couplings[k];
                a[i * n + j] = g;
                a[j * n + i] = g;
                k += 1;
            }
        }
        a
    }

    pub(crate) fn check_len(&self, m: &Magnetization) -> Result<()> {
        if m.len() != self.n {
            return Err(Error::LengthMismatch { left: m.len(), right: self.n });
        }
        Ok(())
    }
}

/// Dense field operator `m ↦ (1/√N) G m`, built once per run. Faster than the
/// packed layout for repeated products at small `n`.
#[derive(Debug, Clone)]
pub struct FieldOperator {
    n: usize,
    matrix: Vec<f64>,
}

impl FieldOperator {
    pub fn new(disorder: &Disorder) -> Self {
        let n = disorder.n();
        FieldOperator { n, matrix: disorder.dense(1.0 / (n as f64).sqrt()) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn apply(&self, m: &[f64], out: &mut [f64]) {
        for (row, o) in self.matrix.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = row.iter().zip(m).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Magnetization(Vec<f64>);

impl Magnetization {
    pub fn new(values: Vec<f64>) -> Self {
        Magnetization(values)
    }

    pub fn zeros(n: usize) -> Self {
        Magnetization(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Magnetization(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every component lies in `[-1, 1]`.
    pub fn inside_cube(&self) -> bool {
        inside_cube(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vec<f64>> for Magnetization {
    fn from(v: Vec<f64>) -> Self {
        Magnetization(v)
    }
}

#[inline]
pub fn inside_cube(m: &[f64]) -> bool {
    m.iter().all(|x| (-1.0..=1.0).contains(x))
}

/// Distribution of random start values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartShape {
    /// Uniform on `[-1, 1]^n`.
    FullCube,
    /// Uniform on `([-1, -0.98] ∪ [0.98, 1])^n`.
    Corners,
}

impl StartShape {
    pub fn as_str(self) -> &'static str {
        match self {
            StartShape::FullCube => "full_cube",
            StartShape::Corners => "corners",
        }
    }
}

pub const CORNER_INNER: f64 = 0.98;

pub fn uniform_start(n: usize, seed: u64, shape: StartShape) -> Result<Magnetization> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    let mut rng = rng::stream(seed);
    let values = match shape {
        StartShape::FullCube => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        StartShape::Corners => (0..n)
            .map(|_| {
                let magnitude = rng.random_range(CORNER_INNER..=1.0);
                if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect(),
    };
    Ok(Magnetization(values))
}
