//! Independent reference computations shared by the integration tests.
//! Nothing here calls the library routine it is compared against.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

use sk_tap::dynamics::{step_banach, step_epsilon, IterationState};
use sk_tap::harness::{preset, OutputKind};
use sk_tap::registry::DistinctSet;
use sk_tap::rng::stream;
use sk_tap::spectral::{build_jacobian, spectrum};
use sk_tap::*;

// ---------------------------------------------------------------- (a) spectra

/// Coefficients `c_0..c_n` of `det(λI − A)` (monic, `c_n = 1`) by the
/// Faddeev–LeVerrier recursion.
pub fn char_poly(a: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![0.0; n * n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1}·I
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += a[i * n + l] * m[l * n + j];
                }
                next[i * n + j] = s;
            }
            next[i * n + i] += c[n - k + 1];
        }
        m = next;
        // c_{n−k} = −tr(A·M_k)/k
        let mut tr = 0.0;
        for i in 0..n {
            for l in 0..n {
                tr += a[i * n + l] * m[l * n + i];
            }
        }
        c[n - k] = -tr / k as f64;
    }
    c
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Real roots of a polynomial known to have only real, simple roots, by a
/// sign-change scan over the Gershgorin-style bound followed by bisection.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let bound = 1.0 + c[..n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let steps = 200_000;
    let mut roots = Vec::with_capacity(n);
    let mut x0 = -bound;
    let mut p0 = horner(c, x0);
    for s in 1..=steps {
        let x1 = -bound + 2.0 * bound * s as f64 / steps as f64;
        let p1 = horner(c, x1);
        if p0 == 0.0 {
            roots.push(x0);
        } else if p0 * p1 < 0.0 {
            let (mut lo, mut hi, mut plo) = (x0, x1, p0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let pm = horner(c, mid);
                if pm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if plo * pm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    plo = pm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        p0 = p1;
    }
    roots
}

/// Random symmetric matrix with standard normal entries.
pub fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let x: f64 = rng.sample(StandardNormal);
            a[i * n + j] = x;
            a[j * n + i] = x;
        }
    }
    a
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "root counts differ");
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest eigenvalue error of the library against characteristic-polynomial
/// roots, for a symmetric matrix and for the Jacobian `D·Ĵ` of a small model.
pub fn spectrum_vs_char_poly(n: usize, seed: u64) -> f64 {
    let a = random_symmetric(n, seed);
    let sym = sk_tap::spectral::SymMatrix::from_row_major(n, a.clone()).unwrap();
    let mut lib = sym.eigenvalues().unwrap();
    lib.sort_by(f64::total_cmp);
    let err_sym = max_abs_diff(&lib, &real_roots(&char_poly(&a, n)));

    let params = ModelParams::new(n, 0.9, 0.3, OnsagerMode::LimitingQ).unwrap();
    let d = Disorder::sample(n, seed ^ 0xA5A5).unwrap();
    let m = uniform_start(n, seed ^ 0x5A5A, StartShape::FullCube).unwrap();
    let pieces = build_jacobian(&params, &d, &m, params.q).unwrap();
    let lib = spectrum(&pieces).unwrap();
    let j = pieces.dense_jacobian();
    let err_jac = max_abs_diff(lib.eigenvalues(), &real_roots(&char_poly(&j, n)));
    err_sym.max(err_jac)
}

// ------------------------------------------------------- (b) finite differences

/// Straight transcription of `F_i(m) = tanh(h + β/√N Σ_j g_ij m_j − β²(1−q) m_i)`.
pub fn tap_map_loop(params: &ModelParams, d: &Disorder, m: &[f64]) -> Vec<f64> {
    let n = m.len();
    let scale = params.beta / (n as f64).sqrt();
    (0..n)
        .map(|i| {
            let mut field = 0.0;
            for (j, &mj) in m.iter().enumerate() {
                if j != i {
                    field += d.coupling(i, j) * mj;
                }
            }
            (params.h + scale * field - params.beta * params.beta * (1.0 - params.q) * m[i]).tanh()
        })
        .collect()
}

/// Max entry error of the assembled Jacobian against central differences of
/// the library's Banach step.
pub fn jacobian_vs_finite_differences(n: usize, beta: f64, h: f64, seed: u64) -> f64 {
    let params = ModelParams::new(n, beta, h, OnsagerMode::LimitingQ).unwrap();
    let d = Disorder::sample(n, seed).unwrap();
    let m = uniform_start(n, seed + 1, StartShape::FullCube).unwrap();
    let j = build_jacobian(&params, &d, &m, params.q).unwrap().dense_jacobian();
    let f = |x: &[f64]| {
        let st = IterationState::from_start(Magnetization::new(x.to_vec()), params.q);
        step_banach(&params, &d, &st).unwrap().m_curr.into_inner()
    };
    let step = 1e-5;
    let mut err = 0.0_f64;
    for col in 0..n {
        let mut up = m.values().to_vec();
        let mut dn = up.clone();
        up[col] += step;
        dn[col] -= step;
        let (fu, fd) = (f(&up), f(&dn));
        for row in 0..n {
            let fd_entry = (fu[row] - fd[row]) / (2.0 * step);
            err = err.max((fd_entry - j[row * n + col]).abs());
        }
    }
    err
}

// ---------------------------------------------------------- (c) FE gradient

/// Converges the Banach iteration with the empirical Onsager coefficient and
/// returns the largest central-difference component of `∇(N·f_TAP)` there,
/// together with the final MAE.
pub fn free_energy_gradient_at_fixed_point(n: usize, beta: f64, h: f64, seed: u64) -> (f64, f64) {
    let params = ModelParams::new(n, beta, h, OnsagerMode::EmpiricalQN).unwrap();
    let d = Disorder::sample(n, seed).unwrap();
    let cfg = SchemeConfig::new(Scheme::Banach).with_max_iters(5000).with_mae_target(1e-13);
    let out = run(&params, &d, &cfg, uniform_start(n, seed + 1, StartShape::FullCube).unwrap(), 0).unwrap();
    let m = out.state.m_curr.values().to_vec();
    let total = |x: &[f64]| n as f64 * tap_free_energy(&params, &d, &Magnetization::new(x.to_vec())).unwrap();
    let step = 1e-6;
    let mut worst = 0.0_f64;
    for i in 0..n {
        let mut up = m.clone();
        let mut dn = m.clone();
        up[i] += step;
        dn[i] -= step;
        worst = worst.max(((total(&up) - total(&dn)) / (2.0 * step)).abs());
    }
    (worst, out.final_mae())
}

// ---------------------------------------------------------- (d) loop oracles

pub fn mse_loop(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s / a.len() as f64
}

pub fn mae_loop(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0_f64;
    for i in 0..a.len() {
        let d = (a[i] - b[i]).abs();
        if d > s {
            s = d;
        }
    }
    s
}

pub fn plefka_loop(beta: f64, m: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in m {
        s += (1.0 - x * x) * (1.0 - x * x);
    }
    beta * beta * s / m.len() as f64
}

/// Indices of the vectors kept by first-come sup-norm dedup.
pub fn dedup_loop(vs: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, v) in vs.iter().enumerate() {
        let mut fresh = true;
        for &k in &kept {
            if mae_loop(&vs[k], v) < threshold {
                fresh = false;
            }
        }
        if fresh {
            kept.push(i);
        }
    }
    kept
}

pub fn record(m: Vec<f64>, tag: u64) -> SolutionRecord {
    SolutionRecord {
        m: Magnetization::new(m),
        diagnostics: SolutionDiagnostics {
            plefka: 0.0,
            tap_fe: None,
            inside_cube: true,
            mae_final: 0.0,
            mse_final: 0.0,
        },
        provenance: Provenance {
            realization_seed: 0,
            start_seed: tag,
            scheme: Scheme::Banach,
            epsilon: 0.0,
            iterations: 0,
        },
    }
}

/// Largest discrepancy between library metrics and the loops above over a set
/// of random vectors. Dedup disagreement counts as infinite error.
pub fn loop_oracle_error(n: usize, count: usize, seed: u64) -> f64 {
    let mut rng = stream(seed);
    let params = ModelParams::new(n, 1.3, 0.2, OnsagerMode::LimitingQ).unwrap();
    let mut err = 0.0_f64;
    // Clustered vectors so that some pairs fall under the threshold.
    let base: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut vs = Vec::with_capacity(count);
    for _ in 0..count {
        let scale = [1e-9, 5e-8, 2e-7, 0.3][rng.random_range(0..4)];
        vs.push(base.iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
    }
    for w in vs.windows(2) {
        let (a, b) = (Magnetization::new(w[0].clone()), Magnetization::new(w[1].clone()));
        err = err.max((mse(&a, &b).unwrap() - mse_loop(&w[0], &w[1])).abs());
        err = err.max((mae(&a, &b).unwrap() - mae_loop(&w[0], &w[1])).abs());
        err = err.max((plefka_value(&params, &a) - plefka_loop(params.beta, &w[0])).abs());
    }
    let mut set = DistinctSet::new(1e-7);
    for (i, v) in vs.iter().enumerate() {
        set.dedup_insert(record(v.clone(), i as u64));
    }
    let lib: Vec<usize> = set.representatives().iter().map(|r| r.provenance.start_seed as usize).collect();
    if lib != dedup_loop(&vs, 1e-7) {
        err = f64::INFINITY;
    }
    err
}

// ------------------------------------------------------ (e) ε = 0 equivalence

/// Max difference between Banach and ε-Banach with ε = 0, over whole runs
/// and over a single library step against the loop map.
pub fn epsilon_zero_vs_banach(n: usize, beta: f64, h: f64, seed: u64) -> f64 {
    let params = ModelParams::new(n, beta, h, OnsagerMode::LimitingQ).unwrap();
    let d = Disorder::sample(n, seed).unwrap();
    let start = uniform_start(n, seed + 7, StartShape::FullCube).unwrap();
    let a = run(&params, &d, &SchemeConfig::new(Scheme::Banach).with_max_iters(40), start.clone(), 1).unwrap();
    let b = run(&params, &d, &SchemeConfig::epsilon_banach(0.0).with_max_iters(40), start.clone(), 1).unwrap();
    let mut err = mae_loop(a.state.m_curr.values(), b.state.m_curr.values());
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(&b.trace) {
        err = err.max((x.mse - y.mse).abs()).max((x.mae - y.mae).abs());
    }
    let st = IterationState::from_start(start.clone(), params.q);
    let one = step_epsilon(&params, &d, &st, 0.0).unwrap();
    err.max(mae_loop(one.m_curr.values(), &tap_map_loop(&params, &d, start.values())))
}

// ------------------------------------------------- (f) serial vs parallel

/// A small census experiment with every output kind enabled.
pub fn small_experiment() -> ExperimentSpec {
    let mut s = preset("fig6_census_small").unwrap().scaled(Some(3), Some(5), Some(7));
    s.grid.n = vec![10];
    s.grid.scheme = vec![Scheme::EpsilonBanach, Scheme::TwoStep, Scheme::Banach];
    s.outputs = vec![OutputKind::Diagnostics, OutputKind::Census, OutputKind::Trace, OutputKind::Spectrum];
    s.trace_every = 25;
    s.scheme_config.max_iters = 300;
    s
}

/// True if one worker and several workers write byte-identical files.
pub fn serial_equals_parallel() -> bool {
    let spec = small_experiment();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, jobs) in dirs.iter().zip([1, 4]) {
        run_experiment(&spec, &RunOptions { jobs, out_dir: Some(dir.path().to_path_buf()) }).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|f| f != "rows.partial.csv")
        .collect();
    names.sort();
    !names.is_empty()
        && names.iter().all(|f| {
            let a = std::fs::read(dirs[0].path().join(f)).unwrap();
            let b = std::fs::read(dirs[1].path().join(f)).ok();
            b.as_deref() == Some(&a[..])
        })
}
