//! Cell enumeration and execution.
//!
//! Cells are enumerated in canonical order `(n, realization, β, h, variant,
//! start)`, where a variant is a scheme with its ε value, and numbered from 0.
//! Seeds depend only on the coordinates that define the random object:
//!
//! * disorder: `mix_seed(realizations.base_seed, [n, realization])`
//! * start:    `mix_seed(starts.base_seed, [n, start])`
//!
//! so every ε, scheme, β and h value sees the same starts, and any cell can be
//! re-run on its own with [`run_cell`].

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::mpsc;

use rayon::prelude::*;
use serde::Serialize;

use super::output::{OutputSink, SpectrumRecord, TraceRow};
use super::spec::{ExperimentSpec, OutputKind, Variant};
use crate::diagnostics::{classify, Criteria};
use crate::disorder::{uniform_start, Disorder, FieldOperator, Magnetization, ModelParams, OnsagerMode};
use crate::dynamics::{Scheme, Stepper};
use crate::error::{Error, Result};
use crate::order::{rs_free_energy, solve_q_default};
use crate::quadrature::QuadratureRule;
use crate::registry::{DistinctSet, Provenance, SolutionRecord};
use crate::rng::mix_seed;
use crate::spectral::{build_jacobian, esd_vs_semicircle, repulsion_fraction, spectrum, SpectrumReport};

/// Coordinates of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub id: u64,
    pub n: usize,
    pub realization: u64,
    pub beta: f64,
    pub h: f64,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub start: u64,
    beta_index: usize,
    h_index: usize,
}

impl Cell {
    pub fn realization_seed(&self, spec: &ExperimentSpec) -> u64 {
        mix_seed(spec.realizations.base_seed, &[self.n as u64, self.realization])
    }

    pub fn start_seed(&self, spec: &ExperimentSpec) -> u64 {
        mix_seed(spec.starts.base_seed, &[self.n as u64, self.start])
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub cell: u64,
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub onsager_mode: OnsagerMode,
    pub realization: u64,
    pub realization_seed: u64,
    pub start: u64,
    pub start_seed: u64,
    /// `converged`, `max_iters` or `diverged`.
    pub status: String,
    pub detail: String,
    pub converged: bool,
    pub iterations: usize,
    pub mse_final: f64,
    pub mae_final: f64,
    pub plefka: f64,
    pub tap_fe: Option<f64>,
    pub inside_cube: bool,
    pub good: bool,
    pub repulsion_fraction: Option<f64>,
    pub lambda_min: Option<f64>,
}

/// Distinct accepted solutions of one disorder instance at one `(β, h)`.
#[derive(Debug, Clone, Serialize)]
pub struct RealizationCensus {
    /// Id of the first cell of this block; fixes the canonical order.
    pub first_cell: u64,
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    pub realization: u64,
    pub realization_seed: u64,
    pub accepted: usize,
    pub distinct: usize,
    pub distances_to_first: Vec<f64>,
    pub solutions: DistinctSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub reference_fe: Option<f64>,
    pub rows: Vec<ResultRow>,
    pub census: Vec<RealizationCensus>,
    pub spectra: Vec<SpectrumRecord>,
    pub traces: Vec<TraceRow>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Directory for incremental and final output; nothing is written if `None`.
    pub out_dir: Option<PathBuf>,
}

/// Everything a cell produces.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub row: ResultRow,
    pub trace: Vec<TraceRow>,
    pub spectrum: Option<SpectrumRecord>,
    pub solution: Option<SolutionRecord>,
}

/// Per-`(β, h)` constants shared by all cells.
struct PointSetup {
    q: f64,
    criteria: Criteria,
}

fn point_setups(spec: &ExperimentSpec) -> Result<Vec<Vec<PointSetup>>> {
    let quad = QuadratureRule::default();
    let hs = spec.grid.h.values();
    spec.grid
        .beta
        .values()
        .into_iter()
        .map(|beta| {
            hs.iter()
                .map(|&h| {
                    let q = solve_q_default(beta, h)?.q;
                    let acceptance = spec.acceptance.resolve(rs_free_energy(beta, h, q, &quad));
                    Ok(PointSetup { q, criteria: Criteria { plefka_max: spec.plefka_max, acceptance } })
                })
                .collect()
        })
        .collect()
}

/// All cells in canonical order. Fails if the spec is invalid or over budget.
pub fn enumerate_cells(spec: &ExperimentSpec) -> Result<Vec<Cell>> {
    spec.validate()?;
    let betas = spec.grid.beta.values();
    let hs = spec.grid.h.values();
    let variants: Vec<Variant> = spec.variants();
    let mut cells = Vec::with_capacity(spec.cell_count() as usize);
    let mut id = 0u64;
    for &n in &spec.grid.n {
        for realization in 0..spec.realizations.count {
            for (beta_index, &beta) in betas.iter().enumerate() {
                for (h_index, &h) in hs.iter().enumerate() {
                    for v in &variants {
                        for start in 0..spec.starts.count {
                            cells.push(Cell {
                                id,
                                n,
                                realization,
                                beta,
                                h,
                                scheme: v.scheme,
                                epsilon: v.epsilon,
                                start,
                                beta_index,
                                h_index,
                            });
                            id += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn spectrum_of(params: &ModelParams, d: &Disorder, m: &Magnetization) -> Result<(SpectrumReport, f64, f64)> {
    let q_star = params.onsager_q(m.values());
    let pieces = build_jacobian(params, d, m, q_star)?;
    let report = spectrum(&pieces)?;
    let j_hat = SpectrumReport::from_eigenvalues(pieces.j_hat.eigenvalues()?);
    let ks = esd_vs_semicircle(&j_hat, params.beta, q_star);
    Ok((report, ks, q_star))
}

fn execute(
    spec: &ExperimentSpec,
    d: &Disorder,
    op: &FieldOperator,
    setup: &PointSetup,
    cell: &Cell,
) -> Result<CellOutput> {
    let params = ModelParams::with_q(cell.n, cell.beta, cell.h, setup.q, spec.onsager_mode)?;
    let config = spec.scheme_config(Variant { scheme: cell.scheme, epsilon: cell.epsilon });
    let start_seed = cell.start_seed(spec);
    let start = uniform_start(cell.n, start_seed, spec.starts.shape)?;
    let trace_every = if spec.wants(OutputKind::Trace) { spec.trace_every } else { 0 };
    let outcome = Stepper::new(params, config, op).run(start, trace_every);

    let m = &outcome.state.m_curr;
    let (good, diag) = classify(&params, d, m, outcome.final_mae(), outcome.final_mse(), &setup.criteria);
    let realization_seed = d.seed();

    let mut spectrum_record = None;
    let (mut rf, mut lmin) = (None, None);
    if spec.wants(OutputKind::Spectrum) && m.is_finite() {
        if let Ok((report, ks_j_hat, q_star)) = spectrum_of(&params, d, m) {
            rf = Some(repulsion_fraction(&report));
            lmin = Some(report.lambda_min());
            spectrum_record = Some(SpectrumRecord {
                cell: cell.id,
                n: cell.n,
                beta: cell.beta,
                h: cell.h,
                q: params.q,
                onsager_q: q_star,
                realization: cell.realization,
                lambda_min: report.lambda_min(),
                repulsion_fraction: repulsion_fraction(&report),
                ks_j_hat,
                eigenvalues: report.eigenvalues().to_vec(),
            });
        }
    }

    let detail = match &outcome.status {
        crate::dynamics::RunStatus::Diverged(why) => why.clone(),
        _ => String::new(),
    };
    let row = ResultRow {
        cell: cell.id,
        n: cell.n,
        beta: cell.beta,
        h: cell.h,
        scheme: cell.scheme,
        epsilon: cell.epsilon,
        onsager_mode: spec.onsager_mode,
        realization: cell.realization,
        realization_seed,
        start: cell.start,
        start_seed,
        status: outcome.status.as_str().to_string(),
        detail,
        converged: outcome.converged,
        iterations: outcome.state.k,
        mse_final: outcome.final_mse(),
        mae_final: outcome.final_mae(),
        plefka: diag.plefka,
        tap_fe: diag.tap_fe.and_then(finite_or_none),
        inside_cube: diag.inside_cube,
        good,
        repulsion_fraction: rf,
        lambda_min: lmin,
    };
    let trace = outcome
        .trace
        .iter()
        .map(|t| TraceRow { cell: cell.id, k: t.k, mse: t.mse, mae: t.mae, inside_cube: t.inside_cube })
        .collect();
    let solution = good.then(|| SolutionRecord {
        m: m.clone(),
        diagnostics: diag,
        provenance: Provenance {
            realization_seed,
            start_seed,
            scheme: cell.scheme,
            epsilon: cell.epsilon,
            iterations: outcome.state.k,
        },
    });
    Ok(CellOutput { row, trace, spectrum: spectrum_record, solution })
}

/// Re-runs a single cell from its derived seeds.
pub fn run_cell(spec: &ExperimentSpec, cell_id: u64) -> Result<CellOutput> {
    let cells = enumerate_cells(spec)?;
    let cell = cells
        .get(cell_id as usize)
        .ok_or_else(|| Error::invalid(format!("cell {cell_id} out of range ({} cells)", cells.len())))?;
    let setups = point_setups(spec)?;
    let d = Disorder::sample(cell.n, cell.realization_seed(spec))?;
    let op = FieldOperator::new(&d);
    execute(spec, &d, &op, &setups[cell.beta_index][cell.h_index], cell)
}

struct GroupOutput {
    outputs: Vec<CellOutput>,
    census: Vec<RealizationCensus>,
}

fn run_group(spec: &ExperimentSpec, setups: &[Vec<PointSetup>], cells: &[Cell]) -> Result<GroupOutput> {
    let first = cells[0];
    let d = Disorder::sample(first.n, first.realization_seed(spec))?;
    let op = FieldOperator::new(&d);
    let mut outputs = cells
        .par_iter()
        .map(|c| execute(spec, &d, &op, &setups[c.beta_index][c.h_index], c))
        .collect::<Result<Vec<_>>>()?;

    let mut census = Vec::new();
    if spec.wants(OutputKind::Census) {
        // cells arrive in canonical order: variants, then starts, within each (β, h)
        let mut sets: HashMap<(usize, usize), (DistinctSet, usize)> = HashMap::new();
        let mut order = Vec::new();
        for (c, out) in cells.iter().zip(outputs.iter_mut()) {
            let key = (c.beta_index, c.h_index);
            let entry = sets.entry(key).or_insert_with(|| {
                order.push((key, c.id, c.beta, c.h));
                (DistinctSet::new(spec.dedup_threshold), 0)
            });
            if let Some(sol) = out.solution.take() {
                entry.1 += 1;
                entry.0.dedup_insert(sol);
            }
        }
        for (key, first_cell, beta, h) in order {
            let (set, accepted) = sets.remove(&key).expect("inserted above");
            census.push(RealizationCensus {
                first_cell,
                n: first.n,
                beta,
                h,
                realization: first.realization,
                realization_seed: d.seed(),
                accepted,
                distinct: set.len(),
                distances_to_first: set.distance_to_first(),
                solutions: set,
            });
        }
    }
    for out in &mut outputs {
        out.solution = None;
    }
    Ok(GroupOutput { outputs, census })
}

/// Runs every cell of `spec`. Rows come back in canonical (cell id) order
/// regardless of the number of workers.
pub fn run_experiment(spec: &ExperimentSpec, options: &RunOptions) -> Result<ExperimentResult> {
    let cells = enumerate_cells(spec)?;
    let setups = point_setups(spec)?;
    let per_group = cells.len() / (spec.grid.n.len() * spec.realizations.count as usize);
    let groups: Vec<&[Cell]> = cells.chunks(per_group.max(1)).collect();

    let mut sink = match &options.out_dir {
        Some(dir) => Some(OutputSink::create(dir, spec)?),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<Result<GroupOutput>>();
    let mut rows = Vec::with_capacity(cells.len());
    let mut census = Vec::new();
    let mut spectra = Vec::new();
    let mut traces = Vec::new();
    let mut first_error = None;

    std::thread::scope(|scope| {
        let setups = &setups;
        let groups = &groups;
        scope.spawn(move || {
            pool.install(|| {
                groups.par_iter().for_each_with(tx, |tx, g| {
                    // the receiver only disappears if the consumer stopped early
                    let _ = tx.send(run_group(spec, setups, g));
                });
            });
        });
        for group in rx {
            match group {
                Ok(g) => {
                    if let Some(s) = sink.as_mut() {
                        if let Err(e) = s.append_rows(g.outputs.iter().map(|o| &o.row)) {
                            first_error.get_or_insert(e);
                        }
                    }
                    for out in g.outputs {
                        rows.push(out.row);
                        traces.extend(out.trace);
                        spectra.extend(out.spectrum);
                    }
                    census.extend(g.census);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    rows.sort_by_key(|r| r.cell);
    traces.sort_by_key(|t| (t.cell, t.k));
    spectra.sort_by_key(|s| s.cell);
    census.sort_by_key(|c| c.first_cell);
    let result =
        ExperimentResult { name: spec.name.clone(), reference_fe: spec.reference_fe, rows, census, spectra, traces };
    if let Some(s) = sink {
        s.finish(spec, &result)?;
    }
    Ok(result)
}
