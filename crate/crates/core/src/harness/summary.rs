//! Aggregates over an experiment result.

use std::collections::BTreeMap;

use serde::Serialize;

use super::run::ExperimentResult;
use crate::dynamics::Scheme;
use crate::spectral::shifted_semicircle_cdf;

pub const DEFAULT_BINS: usize = 50;
/// Evaluation points of the spectral CDF summary.
pub const CDF_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryKind {
    /// TAP free energies of the accepted rows.
    Histogram,
    PerEpsilon,
    PerRealization,
    SpectrumCdf,
}

impl SummaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SummaryKind::Histogram => "histogram",
            SummaryKind::PerEpsilon => "per_epsilon",
            SummaryKind::PerRealization => "per_realization",
            SummaryKind::SpectrumCdf => "spectrum_cdf",
        }
    }
}

impl std::str::FromStr for SummaryKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "histogram" => Ok(SummaryKind::Histogram),
            "per_epsilon" | "per-epsilon" => Ok(SummaryKind::PerEpsilon),
            "per_realization" | "per-realization" => Ok(SummaryKind::PerRealization),
            "spectrum_cdf" | "spectrum-cdf" => Ok(SummaryKind::SpectrumCdf),
            other => Err(crate::error::Error::invalid(format!("unknown summary kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonGroup {
    pub scheme: Scheme,
    pub epsilon: f64,
    pub runs: usize,
    pub converged: usize,
    pub inside_cube: usize,
    pub good: usize,
    /// Mean TAP free energy of the good rows; `None` if there are none.
    pub mean_tap_fe_good: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationGroup {
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    pub realization: u64,
    pub accepted: usize,
    pub distinct: usize,
    pub distances_to_first: Vec<f64>,
    pub tap_fe: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    Histogram {
        experiment: String,
        column: &'static str,
        /// `bins + 1` edges; bin `i` is `[edges[i], edges[i+1])`, the last one closed.
        edges: Vec<f64>,
        counts: Vec<u64>,
        total: u64,
        reference_fe: Option<f64>,
        /// Values strictly above `reference_fe`.
        above_reference: Option<u64>,
    },
    PerEpsilon {
        experiment: String,
        groups: Vec<EpsilonGroup>,
    },
    PerRealization {
        experiment: String,
        groups: Vec<RealizationGroup>,
        /// Fraction of realizations with more than one distinct solution.
        multi_fraction: Option<f64>,
    },
    SpectrumCdf {
        experiment: String,
        /// Evaluation points.
        edges: Vec<f64>,
        /// Empirical CDF of the Jacobian eigenvalues, pooled over all spectra.
        empirical_cdf: Vec<f64>,
        /// CDF of `βX − β²(1−q)` for the first spectrum's parameters.
        semicircle_cdf: Vec<f64>,
        mean_ks_j_hat: Option<f64>,
        spectra: usize,
    },
}

/// Equal-width bin edges over `[lo, hi]`; a degenerate range is widened to
/// `[lo − 0.5, lo + 0.5]`.
pub fn bin_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    edges
}

/// Counts per bin; values outside the edges are ignored.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<u64> {
    let bins = edges.len().saturating_sub(1);
    let mut counts = vec![0u64; bins];
    for &v in values {
        if bins == 0 || !(v >= edges[0] && v <= edges[bins]) {
            continue;
        }
        // last edge belongs to the last bin
        let i = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

pub fn summarize(result: &ExperimentResult, kind: SummaryKind) -> Summary {
    let experiment = result.name.clone();
    match kind {
        SummaryKind::Histogram => {
            let values: Vec<f64> = result.rows.iter().filter(|r| r.good).filter_map(|r| r.tap_fe).collect();
            let (edges, counts) = if values.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let edges = bin_edges(lo, hi, DEFAULT_BINS);
                let counts = histogram(&values, &edges);
                (edges, counts)
            };
            let above_reference = result.reference_fe.map(|r| values.iter().filter(|&&v| v > r).count() as u64);
            Summary::Histogram {
                experiment,
                column: "tap_fe",
                edges,
                counts,
                total: values.len() as u64,
                reference_fe: result.reference_fe,
                above_reference,
            }
        }
        SummaryKind::PerEpsilon => {
            // keyed by first appearance so grid order is kept
            let mut order: Vec<(Scheme, f64)> = Vec::new();
            let mut acc: BTreeMap<usize, (EpsilonGroup, f64)> = BTreeMap::new();
            for r in &result.rows {
                let idx = match order.iter().position(|&(s, e)| s == r.scheme && e.to_bits() == r.epsilon.to_bits()) {
                    Some(i) => i,
                    None => {
                        order.push((r.scheme, r.epsilon));
                        order.len() - 1
                    }
                };
                let (g, fe_sum) = acc.entry(idx).or_insert_with(|| {
                    (
                        EpsilonGroup {
                            scheme: r.scheme,
                            epsilon: r.epsilon,
                            runs: 0,
                            converged: 0,
                            inside_cube: 0,
                            good: 0,
                            mean_tap_fe_good: None,
                        },
                        0.0,
                    )
                });
                g.runs += 1;
                g.converged += r.converged as usize;
                g.inside_cube += r.inside_cube as usize;
                if r.good {
                    g.good += 1;
                    *fe_sum += r.tap_fe.unwrap_or(f64::NAN);
                }
            }
            let groups = acc
                .into_values()
                .map(|(mut g, s)| {
                    g.mean_tap_fe_good = (g.good > 0).then(|| s / g.good as f64);
                    g
                })
                .collect();
            Summary::PerEpsilon { experiment, groups }
        }
        SummaryKind::PerRealization => {
            let groups: Vec<RealizationGroup> = result
                .census
                .iter()
                .map(|c| RealizationGroup {
                    n: c.n,
                    beta: c.beta,
                    h: c.h,
                    realization: c.realization,
                    accepted: c.accepted,
                    distinct: c.distinct,
                    distances_to_first: c.distances_to_first.clone(),
                    tap_fe: c.solutions.representatives().iter().map(|s| s.diagnostics.tap_fe).collect(),
                })
                .collect();
            let multi_fraction = (!groups.is_empty())
                .then(|| groups.iter().filter(|g| g.distinct > 1).count() as f64 / groups.len() as f64);
            Summary::PerRealization { experiment, groups, multi_fraction }
        }
        SummaryKind::SpectrumCdf => {
            let mut pooled: Vec<f64> = result.spectra.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
            pooled.sort_by(f64::total_cmp);
            let Some(first) = result.spectra.first().filter(|_| !pooled.is_empty()) else {
                return Summary::SpectrumCdf {
                    experiment,
                    edges: Vec::new(),
                    empirical_cdf: Vec::new(),
                    semicircle_cdf: Vec::new(),
                    mean_ks_j_hat: None,
                    spectra: 0,
                };
            };
            let (beta, q) = (first.beta, first.onsager_q);
            let lo = pooled[0].min(-2.0 * beta - beta * beta * (1.0 - q));
            let hi = pooled[pooled.len() - 1].max(2.0 * beta - beta * beta * (1.0 - q));
            let edges = bin_edges(lo, hi, CDF_POINTS - 1);
            let total = pooled.len() as f64;
            let empirical_cdf = edges.iter().map(|&x| pooled.partition_point(|&v| v <= x) as f64 / total).collect();
            let semicircle_cdf = edges.iter().map(|&x| shifted_semicircle_cdf(x, beta, q)).collect();
            let mean_ks = result.spectra.iter().map(|s| s.ks_j_hat).sum::<f64>() / result.spectra.len() as f64;
            Summary::SpectrumCdf {
                experiment,
                edges,
                empirical_cdf,
                semicircle_cdf,
                mean_ks_j_hat: Some(mean_ks),
                spectra: result.spectra.len(),
            }
        }
    }
}
