//! Per-realization collection of accepted solutions with sup-norm
//! deduplication: a candidate is new iff its distance to every stored
//! representative is at least the threshold. First-accepted order is kept, so
//! the result depends on insertion order.

use serde::Serialize;

use crate::diagnostics::SolutionDiagnostics;
use crate::disorder::Magnetization;
use crate::dynamics::{mae_slice, Scheme};

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub realization_seed: u64,
    pub start_seed: u64,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRecord {
    pub m: Magnetization,
    pub diagnostics: SolutionDiagnostics,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistinctSet {
    representatives: Vec<SolutionRecord>,
    threshold: f64,
}

impl Default for DistinctSet {
    fn default() -> Self {
        Self::new(DEFAULT_DEDUP_THRESHOLD)
    }
}

impl DistinctSet {
    pub fn new(threshold: f64) -> Self {
        DistinctSet { representatives: Vec::new(), threshold }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn representatives(&self) -> &[SolutionRecord] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Appends `rec` unless some representative lies closer than the threshold.
    /// Returns whether it was accepted.
    ///
    /// # Panics
    /// If `rec.m` has non-finite components.
    pub fn dedup_insert(&mut self, rec: SolutionRecord) -> bool {
        assert!(rec.m.is_finite(), "dedup_insert: non-finite magnetization");
        let candidate = rec.m.values();
        let duplicate = self.representatives.iter().any(|r| mae_slice(r.m.values(), candidate) < self.threshold);
        if !duplicate {
            self.representatives.push(rec);
        }
        !duplicate
    }

    /// Sup-norm distance of every representative to `reference`.
    pub fn distance_to_reference(&self, reference: &SolutionRecord) -> Vec<f64> {
        self.representatives.iter().map(|r| mae_slice(r.m.values(), reference.m.values())).collect()
    }

    /// Distances to the first representative (empty set → empty list).
    pub fn distance_to_first(&self) -> Vec<f64> {
        self.representatives.first().map(|r| self.distance_to_reference(r)).unwrap_or_default()
    }
}
