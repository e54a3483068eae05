//! Declarative, seeded experiment runner.
//!
//! An [`ExperimentSpec`] (TOML, see [`spec`]) describes a Cartesian grid over
//! `(n, β, h, scheme, ε)` crossed with disorder realizations and start values.
//! [`run_experiment`] executes every cell on a worker pool and returns rows in
//! canonical order; with an output directory it also writes the files listed
//! in [`output`].

pub mod output;
pub mod presets;
pub mod run;
pub mod spec;
pub mod summary;

pub use output::{fmt_f64, to_json_string, write_results_csv, SpectrumRecord, TraceRow, RESULT_COLUMNS, TRACE_COLUMNS};
pub use presets::{builtin_presets, preset, RSB2_REFERENCE_BETA3_H05};
pub use run::{
    enumerate_cells, run_cell, run_experiment, Cell, CellOutput, ExperimentResult, RealizationCensus, ResultRow,
    RunOptions,
};
pub use spec::{AcceptanceRule, Axis, ExperimentSpec, Grid, OutputKind, Realizations, SchemeDefaults, Starts, Variant};
pub use summary::{summarize, Summary, SummaryKind};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::StartShape;
    use crate::dynamics::Scheme;

    fn small_spec() -> ExperimentSpec {
        let mut s = preset("fig6_census_small").unwrap().scaled(Some(3), Some(4), Some(10));
        s.grid.n = vec![8];
        s.outputs = vec![OutputKind::Diagnostics, OutputKind::Census, OutputKind::Trace];
        s.trace_every = 50;
        s.grid.scheme = vec![Scheme::EpsilonBanach, Scheme::TwoStep];
        s.scheme_config.max_iters = 200;
        s
    }

    #[test]
    fn one_cell_gives_one_row() {
        let mut s = small_spec();
        s.realizations.count = 1;
        s.starts.count = 1;
        s.grid.scheme = vec![Scheme::Banach];
        let r = run_experiment(&s, &RunOptions::default()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.census.len(), 1);
    }

    #[test]
    fn serial_equals_parallel_and_cells_rerun() {
        let s = small_spec();
        let serial = run_experiment(&s, &RunOptions { jobs: 1, out_dir: None }).unwrap();
        let parallel = run_experiment(&s, &RunOptions { jobs: 3, out_dir: None }).unwrap();
        assert_eq!(serial.rows.len() as u64, s.cell_count());
        let bytes = |r: &ExperimentResult| {
            let mut v = Vec::new();
            write_results_csv(&mut v, &r.rows).unwrap();
            v
        };
        assert_eq!(bytes(&serial), bytes(&parallel));
        assert_eq!(serial.traces, parallel.traces);
        assert_eq!(to_json_string(&serial.census).unwrap(), to_json_string(&parallel.census).unwrap());
        for id in [0u64, 5, serial.rows.len() as u64 - 1] {
            assert_eq!(run_cell(&s, id).unwrap().row, serial.rows[id as usize]);
        }
    }

    #[test]
    fn starts_do_not_depend_on_epsilon() {
        let s = small_spec();
        let cells = enumerate_cells(&s).unwrap();
        let a = cells.iter().find(|c| c.start == 2 && c.scheme == Scheme::EpsilonBanach).unwrap();
        let b = cells.iter().rev().find(|c| c.start == 2 && c.realization == a.realization).unwrap();
        assert_ne!(a.epsilon, b.epsilon);
        assert_eq!(a.start_seed(&s), b.start_seed(&s));
        let c = cells.iter().find(|c| c.realization == 1).unwrap();
        assert_ne!(a.realization_seed(&s), c.realization_seed(&s));
    }

    #[test]
    fn output_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = small_spec();
        s.starts.shape = StartShape::FullCube;
        let r = run_experiment(&s, &RunOptions { jobs: 2, out_dir: Some(dir.path().to_path_buf()) }).unwrap();
        for f in [
            "manifest.json",
            "results.csv",
            "rows.partial.csv",
            "trace.csv",
            "census.json",
            "spec.toml",
            "summary_histogram.json",
            "summary_per_epsilon.json",
            "summary_per_realization.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULT_COLUMNS.join(","));
        assert_eq!(lines.count(), r.rows.len());
        let partial = std::fs::read_to_string(dir.path().join("rows.partial.csv")).unwrap();
        assert_eq!(partial.lines().count(), r.rows.len() + 1);
        let spec = ExperimentSpec::from_toml(&std::fs::read_to_string(dir.path().join("spec.toml")).unwrap()).unwrap();
        assert_eq!(spec, s);
    }

    #[test]
    fn census_representatives_are_separated() {
        let r = run_experiment(&small_spec(), &RunOptions::default()).unwrap();
        for c in &r.census {
            assert_eq!(c.distinct, c.solutions.len());
            assert!(c.accepted >= c.distinct);
            let reps = c.solutions.representatives();
            for i in 0..reps.len() {
                for j in i + 1..reps.len() {
                    let d = crate::dynamics::mae(&reps[i].m, &reps[j].m).unwrap();
                    assert!(d >= c.solutions.threshold());
                }
            }
        }
    }
}
