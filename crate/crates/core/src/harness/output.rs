//! Files written by an experiment run.
//!
//! | file                         | content                                            |
//! |------------------------------|----------------------------------------------------|
//! | `rows.partial.csv`           | result rows appended as groups finish (run order)  |
//! | `results.csv`                | all rows in cell order, columns [`RESULT_COLUMNS`] |
//! | `trace.csv`                  | per-iteration errors, columns [`TRACE_COLUMNS`]    |
//! | `spectra.json`               | Jacobian eigenvalues per cell                      |
//! | `census.json`                | distinct solutions per realization                 |
//! | `summary_<kind>.json`        | aggregates from [`summarize`](super::summarize)    |
//! | `spec.toml`                  | the experiment that was run                        |
//! | `manifest.json`              | written last; its presence marks a complete run    |
//!
//! Floats are written with 17 significant digits; missing values are empty
//! CSV fields or JSON `null`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{ExperimentResult, ResultRow};
use super::spec::{ExperimentSpec, OutputKind};
use super::summary::{summarize, SummaryKind};
use crate::error::Result;

pub const RESULT_COLUMNS: [&str; 23] = [
    "cell",
    "n",
    "beta",
    "h",
    "scheme",
    "epsilon",
    "onsager_mode",
    "realization",
    "realization_seed",
    "start",
    "start_seed",
    "status",
    "detail",
    "converged",
    "iterations",
    "mse_final",
    "mae_final",
    "plefka",
    "tap_fe",
    "inside_cube",
    "good",
    "repulsion_fraction",
    "lambda_min",
];

pub const TRACE_COLUMNS: [&str; 5] = ["cell", "k", "mse", "mae", "inside_cube"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub cell: u64,
    pub k: usize,
    pub mse: f64,
    pub mae: f64,
    pub inside_cube: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRecord {
    pub cell: u64,
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    /// Limiting order parameter at `(beta, h)`.
    pub q: f64,
    /// Onsager coefficient used in the Jacobian.
    pub onsager_q: f64,
    pub realization: u64,
    pub lambda_min: f64,
    pub repulsion_fraction: f64,
    /// KS distance of the eigenvalues of `Ĵ` to the shifted semicircle.
    pub ks_j_hat: f64,
    pub eigenvalues: Vec<f64>,
}

/// `{:.16e}`; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl ResultRow {
    /// Fields in [`RESULT_COLUMNS`] order.
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.cell.to_string(),
            self.n.to_string(),
            fmt_f64(self.beta),
            fmt_f64(self.h),
            self.scheme.as_str().into(),
            fmt_f64(self.epsilon),
            self.onsager_mode.as_str().into(),
            self.realization.to_string(),
            self.realization_seed.to_string(),
            self.start.to_string(),
            self.start_seed.to_string(),
            self.status.clone(),
            self.detail.clone(),
            self.converged.to_string(),
            self.iterations.to_string(),
            fmt_f64(self.mse_final),
            fmt_f64(self.mae_final),
            fmt_f64(self.plefka),
            fmt_opt(self.tap_fe),
            self.inside_cube.to_string(),
            self.good.to_string(),
            fmt_opt(self.repulsion_fraction),
            fmt_opt(self.lambda_min),
        ]
    }
}

impl TraceRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.cell.to_string(),
            self.k.to_string(),
            fmt_f64(self.mse),
            fmt_f64(self.mae),
            self.inside_cube.to_string(),
        ]
    }
}

/// JSON formatter that writes every float with 17 significant digits.
struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// Serializes `value` as JSON with 17-digit floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(to_json_string(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Writes rows to any sink in canonical CSV form.
pub fn write_results_csv<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RESULT_COLUMNS)?;
    for r in rows {
        csv.write_record(r.to_record())?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    complete: bool,
    cells: usize,
    files: Vec<String>,
    result_columns: &'a [&'a str],
}

pub(crate) struct OutputSink {
    dir: PathBuf,
    partial: csv::Writer<File>,
}

impl OutputSink {
    pub(crate) fn create(dir: &Path, spec: &ExperimentSpec) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let manifest = dir.join("manifest.json");
        if manifest.exists() {
            fs::remove_file(manifest)?;
        }
        fs::write(dir.join("spec.toml"), spec.to_toml()?)?;
        let mut partial = csv::Writer::from_writer(File::create(dir.join("rows.partial.csv"))?);
        partial.write_record(RESULT_COLUMNS)?;
        partial.flush()?;
        Ok(OutputSink { dir: dir.to_path_buf(), partial })
    }

    pub(crate) fn append_rows<'a>(&mut self, rows: impl Iterator<Item = &'a ResultRow>) -> Result<()> {
        for r in rows {
            self.partial.write_record(r.to_record())?;
        }
        self.partial.flush()?;
        Ok(())
    }

    pub(crate) fn finish(self, spec: &ExperimentSpec, result: &ExperimentResult) -> Result<()> {
        let dir = self.dir;
        drop(self.partial);
        let mut files = vec!["spec.toml".to_string(), "rows.partial.csv".to_string(), "results.csv".to_string()];
        write_results_csv(BufWriter::new(File::create(dir.join("results.csv"))?), &result.rows)?;

        if spec.wants(OutputKind::Trace) {
            let mut csv = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("trace.csv"))?));
            csv.write_record(TRACE_COLUMNS)?;
            for t in &result.traces {
                csv.write_record(t.to_record())?;
            }
            csv.flush()?;
            files.push("trace.csv".into());
        }
        if spec.wants(OutputKind::Spectrum) {
            write_json(&dir.join("spectra.json"), &result.spectra)?;
            files.push("spectra.json".into());
        }
        if spec.wants(OutputKind::Census) {
            write_json(&dir.join("census.json"), &result.census)?;
            files.push("census.json".into());
        }
        let mut kinds = vec![SummaryKind::Histogram, SummaryKind::PerEpsilon];
        if spec.wants(OutputKind::Census) {
            kinds.push(SummaryKind::PerRealization);
        }
        if spec.wants(OutputKind::Spectrum) {
            kinds.push(SummaryKind::SpectrumCdf);
        }
        for kind in kinds {
            let name = format!("summary_{}.json", kind.as_str());
            write_json(&dir.join(&name), &summarize(result, kind))?;
            files.push(name);
        }
        write_json(
            &dir.join("manifest.json"),
            &Manifest {
                name: &spec.name,
                complete: true,
                cells: result.rows.len(),
                files,
                result_columns: &RESULT_COLUMNS,
            },
        )
    }
}
