//! CSV and JSON result files.
//!
//! CSV files have exactly the columns in [`CSV_HEADER`], one row per result
//! (sweep rows keep grid order and error rows are kept). JSON files wrap
//! every result as `{"schema": "qtm/1", "kind": ..., "result": ...}`.
//! Reals are written in shortest round-trip form in both formats, so a
//! reloaded JSON value is bit-identical to the one emitted.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::engine::EngineRun;
use crate::error::{Error, Result};
use crate::machine::FridgeSpec;
use crate::observables::CurrentsReport;
use crate::solvers::SteadyStateResult;
use crate::state::CMatrix;
use crate::sweep::{CarnotCheck, RowOutcome, SweepTable};

pub const SCHEMA: &str = "qtm/1";

pub const CSV_HEADER: [&str; 14] = [
    "param",
    "Q1",
    "Q2",
    "Q3",
    "W",
    "J",
    "dq1",
    "dq2",
    "dq3",
    "Teff1",
    "Teff2",
    "Teff3",
    "cop_or_eff",
    "status",
];

/// Shortest decimal that parses back to `x`, in exponent form outside
/// `[1e-3, 1e16)`.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Row-major `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &MatrixRows) -> Result<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::domain("matrix rows must form a square array"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = rows[i][j];
        num_complex::Complex64::new(re, im)
    }))
}

/// Schema-versioned JSON envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema: String,
    pub kind: String,
    pub result: T,
}

impl<T> Document<T> {
    pub fn new(kind: &str, result: T) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            kind: kind.to_string(),
            result,
        }
    }
}

/// A solved refrigerator steady state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOutput {
    pub spec: FridgeSpec,
    pub state: MatrixRows,
    pub residual: f64,
    pub gap_proxy: f64,
    pub generator_norm: f64,
    pub used_svd_fallback: bool,
    pub currents: CurrentsReport,
}

impl SteadyStateOutput {
    pub fn new(spec: &FridgeSpec, steady: &SteadyStateResult, currents: CurrentsReport) -> Self {
        Self {
            spec: *spec,
            state: matrix_to_rows(steady.state.matrix()),
            residual: steady.residual,
            gap_proxy: steady.gap_proxy,
            generator_norm: steady.generator_norm,
            used_svd_fallback: steady.used_svd_fallback,
            currents,
        }
    }
}

/// Currents of one refrigerator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentsOutput {
    pub spec: FridgeSpec,
    pub report: CurrentsReport,
}

/// One sampled refrigerator state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: MatrixRows,
    pub report: CurrentsReport,
    /// Trace distance to the steady state.
    pub distance_to_steady: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutput {
    pub spec: FridgeSpec,
    pub step: f64,
    pub samples: Vec<TrajectorySample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarnotOutput {
    pub check: CarnotCheck,
    /// Engine grid measurements.
    pub table: Option<SweepTable>,
    /// Currents at the reversibility point (refrigerator).
    pub report: Option<CurrentsReport>,
}

/// One CSV line.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow<'a> {
    pub param: Option<f64>,
    pub report: Option<&'a CurrentsReport>,
    pub status: String,
}

impl<'a> CsvRow<'a> {
    pub fn ok(param: Option<f64>, report: &'a CurrentsReport) -> Self {
        Self {
            param,
            report: Some(report),
            status: "ok".to_string(),
        }
    }

    fn fields(&self) -> Vec<String> {
        let real = |x: Option<f64>| x.map(format_real).unwrap_or_default();
        let pick = |v: &[f64], i: usize| real(v.get(i).copied());
        let mut out = vec![real(self.param)];
        match self.report {
            Some(r) => {
                out.extend((0..3).map(|i| pick(&r.heat, i)));
                out.push(real(r.work));
                out.push(format_real(r.interaction_current));
                out.extend((0..3).map(|i| pick(&r.delta_q, i)));
                out.extend((0..3).map(|i| r.effective_temperature.get(i).map(|t| t.to_string()).unwrap_or_default()));
                out.push(real(r.cop_or_eff));
            }
            None => out.extend(std::iter::repeat_n(String::new(), 12)),
        }
        out.push(self.status.clone());
        out
    }
}

/// Rows of a sweep table, error rows included.
pub fn sweep_rows(table: &SweepTable) -> Vec<CsvRow<'_>> {
    table
        .rows
        .iter()
        .map(|row| match &row.outcome {
            RowOutcome::Ok { report } => CsvRow::ok(Some(row.param), report),
            RowOutcome::Error { message } => CsvRow {
                param: Some(row.param),
                report: None,
                status: format!("error: {message}"),
            },
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[CsvRow<'_>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(doc: &Document<T>, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, doc)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Writes `doc` as JSON or `rows` as CSV to `path`, or to stdout when `path` is `None`.
pub fn emit<T: Serialize>(doc: &Document<T>, rows: &[CsvRow<'_>], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Error::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))
        })?)),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        OutputFormat::Json => write_json(doc, sink),
        OutputFormat::Csv => write_csv(rows, sink),
    }
}

/// CSV row of an engine run: the windowed report. Samples are exported in JSON only.
pub fn engine_rows(run: &EngineRun) -> Vec<CsvRow<'_>> {
    vec![CsvRow::ok(None, &run.report)]
}
