//! Tabular export with JSON provenance sidecars.
//!
//! Every table is written as `<stem>.csv` or `<stem>.json` next to
//! `<stem>.<ext>.meta.json`, which records the schema tag, the crate version,
//! the command and the fully resolved scenario. Floats in CSV carry 17
//! significant digits (`{:.16e}`); JSON uses the shortest round-trip form and
//! writes non-finite values as `null`.

use crate::config::{OutputFormat, ScenarioConfig};
use crate::error::{BomcaError, Result};
use crate::experiments::{OracleRun, TrajectoryRun, WavefunctionRun};
use crate::manifold::{ManifoldSample, SampleStatus, TransmissionCurve};
use crate::reference::GridWavefunction;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SAMPLES_COLUMNS: [&str; 11] =
    ["order", "index", "status", "x0_re", "x0_im", "xf_re", "xf_im", "s_re", "s_im", "v_re", "v_im"];
pub const WAVEFUNCTION_COLUMNS: [&str; 7] =
    ["x", "psi_re", "psi_im", "density", "exact_re", "exact_im", "exact_density"];
pub const GRID_COLUMNS: [&str; 4] = ["x", "psi_re", "psi_im", "density"];
pub const TRANSMISSION_COLUMNS: [&str; 7] =
    ["energy", "t_f", "t_exact", "order", "t_bomca", "relative_divergence", "error"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<Option<&str>> for Cell {
    fn from(v: Option<&str>) -> Self {
        v.map_or(Cell::Empty, |s| Cell::Text(s.to_string()))
    }
}

/// A named, schema-tagged table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub stem: String,
    pub kind: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(stem: impl Into<String>, kind: &'static str, columns: &[&str]) -> Self {
        Table { stem: stem.into(), kind, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn schema(&self) -> String {
        format!("bomca/{}/v1", self.kind)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| BomcaError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BomcaError::Io(e.to_string()))
    }

    /// Array of row objects keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>())
                })
                .collect(),
        )
    }
}

fn csv_error(e: csv::Error) -> BomcaError {
    BomcaError::Io(e.to_string())
}

fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| BomcaError::Io(e.to_string()))
}

/// Sidecar contents for one output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance<'a> {
    pub schema: String,
    pub version: &'static str,
    pub command: &'a str,
    pub columns: Option<&'a [String]>,
    pub config: &'a ScenarioConfig,
}

pub struct OutputWriter<'a> {
    pub directory: PathBuf,
    pub format: OutputFormat,
    pub command: &'a str,
    pub config: &'a ScenarioConfig,
    written: Vec<PathBuf>,
}

impl<'a> OutputWriter<'a> {
    pub fn new(directory: &Path, format: OutputFormat, command: &'a str, config: &'a ScenarioConfig) -> Result<Self> {
        fs::create_dir_all(directory)?;
        Ok(OutputWriter { directory: directory.to_path_buf(), format, command, config, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn emit(&mut self, file: String, body: String, schema: String, columns: Option<&[String]>) -> Result<PathBuf> {
        let path = self.directory.join(&file);
        fs::write(&path, body)?;
        let meta = Provenance { schema, version: VERSION, command: self.command, columns, config: self.config };
        let meta_path = self.directory.join(format!("{file}.meta.json"));
        fs::write(&meta_path, to_json_string(&meta)?)?;
        self.written.push(path.clone());
        self.written.push(meta_path);
        Ok(path)
    }

    pub fn table(&mut self, table: &Table) -> Result<PathBuf> {
        let (file, body) = match self.format {
            OutputFormat::Csv => (format!("{}.csv", table.stem), table.to_csv()?),
            OutputFormat::Json => (format!("{}.json", table.stem), to_json_string(&table.to_json())?),
        };
        self.emit(file, body, table.schema(), Some(&table.columns))
    }

    /// A JSON document, written regardless of the table format.
    pub fn document<T: Serialize + ?Sized>(&mut self, stem: &str, kind: &str, value: &T) -> Result<PathBuf> {
        self.emit(format!("{stem}.json"), to_json_string(value)?, format!("bomca/{kind}/v1"), None)
    }
}

fn complex(z: Complex64) -> [Cell; 2] {
    [Cell::Float(z.re), Cell::Float(z.im)]
}

fn status_text(status: &SampleStatus) -> String {
    match status {
        SampleStatus::Ok => "ok".into(),
        SampleStatus::Dead(kind) => kind.clone(),
    }
}

/// `order,index,status,x0_re,x0_im,xf_re,xf_im,s_re,s_im,v_re,v_im`
pub fn samples_table(stem: impl Into<String>, order: usize, samples: &[ManifoldSample]) -> Table {
    let mut t = Table::new(stem, "samples", &SAMPLES_COLUMNS);
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![order.into(), i.into(), Cell::Text(status_text(&s.status))];
        for z in [s.x0, s.x_f, s.s_f, s.v_f] {
            row.extend(complex(z));
        }
        t.push(row);
    }
    t
}

/// `trajectory,t,x_re,x_im,v0_re,v0_im,…,vN_re,vN_im,s_re,s_im`
pub fn paths_table(run: &TrajectoryRun) -> Table {
    let mut columns = vec!["trajectory".to_string(), "t".into(), "x_re".into(), "x_im".into()];
    for n in 0..=run.order {
        columns.push(format!("v{n}_re"));
        columns.push(format!("v{n}_im"));
    }
    columns.extend(["s_re".to_string(), "s_im".into()]);
    let mut t = Table { stem: format!("paths_N{}", run.order), kind: "paths", columns, rows: Vec::new() };
    for (k, path) in run.paths.iter().enumerate() {
        for state in path {
            let mut row = vec![k.into(), state.t.into()];
            row.extend(complex(state.x));
            for v in &state.v {
                row.extend(complex(*v));
            }
            row.extend(complex(state.action));
            t.push(row);
        }
    }
    t
}

pub fn trajectory_tables(runs: &[TrajectoryRun]) -> Vec<Table> {
    runs.iter()
        .flat_map(|run| [samples_table(format!("samples_N{}", run.order), run.order, &run.samples), paths_table(run)])
        .collect()
}

/// `x,psi_re,psi_im,density`
pub fn grid_table(stem: impl Into<String>, psi: &GridWavefunction) -> Table {
    let mut t = Table::new(stem, "grid", &GRID_COLUMNS);
    for (x, p) in psi.positions().into_iter().zip(&psi.psi) {
        t.push(vec![x.into(), p.re.into(), p.im.into(), p.norm_sqr().into()]);
    }
    t
}

/// Per-window, per-order reconstructions next to the exact values, the
/// sample lists behind them, and a JSON summary of the L2 deviations.
pub fn wavefunction_tables(run: &WavefunctionRun) -> (Vec<Table>, Value) {
    let mut tables = Vec::new();
    let mut summary = Vec::new();
    for (w, window) in run.windows.iter().enumerate() {
        let mut orders = Vec::new();
        for (order, result) in &window.orders {
            match result {
                Ok(o) => {
                    let mut t = Table::new(format!("wavefunction_w{w}_N{order}"), "wavefunction", &WAVEFUNCTION_COLUMNS);
                    for ((x, p), e) in window.grid.iter().zip(&o.psi.psi).zip(&window.exact) {
                        t.push(vec![
                            (*x).into(),
                            p.re.into(),
                            p.im.into(),
                            p.norm_sqr().into(),
                            e.re.into(),
                            e.im.into(),
                            e.norm_sqr().into(),
                        ]);
                    }
                    tables.push(t);
                    tables.push(samples_table(format!("samples_w{w}_N{order}"), *order, &o.samples));
                    orders.push(json!({
                        "order": order,
                        "l2": o.l2,
                        "relative_l2": o.relative_l2,
                        "trajectories": o.samples.len(),
                        "error": null,
                    }));
                }
                Err(e) => orders.push(json!({
                    "order": order,
                    "l2": null,
                    "relative_l2": null,
                    "trajectories": null,
                    "error": format!("{}: {e}", e.kind()),
                })),
            }
        }
        summary.push(json!({ "window": [window.window.lo, window.window.hi], "orders": orders }));
    }
    tables.push(grid_table("exact", &run.exact));
    (tables, json!({ "t_f": run.t_f, "windows": summary }))
}

/// Long format, one row per (energy, order).
pub fn transmission_table(curve: &TransmissionCurve) -> Table {
    let mut t = Table::new("transmission", "transmission", &TRANSMISSION_COLUMNS);
    for e in &curve.entries {
        for o in &e.orders {
            let error = o.error.as_deref().or(e.exact_error.as_deref());
            t.push(vec![
                e.energy.into(),
                e.t_f.into(),
                e.exact.into(),
                o.order.into(),
                o.transmission.into(),
                o.relative_divergence.into(),
                error.into(),
            ]);
        }
    }
    t
}

pub fn oracle_tables(runs: &[OracleRun]) -> (Vec<Table>, Value) {
    let tables = runs.iter().enumerate().map(|(i, r)| grid_table(format!("oracle_{i}"), &r.psi)).collect();
    let summary = runs.iter().map(|r| &r.summary).collect::<Vec<_>>();
    (tables, json!(summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        assert_eq!(Cell::Float(0.1).csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(-3.0).csv(), "-3.0000000000000000e0");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn text_with_commas_is_quoted() {
        let mut t = Table::new("t", "test", &["a", "b"]);
        t.push(vec![Cell::Int(1), Cell::Text("x, y".into())]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,\"x, y\"\n");
    }

    #[test]
    fn json_rows_use_null_for_missing_values() {
        let mut t = Table::new("t", "test", &["a", "b"]);
        t.push(vec![Cell::Float(f64::NAN), Cell::Empty]);
        assert_eq!(t.to_json(), json!([{ "a": null, "b": null }]));
    }

    #[test]
    fn sidecar_records_schema_version_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = preset("fig1").unwrap();
        let mut w = OutputWriter::new(dir.path(), OutputFormat::Csv, "trajectories", &cfg).unwrap();
        let mut t = Table::new("samples_N1", "samples", &SAMPLES_COLUMNS);
        t.push(vec![Cell::Empty; SAMPLES_COLUMNS.len()]);
        let path = w.table(&t).unwrap();
        let meta: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("samples_N1.csv.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["schema"], "bomca/samples/v1");
        assert_eq!(meta["version"], VERSION);
        assert_eq!(meta["command"], "trajectories");
        let back: ScenarioConfig = serde_json::from_value(meta["config"].clone()).unwrap();
        assert_eq!(back, cfg);
        assert!(fs::read_to_string(path).unwrap().starts_with("order,index,status,"));
    }
}
