//! File formats: wide panel CSV, model and edge-list JSON, trace CSVs.
//!
//! Every writer takes optional metadata (the resolved run configuration),
//! emitted as a leading `# {json}` comment line in CSV files and as a
//! `metadata` field in JSON documents. Files are written atomically.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::em::EmTrace;
use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, GroundTruthGraph};
use crate::inference::StepDiagnostics;
use crate::model::SparseGevModel;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Reads a wide CSV: a header of series names, then one row per time step.
///
/// Lines starting with `#` are comments. Errors carry the 1-based file line
/// and column.
pub fn read_panel<T: Scalar, R: Read>(reader: R) -> Result<TimeSeriesPanel<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<String> = headers.iter().map(str::to_string).collect();
    let header_line = headers.position().map_or(1, |p| p.line() as usize);
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: header_line,
            col: 1,
            msg: "missing header row".into(),
        });
    }
    for (c, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::Parse {
                row: header_line,
                col: c + 1,
                msg: "empty series name".into(),
            });
        }
        if names[..c].contains(name) {
            return Err(Error::Parse {
                row: header_line,
                col: c + 1,
                msg: format!("duplicate series name '{name}'"),
            });
        }
    }
    let p = names.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |pos| pos.line() as usize);
        if rec.len() != p {
            return Err(Error::Parse {
                row: line,
                col: rec.len().min(p) + 1,
                msg: format!("expected {p} cells, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Parse {
                    row: line,
                    col: c + 1,
                    msg: "empty cell".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                col: c + 1,
                msg: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    col: c + 1,
                    msg: format!("'{cell}' is not finite"),
                });
            }
            data.push(T::lit(v));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            row: header_line + 1,
            col: 1,
            msg: "no data rows".into(),
        });
    }
    let values = Array2::from_shape_vec((rows, p), data).expect("rows x p cells were read");
    TimeSeriesPanel::new(names, values)
}

pub fn read_panel_file<T: Scalar>(path: &Path) -> Result<TimeSeriesPanel<T>> {
    read_panel(std::fs::File::open(path)?)
}

fn metadata_line(out: &mut String, metadata: Option<&Value>) {
    if let Some(m) = metadata {
        let _ = writeln!(out, "# {}", serde_json::to_string(m).expect("JSON value serializes"));
    }
}

/// Wide CSV with a header row. Values use the shortest decimal that reads
/// back to the same number.
pub fn panel_csv<T: Scalar>(names: &[String], values: ArrayView2<'_, T>, metadata: Option<&Value>) -> String {
    let mut out = String::new();
    metadata_line(&mut out, metadata);
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(names).expect("in-memory write");
    for row in values.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 input"));
    out
}

/// Columns `t, ess, min_weight, max_weight`.
pub fn ess_csv(diagnostics: &[StepDiagnostics], metadata: Option<&Value>) -> String {
    let mut out = String::new();
    metadata_line(&mut out, metadata);
    out.push_str("t,ess,min_weight,max_weight\n");
    for d in diagnostics {
        let _ = writeln!(out, "{},{},{},{}", d.t, d.ess, d.min_weight, d.max_weight);
    }
    out
}

/// Columns `iter, q, penalized_q, max_dbeta, sigma_1..sigma_P, min_ess`.
pub fn trace_csv<T: Scalar>(trace: &EmTrace<T>, metadata: Option<&Value>) -> String {
    let mut out = String::new();
    metadata_line(&mut out, metadata);
    let p = trace.iterations.first().map_or(0, |r| r.sigma.len());
    out.push_str("iter,q,penalized_q,max_dbeta");
    for i in 1..=p {
        let _ = write!(out, ",sigma_{i}");
    }
    out.push_str(",min_ess\n");
    for r in &trace.iterations {
        let _ = write!(out, "{},{},{},{}", r.iter, r.q, r.penalized_q, r.max_dbeta);
        for s in &r.sigma {
            let _ = write!(out, ",{s}");
        }
        let _ = writeln!(out, ",{}", r.min_ess);
    }
    out
}

/// One record per nonzero lagged weight; methods without lag weights give
/// a single record with `lag` absent and the score as weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub src: usize,
    pub dst: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeListDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
    pub names: Vec<String>,
    pub includes_self_loops: bool,
    pub edges: Vec<EdgeRecord>,
}

pub fn edge_records<T: Scalar>(graph: &DependencyGraph<T>) -> Vec<EdgeRecord> {
    let mut out = Vec::new();
    for e in graph.edges() {
        match &e.lag_weights {
            Some(w) => {
                for (l, &v) in w.iter().enumerate() {
                    if v != T::zero() {
                        out.push(EdgeRecord {
                            src: e.src,
                            dst: e.dst,
                            lag: Some(l + 1),
                            weight: v.as_f64(),
                        });
                    }
                }
            }
            None => out.push(EdgeRecord {
                src: e.src,
                dst: e.dst,
                lag: None,
                weight: e.score.as_f64(),
            }),
        }
    }
    out
}

pub fn edge_list_json<T: Scalar>(graph: &DependencyGraph<T>, names: &[String], metadata: Option<&Value>) -> String {
    let doc = EdgeListDoc {
        metadata: metadata.cloned(),
        names: names.to_vec(),
        includes_self_loops: graph.includes_self_loops,
        edges: edge_records(graph),
    };
    serde_json::to_string_pretty(&doc).expect("edge list serializes")
}

/// Ground truth from an edge-list document: every listed pair is an edge.
pub fn read_truth_json(text: &str) -> Result<(GroundTruthGraph, Vec<String>)> {
    let doc: EdgeListDoc = serde_json::from_str(text)?;
    let p = doc.names.len();
    let mut adjacency = Array2::from_elem((p, p), false);
    for e in &doc.edges {
        if e.src >= p || e.dst >= p {
            return Err(Error::Dimension(format!("edge {}->{} outside {p} named series", e.src, e.dst)));
        }
        adjacency[[e.src, e.dst]] = true;
    }
    Ok((GroundTruthGraph { adjacency }, doc.names))
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct ModelFile<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
    model: SparseGevModel<T>,
}

/// `{"metadata": ..., "names": [...], "model": {...}}`.
pub fn model_json<T: Scalar>(model: &SparseGevModel<T>, names: Option<&[String]>, metadata: Option<&Value>) -> String {
    let doc = ModelFile {
        metadata: metadata.cloned(),
        names: names.map(<[String]>::to_vec),
        model: model.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("model serializes")
}

/// Reads either a wrapped model document or a bare model object.
pub fn read_model_json<T: Scalar>(text: &str) -> Result<(SparseGevModel<T>, Option<Vec<String>>)> {
    match serde_json::from_str::<ModelFile<T>>(text) {
        Ok(doc) => Ok((doc.model, doc.names)),
        Err(wrapped) => match serde_json::from_str::<SparseGevModel<T>>(text) {
            Ok(m) => Ok((m, None)),
            Err(_) => Err(Error::Json(wrapped)),
        },
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
