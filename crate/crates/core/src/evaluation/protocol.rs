use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::methods::{fit_method, MethodSpec};
use crate::evaluation::{edge_auc, normalize_panel};
use crate::graph::GroundTruthGraph;
use crate::model::{make_synthetic_suite, SyntheticRecipe};
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

pub const DEFAULT_WINDOWS: usize = 10;

/// Scores of one method on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub dataset: String,
    /// Penalty used for the graph task, when the method has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    /// Prediction minus truth per window and node; `None` for failed windows.
    #[serde(default)]
    pub window_errors: Vec<Option<Vec<f64>>>,
    #[serde(default)]
    pub failures: Vec<String>,
    #[serde(default)]
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl EvalReport {
    fn new(method: &str, dataset: &str) -> Self {
        Self {
            method: method.to_string(),
            dataset: dataset.to_string(),
            lambda: None,
            auc: None,
            rmse: None,
            window_errors: Vec::new(),
            failures: Vec::new(),
            partial: false,
            wall_time_secs: None,
        }
    }

    /// `sqrt(mean e²)` over every stored error.
    pub fn recompute_rmse(&self) -> Option<f64> {
        let errs: Vec<f64> = self.window_errors.iter().flatten().flatten().copied().collect();
        if errs.is_empty() {
            return None;
        }
        Some((errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt())
    }
}

/// One-step prediction error over `windows` sliding windows.
///
/// Window `s` trains on rows `s..T-S+s` and predicts row `T-S+s`. Any penalty
/// grid is resolved once, on the first training window.
pub fn sliding_window_rmse<T: Scalar>(panel: &TimeSeriesPanel<T>, spec: &MethodSpec<T>, windows: usize) -> Result<EvalReport> {
    let len = panel.len();
    if windows == 0 {
        return Err(Error::Domain("need at least one window".into()));
    }
    if len <= windows + spec.lag() + 2 {
        return Err(Error::Domain(format!(
            "panel of length {len} is too short for {windows} windows at lag {}",
            spec.lag()
        )));
    }
    let train_len = len - windows;
    let mut report = EvalReport::new(spec.name(), "");
    let resolved = spec.resolve(&panel.slice_time(0..train_len)?)?;
    report.lambda = resolved.lambda().map(|l| l.as_f64());
    for s in 0..windows {
        let run = || -> Result<Vec<f64>> {
            let train = panel.slice_time(s..s + train_len)?;
            let (fitted, _) = fit_method(&resolved, &train)?;
            let pred = fitted.predict_after(&train)?;
            Ok(pred
                .iter()
                .zip(panel.row(s + train_len))
                .map(|(a, b)| (*a - *b).as_f64())
                .collect())
        };
        match run() {
            Ok(e) => report.window_errors.push(Some(e)),
            Err(e) => {
                report.window_errors.push(None);
                report.failures.push(format!("window {s}: {e}"));
                report.partial = true;
            }
        }
    }
    report.rmse = report.recompute_rmse();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BenchmarkDataset<T> {
    pub name: String,
    pub panel: TimeSeriesPanel<T>,
    pub truth: Option<GroundTruthGraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub windows: usize,
    /// Count self pairs in the AUC.
    pub self_loops: bool,
    pub graph_task: bool,
    pub prediction_task: bool,
    /// Record wall time per cell (makes the report run-dependent).
    pub timing: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            windows: DEFAULT_WINDOWS,
            self_loops: false,
            graph_task: true,
            prediction_task: true,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_auc: Option<f64>,
    pub mean_rmse: Option<f64>,
    pub auc_cells: usize,
    pub rmse_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub cells: Vec<EvalReport>,
    pub summary: Vec<MethodSummary>,
}

/// The synthetic suite for `seed`, named `synth-1`, `synth-2`, ...
pub fn synthetic_suite<T: Scalar>(n_datasets: usize, recipe: &SyntheticRecipe, seed: u64) -> Result<Vec<BenchmarkDataset<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(make_synthetic_suite::<T, _>(n_datasets, recipe, &mut rng)?
        .into_iter()
        .enumerate()
        .map(|(k, d)| BenchmarkDataset {
            name: format!("synth-{}", k + 1),
            panel: d.panel,
            truth: Some(d.truth),
        })
        .collect())
}

fn run_cell<T: Scalar>(ds: &BenchmarkDataset<T>, spec: &MethodSpec<T>, cfg: &BenchmarkConfig) -> EvalReport {
    let start = Instant::now();
    let mut report = EvalReport::new(spec.name(), &ds.name);
    let panel = match normalize_panel(&ds.panel) {
        Ok((p, _)) => p,
        Err(e) => {
            report.failures.push(format!("normalize: {e}"));
            report.partial = true;
            return report;
        }
    };
    if cfg.graph_task {
        if let Some(truth) = &ds.truth {
            let res = fit_method(spec, &panel).and_then(|(fitted, resolved)| {
                report.lambda = resolved.lambda().map(|l| l.as_f64());
                edge_auc(&fitted.graph(), truth, cfg.self_loops)
            });
            match res {
                Ok(a) => report.auc = Some(a),
                Err(e) => {
                    report.failures.push(format!("graph: {e}"));
                    report.partial = true;
                }
            }
        }
    }
    if cfg.prediction_task {
        match sliding_window_rmse(&panel, spec, cfg.windows) {
            Ok(r) => {
                report.rmse = r.rmse;
                report.window_errors = r.window_errors;
                report.failures.extend(r.failures);
                report.partial |= r.partial;
            }
            Err(e) => {
                report.failures.push(format!("prediction: {e}"));
                report.partial = true;
            }
        }
    }
    if cfg.timing {
        report.wall_time_secs = Some(start.elapsed().as_secs_f64());
    }
    report
}

/// Runs every method on every dataset (normalized first) for both tasks.
///
/// Cells are independent; failures are recorded in the cell. The result is
/// ordered by dataset, then method, regardless of scheduling.
pub fn run_benchmark<T: Scalar>(
    suite: &[BenchmarkDataset<T>],
    methods: &[MethodSpec<T>],
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    if suite.is_empty() || methods.is_empty() {
        return Err(Error::Config("benchmark needs at least one dataset and one method".into()));
    }
    let cells: Vec<(usize, usize)> = (0..suite.len()).flat_map(|d| (0..methods.len()).map(move |m| (d, m))).collect();
    let cells: Vec<EvalReport> = cells
        .par_iter()
        .map(|&(d, m)| run_cell(&suite[d], &methods[m], cfg))
        .collect();
    let summary = methods
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let mine: Vec<&EvalReport> = cells.iter().skip(m).step_by(methods.len()).collect();
            let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            let aucs: Vec<f64> = mine.iter().filter_map(|c| c.auc).collect();
            let rmses: Vec<f64> = mine.iter().filter_map(|c| c.rmse).collect();
            MethodSummary {
                method: spec.name().to_string(),
                auc_cells: aucs.len(),
                rmse_cells: rmses.len(),
                mean_auc: mean(aucs),
                mean_rmse: mean(rmses),
            }
        })
        .collect();
    Ok(BenchmarkReport {
        config: cfg.clone(),
        cells,
        summary,
    })
}

/// Plain-text table: one row per method with mean AUC and RMSE.
pub fn render_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let n_datasets = report.cells.iter().map(|c| c.dataset.as_str()).collect::<std::collections::BTreeSet<_>>().len();
    let _ = writeln!(
        out,
        "# {} dataset(s), {} window(s), self loops {} in AUC",
        n_datasets,
        report.config.windows,
        if report.config.self_loops { "included" } else { "excluded" }
    );
    let _ = writeln!(out, "{:<12} {:>8} {:>8}", "Method", "Avg AUC", "RMSE");
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for s in &report.summary {
        let _ = writeln!(out, "{:<12} {:>8} {:>8}", s.method, fmt(s.mean_auc), fmt(s.mean_rmse));
    }
    let failed: usize = report.cells.iter().filter(|c| c.partial).count();
    if failed > 0 {
        let _ = writeln!(out, "# {failed} cell(s) incomplete; see the JSON report");
    }
    out
}
