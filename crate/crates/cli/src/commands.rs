use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sparse_gev::em::{forecast_observations, roughness_ratio};
use sparse_gev::evaluation::{
    fit_method, normalize_panel, render_table, run_benchmark, synthetic_suite, BenchmarkDataset, Fitted, Normalization,
};
use sparse_gev::io::{
    edge_list_json, ess_csv, model_json, panel_csv, read_model_json, read_panel_file, read_truth_json, trace_csv,
    write_atomic,
};
use sparse_gev::model::{seeded_dataset, SyntheticDataset};
use sparse_gev::{Error, Panel, Result};

use crate::config::Config;

pub fn metadata(command: &str, cfg: &Config) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes())?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Panel as fitted: rescaled to [0, 1] unless normalization is off.
fn prepare(panel: Panel, cfg: &Config) -> Result<(Panel, Option<Normalization<f64>>)> {
    if cfg.normalize {
        let (p, n) = normalize_panel(&panel)?;
        Ok((p, Some(n)))
    } else {
        Ok((panel, None))
    }
}

pub fn simulate(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let meta = metadata("simulate", cfg);
    let SyntheticDataset { model, panel, .. } = seeded_dataset::<f64>(&cfg.recipe, cfg.seed)?;
    let names = panel.names().to_vec();
    Ok(vec![
        write(out, "panel.csv", &panel_csv(&names, panel.values(), Some(&meta)))?,
        write(out, "truth.json", &edge_list_json(&model.extract_graph(), &names, Some(&meta)))?,
        write(out, "model.json", &model_json(&model, Some(&names), Some(&meta)))?,
    ])
}

pub fn fit(cfg: &Config, input: &Path, out: &Path) -> Result<(Vec<PathBuf>, Option<f64>)> {
    let raw: Panel = read_panel_file(input)?;
    let (panel, _) = prepare(raw, cfg)?;
    ensure_dir(out)?;
    let spec = cfg.spec(cfg.method);
    let (fitted, resolved) = fit_method(&spec, &panel)?;
    let meta = json!({
        "command": "fit",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "resolved": resolved,
    });
    let names = panel.names().to_vec();
    let mut files = vec![write(out, "graph.json", &edge_list_json(&fitted.graph(), &names, Some(&meta)))?];
    let mut roughness = None;
    match &fitted {
        Fitted::SparseGev { fit, .. } => {
            files.push(write(out, "model.json", &model_json(&fit.model, Some(&names), Some(&meta)))?);
            files.push(write(out, "trace.csv", &trace_csv(&fit.trace, Some(&meta)))?);
            files.push(write(out, "ess.csv", &ess_csv(&fit.posterior.diagnostics, Some(&meta)))?);
            roughness = Some(roughness_ratio(&fit.posterior, &panel));
        }
        Fitted::Granger(f) => {
            files.push(write(out, "model.json", &baseline_json(&meta, &names, &f.predictor))?);
        }
        Fitted::TransferEntropy(f) => {
            files.push(write(out, "model.json", &baseline_json(&meta, &names, &f.predictor))?);
        }
        Fitted::Copula(f) => {
            files.push(write(out, "model.json", &baseline_json(&meta, &names, &f.predictor))?);
        }
    }
    Ok((files, roughness))
}

fn baseline_json<M: serde::Serialize>(meta: &Value, names: &[String], model: &M) -> String {
    let doc = json!({ "metadata": meta, "names": names, "model": model });
    serde_json::to_string_pretty(&doc).expect("model serializes")
}

/// One-step predictions for steps `L..=T` in the units of the input file.
pub fn predict(cfg: &Config, input: &Path, model: Option<&Path>, out: &Path) -> Result<PathBuf> {
    let raw: Panel = read_panel_file(input)?;
    let (panel, norm) = prepare(raw, cfg)?;
    let (mut pred, first_step) = match model {
        Some(path) => {
            let (m, _) = read_model_json::<f64>(&std::fs::read_to_string(path)?)?;
            if m.n_series() != panel.n_series() {
                return Err(Error::Dimension(format!(
                    "model has {} series, panel has {}",
                    m.n_series(),
                    panel.n_series()
                )));
            }
            (forecast_observations(&m, &panel, cfg.em.particles, cfg.em.seed)?, m.lag())
        }
        None => {
            let fitted = fit_method(&cfg.spec(cfg.method), &panel)?.0;
            (fitted.one_step_forecasts(&panel)?, fitted.lag())
        }
    };
    if let Some(n) = &norm {
        for ((_, i), v) in pred.indexed_iter_mut() {
            *v = n.invert(i, *v);
        }
    }
    let mut meta = metadata("predict", cfg);
    meta["first_step"] = json!(first_step);
    if let Some(p) = out.parent() {
        if !p.as_os_str().is_empty() {
            ensure_dir(p)?;
        }
    }
    let text = panel_csv(panel.names(), pred.view(), Some(&meta));
    write_atomic(out, text.as_bytes())?;
    Ok(out.to_path_buf())
}

fn report_files(command: &str, cfg: &Config, suite: &[BenchmarkDataset<f64>], out: &Path) -> Result<(Vec<PathBuf>, String)> {
    let report = run_benchmark(suite, &cfg.specs(), &cfg.benchmark)?;
    let table = render_table(&report);
    let doc = json!({ "metadata": metadata(command, cfg), "report": report });
    ensure_dir(out)?;
    let files = vec![
        write(out, "report.json", &serde_json::to_string_pretty(&doc)?)?,
        write(out, "table.txt", &table)?,
    ];
    Ok((files, table))
}

pub fn evaluate(cfg: &Config, input: &Path, truth: Option<&Path>, out: &Path) -> Result<(Vec<PathBuf>, String)> {
    let panel: Panel = read_panel_file(input)?;
    let truth = match truth {
        Some(path) => {
            let (t, names) = read_truth_json(&std::fs::read_to_string(path)?)?;
            if names != panel.names() {
                return Err(Error::Dimension("truth and panel name different series".into()));
            }
            Some(t)
        }
        None => None,
    };
    let name = input.file_stem().map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
    report_files("evaluate", cfg, &[BenchmarkDataset { name, panel, truth }], out)
}

pub fn benchmark(cfg: &Config, out: &Path) -> Result<(Vec<PathBuf>, String)> {
    let suite = synthetic_suite::<f64>(cfg.datasets, &cfg.recipe, cfg.seed)?;
    report_files("benchmark", cfg, &suite, out)
}
