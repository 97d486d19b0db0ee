use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sparse_gev::baselines::{MarginalKind, TeConfig};
use sparse_gev::evaluation::{standard_methods, BenchmarkConfig, DEFAULT_LAMBDA_GRID};
use sparse_gev::model::SyntheticRecipe;
use sparse_gev::{EmSettings, Error, Method, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    SparseGev,
    Granger,
    Te,
    Copula,
}

pub const ALL_METHODS: [MethodName; 4] = [MethodName::SparseGev, MethodName::Granger, MethodName::Te, MethodName::Copula];

/// Everything a run depends on. Missing keys in a config file take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Seeds simulation and the benchmark suite.
    pub seed: u64,
    pub method: MethodName,
    pub em: EmSettings,
    /// Penalties tried by forward-chaining validation; empty keeps `em.lambda`.
    pub lambda_grid: Vec<f64>,
    pub te: TeConfig,
    pub marginal: MarginalKind,
    /// Rescale each series to [0, 1] before fitting.
    pub normalize: bool,
    pub recipe: SyntheticRecipe,
    pub datasets: usize,
    pub methods: Vec<MethodName>,
    pub benchmark: BenchmarkConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            method: MethodName::SparseGev,
            em: EmSettings::default(),
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            te: TeConfig::default(),
            marginal: MarginalKind::default(),
            normalize: true,
            recipe: SyntheticRecipe::default(),
            datasets: 8,
            methods: ALL_METHODS.to_vec(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

impl Config {
    pub fn spec(&self, name: MethodName) -> Method {
        let all = standard_methods(&self.em, &self.lambda_grid, &self.te, self.marginal);
        let k = ALL_METHODS.iter().position(|&m| m == name).expect("known method");
        all[k].clone()
    }

    pub fn specs(&self) -> Vec<Method> {
        self.methods.iter().map(|&m| self.spec(m)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.datasets == 0 {
            return Err(Error::Config("datasets must be positive".into()));
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("lambda grid entries must be finite and >= 0".into()));
        }
        Ok(())
    }
}

// clap treats `Option<Vec<_>>` as a repeated flag; these keep one value per flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodList(pub Vec<MethodName>);

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_methods(s: &str) -> std::result::Result<MethodList, String> {
    if s == "all" {
        return Ok(MethodList(ALL_METHODS.to_vec()));
    }
    s.split(',')
        .map(|m| MethodName::from_str(m.trim(), true))
        .collect::<std::result::Result<_, _>>()
        .map(MethodList)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Grid)
}

/// Settings shared by every subcommand. Flags given here win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for simulation, the benchmark suite and the particle filter.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodName>,
    /// Comma-separated methods, or `all`.
    #[arg(long, global = true, value_parser = parse_methods)]
    pub methods: Option<MethodList>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Comma-separated penalties chosen by forward-chaining validation.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub lambda_grid: Option<Grid>,
    /// Transition noise scale of the latent process.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub particles: Option<usize>,
    #[arg(long, global = true)]
    pub lag: Option<usize>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub marginal: Option<Marginal>,
    /// Number of synthetic datasets in the benchmark suite.
    #[arg(long, global = true)]
    pub datasets: Option<usize>,
    /// Number of series in simulated panels.
    #[arg(long, global = true)]
    pub series: Option<usize>,
    /// Length of simulated panels.
    #[arg(long, global = true)]
    pub length: Option<usize>,
    /// Sliding windows for the prediction RMSE.
    #[arg(long, global = true)]
    pub windows: Option<usize>,
    /// Count self pairs in the AUC.
    #[arg(long, global = true)]
    pub self_loops: bool,
    /// Fit on raw values instead of min/max rescaled ones.
    #[arg(long, global = true)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Marginal {
    Gev,
    Empirical,
}

impl Overrides {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.em.seed = s;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.0.clone();
        }
        if let Some(l) = self.lambda {
            // an explicit penalty replaces the search unless a grid is also given
            cfg.em.lambda = l;
            cfg.lambda_grid.clear();
        }
        if let Some(g) = &self.lambda_grid {
            cfg.lambda_grid = g.0.clone();
        }
        if let Some(t) = self.tau {
            cfg.em.tau = t;
        }
        if let Some(n) = self.particles {
            cfg.em.particles = n;
        }
        if let Some(l) = self.lag {
            cfg.em.lag = l;
            cfg.te.lag = l;
            cfg.recipe.lag = l;
        }
        if let Some(n) = self.max_iters {
            cfg.em.max_iters = n;
        }
        if let Some(t) = self.tol {
            cfg.em.tol = t;
        }
        if let Some(m) = self.marginal {
            cfg.marginal = match m {
                Marginal::Gev => MarginalKind::Gev,
                Marginal::Empirical => MarginalKind::Empirical,
            };
        }
        if let Some(d) = self.datasets {
            cfg.datasets = d;
        }
        if let Some(p) = self.series {
            cfg.recipe.n_series = p;
        }
        if let Some(t) = self.length {
            cfg.recipe.len = t;
        }
        if let Some(w) = self.windows {
            cfg.benchmark.windows = w;
        }
        if self.self_loops {
            cfg.benchmark.self_loops = true;
        }
        if self.no_normalize {
            cfg.normalize = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "em": {"tau": 0.3, "lambda": 0.5}, "datasets": 2}"#).unwrap();
        let ov = Overrides {
            config: Some(path),
            lambda: Some(0.7),
            ..Default::default()
        };
        let cfg = ov.resolve().unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.em.tau, 0.3);
        assert_eq!(cfg.em.lambda, 0.7);
        assert!(cfg.lambda_grid.is_empty());
        assert_eq!(cfg.datasets, 2);
        assert_eq!(cfg.em.particles, EmSettings::default().particles);
    }

    #[test]
    fn grid_by_default() {
        let cfg = Overrides::default().resolve().unwrap();
        assert_eq!(cfg.lambda_grid, DEFAULT_LAMBDA_GRID);
        let ov = Overrides {
            lambda: Some(0.2),
            lambda_grid: Some(Grid(vec![0.1, 0.2])),
            ..Default::default()
        };
        assert_eq!(ov.resolve().unwrap().lambda_grid, [0.1, 0.2]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"sead": 5}"#).unwrap();
        let ov = Overrides {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(ov.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn method_lists() {
        assert_eq!(parse_methods("all").unwrap().0.len(), 4);
        assert_eq!(parse_methods("granger,te").unwrap().0, vec![MethodName::Granger, MethodName::Te]);
        assert!(parse_methods("lasso").is_err());
        assert_eq!(parse_grid("0.1, 1").unwrap().0, vec![0.1, 1.0]);
    }

    #[test]
    fn specs_follow_method_order() {
        let cfg = Config::default();
        let names: Vec<&str> = cfg.specs().iter().map(|s| s.name()).collect();
        assert_eq!(names, ["Sparse-GEV", "Granger", "TE", "Copula"]);
        assert_eq!(cfg.spec(MethodName::Copula).name(), "Copula");
    }
}
