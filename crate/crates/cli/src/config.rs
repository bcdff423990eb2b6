//! Run configuration: a flat `key = value` file plus `--set` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use theme_annotate_core::clustering::Linkage;
use theme_annotate_core::pipeline::PipelineConfig;
use theme_annotate_core::solvers::{SolverConfig, StepRule};

use crate::error::{CliError, CliResult};

/// Every accepted key, in manifest order.
pub const KEYS: &[&str] = &[
    "features",
    "labels",
    "out_dir",
    "min_images",
    "max_size",
    "cutoff",
    "linkage",
    "coverage",
    "lambda1",
    "lambda2",
    "rho",
    "tol",
    "max_iter",
    "step_rule",
    "normalize",
    "b",
    "epsilon_group",
    "all_theme_members",
    "lambda2_halvings",
    "test_fraction",
    "seed",
    "bin_size",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub min_images: usize,
    pub max_size: Option<usize>,
    pub cutoff: f64,
    pub linkage: Linkage,
    pub coverage: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    pub normalize: bool,
    pub b: usize,
    pub epsilon_group: f64,
    pub all_theme_members: bool,
    pub lambda2_halvings: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub bin_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let pipeline = PipelineConfig::default();
        RunConfig {
            features: None,
            labels: None,
            out_dir: PathBuf::from("out"),
            min_images: 1,
            max_size: None,
            cutoff: 0.25,
            linkage: Linkage::Average,
            coverage: 0.9,
            lambda1: solver.lambda1,
            lambda2: solver.lambda2,
            rho: solver.rho,
            tol: solver.tol,
            max_iter: solver.max_iter,
            step_rule: solver.step_rule,
            normalize: pipeline.normalize_columns,
            b: pipeline.annotations,
            epsilon_group: pipeline.epsilon_group,
            all_theme_members: pipeline.all_theme_members,
            lambda2_halvings: pipeline.max_lambda2_halvings,
            test_fraction: 0.1,
            seed: 0,
            bin_size: 10,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| CliError::Usage(format!("invalid value `{value}` for `{key}`: {e}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (value != "none").then(|| PathBuf::from(value))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value `{value}` for `{key}`: expected true or false"))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        match key {
            "features" => self.features = optional_path(value),
            "labels" => self.labels = optional_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "min_images" => self.min_images = parse(key, value)?,
            "max_size" => {
                self.max_size = if value == "none" { None } else { Some(parse(key, value)?) };
            }
            "cutoff" => self.cutoff = parse(key, value)?,
            "linkage" => self.linkage = parse(key, value)?,
            "coverage" => self.coverage = parse(key, value)?,
            "lambda1" => self.lambda1 = parse(key, value)?,
            "lambda2" => self.lambda2 = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "step_rule" => self.step_rule = parse(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            "b" => self.b = parse(key, value)?,
            "epsilon_group" => self.epsilon_group = parse(key, value)?,
            "all_theme_members" => self.all_theme_members = parse_bool(key, value)?,
            "lambda2_halvings" => self.lambda2_halvings = parse(key, value)?,
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "bin_size" => self.bin_size = parse(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, source: &Path) -> CliResult<()> {
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}:{}: expected `key = value`", source.display(), i + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(CliError::Usage(format!("{}:{}: duplicate key `{key}`", source.display(), i + 1)));
            }
            seen.push(key);
            self.set(key, value).map_err(|e| CliError::Usage(format!("{}:{}: {e}", source.display(), i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> CliResult<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{assignment}` is not `key=value`")))?;
        self.set(key.trim(), value)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string());
        Some(match key {
            "features" => path(&self.features),
            "labels" => path(&self.labels),
            "out_dir" => self.out_dir.display().to_string(),
            "min_images" => self.min_images.to_string(),
            "max_size" => self.max_size.map_or_else(|| "none".into(), |m| m.to_string()),
            "cutoff" => self.cutoff.to_string(),
            "linkage" => self.linkage.to_string(),
            "coverage" => self.coverage.to_string(),
            "lambda1" => self.lambda1.to_string(),
            "lambda2" => self.lambda2.to_string(),
            "rho" => self.rho.to_string(),
            "tol" => self.tol.to_string(),
            "max_iter" => self.max_iter.to_string(),
            "step_rule" => self.step_rule.to_string(),
            "normalize" => self.normalize.to_string(),
            "b" => self.b.to_string(),
            "epsilon_group" => self.epsilon_group.to_string(),
            "all_theme_members" => self.all_theme_members.to_string(),
            "lambda2_halvings" => self.lambda2_halvings.to_string(),
            "test_fraction" => self.test_fraction.to_string(),
            "seed" => self.seed.to_string(),
            "bin_size" => self.bin_size.to_string(),
            _ => return None,
        })
    }

    /// `key = value` lines for every key; loadable by [`RunConfig::apply_text`].
    pub fn render(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default())).collect()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            rho: self.rho,
            max_iter: self.max_iter,
            tol: self.tol,
            step_rule: self.step_rule,
            record_trace: false,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            solver: self.solver(),
            annotations: self.b,
            epsilon_group: self.epsilon_group,
            all_theme_members: self.all_theme_members,
            normalize_columns: self.normalize,
            max_lambda2_halvings: self.lambda2_halvings,
        }
    }

    pub fn features_path(&self) -> CliResult<&Path> {
        self.features.as_deref().ok_or_else(|| CliError::Usage("no features file configured (key `features`)".into()))
    }

    pub fn labels_path(&self) -> CliResult<&Path> {
        self.labels.as_deref().ok_or_else(|| CliError::Usage("no labels file configured (key `labels`)".into()))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
