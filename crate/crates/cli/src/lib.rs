//! Recipe runner behind the `latticeflux` binary.

pub mod config;
pub mod output;
pub mod recipes;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use config::{ConfigError, ExperimentConfig, Recipe};
use recipes::{Check, RecipeOutput};

pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid configuration:\n{e}"),
            RunError::Runtime(e) => write!(f, "run failed: {e:#}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub recipe: Recipe,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub timestamp: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    recipe: &'a str,
    passed: bool,
    seed: u64,
    checks: &'a [Check],
    results: &'a Value,
    warnings: &'a [String],
    files: Vec<String>,
    config: &'a ExperimentConfig,
    elapsed_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
}

#[derive(Debug)]
pub struct RunReport {
    pub output: RecipeOutput,
    pub files: Vec<PathBuf>,
}

/// Normalized config for `path`, the recipe taken from `recipe` or the
/// file's `recipe` key.
pub fn validate(path: &Path, recipe: Option<Recipe>) -> Result<ExperimentConfig, ConfigError> {
    let cfg = config::load(path)?;
    let recipe = config::resolve_recipe(&cfg, recipe)?;
    config::normalize(&cfg, recipe, None)
}

fn header(cfg: &ExperimentConfig, stamp: Option<u64>) -> Vec<(String, String)> {
    let mut v = serde_json::to_value(cfg).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        map.remove("output");
    }
    let mut out = Vec::new();
    output::flatten("", &v, &mut out);
    if let Some(t) = stamp {
        out.push(("generated_at_unix".into(), t.to_string()));
    }
    out
}

pub fn run(opts: &RunOptions) -> Result<RunReport, RunError> {
    let raw = config::load(&opts.config).map_err(RunError::Config)?;
    let recipe = config::resolve_recipe(&raw, Some(opts.recipe)).map_err(RunError::Config)?;
    let cfg = config::normalize(&raw, recipe, opts.seed).map_err(RunError::Config)?;
    let section = cfg.output.clone().unwrap_or_default();
    let out_dir = opts
        .out
        .clone()
        .or(section.dir)
        .unwrap_or_else(|| PathBuf::from("out").join(recipe.name()));
    let stamp = (opts.timestamp || section.timestamp)
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));

    let start = Instant::now();
    let result = recipes::run(recipe, &cfg).map_err(RunError::Runtime)?;
    let mut files: Vec<String> = result.tables.iter().map(|t| t.file_name()).collect();
    files.push("summary.json".into());
    let summary = Summary {
        recipe: recipe.name(),
        passed: result.passed(),
        seed: cfg.seed.unwrap_or(0),
        checks: &result.checks,
        results: &result.results,
        warnings: &result.warnings,
        files,
        config: &cfg,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        generated_at_unix: stamp,
    };
    let written = output::write_all(&out_dir, &result.tables, &header(&cfg, stamp), &summary).map_err(RunError::Runtime)?;
    Ok(RunReport {
        output: result,
        files: written,
    })
}
