//! Named experiments. Each recipe turns a normalized config into tables and
//! a list of pass/fail checks whose thresholds are fixed here, not in the
//! config.

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Recipe};
use crate::output::Table;

mod ctplot;
mod figure2;
mod jw_verify;
mod mode_table;
mod oracle_compare;
mod size_scan;
mod subspace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Below(f64),
    Above(f64),
    /// A yes/no property; `value` is 1 or 0.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: Limit,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: Limit::Below(bound),
            passed: value < bound,
            detail: String::new(),
        }
    }

    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: Limit::Above(bound),
            passed: value > bound,
            detail: String::new(),
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            limit: Limit::Holds,
            passed: ok,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn describe(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let bound = match self.limit {
            Limit::Below(b) => format!("{:.3e} < {b:.0e}", self.value),
            Limit::Above(b) => format!("{:.3e} > {b}", self.value),
            Limit::Holds => String::new(),
        };
        let mut s = format!("{verdict} {}", self.name);
        if !bound.is_empty() {
            s.push_str(&format!(" {bound}"));
        }
        if !self.detail.is_empty() {
            s.push_str(&format!(" ({})", self.detail));
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct RecipeOutput {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Recipe-specific numbers for the summary.
    pub results: Value,
    pub warnings: Vec<String>,
}

impl RecipeOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Relative difference against a reference, guarded against zero.
pub(crate) fn rel(a: f64, b: f64) -> f64 {
    let scale = b.abs().max(a.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `(max - min) / max |x|` of a column.
pub(crate) fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = hi.abs().max(lo.abs());
    if scale == 0.0 {
        0.0
    } else {
        (hi - lo) / scale
    }
}

pub fn run(recipe: Recipe, cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    match recipe {
        Recipe::Figure2 => figure2::run(cfg),
        Recipe::SizeScan => size_scan::run(cfg),
        Recipe::ModeTable => mode_table::run(cfg),
        Recipe::JwVerify => jw_verify::run(cfg),
        Recipe::LadderCtplot => ctplot::run(cfg),
        Recipe::SubspaceCheck => subspace::run(cfg),
        Recipe::OracleCompare => oracle_compare::run(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_verdicts() {
        assert!(Check::below("x", 1e-12, 1e-10).passed);
        assert!(!Check::below("x", 1e-10, 1e-10).passed);
        assert!(Check::above("x", 0.6, 0.5).passed);
        assert!(!Check::holds("x", false).passed);
        assert_eq!(Check::holds("mono", true).describe(), "PASS mono");
    }

    #[test]
    fn spread_and_rel() {
        assert_eq!(spread(&[2.0, 2.0]), 0.0);
        assert!((spread(&[1.0, 2.0]) - 0.5).abs() < 1e-15);
        assert_eq!(rel(0.0, 0.0), 0.0);
        assert!((rel(1.1, 1.0) - 0.1 / 1.1).abs() < 1e-15);
    }
}
