//! Correlation-matrix fluxes against the dense Liouvillian on small chains.

use anyhow::{Context, Result};
use latticeflux_core::oracle::{build_liouvillian, oracle_fluxes, oracle_steady_state};
use latticeflux_core::quadratic::lattice_steady_flux;
use latticeflux_core::{BathSpec, LatticeSpec, Statistics};
use rayon::prelude::*;
use serde_json::json;

use super::{Check, RecipeOutput};
use crate::config::ExperimentConfig;
use crate::output::{num, Table};

const FERMION_TOL: f64 = 1e-8;
const BOSON_TOL: f64 = 1e-4;
/// Cutoff at which the boson tolerance applies (the largest one if absent).
const BOSON_REFERENCE_N_MAX: usize = 12;

struct Case {
    statistics: Statistics,
    length: usize,
    n_max: Option<usize>,
}

fn compare(case: &Case, omega: f64, g: f64, baths: &BathSpec) -> Result<(f64, f64)> {
    let spec = LatticeSpec::chain(case.length, omega, g, case.statistics)?;
    let l = build_liouvillian(&spec, baths, case.n_max)?;
    let rho = oracle_steady_state(&l)?;
    let exact = oracle_fluxes(&rho, &l).j_in;
    let closed = lattice_steady_flux(&spec, baths)?.flux.j_in;
    Ok((exact, closed))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let o = cfg.oracle.as_ref().context("oracle table missing")?;
    let baths = cfg.baths.as_ref().context("baths table missing")?.spec();
    let mut cases: Vec<Case> = o
        .lengths
        .iter()
        .map(|&length| Case {
            statistics: Statistics::Fermion,
            length,
            n_max: None,
        })
        .collect();
    cases.extend(o.n_max.iter().map(|&n| Case {
        statistics: Statistics::Boson,
        length: o.boson_length,
        n_max: Some(n),
    }));
    let fluxes: Vec<(f64, f64)> = cases.par_iter().map(|c| compare(c, o.omega, o.g, &baths)).collect::<Result<_>>()?;

    let mut table = Table::new("oracle", &["statistics", "length", "n_max", "j_oracle", "j_correlation", "abs_error"]);
    let mut fermion_err: f64 = 0.0;
    let mut boson_err = Vec::new();
    for (c, (exact, closed)) in cases.iter().zip(&fluxes) {
        let err = (exact - closed).abs();
        match c.statistics {
            Statistics::Boson => boson_err.push((c.n_max.unwrap_or(0), err)),
            _ => fermion_err = fermion_err.max(err),
        }
        table.push(vec![
            c.statistics.to_string(),
            c.length.to_string(),
            c.n_max.map(|n| n.to_string()).unwrap_or_default(),
            num(*exact),
            num(*closed),
            num(err),
        ]);
    }
    let monotone = boson_err.windows(2).all(|w| w[1].1 < w[0].1);
    let (ref_n, ref_err) = boson_err
        .iter()
        .copied()
        .find(|(n, _)| *n == BOSON_REFERENCE_N_MAX)
        .or_else(|| boson_err.last().copied())
        .context("no boson cutoffs")?;
    Ok(RecipeOutput {
        tables: vec![table],
        checks: vec![
            Check::below("fermion-oracle-agreement", fermion_err, FERMION_TOL),
            Check::below("boson-oracle-agreement", ref_err, BOSON_TOL).with_detail(format!("n_max = {ref_n}")),
            Check::holds("boson-monotone-in-n_max", monotone),
        ],
        results: json!({ "boson_errors": boson_err }),
        warnings: Vec::new(),
    })
}
