//! Per-channel fluxes of a uniform lattice and the checks on the transverse
//! decomposition.

use anyhow::{Context, Result};
use latticeflux_core::flux::lattice_total_flux;
use latticeflux_core::modes::{mode_block_diagonalize_unchecked, BLOCK_RESIDUAL_TOLERANCE};
use latticeflux_core::quadratic::lattice_steady_flux;
use latticeflux_core::{build_hopping_matrix, LatticeSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde_json::json;

use super::{rel, Check, RecipeOutput};
use crate::config::ExperimentConfig;
use crate::output::{num, Table};

const SPECTRUM_TOL: f64 = 1e-10;
const MODE_SUM_TOL: f64 = 1e-12;
const NUMERIC_TOL: f64 = 1e-10;

fn sorted_eigs(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn run(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let l = cfg.lattice.as_ref().context("lattice table missing")?;
    let baths = cfg.baths.as_ref().context("baths table missing")?.spec();
    let spec = LatticeSpec::new(l.dims.clone(), l.omega, l.couplings.clone(), l.statistics)?;

    let lf = lattice_total_flux(&spec, &baths)?;
    let mut table = Table::new("modes", &["n", "q", "omega_q", "flux"]);
    for c in &lf.channels {
        let q: Vec<String> = c.channel.q.iter().map(|x| num(*x)).collect();
        table.push(vec![join(&c.channel.n), q.join(";"), num(c.channel.omega_q), num(c.flux)]);
    }
    table.push(vec!["total".into(), String::new(), String::new(), num(lf.total)]);

    let h = build_hopping_matrix(&spec)?;
    let dec = mode_block_diagonalize_unchecked(&h, &spec)?;
    let full = sorted_eigs(&h.entries);
    let mut blocks: Vec<f64> = dec.chains.iter().flat_map(sorted_eigs).collect();
    blocks.sort_by(f64::total_cmp);
    let spectrum = full.iter().zip(&blocks).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let numeric = lattice_steady_flux(&spec, &baths)?;

    let checks = vec![
        Check::below("block-residual", dec.residual, BLOCK_RESIDUAL_TOLERANCE),
        Check::below("spectrum-preserved", spectrum, SPECTRUM_TOL),
        Check::below("mode-sum-vs-uniform-reference", rel(lf.total, lf.uniform_reference), MODE_SUM_TOL),
        Check::below("steady-state-vs-mode-sum", rel(numeric.flux.j_in, lf.total), NUMERIC_TOL),
    ];
    Ok(RecipeOutput {
        tables: vec![table],
        checks,
        results: json!({
            "channels": lf.channels.len(),
            "total": lf.total,
            "uniform_reference": lf.uniform_reference,
            "steady_state_flux": numeric.flux.j_in,
        }),
        warnings: lf.warnings,
    })
}
