//! Steady flux against transport length. Uniform lattices must give a flat
//! column equal to the mode sum; a longitudinally disordered lattice must
//! not.

use anyhow::{Context, Result};
use latticeflux_core::flux::lattice_total_flux;
use latticeflux_core::modes::{mode_block_diagonalize_unchecked, BLOCK_RESIDUAL_TOLERANCE};
use latticeflux_core::quadratic::size_scan;
use latticeflux_core::{build_hopping_matrix, disordered_profile, LatticeSpec};
use serde_json::json;

use super::{rel, spread, Check, RecipeOutput};
use crate::config::ExperimentConfig;
use crate::output::{num, Table};

const FLAT_TOL: f64 = 1e-10;
const FORMULA_TOL: f64 = 1e-8;
const DISORDER_SPREAD: f64 = 1e-3;
const CONSERVATION_TOL: f64 = 1e-11;
const LYAPUNOV_TOL: f64 = 1e-11;

pub fn run(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let l = cfg.lattice.as_ref().context("lattice table missing")?;
    let s = cfg.scan.as_ref().context("scan table missing")?;
    let baths = cfg.baths.as_ref().context("baths table missing")?.spec();
    let seed = cfg.seed.unwrap_or(0);

    let mut dims = l.dims.clone();
    *dims.last_mut().context("empty dims")? = s.max_length;
    let mut template = LatticeSpec::new(dims, l.omega, l.couplings.clone(), l.statistics)?;
    let disordered = l.disorder_width > 0.0;
    if disordered {
        let profile = disordered_profile(s.max_length, l.omega, l.disorder_width, seed)?;
        template = template.with_longitudinal_onsite(profile)?;
    }
    let lengths: Vec<usize> = (s.min_length..=s.max_length).collect();
    let rows = size_scan(&template, &baths, &lengths)?;

    let reference = if disordered {
        None
    } else {
        Some(lattice_total_flux(&template, &baths)?)
    };
    let mut cols = vec!["length", "j_in", "j_out", "residual", "lyapunov_residual"];
    if reference.is_some() {
        cols.push("closed_form");
    }
    let mut table = Table::new("size_scan", &cols);
    for r in &rows {
        let mut row = vec![
            r.length.to_string(),
            num(r.j_in),
            num(r.j_out),
            num(r.residual),
            num(r.lyapunov_residual),
        ];
        if let Some(f) = &reference {
            row.push(num(f.total));
        }
        table.push(row);
    }

    let js: Vec<f64> = rows.iter().map(|r| r.j_in).collect();
    let flux_scale = js.iter().fold(1.0_f64, |m, j| m.max(j.abs()));
    let conservation = rows.iter().map(|r| r.residual).fold(0.0, f64::max) / flux_scale;
    let rate_scale = 1.0 + baths.gamma_in.max(baths.gamma_out) * (1.0 + baths.occ_in.max(baths.occ_out));
    let lyap = rows.iter().map(|r| r.lyapunov_residual).fold(0.0, f64::max) / rate_scale;
    let col_spread = spread(&js);
    let mut checks = vec![
        Check::below("flux-conservation", conservation, CONSERVATION_TOL),
        Check::below("lyapunov-residual", lyap, LYAPUNOV_TOL),
    ];
    let mut block_residual = None;
    if disordered {
        if template.d() >= 2 {
            let h = build_hopping_matrix(&template)?;
            let dec = mode_block_diagonalize_unchecked(&h, &template)?;
            checks.push(Check::below("block-residual", dec.residual, BLOCK_RESIDUAL_TOLERANCE));
            block_residual = Some(dec.residual);
        }
        checks.push(Check::above("flux-spread-over-length", col_spread, DISORDER_SPREAD));
    } else {
        let exact = reference.as_ref().map_or(0.0, |f| f.total);
        let worst = js.iter().map(|j| rel(*j, exact)).fold(0.0, f64::max);
        checks.push(Check::below("flux-spread-over-length", col_spread, FLAT_TOL));
        checks.push(Check::below("closed-form-agreement", worst, FORMULA_TOL));
    }
    Ok(RecipeOutput {
        tables: vec![table],
        checks,
        results: json!({
            "disordered": disordered,
            "onsite_profile": template.longitudinal_onsite,
            "spread": col_spread,
            "closed_form": reference.as_ref().map(|f| f.total),
            "block_residual": block_residual,
        }),
        warnings: reference.map(|f| f.warnings).unwrap_or_default(),
    })
}
