//! Invariant-subspace structure of the spin ladder: alternating S/T
//! eigenstates, insertion states and the images of the boundary jumps.

use anyhow::{Context, Result};
use latticeflux_core::dynamics::{alternating_pattern, boundary_jumps, insertion_state, pattern_energy, product_state, RungState};
use latticeflux_core::jw::{ballistic_subspace_check, BallisticReport};
use latticeflux_core::{build_spin_sector_hamiltonian, LatticeSpec, SectorState};
use rayon::prelude::*;
use serde_json::json;

use super::{Check, RecipeOutput};
use crate::config::{ExperimentConfig, LadderSection};
use crate::output::{num, Table};

const EIGEN_TOL: f64 = 1e-12;

fn label(p: &[RungState]) -> String {
    p.iter().map(|r| r.label()).collect()
}

fn insertion_label(first: RungState, rung: usize, rungs: usize) -> Result<String> {
    let mut p = alternating_pattern(first, rungs - 1)?;
    p.insert(rung - 1, RungState::I);
    Ok(label(&p))
}

struct Row {
    rungs: usize,
    state: String,
    kind: &'static str,
    energy_residual: Option<f64>,
    report: Option<BallisticReport>,
}

fn residual(h: &latticeflux_core::SectorHamiltonian, psi: &SectorState, e: f64) -> f64 {
    h.apply(psi)
        .amplitudes
        .iter()
        .zip(&psi.amplitudes)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn ladder_rows(l: &LadderSection, rungs: usize) -> Result<Vec<Row>> {
    let spec = LatticeSpec::ladder(rungs, l.omega, l.g_rung, l.g_leg)?;
    let h = build_spin_sector_hamiltonian(&spec, rungs)?;
    let mut rows = Vec::new();
    let mut checked = Vec::new();
    for first in [RungState::S, RungState::T] {
        let p = alternating_pattern(first, rungs)?;
        let psi = product_state(&p, 1, rungs)?;
        let e = pattern_energy(&p, l.omega, l.g_rung).context("alternating pattern has no energy")?;
        rows.push(Row {
            rungs,
            state: label(&p),
            kind: "eigenstate",
            energy_residual: Some(residual(&h, &psi, e)),
            report: Some(ballistic_subspace_check(&psi, &spec)?),
        });
        checked.push((label(&p), psi));
    }
    for first in [RungState::S, RungState::T] {
        for r in 1..=rungs {
            let psi = insertion_state(first, r, rungs)?;
            let name = insertion_label(first, r, rungs)?;
            rows.push(Row {
                rungs,
                state: name.clone(),
                kind: "insertion",
                energy_residual: None,
                report: Some(ballistic_subspace_check(&psi, &spec)?),
            });
            checked.push((name, psi));
        }
    }
    for (k, jump) in boundary_jumps(rungs)?.iter().enumerate() {
        for (name, psi) in &checked {
            if let Some(mut out) = jump.apply(psi) {
                out.normalize()?;
                rows.push(Row {
                    rungs,
                    state: format!("L{}({name})", k + 1),
                    kind: "jump-image",
                    energy_residual: None,
                    report: Some(ballistic_subspace_check(&out, &spec)?),
                });
            }
        }
    }
    Ok(rows)
}

pub fn run(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let l = cfg.ladder.as_ref().context("ladder table missing")?;
    let per_ladder: Vec<Vec<Row>> = l.rungs().par_iter().map(|&r| ladder_rows(l, r)).collect::<Result<_>>()?;
    let rows: Vec<Row> = per_ladder.into_iter().flatten().collect();

    let mut table = Table::new("subspace", &["rungs", "state", "kind", "energy_residual", "ballistic", "c", "samples"]);
    for r in &rows {
        let rep = r.report.as_ref();
        table.push(vec![
            r.rungs.to_string(),
            r.state.clone(),
            r.kind.to_string(),
            r.energy_residual.map(num).unwrap_or_default(),
            rep.map(|x| x.ballistic.to_string()).unwrap_or_default(),
            rep.and_then(|x| x.c).map(|c| c.to_string()).unwrap_or_default(),
            rep.map(|x| x.samples.to_string()).unwrap_or_default(),
        ]);
    }

    let eig = rows.iter().filter_map(|r| r.energy_residual).fold(0.0, f64::max);
    let of_kind = |k: &'static str| rows.iter().filter(move |r| r.kind == k);
    let inserts = of_kind("insertion").count();
    let insert_ok = of_kind("insertion").all(|r| r.report.as_ref().is_some_and(|x| x.ballistic && x.c == Some(1)));
    let jumps = of_kind("jump-image").count();
    let jump_ok = jumps > 0 && of_kind("jump-image").all(|r| r.report.as_ref().is_some_and(|x| x.ballistic));
    Ok(RecipeOutput {
        tables: vec![table],
        checks: vec![
            Check::below("alternating-eigen-residual", eig, EIGEN_TOL),
            Check::holds("insertion-states-ballistic-c+1", insert_ok).with_detail(format!("{inserts} states")),
            Check::holds("jump-images-ballistic", jump_ok).with_detail(format!("{jumps} images")),
        ],
        results: json!({ "insertion_states": inserts, "jump_images": jumps }),
        warnings: Vec::new(),
    })
}
