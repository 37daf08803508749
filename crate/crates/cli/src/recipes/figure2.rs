//! Flux versus hot-bath temperature for a fermionic and a bosonic chain.
//! The cold bath sits at the first site and the hot bath at the last; the
//! reported flux is the one the hot bath delivers.

use anyhow::{Context, Result};
use latticeflux_core::flux::chain_flux;
use latticeflux_core::quadratic::lattice_steady_flux;
use latticeflux_core::{bath_occupation, BathSpec, LatticeSpec, Statistics};
use rayon::prelude::*;
use serde_json::json;

use super::{rel, Check, RecipeOutput};
use crate::config::{ExperimentConfig, Figure2Section};
use crate::output::{num, Table};

/// Boson flux must exceed fermion flux from this temperature on.
const DOMINANCE_FROM: f64 = 100.0;
const NUMERIC_TOL: f64 = 1e-8;

struct Point {
    t_hot: f64,
    boson: f64,
    fermion: f64,
    numeric: Option<(f64, f64)>,
}

fn point(f: &Figure2Section, t_hot: f64) -> Result<Point> {
    let baths = BathSpec::new(
        f.gamma,
        f.gamma,
        bath_occupation(f.omega, f.t_cold)?,
        bath_occupation(f.omega, t_hot)?,
    )?;
    let boson = -chain_flux(Statistics::Boson, f.omega, f.g, &baths)?;
    let fermion = -chain_flux(Statistics::Fermion, f.omega, f.g, &baths)?;
    let numeric = if f.numeric_length > 0 {
        let mut js = [0.0; 2];
        for (k, stats) in [Statistics::Boson, Statistics::Fermion].into_iter().enumerate() {
            let spec = LatticeSpec::chain(f.numeric_length, f.omega, f.g, stats)?;
            js[k] = -lattice_steady_flux(&spec, &baths)?.flux.j_in;
        }
        Some((js[0], js[1]))
    } else {
        None
    };
    Ok(Point {
        t_hot,
        boson,
        fermion,
        numeric,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let f = cfg.figure2.as_ref().context("figure2 table missing")?;
    let (a, b) = (f.t_min.log10(), f.t_max.log10());
    let temps: Vec<f64> = (0..f.points)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (f.points - 1) as f64))
        .collect();
    let pts: Vec<Point> = temps.par_iter().map(|&t| point(f, t)).collect::<Result<_>>()?;

    let numeric = f.numeric_length > 0;
    let mut cols = vec!["t_hot", "boson", "fermion"];
    if numeric {
        cols.extend(["boson_numeric", "fermion_numeric"]);
    }
    let mut table = Table::new("figure2", &cols);
    for p in &pts {
        let mut row = vec![num(p.t_hot), num(p.boson), num(p.fermion)];
        if let Some((nb, nf)) = p.numeric {
            row.extend([num(nb), num(nf)]);
        }
        table.push(row);
    }

    let boson: Vec<f64> = pts.iter().map(|p| p.boson).collect();
    let fermion: Vec<f64> = pts.iter().map(|p| p.fermion).collect();
    let increasing = boson.windows(2).all(|w| w[1] > w[0]);
    let (imax, fmax) = fermion
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
    let last = fermion[fermion.len() - 1];
    let interior = imax > 0 && imax + 1 < fermion.len() && last < fmax;
    let hot: Vec<&Point> = pts.iter().filter(|p| p.t_hot >= DOMINANCE_FROM * (1.0 - 1e-12)).collect();
    let dominance = !hot.is_empty() && hot.iter().all(|p| p.boson > p.fermion);

    let mut checks = vec![
        Check::holds("boson-strictly-increasing", increasing),
        Check::holds("fermion-interior-maximum", interior).with_detail(format!(
            "max at t_hot = {:.4e}, J(t_max)/J_max = {:.4}",
            temps[imax],
            last / fmax
        )),
        Check::holds("boson-above-fermion-from-t100", dominance)
            .with_detail(format!("{} grid points with t_hot >= {DOMINANCE_FROM}", hot.len())),
    ];
    if numeric {
        let worst = pts
            .iter()
            .filter_map(|p| p.numeric.map(|(nb, nf)| rel(nb, p.boson).max(rel(nf, p.fermion))))
            .fold(0.0, f64::max);
        checks.push(Check::below("numeric-vs-closed-form", worst, NUMERIC_TOL));
    }
    Ok(RecipeOutput {
        tables: vec![table],
        checks,
        results: json!({
            "fermion_peak_t_hot": temps[imax],
            "fermion_peak_flux": fmax,
            "boson_at_t_max": boson[boson.len() - 1],
            "fermion_at_t_max": last,
        }),
        warnings: Vec::new(),
    })
}
