//! MSD and its curvature `C(t)` for one initial state on a spin ladder.
//! A ballistic state must hold `C = 4 n g_leg^2` over the window; a
//! non-ballistic one must leave that value by more than 0.5.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use latticeflux_core::dynamics::{
    centered_state, four_exciton_state, msd_run, three_exciton_state, two_exciton_state, RungState,
};
use latticeflux_core::{LatticeSpec, SectorState};
use serde_json::json;

use super::{Check, RecipeOutput};
use crate::config::{parse_pattern, DynamicsSection, Expect, ExperimentConfig, InitialState};
use crate::output::{num, Table};

const CONSERVATION_TOL: f64 = 1e-10;
const MIN_DEVIATION: f64 = 0.5;

/// Plateau tolerance: tighter for one and two excitations.
fn plateau_tol(n: usize) -> f64 {
    if n <= 2 {
        1e-3
    } else {
        1e-2
    }
}

fn initial_state(d: &DynamicsSection, rungs: usize) -> Result<SectorState> {
    let phi = d.phi_over_pi * PI;
    Ok(match d.state {
        InitialState::Single => centered_state(&[RungState::S], rungs)?,
        InitialState::TwoExciton => two_exciton_state(phi, rungs)?,
        InitialState::ThreeExciton => three_exciton_state(rungs)?,
        InitialState::FourExciton => four_exciton_state(phi, rungs)?,
        InitialState::Pattern => {
            let p = parse_pattern(d.pattern.as_deref().context("pattern missing")?).map_err(anyhow::Error::msg)?;
            centered_state(&p, rungs)?
        }
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RecipeOutput> {
    let l = cfg.ladder.as_ref().context("ladder table missing")?;
    let d = cfg.dynamics.as_ref().context("dynamics table missing")?;
    let rungs = l.rungs()[0];
    let spec = LatticeSpec::ladder(rungs, l.omega, l.g_rung, l.g_leg)?;
    let state = initial_state(d, rungs)?;
    let n = state.basis.n_excitations();
    let (series, stats) = msd_run(&spec, &state, d.dt, d.t_max)?;

    let mut msd = Table::new("msd", &["t", "msd"]);
    for (t, m) in series.times.iter().zip(&series.msd) {
        msd.push(vec![num(*t), num(*m)]);
    }
    let mut curv = Table::new("curvature", &["t", "curvature"]);
    for (t, c) in series.curvature_times().iter().zip(&series.curvature) {
        curv.push(vec![num(*t), num(*c)]);
    }

    let target = 4.0 * n as f64 * l.g_leg * l.g_leg;
    let Some(p) = series.plateau(d.window[0], d.window[1]) else {
        bail!(
            "no boundary-safe curvature point inside the window {:?} (guard triggered at t = {:?})",
            d.window,
            series.truncated_at
        );
    };
    let dev = p.max_deviation(target);
    let mut plateau = Table::new(
        "plateau",
        &["t_start", "t_end", "points", "mean", "min", "max", "target", "max_deviation"],
    );
    plateau.push(vec![
        num(p.t_start),
        num(p.t_end),
        p.points.to_string(),
        num(p.mean),
        num(p.min),
        num(p.max),
        num(target),
        num(dev),
    ]);

    let energy_scale = 1.0 + l.omega.abs() * n as f64;
    let mut checks = vec![
        Check::below("norm-drift", stats.norm_drift, CONSERVATION_TOL),
        Check::below("energy-drift", stats.energy_drift / energy_scale, CONSERVATION_TOL),
    ];
    let window_note = format!("C on [{:.2}, {:.2}], target {target}", p.t_start, p.t_end);
    checks.push(match d.expect {
        Expect::Ballistic => Check::below("plateau-deviation", dev, plateau_tol(n)).with_detail(window_note),
        Expect::NonBallistic => Check::above("plateau-deviation", dev, MIN_DEVIATION).with_detail(window_note),
    });
    let mut warnings = Vec::new();
    if let Some(t) = series.truncated_at {
        if t < d.window[1] {
            warnings.push(format!("boundary guard stopped the series at t = {t}; window clipped to {:.2}", p.t_end));
        }
    }
    Ok(RecipeOutput {
        tables: vec![msd, curv, plateau],
        checks,
        results: json!({
            "excitations": n,
            "sector_dimension": state.basis.dim(),
            "target": target,
            "plateau": p,
            "truncated_at": series.truncated_at,
            "evolution": stats,
        }),
        warnings,
    })
}
