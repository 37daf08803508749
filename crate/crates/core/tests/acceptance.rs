//! Acceptance criteria AC-1..AC-8. Runs as a plain binary so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use latticeflux_core::dynamics::{
    alternating_pattern, boundary_jumps, four_exciton_state, insertion_state, msd_run, pattern_energy,
    product_state, three_exciton_state, two_exciton_state, RungState,
};
use latticeflux_core::flux::{chain_flux, lattice_total_flux};
use latticeflux_core::jw::{
    ballistic_subspace_check, fermion_matrix, fermionized_ladder_terms, pauli_matrix, sector_block,
    single_excitation_block, spin_hamiltonian_terms, JwOrdering, StringConvention,
};
use latticeflux_core::modes::mode_block_diagonalize;
use latticeflux_core::oracle::{build_liouvillian, oracle_fluxes, oracle_steady_state};
use latticeflux_core::quadratic::{lattice_steady_flux, size_scan};
use latticeflux_core::{
    bath_occupation, build_hopping_matrix, build_spin_sector_hamiltonian, disordered_profile, BathSpec,
    LatticeSpec, SectorState, Statistics,
};

type Check = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ac1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lengths: Vec<usize> = (2..=16).collect();
    let (mut worst_formula, mut worst_spread) = (0.0_f64, 0.0_f64);
    for _ in 0..10 {
        let g = rng.gen_range(0.1..=2.0);
        let baths = BathSpec::new(
            rng.gen_range(0.01..=1.0),
            rng.gen_range(0.01..=1.0),
            rng.gen_range(0.0..=2.0),
            rng.gen_range(0.0..=2.0),
        )
        .map_err(|e| e.to_string())?;
        let omega = rng.gen_range(0.5..=5.0);
        for stats in [Statistics::Fermion, Statistics::Boson] {
            let template = LatticeSpec::chain(2, omega, g, stats).map_err(|e| e.to_string())?;
            let rows = size_scan(&template, &baths, &lengths).map_err(|e| e.to_string())?;
            let exact = chain_flux(stats, omega, g, &baths).map_err(|e| e.to_string())?;
            let js: Vec<f64> = rows.iter().map(|r| r.j_in).collect();
            for j in &js {
                worst_formula = worst_formula.max(rel(*j, exact));
            }
            let hi = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = js.iter().cloned().fold(f64::INFINITY, f64::min);
            worst_spread = worst_spread.max((hi - lo) / exact.abs().max(1e-300));
        }
    }
    ensure(
        worst_formula < 1e-8 && worst_spread < 1e-10,
        format!("max rel err vs formula {worst_formula:.2e} (<1e-8), max spread over L {worst_spread:.2e} (<1e-10)"),
    )
}

fn ac2() -> Check {
    let mut worst_f: f64 = 0.0;
    for len in [2, 3] {
        for (ga, gb, na, nb) in [(1.0, 1.0, 1.0, 0.0), (0.3, 0.7, 0.4, 1.5)] {
            let baths = BathSpec::new(ga, gb, na, nb).map_err(|e| e.to_string())?;
            let spec = LatticeSpec::chain(len, 1.3, 0.8, Statistics::Fermion).map_err(|e| e.to_string())?;
            let l = build_liouvillian(&spec, &baths, None).map_err(|e| e.to_string())?;
            let rho = oracle_steady_state(&l).map_err(|e| e.to_string())?;
            let j_oracle = oracle_fluxes(&rho, &l).j_in;
            let j_quad = lattice_steady_flux(&spec, &baths).map_err(|e| e.to_string())?.flux.j_in;
            worst_f = worst_f.max((j_oracle - j_quad).abs());
        }
    }
    // bosons at L = 2; see the notes for why L = 3 is out of reach at n_max = 12
    let baths = BathSpec::new(0.6, 0.4, 0.5, 0.1).map_err(|e| e.to_string())?;
    let spec = LatticeSpec::chain(2, 1.0, 0.7, Statistics::Boson).map_err(|e| e.to_string())?;
    let exact = lattice_steady_flux(&spec, &baths).map_err(|e| e.to_string())?.flux.j_in;
    let mut errs = Vec::new();
    for n_max in [8, 12, 16] {
        let l = build_liouvillian(&spec, &baths, Some(n_max)).map_err(|e| e.to_string())?;
        let rho = oracle_steady_state(&l).map_err(|e| e.to_string())?;
        errs.push((oracle_fluxes(&rho, &l).j_in - exact).abs());
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    ensure(
        worst_f < 1e-8 && errs[1] < 1e-4 && monotone,
        format!(
            "fermion |oracle - Lyapunov| {worst_f:.2e} (<1e-8); boson errors n_max 8/12/16 = {:.2e}/{:.2e}/{:.2e} (n_max=12 <1e-4, monotone {monotone})",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn ac3() -> Check {
    let (gamma, g, omega, t1) = (0.01, 0.01, 10.0, 0.001);
    let temps: Vec<f64> = (0..=80).map(|k| 10f64.powf(4.0 * k as f64 / 80.0)).collect();
    let mut boson = Vec::new();
    let mut fermion = Vec::new();
    for &t2 in &temps {
        // hot bath at the far end; report the flux it delivers
        let baths = BathSpec::new(
            gamma,
            gamma,
            bath_occupation(omega, t1).map_err(|e| e.to_string())?,
            bath_occupation(omega, t2).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        boson.push(-chain_flux(Statistics::Boson, omega, g, &baths).map_err(|e| e.to_string())?);
        fermion.push(-chain_flux(Statistics::Fermion, omega, g, &baths).map_err(|e| e.to_string())?);
    }
    let increasing = boson.windows(2).all(|w| w[1] > w[0]);
    let (imax, fmax) = fermion
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &f)| if f > acc.1 { (i, f) } else { acc });
    let interior = imax > 0 && imax < temps.len() - 1 && fermion[temps.len() - 1] < fmax;
    let above = temps
        .iter()
        .zip(boson.iter().zip(&fermion))
        .filter(|(t, _)| **t >= 100.0 - 1e-9)
        .all(|(_, (b, f))| b > f);
    ensure(
        increasing && interior && above,
        format!(
            "boson increasing {increasing}; fermion max at T2={:.3e} with J(1e4)/Jmax={:.3e} (interior {interior}); boson > fermion for T2>=100 {above}",
            temps[imax],
            fermion[temps.len() - 1] / fmax
        ),
    )
}

fn sorted_eigs(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn ac4() -> Check {
    let baths = BathSpec::new(0.4, 0.6, 1.2, 0.3).map_err(|e| e.to_string())?;
    let mut worst = [0.0_f64; 4];
    for (dims, couplings) in [(vec![3, 8], vec![0.7, 1.1]), (vec![3, 4, 6], vec![0.5, 0.8, 1.2])] {
        for stats in [Statistics::Fermion, Statistics::Boson] {
            let spec = LatticeSpec::new(dims.clone(), 6.0, couplings.clone(), stats).map_err(|e| e.to_string())?;
            let h = build_hopping_matrix(&spec).map_err(|e| e.to_string())?;
            let dec = mode_block_diagonalize(&h, &spec).map_err(|e| e.to_string())?;
            worst[0] = worst[0].max(dec.residual);
            let full = sorted_eigs(&h.entries);
            let mut blocks: Vec<f64> = dec.chains.iter().flat_map(sorted_eigs).collect();
            blocks.sort_by(f64::total_cmp);
            let spec_err = full.iter().zip(&blocks).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst[1] = worst[1].max(spec_err);
            let lf = lattice_total_flux(&spec, &baths).map_err(|e| e.to_string())?;
            worst[2] = worst[2].max(rel(lf.total, lf.uniform_reference));
            let numeric = lattice_steady_flux(&spec, &baths).map_err(|e| e.to_string())?.flux.j_in;
            worst[3] = worst[3].max(rel(numeric, lf.total));
        }
    }
    ensure(
        worst[0] < 1e-10 && worst[1] < 1e-10 && worst[2] < 1e-12 && worst[3] < 1e-10,
        format!(
            "block residual {:.2e} (<1e-10), spectrum {:.2e} (<1e-10), mode sum vs N*J1d {:.2e} (<1e-12), Lyapunov vs mode sum {:.2e} (<1e-10)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn ac5() -> Check {
    let max_len = 12;
    let profile = disordered_profile(max_len, 3.0, 1.0, 42).map_err(|e| e.to_string())?;
    let spec = LatticeSpec::new(vec![4, max_len], 3.0, vec![0.6, 0.9], Statistics::Fermion)
        .and_then(|s| s.with_longitudinal_onsite(profile))
        .map_err(|e| e.to_string())?;
    let h = build_hopping_matrix(&spec).map_err(|e| e.to_string())?;
    let dec = mode_block_diagonalize(&h, &spec).map_err(|e| e.to_string())?;
    let baths = BathSpec::new(0.5, 0.5, 1.0, 0.2).map_err(|e| e.to_string())?;
    let lengths: Vec<usize> = (2..=max_len).collect();
    let rows = size_scan(&spec, &baths, &lengths).map_err(|e| e.to_string())?;
    let js: Vec<f64> = rows.iter().map(|r| r.j_in).collect();
    let hi = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = js.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi.abs().max(lo.abs());
    ensure(
        dec.residual < 1e-10 && spread > 1e-3,
        format!("block residual {:.2e} (<1e-10), relative flux spread over L {spread:.3e} (>1e-3)", dec.residual),
    )
}

fn ac6() -> Check {
    let mut worst_spec: f64 = 0.0;
    let mut worst_single: f64 = 0.0;
    for rungs in [2, 3, 4] {
        let n = 2 * rungs;
        let (omega, g1, g2) = (1.1, 0.7, 1.3);
        let spec = LatticeSpec::ladder(rungs, omega, g1, g2).map_err(|e| e.to_string())?;
        let spin = pauli_matrix(&spin_hamiltonian_terms(&spec), &JwOrdering::natural(n)).map_err(|e| e.to_string())?;
        let conv = StringConvention::Standard;
        let ferm = fermion_matrix(&fermionized_ladder_terms(rungs, omega, g1, g2, conv), n, conv)
            .map_err(|e| e.to_string())?;
        for k in 0..=n {
            let a = sorted_eigs(&sector_block(&spin, k));
            let b = sorted_eigs(&sector_block(&ferm, k));
            for (x, y) in a.iter().zip(&b) {
                worst_spec = worst_spec.max((x - y).abs());
            }
        }
        let free = build_hopping_matrix(&spec.with_statistics(Statistics::Fermion)).map_err(|e| e.to_string())?;
        let block = single_excitation_block(&ferm, n);
        worst_single = worst_single.max((block - &free.entries).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    ensure(
        worst_spec < 1e-10 && worst_single < 1e-10,
        format!("sector spectra max diff {worst_spec:.2e} (<1e-10); single-excitation block vs uniform ladder {worst_single:.2e}"),
    )
}

fn plateau_of(rungs: usize, state: &SectorState, target: f64, tol: f64) -> Result<(f64, f64, f64), String> {
    let spec = LatticeSpec::ladder(rungs, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let (series, stats) = msd_run(&spec, state, 0.01, 6.0).map_err(|e| e.to_string())?;
    if stats.norm_drift > 1e-10 || stats.energy_drift > 1e-10 {
        return Err(format!("conservation drift {stats:?}"));
    }
    let p = series.plateau(0.5, 6.0).ok_or("no boundary-safe points in window")?;
    let dev = p.max_deviation(target);
    if dev.is_nan() || (tol > 0.0 && dev >= tol) {
        return Err(format!("C = {target} expected, deviation {dev:.2e} on [{}, {}]", p.t_start, p.t_end));
    }
    Ok((dev, p.t_start, p.t_end))
}

fn ac7() -> Check {
    let mut parts = Vec::new();
    let cases: Vec<(&str, usize, Result<SectorState, _>, f64, f64)> = vec![
        ("n=1", 31, product_state(&[RungState::S], 16, 31), 4.0, 1e-3),
        ("n=2 phi=pi", 31, two_exciton_state(PI, 31), 8.0, 1e-3),
        ("n=3 OSTSO", 31, three_exciton_state(31), 12.0, 1e-2),
        ("n=4 phi=pi", 24, four_exciton_state(PI, 24), 16.0, 1e-2),
    ];
    let mut ok = true;
    for (name, rungs, state, target, tol) in cases {
        let state = state.map_err(|e| e.to_string())?;
        match plateau_of(rungs, &state, target, tol) {
            Ok((dev, t0, t1)) => parts.push(format!("{name}: |C-{target}| {dev:.1e} on [{t0:.2},{t1:.2}]")),
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    let zero = two_exciton_state(0.0, 31).map_err(|e| e.to_string())?;
    let dev0 = plateau_of(31, &zero, 8.0, 0.0)?.0;
    ok &= dev0 > 0.5;
    parts.push(format!("n=2 phi=0: max |C-8| {dev0:.2} (>0.5)"));
    ensure(ok, parts.join("; "))
}

fn ac8() -> Check {
    let mut worst_eig: f64 = 0.0;
    for rungs in [3, 4, 5] {
        let spec = LatticeSpec::ladder(rungs, 1.0, 0.8, 1.2).map_err(|e| e.to_string())?;
        let h = build_spin_sector_hamiltonian(&spec, rungs).map_err(|e| e.to_string())?;
        for first in [RungState::S, RungState::T] {
            let p = alternating_pattern(first, rungs).map_err(|e| e.to_string())?;
            let psi = product_state(&p, 1, rungs).map_err(|e| e.to_string())?;
            let e = pattern_energy(&p, 1.0, 0.8).ok_or("pattern without energy")?;
            let hpsi = h.apply(&psi);
            let res = hpsi
                .amplitudes
                .iter()
                .zip(&psi.amplitudes)
                .map(|(a, b)| (a - b * e).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst_eig = worst_eig.max(res);
        }
    }
    let mut insert_ok = true;
    let mut n_insert = 0;
    for rungs in [3, 4, 5] {
        let spec = LatticeSpec::ladder(rungs, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
        for first in [RungState::S, RungState::T] {
            for r in 1..=rungs {
                let psi = insertion_state(first, r, rungs).map_err(|e| e.to_string())?;
                let rep = ballistic_subspace_check(&psi, &spec).map_err(|e| e.to_string())?;
                insert_ok &= rep.ballistic && rep.c == Some(1);
                n_insert += 1;
            }
        }
    }
    let mut jump_ok = true;
    let mut n_jump = 0;
    for rungs in [3, 4] {
        let spec = LatticeSpec::ladder(rungs, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
        let mut checked = Vec::new();
        for first in [RungState::S, RungState::T] {
            let p = alternating_pattern(first, rungs).map_err(|e| e.to_string())?;
            checked.push(product_state(&p, 1, rungs).map_err(|e| e.to_string())?);
            for r in 1..=rungs {
                checked.push(insertion_state(first, r, rungs).map_err(|e| e.to_string())?);
            }
        }
        let jumps = boundary_jumps(rungs).map_err(|e| e.to_string())?;
        for psi in &checked {
            if !ballistic_subspace_check(psi, &spec).map_err(|e| e.to_string())?.ballistic {
                jump_ok = false;
            }
            for jump in &jumps {
                if let Some(mut out) = jump.apply(psi) {
                    out.normalize().map_err(|e| e.to_string())?;
                    jump_ok &= ballistic_subspace_check(&out, &spec).map_err(|e| e.to_string())?.ballistic;
                    n_jump += 1;
                }
            }
        }
    }
    ensure(
        worst_eig < 1e-12 && insert_ok && jump_ok && n_jump > 0,
        format!(
            "STST/TSTS eigen residual {worst_eig:.2e} (<1e-12); {n_insert} insertion states ballistic with c=+1: {insert_ok}; {n_jump} jump images ballistic: {jump_ok}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("AC-1", ac1),
        ("AC-2", ac2),
        ("AC-3", ac3),
        ("AC-4", ac4),
        ("AC-5", ac5),
        ("AC-6", ac6),
        ("AC-7", ac7),
        ("AC-8", ac8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("{name} PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
