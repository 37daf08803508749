//! Transverse normal modes.
//!
//! A lattice that is uniform across the periodic dimensions `1..d-1`
//! decouples, under a discrete Fourier transform of those dimensions, into
//! `N = L_1 ... L_{d-1}` independent open chains of length `L_d`. Each chain
//! keeps the transport coupling `g_d` and has its on-site energy shifted by
//! the transverse band energy of its momentum.
//!
//! Shift per transverse dimension: `2 g cos q` for `L >= 3`. With `L = 2`
//! there is only one bond per pair (see [`crate::lattice`]) and the shift is
//! `g cos q`, i.e. `±g`. With `L = 1` there is no bond and no shift.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{HoppingMatrix, LatticeSpec};

/// Off-block tolerance for [`mode_block_diagonalize`].
pub const BLOCK_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeChannel {
    /// Integer labels `n_alpha` in `1..=L_alpha`.
    pub n: Vec<usize>,
    /// `q_alpha = 2 pi n_alpha / L_alpha`.
    pub q: Vec<f64>,
    pub omega_q: f64,
    pub chain_length: usize,
    pub chain_coupling: f64,
}

impl ModeChannel {
    pub fn shift(&self, omega: f64) -> f64 {
        self.omega_q - omega
    }
}

fn band_shift(len: usize, g: f64, q: f64) -> f64 {
    match len {
        1 => 0.0,
        2 => g * q.cos(),
        _ => 2.0 * g * q.cos(),
    }
}

/// All transverse channels, first transverse dimension fastest.
pub fn enumerate_modes(spec: &LatticeSpec) -> Result<Vec<ModeChannel>> {
    spec.validate()?;
    let d = spec.d();
    let tdims = &spec.dims[..d - 1];
    let n_modes = spec.transverse_count();
    let mut out = Vec::with_capacity(n_modes);
    for k in 0..n_modes {
        let mut rest = k;
        let mut n = Vec::with_capacity(d - 1);
        let mut q = Vec::with_capacity(d - 1);
        let mut omega_q = spec.omega;
        for (alpha, &len) in tdims.iter().enumerate() {
            let na = rest % len + 1;
            rest /= len;
            let qa = 2.0 * PI * na as f64 / len as f64;
            omega_q += band_shift(len, spec.couplings[alpha], qa);
            n.push(na);
            q.push(qa);
        }
        out.push(ModeChannel {
            n,
            q,
            omega_q,
            chain_length: spec.transport_len(),
            chain_coupling: spec.transport_coupling(),
        });
    }
    Ok(out)
}

/// Unitary transverse DFT `U[(l_r, l_d), (k, l_d)] = exp(i q_k . l_r) / sqrt(N)`
/// with 1-based transverse positions. Columns are ordered mode-fastest, so
/// column `k + N l_d` is mode `k` on layer `l_d`.
pub fn transverse_dft(spec: &LatticeSpec) -> Result<DMatrix<Complex64>> {
    let modes = enumerate_modes(spec)?;
    let n = spec.transverse_count();
    let m = spec.n_sites();
    let norm = (n as f64).sqrt();
    let mut u = DMatrix::<Complex64>::zeros(m, m);
    for r in 0..n {
        let pos = spec.coords(r);
        for (k, mode) in modes.iter().enumerate() {
            let phase: f64 = mode
                .q
                .iter()
                .zip(&pos)
                .map(|(q, &l)| q * (l + 1) as f64)
                .sum();
            let z = Complex64::from_polar(1.0 / norm, phase);
            for layer in 0..spec.transport_len() {
                u[(r + n * layer, k + n * layer)] = z;
            }
        }
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    /// One `L_d x L_d` chain matrix per channel, in [`enumerate_modes`] order.
    pub chains: Vec<DMatrix<Complex64>>,
    /// Largest absolute entry of `U^dag h U` outside the chain blocks.
    pub residual: f64,
}

/// Block-diagonalizes `h` and fails if the off-block residual exceeds
/// [`BLOCK_RESIDUAL_TOLERANCE`], i.e. if `h` is not transversely uniform.
pub fn mode_block_diagonalize(h: &HoppingMatrix, spec: &LatticeSpec) -> Result<ModeDecomposition> {
    let dec = mode_block_diagonalize_unchecked(h, spec)?;
    if dec.residual > BLOCK_RESIDUAL_TOLERANCE {
        return Err(Error::TransverseNonUniform {
            residual: dec.residual,
            tolerance: BLOCK_RESIDUAL_TOLERANCE,
        });
    }
    Ok(dec)
}

/// Same transform, reporting the residual without judging it.
pub fn mode_block_diagonalize_unchecked(h: &HoppingMatrix, spec: &LatticeSpec) -> Result<ModeDecomposition> {
    spec.validate()?;
    if h.dims != spec.dims || h.size() != spec.n_sites() {
        return Err(Error::InvalidArgument(format!(
            "hopping matrix dims {:?} do not match lattice dims {:?}",
            h.dims, spec.dims
        )));
    }
    let n = spec.transverse_count();
    let len = spec.transport_len();
    if n == 1 {
        return Ok(ModeDecomposition {
            chains: vec![h.entries.clone()],
            residual: 0.0,
        });
    }
    let u = transverse_dft(spec)?;
    let t = u.adjoint() * &h.entries * &u;
    let mut residual = 0.0_f64;
    for i in 0..t.nrows() {
        for j in 0..t.ncols() {
            if i % n != j % n {
                residual = residual.max(t[(i, j)].norm());
            }
        }
    }
    let chains = (0..n)
        .map(|k| DMatrix::from_fn(len, len, |a, b| t[(k + n * a, k + n * b)]))
        .collect();
    Ok(ModeDecomposition { chains, residual })
}
