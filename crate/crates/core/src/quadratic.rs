//! Steady states of boundary-driven quadratic lattices through the two-point
//! correlation matrix `C_jk = <a_j^dag a_k>`.
//!
//! With bath jumps `sqrt(Gamma n) a^dag` and `sqrt(Gamma (n+1)) a` on every
//! site of the first and last transport layer, the correlations obey
//!
//! ```text
//! dC/dt = W^dag C + C W + P,    W = -i h^T - K
//! ```
//!
//! where `K` is diagonal with the coherence decay rate `kappa` on bath sites
//! and `P` is the diagonal injection. Fermions: `kappa = gamma/2`,
//! `P = gamma s`. Bosons: `kappa = Gamma/2`, `P = Gamma n`. Both reduce to
//! `P = Gamma n`; only the decay differs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_hopping_matrix, BathSpec, FluxReport, HoppingMatrix, LatticeSpec, Statistics};
use crate::lyapunov::LyapunovSolver;

/// Relative margin below which a drift eigenvalue counts as marginal.
const STABILITY_MARGIN: f64 = 1e-12;

/// Rates of one bath acting on the correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathChannel {
    pub sites: Vec<usize>,
    pub kappa: f64,
    pub injection: f64,
}

impl BathChannel {
    /// Contribution of this bath to `dC/dt`: `-(K C + C K) + P`.
    pub fn dissipator(&self, c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let m = c.nrows();
        let mut k = vec![0.0; m];
        for &s in &self.sites {
            k[s] += self.kappa;
        }
        let mut d = DMatrix::from_fn(m, m, |i, j| -c[(i, j)] * (k[i] + k[j]));
        for &s in &self.sites {
            d[(s, s)] += Complex64::from(self.injection);
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub drift: DMatrix<Complex64>,
    /// Diagonal of `P`.
    pub injection: DVector<f64>,
    pub statistics: Statistics,
    pub bath_in: BathChannel,
    pub bath_out: BathChannel,
}

impl DriftSpec {
    pub fn size(&self) -> usize {
        self.drift.nrows()
    }

    pub fn injection_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&self.injection.map(Complex64::from))
    }

    /// `max |W^dag C + C W + P|`.
    pub fn residual(&self, c: &CorrelationMatrix) -> f64 {
        let r = self.drift.adjoint() * &c.entries + &c.entries * &self.drift + self.injection_matrix();
        r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn bath_channels(h: &HoppingMatrix, baths: &BathSpec, statistics: Statistics) -> Result<(BathChannel, BathChannel)> {
    let (first, last) = h.boundary_layers();
    let (kin, kout) = match statistics {
        Statistics::Fermion => {
            let (g1, gl) = baths.fermion_gammas();
            (g1 / 2.0, gl / 2.0)
        }
        Statistics::Boson => (baths.gamma_in / 2.0, baths.gamma_out / 2.0),
        Statistics::Spin => {
            return Err(Error::UnsupportedStatistics {
                operation: "build_drift",
                statistics: "spin",
            })
        }
    };
    Ok((
        BathChannel {
            sites: first,
            kappa: kin,
            injection: baths.gamma_in * baths.occ_in,
        },
        BathChannel {
            sites: last,
            kappa: kout,
            injection: baths.gamma_out * baths.occ_out,
        },
    ))
}

pub fn build_drift(h: &HoppingMatrix, baths: &BathSpec, statistics: Statistics) -> Result<DriftSpec> {
    baths.validate()?;
    let (bath_in, bath_out) = bath_channels(h, baths, statistics)?;
    let m = h.size();
    let mut drift = h.entries.transpose().map(|z| -Complex64::i() * z);
    let mut injection = DVector::zeros(m);
    for bath in [&bath_in, &bath_out] {
        for &s in &bath.sites {
            drift[(s, s)] -= Complex64::from(bath.kappa);
            injection[s] += bath.injection;
        }
    }
    Ok(DriftSpec {
        drift,
        injection,
        statistics,
        bath_in,
        bath_out,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: DMatrix<Complex64>,
    pub statistics: Statistics,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn occupations(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// Eigenvalues of the Hermitian matrix, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Whether the spectrum is physical: in `[0, 1]` for fermions, `>= 0`
    /// for bosons, up to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let e = self.spectrum();
        let lo = e.first().copied().unwrap_or(0.0);
        let hi = e.last().copied().unwrap_or(0.0);
        match self.statistics {
            Statistics::Fermion => lo >= -tol && hi <= 1.0 + tol,
            _ => lo >= -tol,
        }
    }
}

/// Unique steady state of a stable drift.
pub fn steady_state(drift: &DriftSpec) -> Result<CorrelationMatrix> {
    let solver = LyapunovSolver::new(&drift.drift)?;
    let scale = 1.0 + drift.drift.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_re = solver.max_real_eigenvalue();
    if max_re > -STABILITY_MARGIN * scale {
        return Err(Error::NonUniqueSteadyState { max_real_part: max_re });
    }
    let x = solver.solve(&drift.injection_matrix())?;
    let entries = (&x + x.adjoint()) * Complex64::from(0.5);
    Ok(CorrelationMatrix {
        entries,
        statistics: drift.statistics,
    })
}

/// Energy fluxes `Tr(H L_i[rho])` delivered by each bath.
pub fn flux_from_state(
    c: &CorrelationMatrix,
    h: &HoppingMatrix,
    baths: &BathSpec,
    statistics: Statistics,
) -> Result<FluxReport> {
    let (bin, bout) = bath_channels(h, baths, statistics)?;
    let energy = |bath: &BathChannel| -> f64 {
        let d = bath.dissipator(&c.entries);
        h.entries.zip_map(&d, |a, b| a * b).sum().re
    };
    Ok(FluxReport::new(energy(&bin), energy(&bout)))
}

/// Particle current through each cut between consecutive transport layers,
/// summed over transverse positions. Entry `l` is the cut between layers
/// `l` and `l + 1`.
pub fn layer_currents(c: &CorrelationMatrix, h: &HoppingMatrix) -> Vec<f64> {
    let n = h.transverse_count();
    let len = h.transport_len();
    (0..len.saturating_sub(1))
        .map(|l| {
            let mut total = 0.0;
            for a in l * n..(l + 1) * n {
                for m in (l + 1) * n..(l + 2) * n {
                    total += 2.0 * (h.entries[(m, a)] * c.entries[(m, a)]).im;
                }
            }
            total
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyFlux {
    pub flux: FluxReport,
    pub lyapunov_residual: f64,
}

/// Hopping matrix, drift, steady state and flux in one call.
pub fn lattice_steady_flux(spec: &LatticeSpec, baths: &BathSpec) -> Result<SteadyFlux> {
    let h = build_hopping_matrix(spec)?;
    let drift = build_drift(&h, baths, spec.statistics)?;
    let c = steady_state(&drift)?;
    Ok(SteadyFlux {
        flux: flux_from_state(&c, &h, baths, spec.statistics)?,
        lyapunov_residual: drift.residual(&c),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub length: usize,
    pub j_in: f64,
    pub j_out: f64,
    pub residual: f64,
    pub lyapunov_residual: f64,
}

/// Steady flux for each transport length, resizing the template's last
/// dimension. Points run in parallel; rows come back in `lengths` order.
pub fn size_scan(template: &LatticeSpec, baths: &BathSpec, lengths: &[usize]) -> Result<Vec<ScanRow>> {
    lengths
        .par_iter()
        .map(|&len| {
            let spec = template.with_transport_len(len)?;
            let s = lattice_steady_flux(&spec, baths)?;
            Ok(ScanRow {
                length: len,
                j_in: s.flux.j_in,
                j_out: s.flux.j_out,
                residual: s.flux.residual,
                lyapunov_residual: s.lyapunov_residual,
            })
        })
        .collect()
}
