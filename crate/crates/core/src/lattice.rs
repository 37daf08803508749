//! Lattice and bath data model, single-particle hopping matrices.
//!
//! Sites are addressed by 0-based coordinate vectors `(l_1, .., l_d)`; the
//! flat row index is `l_1 + L_1 l_2 + L_1 L_2 l_3 + ...` (first dimension
//! fastest). Dimension `d` is the transport axis and is open; dimensions
//! `1..d-1` are periodic. A periodic dimension of length 2 carries a single
//! bond per pair (no duplicated wrap bond), and length 1 carries none.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this ratio `exp(omega/T)` overflows an f64.
const EXP_OVERFLOW: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Boson,
    Spin,
}

impl Statistics {
    pub fn name(self) -> &'static str {
        match self {
            Statistics::Fermion => "fermion",
            Statistics::Boson => "boson",
            Statistics::Spin => "spin",
        }
    }
}

impl std::fmt::Display for Statistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometry, statistics, frequency and couplings of a hypercubic lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dims: Vec<usize>,
    pub omega: f64,
    pub couplings: Vec<f64>,
    pub statistics: Statistics,
    /// Optional on-site energy offsets along the transport axis, one per
    /// layer `l_d`. Transverse uniformity is preserved by construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitudinal_onsite: Option<Vec<f64>>,
}

/// A nearest-neighbour bond between two flat site indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    /// 0-based lattice dimension the bond lies along.
    pub dim: usize,
    pub weight: f64,
}

impl LatticeSpec {
    pub fn new(
        dims: Vec<usize>,
        omega: f64,
        couplings: Vec<f64>,
        statistics: Statistics,
    ) -> Result<Self> {
        let spec = Self {
            dims,
            omega,
            couplings,
            statistics,
            longitudinal_onsite: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform 1-D chain of `len` sites.
    pub fn chain(len: usize, omega: f64, g: f64, statistics: Statistics) -> Result<Self> {
        Self::new(vec![len], omega, vec![g], statistics)
    }

    /// Two-leg ladder with `rungs` rungs: dimension 1 is the rung (length 2,
    /// coupling `g_rung`), dimension 2 the legs (coupling `g_leg`).
    pub fn ladder(rungs: usize, omega: f64, g_rung: f64, g_leg: f64) -> Result<Self> {
        Self::new(vec![2, rungs], omega, vec![g_rung, g_leg], Statistics::Spin)
    }

    pub fn with_longitudinal_onsite(mut self, profile: Vec<f64>) -> Result<Self> {
        self.longitudinal_onsite = Some(profile);
        self.validate()?;
        Ok(self)
    }

    pub fn with_statistics(&self, statistics: Statistics) -> Self {
        Self {
            statistics,
            ..self.clone()
        }
    }

    /// Same lattice with the transport axis resized to `len`; a longitudinal
    /// profile is truncated (it must be at least `len` long).
    pub fn with_transport_len(&self, len: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        *dims.last_mut().expect("validated lattice has d >= 1") = len;
        let profile = match &self.longitudinal_onsite {
            Some(p) if p.len() < len => {
                return Err(Error::InvalidLattice(format!(
                    "longitudinal profile has {} entries, need {len}",
                    p.len()
                )))
            }
            Some(p) => Some(p[..len].to_vec()),
            None => None,
        };
        let spec = Self {
            dims,
            longitudinal_onsite: profile,
            ..self.clone()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::InvalidLattice("dimension d must be at least 1".into()));
        }
        if let Some(i) = self.dims.iter().position(|&l| l < 1) {
            return Err(Error::InvalidLattice(format!("L_{} must be at least 1", i + 1)));
        }
        if self.couplings.len() != self.dims.len() {
            return Err(Error::InvalidLattice(format!(
                "{} couplings given for a {}-dimensional lattice",
                self.couplings.len(),
                self.dims.len()
            )));
        }
        if !self.omega.is_finite() || self.couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidLattice("frequency and couplings must be finite".into()));
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidLattice("omega must be non-negative".into()));
        }
        if let Some(p) = &self.longitudinal_onsite {
            if p.len() != self.transport_len() {
                return Err(Error::InvalidLattice(format!(
                    "longitudinal profile has {} entries for L_d = {}",
                    p.len(),
                    self.transport_len()
                )));
            }
            if p.iter().any(|e| !e.is_finite()) {
                return Err(Error::InvalidLattice("longitudinal profile must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn n_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn transport_len(&self) -> usize {
        *self.dims.last().expect("validated lattice has d >= 1")
    }

    pub fn transport_coupling(&self) -> f64 {
        *self.couplings.last().expect("validated lattice has d >= 1")
    }

    /// Number of transverse positions `N = L_1 ... L_{d-1}`.
    pub fn transverse_count(&self) -> usize {
        self.dims[..self.d() - 1].iter().product()
    }

    pub fn is_uniform(&self) -> bool {
        self.longitudinal_onsite
            .as_ref()
            .is_none_or(|p| p.iter().all(|&e| e == 0.0))
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.d());
        let mut idx = 0;
        let mut stride = 1;
        for (&c, &l) in coords.iter().zip(&self.dims) {
            debug_assert!(c < l);
            idx += c * stride;
            stride *= l;
        }
        idx
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&l| {
                let c = idx % l;
                idx /= l;
                c
            })
            .collect()
    }

    /// 0-based layer along the transport axis.
    pub fn layer_of(&self, idx: usize) -> usize {
        idx / self.transverse_count()
    }

    /// Sites of transport layer `layer` (0-based), in transverse order.
    pub fn layer_sites(&self, layer: usize) -> Vec<usize> {
        let n = self.transverse_count();
        (layer * n..(layer + 1) * n).collect()
    }

    pub fn onsite_energy(&self, idx: usize) -> f64 {
        let offset = self
            .longitudinal_onsite
            .as_ref()
            .map_or(0.0, |p| p[self.layer_of(idx)]);
        self.omega + offset
    }

    /// Every nearest-neighbour bond, each listed once.
    pub fn bonds(&self) -> Vec<Bond> {
        let d = self.d();
        let mut bonds = Vec::new();
        for a in 0..self.n_sites() {
            let coords = self.coords(a);
            for dim in 0..d {
                let len = self.dims[dim];
                let next = coords[dim] + 1;
                let target = if next < len {
                    Some(next)
                } else if dim + 1 < d && len >= 3 {
                    // periodic wrap, transverse dimensions only
                    Some(0)
                } else {
                    None
                };
                if let Some(t) = target {
                    let mut c = coords.clone();
                    c[dim] = t;
                    bonds.push(Bond {
                        a,
                        b: self.site_index(&c),
                        dim,
                        weight: self.couplings[dim],
                    });
                }
            }
        }
        bonds
    }
}

/// Mean occupation of a bosonic bath mode, `1 / (exp(omega/T) - 1)`.
///
/// Returns exactly zero once `omega/T` would overflow the exponential.
pub fn bath_occupation(omega_eff: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidBath(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    if !(omega_eff > 0.0) || !omega_eff.is_finite() {
        return Err(Error::InvalidBath(format!(
            "bath frequency must be positive and finite, got {omega_eff}"
        )));
    }
    let x = omega_eff / temperature;
    if x > EXP_OVERFLOW {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

/// Longitudinal on-site profile `omega + W (u - 1/2)`, `u` uniform on
/// `[0, 1)`, one value per transport layer. Deterministic in `seed`.
pub fn disordered_profile(len: usize, omega: f64, width: f64, seed: u64) -> Result<Vec<f64>> {
    if !(width >= 0.0) || !width.is_finite() {
        return Err(Error::InvalidArgument(format!("disorder width must be >= 0, got {width}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len).map(|_| omega + width * (rng.gen::<f64>() - 0.5)).collect())
}

/// Rates and mean occupations of the two boundary baths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub gamma_in: f64,
    pub gamma_out: f64,
    pub occ_in: f64,
    pub occ_out: f64,
}

impl BathSpec {
    pub fn new(gamma_in: f64, gamma_out: f64, occ_in: f64, occ_out: f64) -> Result<Self> {
        let spec = Self {
            gamma_in,
            gamma_out,
            occ_in,
            occ_out,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Both baths thermal at their own temperature, evaluated at `omega`.
    pub fn from_temperatures(
        gamma_in: f64,
        gamma_out: f64,
        omega: f64,
        t_in: f64,
        t_out: f64,
    ) -> Result<Self> {
        Self::new(
            gamma_in,
            gamma_out,
            bath_occupation(omega, t_in)?,
            bath_occupation(omega, t_out)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_in", self.gamma_in), ("gamma_out", self.gamma_out)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidBath(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("occ_in", self.occ_in), ("occ_out", self.occ_out)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidBath(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Baths exchanged (1 <-> L_d).
    pub fn swapped(&self) -> Self {
        Self {
            gamma_in: self.gamma_out,
            gamma_out: self.gamma_in,
            occ_in: self.occ_out,
            occ_out: self.occ_in,
        }
    }

    /// Fermionic `(gamma_1, gamma_L)` with `gamma_i = Gamma_i (2 n_i + 1)`.
    pub fn fermion_gammas(&self) -> (f64, f64) {
        (
            self.gamma_in * (2.0 * self.occ_in + 1.0),
            self.gamma_out * (2.0 * self.occ_out + 1.0),
        )
    }

    /// Fermionic stationary occupations `s_i = n_i / (2 n_i + 1)`.
    pub fn fermion_targets(&self) -> (f64, f64) {
        (
            self.occ_in / (2.0 * self.occ_in + 1.0),
            self.occ_out / (2.0 * self.occ_out + 1.0),
        )
    }
}

/// Hermitian single-particle matrix `h` with `H = sum_jk h_jk a_j^dag a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingMatrix {
    pub entries: DMatrix<Complex64>,
    pub dims: Vec<usize>,
}

impl HoppingMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn transverse_count(&self) -> usize {
        self.dims[..self.dims.len() - 1].iter().product()
    }

    pub fn transport_len(&self) -> usize {
        *self.dims.last().expect("hopping matrix has d >= 1")
    }

    /// Sites of the first and last transport layer.
    pub fn boundary_layers(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.transverse_count();
        let last = self.transport_len() - 1;
        ((0..n).collect(), (last * n..(last + 1) * n).collect())
    }

    /// `max |h - h^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let h = &self.entries;
        let mut worst = 0.0_f64;
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Builds the single-particle hopping matrix of a fermionic or bosonic lattice.
pub fn build_hopping_matrix(spec: &LatticeSpec) -> Result<HoppingMatrix> {
    spec.validate()?;
    if spec.statistics == Statistics::Spin {
        return Err(Error::UnsupportedStatistics {
            operation: "build_hopping_matrix",
            statistics: "spin",
        });
    }
    Ok(single_particle_matrix(spec))
}

/// Hopping matrix of the lattice geometry, regardless of statistics. For a
/// spin lattice this is the Hamiltonian restricted to one excitation.
pub(crate) fn single_particle_matrix(spec: &LatticeSpec) -> HoppingMatrix {
    let m = spec.n_sites();
    let mut h = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = Complex64::from(spec.onsite_energy(i));
    }
    for bond in spec.bonds() {
        h[(bond.a, bond.b)] += Complex64::from(bond.weight);
        h[(bond.b, bond.a)] += Complex64::from(bond.weight);
    }
    HoppingMatrix {
        entries: h,
        dims: spec.dims.clone(),
    }
}

/// Energy fluxes exchanged with the two baths at a steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxReport {
    pub j_in: f64,
    pub j_out: f64,
    pub residual: f64,
}

impl FluxReport {
    pub fn new(j_in: f64, j_out: f64) -> Self {
        Self {
            j_in,
            j_out,
            residual: (j_in + j_out).abs(),
        }
    }
}
