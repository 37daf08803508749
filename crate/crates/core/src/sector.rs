//! Fixed-excitation-number configuration bases of spin lattices and the
//! sparse Hamiltonian restricted to one sector.
//!
//! A configuration is a `u64` bitmask, bit `i` set when site `i` (flat
//! index) carries an excitation. Configurations are listed in increasing
//! numeric order, which is the colexicographic order of the occupied-site
//! tuples, so the rank has the closed form `sum_k C(p_k, k + 1)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Statistics};
use crate::sparse::CsrMatrix;

/// Default cap on the number of configurations in one sector.
pub const DEFAULT_SECTOR_BUDGET: usize = 4_000_000;

/// `C(n, k)` in u128, exact for n <= 64.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_excitations: usize,
    states: Vec<u64>,
    // binom[p][k] = C(p, k) for ranking
    binom: Vec<Vec<usize>>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_excitations: usize, budget: usize) -> Result<Self> {
        if n_sites > 63 {
            return Err(Error::InvalidArgument(format!(
                "at most 63 sites supported, got {n_sites}"
            )));
        }
        if n_excitations > n_sites {
            return Err(Error::InvalidArgument(format!(
                "{n_excitations} excitations on {n_sites} sites"
            )));
        }
        let dim = binomial(n_sites, n_excitations);
        if dim > budget as u128 {
            return Err(Error::SectorTooLarge {
                dim: usize::try_from(dim).unwrap_or(usize::MAX),
                budget,
            });
        }
        let dim = dim as usize;
        let mut states = Vec::with_capacity(dim);
        if n_excitations == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks the k-subsets in increasing numeric order
            let mut v: u64 = (1u64 << n_excitations) - 1;
            let limit = 1u64 << n_sites;
            while v < limit {
                states.push(v);
                let t = v | (v - 1);
                let tz = v.trailing_zeros();
                v = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (tz + 1));
            }
        }
        debug_assert_eq!(states.len(), dim);
        let binom = (0..=n_sites)
            .map(|p| (0..=n_excitations).map(|k| binomial(p, k) as usize).collect())
            .collect();
        Ok(Self {
            n_sites,
            n_excitations,
            states,
            binom,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    /// Position of `mask` in the basis, `None` if it is not in this sector.
    pub fn rank(&self, mask: u64) -> Option<usize> {
        if mask.count_ones() as usize != self.n_excitations
            || (self.n_sites < 64 && mask >> self.n_sites != 0)
        {
            return None;
        }
        let mut r = 0;
        let mut m = mask;
        let mut k = 1;
        while m != 0 {
            let p = m.trailing_zeros() as usize;
            r += self.binom[p][k];
            m &= m - 1;
            k += 1;
        }
        Some(r)
    }

    /// Occupied sites of configuration `i`, ascending.
    pub fn occupied(&self, i: usize) -> Vec<usize> {
        bits(self.states[i])
    }
}

pub(crate) fn bits(mut m: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Amplitude vector over a [`SectorBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    pub basis: Arc<SectorBasis>,
    pub amplitudes: Vec<Complex64>,
}

impl SectorState {
    pub fn zeros(basis: Arc<SectorBasis>) -> Self {
        let amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        Self { basis, amplitudes }
    }

    /// Unit amplitude on configuration `mask`.
    pub fn configuration(basis: Arc<SectorBasis>, mask: u64) -> Result<Self> {
        let mut s = Self::zeros(basis);
        s.add(mask, Complex64::new(1.0, 0.0))?;
        Ok(s)
    }

    pub fn add(&mut self, mask: u64, amp: Complex64) -> Result<()> {
        let i = self.basis.rank(mask).ok_or_else(|| {
            Error::InvalidArgument(format!("configuration {mask:#b} is outside the sector"))
        })?;
        self.amplitudes[i] += amp;
        Ok(())
    }

    pub fn amplitude(&self, mask: u64) -> Complex64 {
        self.basis
            .rank(mask)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.basis.dim(), other.basis.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<n_i>` for every site.
    pub fn occupations(&self) -> Vec<f64> {
        site_occupations(&self.basis, &self.amplitudes)
    }
}

pub(crate) fn site_occupations(basis: &SectorBasis, amps: &[Complex64]) -> Vec<f64> {
    let mut occ = vec![0.0; basis.n_sites()];
    for (&mask, a) in basis.states().iter().zip(amps) {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let mut m = mask;
        while m != 0 {
            occ[m.trailing_zeros() as usize] += p;
            m &= m - 1;
        }
    }
    occ
}

/// Spin Hamiltonian restricted to one excitation sector.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub basis: Arc<SectorBasis>,
    pub matrix: CsrMatrix<f64>,
}

impl SectorHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn apply(&self, psi: &SectorState) -> SectorState {
        SectorState {
            basis: Arc::clone(&self.basis),
            amplitudes: self.matrix.mul_vec(&psi.amplitudes),
        }
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &SectorState) -> f64 {
        psi.inner(&self.apply(psi)).re
    }
}

pub fn build_spin_sector_hamiltonian(spec: &LatticeSpec, n_excitations: usize) -> Result<SectorHamiltonian> {
    build_spin_sector_hamiltonian_with_budget(spec, n_excitations, DEFAULT_SECTOR_BUDGET)
}

/// Excitation-conserving spin Hamiltonian
/// `sum_i eps_i sigma+_i sigma-_i + sum_<ij> g (sigma+_i sigma-_j + h.c.)`
/// over the `n_excitations` sector.
pub fn build_spin_sector_hamiltonian_with_budget(
    spec: &LatticeSpec,
    n_excitations: usize,
    budget: usize,
) -> Result<SectorHamiltonian> {
    spec.validate()?;
    if spec.statistics != Statistics::Spin {
        return Err(Error::UnsupportedStatistics {
            operation: "build_spin_sector_hamiltonian",
            statistics: spec.statistics.name(),
        });
    }
    let m = spec.n_sites();
    let basis = Arc::new(SectorBasis::new(m, n_excitations, budget)?);
    let onsite: Vec<f64> = (0..m).map(|i| spec.onsite_energy(i)).collect();
    let bonds: Vec<(u64, u64, f64)> = spec
        .bonds()
        .into_iter()
        .filter(|b| b.weight != 0.0)
        .map(|b| (1u64 << b.a, 1u64 << b.b, b.weight))
        .collect();

    let mut triplets = Vec::with_capacity(basis.dim() * (1 + 2 * n_excitations.max(1)));
    for (row, &mask) in basis.states().iter().enumerate() {
        let diag: f64 = bits(mask).into_iter().map(|i| onsite[i]).sum();
        if diag != 0.0 {
            triplets.push((row, row, diag));
        }
        for &(a, b, g) in &bonds {
            let occ_a = mask & a != 0;
            let occ_b = mask & b != 0;
            if occ_a != occ_b {
                let target = mask ^ a ^ b;
                let col = basis.rank(target).expect("hop stays in sector");
                triplets.push((row, col, g));
            }
        }
    }
    let dim = basis.dim();
    Ok(SectorHamiltonian {
        basis,
        matrix: CsrMatrix::from_triplets(dim, dim, triplets),
    })
}
