//! Brute-force Lindblad master equation for tiny lattices.
//!
//! Operators act on the full many-body space (fermions with Jordan-Wigner
//! signs, spins as hard-core two-level sites, bosons truncated at `n_max`
//! per site). Basis index digits are site occupations with site 0 the most
//! significant digit.
//!
//! Every jump operator changes the particle number by exactly one and the
//! Hamiltonian conserves it, so the generator maps the number-balanced part
//! of `rho` (blocks `rho_N` between states of equal particle number `N`)
//! onto itself and couples `N` only to `N ± 1`. The unique steady state
//! lives in that part. [`oracle_steady_state`] exploits this: it fixes the
//! vacuum block to 1 and eliminates the block-tridiagonal system block by
//! block, which costs far less than a null-space solve of the full
//! `D^2 x D^2` generator.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{single_particle_matrix, BathSpec, FluxReport, LatticeSpec, Statistics};
use crate::sparse::CsrMatrix;

pub const DEFAULT_DIMENSION_CAP: usize = 4096;
/// Largest `D_N^2` for one block of the elimination.
pub const BLOCK_UNKNOWN_CAP: usize = 2500;
/// Largest `D` for which [`Liouvillian::to_sparse`] builds the full generator.
pub const SPARSE_GENERATOR_CAP: usize = 512;
const PIVOT_RATIO_FLOOR: f64 = 1e-12;

type Op = CsrMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertSpace {
    statistics: Statistics,
    n_sites: usize,
    local_dim: usize,
    dim: usize,
    numbers: Vec<usize>,
    sectors: Vec<Vec<usize>>,
    position: Vec<usize>,
}

impl HilbertSpace {
    /// `n_max` is required for bosons and ignored otherwise.
    pub fn new(statistics: Statistics, n_sites: usize, n_max: Option<usize>, cap: usize) -> Result<Self> {
        let local_dim = match statistics {
            Statistics::Boson => {
                n_max.ok_or_else(|| Error::InvalidArgument("bosons need a cutoff n_max".into()))? + 1
            }
            _ => 2,
        };
        let dim = u32::try_from(n_sites)
            .ok()
            .and_then(|m| local_dim.checked_pow(m))
            .filter(|&d| d <= cap)
            .ok_or(Error::DimensionCap {
                dim: local_dim.saturating_pow(n_sites.min(64) as u32),
                cap,
            })?;
        let mut numbers = Vec::with_capacity(dim);
        for idx in 0..dim {
            let mut n = 0;
            let mut rest = idx;
            for _ in 0..n_sites {
                n += rest % local_dim;
                rest /= local_dim;
            }
            numbers.push(n);
        }
        let n_top = numbers.iter().copied().max().unwrap_or(0);
        let mut sectors = vec![Vec::new(); n_top + 1];
        let mut position = vec![0; dim];
        for (idx, &n) in numbers.iter().enumerate() {
            position[idx] = sectors[n].len();
            sectors[n].push(idx);
        }
        Ok(Self {
            statistics,
            n_sites,
            local_dim,
            dim,
            numbers,
            sectors,
            position,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Particle number of every basis state.
    pub fn numbers(&self) -> &[usize] {
        &self.numbers
    }

    pub fn sector_sizes(&self) -> Vec<usize> {
        self.sectors.iter().map(Vec::len).collect()
    }

    fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.n_sites - 1 - site) as u32)
    }

    pub fn digit(&self, idx: usize, site: usize) -> usize {
        idx / self.stride(site) % self.local_dim
    }

    /// Lowering operator of `site`: `f` (with string), `b` or `sigma^-`.
    pub fn annihilator(&self, site: usize) -> Op {
        assert!(site < self.n_sites);
        let stride = self.stride(site);
        let mut t = Vec::new();
        for idx in 0..self.dim {
            let n = self.digit(idx, site);
            if n == 0 {
                continue;
            }
            let amp = match self.statistics {
                Statistics::Fermion => {
                    let before: usize = (0..site).map(|j| self.digit(idx, j)).sum();
                    if before.is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Statistics::Boson => (n as f64).sqrt(),
                Statistics::Spin => 1.0,
            };
            t.push((idx - stride, idx, c(amp)));
        }
        CsrMatrix::from_triplets(self.dim, self.dim, t)
    }

    pub fn creator(&self, site: usize) -> Op {
        self.annihilator(site).adjoint()
    }

    pub fn number_operator(&self, site: usize) -> Op {
        self.creator(site).matmul(&self.annihilator(site))
    }

    /// `sum_jk h_jk a_j^dag a_k`.
    pub fn quadratic_operator(&self, h: &DMatrix<Complex64>) -> Op {
        let a: Vec<Op> = (0..self.n_sites).map(|i| self.annihilator(i)).collect();
        let ad: Vec<Op> = a.iter().map(Op::adjoint).collect();
        let mut out = Op::zeros(self.dim, self.dim);
        for j in 0..self.n_sites {
            for k in 0..self.n_sites {
                let v = h[(j, k)];
                if v != c(0.0) {
                    out = out.add(&ad[j].matmul(&a[k]).scale(v));
                }
            }
        }
        out
    }

    /// Dense sub-block of `op` from sector `from` to sector `to`.
    fn block(&self, op: &Op, to: usize, from: usize) -> DMatrix<Complex64> {
        let rows = &self.sectors[to];
        let mut b = DMatrix::zeros(rows.len(), self.sectors[from].len());
        for (i, &r) in rows.iter().enumerate() {
            for (col, v) in op.row(r) {
                if self.numbers[col] == from {
                    b[(i, self.position[col])] += v;
                }
            }
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathSide {
    In,
    Out,
}

#[derive(Debug, Clone)]
pub struct Jump {
    pub op: Op,
    pub bath: BathSide,
    /// Change of particle number, `+1` or `-1`.
    pub charge: i32,
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub space: Arc<HilbertSpace>,
    pub hamiltonian: Op,
    pub jumps: Vec<Jump>,
}

pub fn build_liouvillian(spec: &LatticeSpec, baths: &BathSpec, n_max: Option<usize>) -> Result<Liouvillian> {
    build_liouvillian_with_cap(spec, baths, n_max, DEFAULT_DIMENSION_CAP)
}

/// Lattice Hamiltonian plus jumps `sqrt(Gamma n) a^dag` and
/// `sqrt(Gamma (n+1)) a` on every site of the first and last transport layer.
pub fn build_liouvillian_with_cap(
    spec: &LatticeSpec,
    baths: &BathSpec,
    n_max: Option<usize>,
    cap: usize,
) -> Result<Liouvillian> {
    spec.validate()?;
    baths.validate()?;
    let space = Arc::new(HilbertSpace::new(spec.statistics, spec.n_sites(), n_max, cap)?);
    let h = single_particle_matrix(spec);
    let hamiltonian = space.quadratic_operator(&h.entries);
    let (first, last) = h.boundary_layers();
    let mut jumps = Vec::new();
    for (bath, sites, gamma, n) in [
        (BathSide::In, &first, baths.gamma_in, baths.occ_in),
        (BathSide::Out, &last, baths.gamma_out, baths.occ_out),
    ] {
        for &s in sites {
            let a = space.annihilator(s);
            if gamma * n > 0.0 {
                jumps.push(Jump {
                    op: a.adjoint().scale(c((gamma * n).sqrt())),
                    bath,
                    charge: 1,
                });
            }
            if gamma > 0.0 {
                jumps.push(Jump {
                    op: a.scale(c((gamma * (n + 1.0)).sqrt())),
                    bath,
                    charge: -1,
                });
            }
        }
    }
    Ok(Liouvillian {
        space,
        hamiltonian,
        jumps,
    })
}

fn sp_dense(a: &Op, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for r in 0..a.nrows() {
        for (k, v) in a.row(r) {
            for j in 0..b.ncols() {
                out[(r, j)] += v * b[(k, j)];
            }
        }
    }
    out
}

fn kron(a: &Op, b: &Op) -> Op {
    let (br, bc) = (b.nrows(), b.ncols());
    let mut t = Vec::with_capacity(a.nnz() * b.nnz());
    for (ar, ac, av) in a.triplets() {
        for (r, col, bv) in b.triplets() {
            t.push((ar * br + r, ac * bc + col, av * bv));
        }
    }
    CsrMatrix::from_triplets(a.nrows() * br, a.ncols() * bc, t)
}

fn conj_op(a: &Op) -> Op {
    let t = a.triplets().into_iter().map(|(r, col, v)| (r, col, v.conj())).collect();
    CsrMatrix::from_triplets(a.nrows(), a.ncols(), t)
}

fn transpose_op(a: &Op) -> Op {
    let t = a.triplets().into_iter().map(|(r, col, v)| (col, r, v)).collect();
    CsrMatrix::from_triplets(a.ncols(), a.nrows(), t)
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn decay_operator(&self, side: Option<BathSide>) -> Op {
        let mut g = Op::zeros(self.dim(), self.dim());
        for j in self.jumps.iter().filter(|j| side.is_none_or(|s| s == j.bath)) {
            g = g.add(&j.op.adjoint().matmul(&j.op));
        }
        g
    }

    /// `L[rho]` for a dense `rho`.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let i = Complex64::i();
        let rho_d = rho.adjoint();
        // X rho = (rho^dag X^dag)^dag keeps sparse operands on the left
        let right = |op: &Op| sp_dense(op, &rho_d).adjoint();
        let mut out = (sp_dense(&self.hamiltonian, rho) - right(&self.hamiltonian)) * (-i);
        let g = self.decay_operator(None);
        out -= (sp_dense(&g, rho) + right(&g)) * c(0.5);
        for j in &self.jumps {
            // L rho L^dag = L (L rho^dag)^dag
            out += sp_dense(&j.op, &sp_dense(&j.op, &rho_d).adjoint());
        }
        out
    }

    /// Adjoint (Heisenberg) action `L^dag[X]`; for a trace-preserving
    /// generator `L^dag[1] = 0`.
    pub fn apply_adjoint(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let i = Complex64::i();
        let hx = sp_dense(&self.hamiltonian, x);
        let xh = sp_dense(&self.hamiltonian, &x.adjoint()).adjoint();
        let mut out = (hx - xh) * i;
        let g = self.decay_operator(None);
        let gx = sp_dense(&g, x);
        let xg = sp_dense(&g, &x.adjoint()).adjoint();
        out -= (gx + xg) * c(0.5);
        for j in &self.jumps {
            let ld = j.op.adjoint();
            // L^dag X L = L^dag (L^dag X^dag)^dag
            let t = sp_dense(&ld, &x.adjoint()).adjoint();
            out += sp_dense(&ld, &t);
        }
        out
    }

    /// Full generator over column-stacked `vec(rho)`, index `i + D j` for
    /// `rho_ij`. Only for `D <= SPARSE_GENERATOR_CAP`.
    pub fn to_sparse(&self) -> Result<Op> {
        let d = self.dim();
        if d > SPARSE_GENERATOR_CAP {
            return Err(Error::DimensionCap {
                dim: d,
                cap: SPARSE_GENERATOR_CAP,
            });
        }
        let id = Op::identity(d);
        let i = Complex64::i();
        let h = &self.hamiltonian;
        let g = self.decay_operator(None);
        // vec(A X B) = (B^T kron A) vec(X)
        let mut gen = kron(&id, h)
            .add(&kron(&transpose_op(h), &id).scale(c(-1.0)))
            .scale(-i);
        gen = gen.add(&kron(&id, &g).add(&kron(&transpose_op(&g), &id)).scale(c(-0.5)));
        for j in &self.jumps {
            gen = gen.add(&kron(&conj_op(&j.op), &j.op));
        }
        Ok(gen)
    }

    /// `X = sum_j (L_j^dag H L_j - 1/2 {L_j^dag L_j, H})` over one bath, so
    /// that the energy flux from that bath is `Tr(X rho)`.
    pub fn bath_energy_operator(&self, side: BathSide) -> Op {
        let h = &self.hamiltonian;
        let g = self.decay_operator(Some(side));
        let mut x = g.matmul(h).add(&h.matmul(&g)).scale(c(-0.5));
        for j in self.jumps.iter().filter(|j| j.bath == side) {
            x = x.add(&j.op.adjoint().matmul(h).matmul(&j.op));
        }
        x
    }

    /// Fourth-order Runge-Kutta propagation of a dense `rho`; `observe` sees
    /// the state after every step.
    pub fn propagate_rk4(
        &self,
        rho0: &DMatrix<Complex64>,
        dt: f64,
        steps: usize,
        mut observe: impl FnMut(usize, &DMatrix<Complex64>),
    ) -> DMatrix<Complex64> {
        let mut rho = rho0.clone();
        let h = c(dt);
        for step in 1..=steps {
            let k1 = self.apply(&rho);
            let k2 = self.apply(&(&rho + &k1 * (h * 0.5)));
            let k3 = self.apply(&(&rho + &k2 * (h * 0.5)));
            let k4 = self.apply(&(&rho + &k3 * h));
            rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * (h / 6.0);
            observe(step, &rho);
        }
        rho
    }
}

/// Number-balanced density matrix, one dense block per particle number.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: Arc<HilbertSpace>,
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl DensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let s = &self.space;
        let mut d = DMatrix::zeros(s.dim(), s.dim());
        for (n, b) in self.blocks.iter().enumerate() {
            let idx = &s.sectors[n];
            for (i, &r) in idx.iter().enumerate() {
                for (j, &col) in idx.iter().enumerate() {
                    d[(r, col)] = b[(i, j)];
                }
            }
        }
        d
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| b.clone().symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }

    /// `Tr(X rho)`; only number-conserving entries of `X` contribute.
    pub fn expectation(&self, x: &Op) -> Complex64 {
        let s = &self.space;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..s.dim() {
            let n = s.numbers[r];
            for (col, v) in x.row(r) {
                if s.numbers[col] == n {
                    acc += v * self.blocks[n][(s.position[col], s.position[r])];
                }
            }
        }
        acc
    }

    pub fn occupation(&self, site: usize) -> f64 {
        self.expectation(&self.space.number_operator(site)).re
    }
}

/// Dense block data of a [`Liouvillian`] restricted to the balanced part.
struct BlockSystem {
    h: Vec<DMatrix<Complex64>>,
    g: Vec<DMatrix<Complex64>>,
    /// `(charge, block from N to N + charge)` per jump, indexed by source N.
    jumps: Vec<Vec<(i32, DMatrix<Complex64>)>>,
}

impl BlockSystem {
    fn new(l: &Liouvillian) -> Self {
        let s = &l.space;
        let k = s.sectors.len();
        let g_full = l.decay_operator(None);
        let h = (0..k).map(|n| s.block(&l.hamiltonian, n, n)).collect();
        let g = (0..k).map(|n| s.block(&g_full, n, n)).collect();
        let jumps = (0..k)
            .map(|n| {
                l.jumps
                    .iter()
                    .filter_map(|j| {
                        let to = n as i64 + j.charge as i64;
                        (0..k as i64)
                            .contains(&to)
                            .then(|| (j.charge, s.block(&j.op, to as usize, n)))
                    })
                    .collect()
            })
            .collect();
        Self { h, g, jumps }
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    /// `vec`-space coupling from block `from` into block `to`.
    fn coupling(&self, to: usize, from: usize) -> DMatrix<Complex64> {
        let dt = self.h[to].nrows();
        let df = self.h[from].nrows();
        let mut m = DMatrix::zeros(dt * dt, df * df);
        let charge = to as i64 - from as i64;
        for (q, j) in &self.jumps[from] {
            if *q as i64 == charge {
                m += j.map(|z| z.conj()).kronecker(j);
            }
        }
        m
    }

    fn diagonal(&self, n: usize) -> DMatrix<Complex64> {
        let d = self.h[n].nrows();
        let id = DMatrix::<Complex64>::identity(d, d);
        let i = Complex64::i();
        let h = &self.h[n];
        let g = &self.g[n];
        (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i)
            - (id.kronecker(g) + g.transpose().kronecker(&id)) * c(0.5)
    }

    /// Block `n` of `L[rho]`.
    fn apply_block(&self, blocks: &[DMatrix<Complex64>], n: usize) -> DMatrix<Complex64> {
        let i = Complex64::i();
        let (h, g, r) = (&self.h[n], &self.g[n], &blocks[n]);
        let mut out = (h * r - r * h) * (-i) - (g * r + r * g) * c(0.5);
        for from in [n.wrapping_sub(1), n + 1] {
            if from >= self.len() {
                continue;
            }
            for (q, j) in &self.jumps[from] {
                if from as i64 + *q as i64 == n as i64 {
                    out += j * &blocks[from] * j.adjoint();
                }
            }
        }
        out
    }
}

fn unvec(v: &DMatrix<Complex64>, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// Unique steady state of `l`, normalized to unit trace.
pub fn oracle_steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let sys = BlockSystem::new(l);
    let k = sys.len();
    let sizes: Vec<usize> = sys.h.iter().map(|h| h.nrows()).collect();
    if let Some(&worst) = sizes.iter().map(|d| d * d).collect::<Vec<_>>().iter().max() {
        if worst > BLOCK_UNKNOWN_CAP {
            return Err(Error::DimensionCap {
                dim: worst,
                cap: BLOCK_UNKNOWN_CAP,
            });
        }
    }
    let mut x: Vec<DMatrix<Complex64>> = vec![DMatrix::from_element(1, 1, c(1.0))];
    if k > 1 {
        // forward elimination over N = 1..k-1 with x_0 fixed
        let mut lus = Vec::with_capacity(k);
        let mut rhs = Vec::with_capacity(k);
        let mut uppers = Vec::with_capacity(k);
        for n in 1..k {
            let a = sys.coupling(n, n - 1);
            let mut s = sys.diagonal(n);
            let r = if n == 1 {
                -(&a * &x[0])
            } else {
                let lu_prev: &nalgebra::linalg::FullPivLU<Complex64, _, _> = &lus[n - 2];
                let c_prev: &DMatrix<Complex64> = &uppers[n - 2];
                let r_prev: &DMatrix<Complex64> = &rhs[n - 2];
                let sc = lu_prev.solve(c_prev).expect("checked pivots");
                s -= &a * sc;
                -(&a * lu_prev.solve(r_prev).expect("checked pivots"))
            };
            let lu = s.full_piv_lu();
            let u = lu.u();
            let diag: Vec<f64> = (0..u.nrows().min(u.ncols())).map(|i| u[(i, i)].norm()).collect();
            let hi = diag.iter().copied().fold(0.0, f64::max);
            let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
            let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
            if ratio < PIVOT_RATIO_FLOOR {
                return Err(Error::DegenerateKernel {
                    block: n,
                    pivot_ratio: ratio,
                });
            }
            lus.push(lu);
            rhs.push(r);
            uppers.push(if n + 1 < k {
                sys.coupling(n, n + 1)
            } else {
                DMatrix::zeros(sizes[n] * sizes[n], 0)
            });
        }
        let mut back = vec![DMatrix::zeros(0, 0); k];
        for n in (1..k).rev() {
            let mut r = rhs[n - 1].clone();
            if n + 1 < k {
                r -= &uppers[n - 1] * &back[n + 1];
            }
            back[n] = lus[n - 1].solve(&r).expect("checked pivots");
        }
        for (n, v) in back.into_iter().enumerate().skip(1) {
            x.push(unvec(&v, sizes[n]));
        }
    }
    let mut blocks: Vec<DMatrix<Complex64>> = x
        .into_iter()
        .map(|b| (&b + b.adjoint()) * c(0.5))
        .collect();
    let tr: Complex64 = blocks.iter().map(|b| b.trace()).sum();
    blocks.iter_mut().for_each(|b| *b /= tr);
    Ok(DensityMatrix {
        space: Arc::clone(&l.space),
        blocks,
    })
}

impl Liouvillian {
    /// `max |L[rho]|` for a balanced `rho`.
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        let sys = BlockSystem::new(self);
        (0..sys.len())
            .map(|n| {
                sys.apply_block(&rho.blocks, n)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Energy flux `Tr(H L_side[rho])` delivered by one bath.
pub fn oracle_flux(rho: &DensityMatrix, l: &Liouvillian, side: BathSide) -> f64 {
    rho.expectation(&l.bath_energy_operator(side)).re
}

pub fn oracle_fluxes(rho: &DensityMatrix, l: &Liouvillian) -> FluxReport {
    FluxReport::new(
        oracle_flux(rho, l, BathSide::In),
        oracle_flux(rho, l, BathSide::Out),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fermion_chain(len: usize) -> LatticeSpec {
        LatticeSpec::chain(len, 1.0, 1.0, Statistics::Fermion).unwrap()
    }

    #[test]
    fn fermion_operators_anticommute() {
        let s = HilbertSpace::new(Statistics::Fermion, 3, None, 64).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let a = s.annihilator(i);
                let bd = s.creator(j);
                let anti = a.matmul(&bd).add(&bd.matmul(&a));
                let expect = if i == j { Op::identity(8) } else { Op::zeros(8, 8) };
                assert_eq!(anti.to_dense(), expect.to_dense(), "{i} {j}");
            }
        }
    }

    #[test]
    fn boson_commutator_below_cutoff() {
        let s = HilbertSpace::new(Statistics::Boson, 2, Some(4), 64).unwrap();
        let a = s.annihilator(1);
        let comm = a.matmul(&a.adjoint()).add(&a.adjoint().matmul(&a).scale(c(-1.0)));
        let d = comm.to_dense();
        for idx in 0..s.dim() {
            if s.digit(idx, 1) < 4 {
                assert!((d[(idx, idx)] - c(1.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(
            HilbertSpace::new(Statistics::Fermion, 13, None, 4096),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn single_site_single_bath() {
        let spec = fermion_chain(1);
        let n = 0.8;
        let baths = BathSpec::new(0.6, 0.0, n, 0.0).unwrap();
        let l = build_liouvillian(&spec, &baths, None).unwrap();
        assert_eq!(l.to_sparse().unwrap().nrows(), 4);
        let rho = oracle_steady_state(&l).unwrap();
        let s = n / (2.0 * n + 1.0);
        let d = rho.to_dense();
        assert!((d[(0, 0)].re - (1.0 - s)).abs() < 1e-14);
        assert!((d[(1, 1)].re - s).abs() < 1e-14);
        assert!(l.residual(&rho) < 1e-14);
    }

    #[test]
    fn no_baths_leaves_identity_stationary() {
        let spec = fermion_chain(2);
        let baths = BathSpec::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let l = build_liouvillian(&spec, &baths, None).unwrap();
        let gen = l.to_sparse().unwrap();
        let id = DMatrix::<Complex64>::identity(4, 4);
        let out = gen.mul_vec(id.as_slice());
        assert!(out.iter().all(|z| z.norm() < 1e-15));
        assert!(matches!(oracle_steady_state(&l), Err(Error::DegenerateKernel { .. })));
    }

    #[test]
    fn generator_forms_agree() {
        let spec = fermion_chain(2);
        let baths = BathSpec::new(0.4, 0.9, 1.2, 0.3).unwrap();
        let l = build_liouvillian(&spec, &baths, None).unwrap();
        let gen = l.to_sparse().unwrap();
        let rho = DMatrix::from_fn(4, 4, |i, j| Complex64::new((i * 4 + j) as f64, i as f64 - j as f64));
        let a = l.apply(&rho);
        let b = gen.mul_vec(rho.as_slice());
        for (x, y) in a.as_slice().iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
        // trace preservation
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert!(l.apply_adjoint(&id).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn two_site_fermion_flux() {
        let baths = BathSpec::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let l = build_liouvillian(&fermion_chain(2), &baths, None).unwrap();
        let rho = oracle_steady_state(&l).unwrap();
        let f = oracle_fluxes(&rho, &l);
        assert!((f.j_in - 1.0 / 7.0).abs() < 1e-12, "{f:?}");
        assert!(f.residual < 1e-12);
        assert!((rho.trace() - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn equal_baths_carry_nothing() {
        let baths = BathSpec::new(0.5, 0.3, 0.7, 0.7).unwrap();
        let l = build_liouvillian(&fermion_chain(3), &baths, None).unwrap();
        let rho = oracle_steady_state(&l).unwrap();
        let f = oracle_fluxes(&rho, &l);
        assert!(f.j_in.abs() < 1e-12 && f.j_out.abs() < 1e-12);
    }
}
