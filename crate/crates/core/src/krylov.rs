//! Lanczos propagator `exp(-i H dt)` for real symmetric sparse
//! Hamiltonians acting on complex vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

type CVec = Vec<Complex64>;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Lanczos recurrence with full reorthogonalization. Returns the basis,
/// diagonal `alpha` and off-diagonal `beta` (`beta[j]` couples `j` and
/// `j + 1`; the last entry is the residual norm after the final vector).
struct Lanczos {
    basis: Vec<CVec>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Lanczos {
    fn start(v: &[Complex64]) -> Result<Self> {
        let n = norm(v);
        if n == 0.0 {
            return Err(Error::InvalidArgument("Krylov start vector is zero".into()));
        }
        Ok(Self {
            basis: vec![v.iter().map(|z| z / n).collect()],
            alpha: Vec::new(),
            beta: Vec::new(),
        })
    }

    /// Extends by one vector. Returns the new residual norm.
    fn extend(&mut self, h: &CsrMatrix<f64>, work: &mut CVec) -> f64 {
        let j = self.alpha.len();
        let q = &self.basis[j];
        h.mul_vec_into(q, work);
        let a = dot(q, work).re;
        axpy(work, Complex64::from(-a), q);
        if j > 0 {
            axpy(work, Complex64::from(-self.beta[j - 1]), &self.basis[j - 1]);
        }
        // two passes of classical Gram-Schmidt against everything
        for _ in 0..2 {
            for b in &self.basis {
                let p = dot(b, work);
                axpy(work, -p, b);
            }
        }
        let beta = norm(work);
        self.alpha.push(a);
        self.beta.push(beta);
        beta
    }

    fn push_next(&mut self, work: &CVec) {
        let b = *self.beta.last().expect("extend before push");
        self.basis.push(work.iter().map(|z| z / b).collect());
    }

    fn tridiagonal(&self, m: usize) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        t
    }
}

/// `exp(-i T dt) e_1` for a real symmetric `T`.
fn small_exp(t: &DMatrix<f64>, dt: f64) -> DVector<Complex64> {
    let eig = SymmetricEigen::new(t.clone());
    let m = t.nrows();
    let mut out = DVector::zeros(m);
    for k in 0..m {
        let w = eig.eigenvectors[(0, k)];
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
        for i in 0..m {
            out[i] += eig.eigenvectors[(i, k)] * w * phase;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub krylov_dim: usize,
    pub substeps: usize,
    pub error_estimate: f64,
}

/// Adaptive Lanczos propagator. Each call to [`KrylovPropagator::step`]
/// grows the Krylov space until the a posteriori error estimate
/// `beta_m |e_m^T exp(-i T dt) e_1|` drops below `tol`, halving the step
/// when `max_dim` vectors are not enough.
#[derive(Debug, Clone)]
pub struct KrylovPropagator<'a> {
    h: &'a CsrMatrix<f64>,
    pub tol: f64,
    pub max_dim: usize,
    pub max_halvings: u32,
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a CsrMatrix<f64>) -> Self {
        Self {
            h,
            tol: 1e-13,
            max_dim: 40,
            max_halvings: 12,
        }
    }

    /// Tries one step of length `dt`; `Err(best_error)` if `max_dim` is
    /// reached first.
    fn try_step(&self, psi: &mut CVec, dt: f64) -> std::result::Result<(usize, f64), f64> {
        let n0 = norm(psi);
        if n0 == 0.0 {
            return Ok((0, 0.0));
        }
        let mut lz = Lanczos::start(psi).expect("nonzero");
        let mut work = vec![Complex64::new(0.0, 0.0); psi.len()];
        let mut best = f64::INFINITY;
        loop {
            let beta = lz.extend(self.h, &mut work);
            let m = lz.alpha.len();
            let y = small_exp(&lz.tridiagonal(m), dt);
            let err = beta * y[m - 1].norm();
            best = best.min(err);
            if err < self.tol || beta < 1e-14 * (1.0 + lz.alpha[0].abs()) || m == psi.len() {
                psi.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for (i, q) in lz.basis.iter().enumerate().take(m) {
                    axpy(psi, y[i] * n0, q);
                }
                return Ok((m, err));
            }
            if m >= self.max_dim {
                return Err(best);
            }
            lz.push_next(&work);
        }
    }

    /// Advances `psi` by `dt`; `time` is only used for error reports.
    pub fn step(&self, psi: &mut CVec, dt: f64, time: f64) -> Result<StepStats> {
        let mut pieces = 1usize;
        let mut halvings = 0;
        loop {
            let mut trial = psi.clone();
            let sub = dt / pieces as f64;
            let mut worst: f64 = 0.0;
            let mut dim = 0;
            let mut ok = true;
            for _ in 0..pieces {
                match self.try_step(&mut trial, sub) {
                    Ok((m, e)) => {
                        worst = worst.max(e);
                        dim = dim.max(m);
                    }
                    Err(best) => {
                        ok = false;
                        worst = best;
                        break;
                    }
                }
            }
            if ok {
                *psi = trial;
                return Ok(StepStats {
                    krylov_dim: dim,
                    substeps: pieces,
                    error_estimate: worst,
                });
            }
            if halvings >= self.max_halvings {
                return Err(Error::StepFailure {
                    achieved: worst,
                    time,
                });
            }
            halvings += 1;
            pieces *= 2;
        }
    }
}
