//! Continuous Lyapunov equation `A^dag X + X A + Q = 0` for stable `A`,
//! by complex Schur reduction (Bartels-Stewart).

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 0; // 0 = no limit

/// Schur factors `A = Z T Z^dag`, kept so several right-hand sides can reuse
/// one factorization.
pub struct LyapunovSolver {
    a: DMatrix<Complex64>,
    z: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
}

impl LyapunovSolver {
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::LyapunovFailure("matrix is not square".into()));
        }
        let schur = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::LyapunovFailure("Schur iteration did not converge".into()))?;
        let (z, t) = schur.unpack();
        Ok(Self { a: a.clone(), z, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Solves `T^dag Y + Y T = G` column by column; `T^dag + T_kk I` is lower
    /// triangular.
    fn solve_triangular(&self, g: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let t = &self.t;
        let n = t.nrows();
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            for i in 0..n {
                let mut acc = g[(i, k)];
                for m in 0..k {
                    acc -= y[(i, m)] * t[(m, k)];
                }
                rhs[i] = acc;
            }
            let tkk = t[(k, k)];
            for i in 0..n {
                // row i of T^dag: conj(T[j, i]) for j <= i
                let mut acc = rhs[i];
                for j in 0..i {
                    acc -= t[(j, i)].conj() * y[(j, k)];
                }
                let pivot = t[(i, i)].conj() + tkk;
                if pivot.norm() == 0.0 {
                    return Err(Error::LyapunovFailure(format!(
                        "eigenvalues {i} and {k} sum to zero; the equation is singular"
                    )));
                }
                y[(i, k)] = acc / pivot;
            }
        }
        Ok(y)
    }

    /// Solves `A^dag X + X A = F`.
    fn solve_raw(&self, f: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let g = self.z.adjoint() * f * &self.z;
        let y = self.solve_triangular(&g)?;
        Ok(&self.z * y * self.z.adjoint())
    }

    /// `A^dag X + X A + Q`.
    pub fn residual(&self, x: &DMatrix<Complex64>, q: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.a.adjoint() * x + x * &self.a + q
    }

    /// Solution of `A^dag X + X A + Q = 0` with one step of iterative
    /// refinement.
    pub fn solve(&self, q: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let mut x = self.solve_raw(&(-q))?;
        let r = self.residual(&x, q);
        x -= self.solve_raw(&r)?;
        Ok(x)
    }
}

/// `A^dag X + X A + Q = 0`, one-shot.
pub fn solve_lyapunov(a: &DMatrix<Complex64>, q: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    LyapunovSolver::new(a)?.solve(q)
}
