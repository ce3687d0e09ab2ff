//! Continuous-time LQR by Newton–Kleinman iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone)]
pub struct LqrSolution {
    /// `K = R^-1 B^T P`
    pub gain: DMatrix<f64>,
    /// Stabilizing solution of the CARE.
    pub cost: DMatrix<f64>,
    /// Frobenius norm of `A^T P + P A - P B R^-1 B^T P + Q`.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest real part of the eigenvalues.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let r_inv = r
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(r.nrows(), r.ncols(), f64::NAN));
    let res = a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q;
    res.norm()
}

/// Solve `Acl^T P + P Acl + W = 0` for `P` by vectorization.
pub fn solve_lyapunov(acl: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = acl.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = acl.transpose();
    // vec(At P) = (I ⊗ At) vec(P), vec(P Acl) = (Acl^T ⊗ I) vec(P)
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(w.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Synthesis("singular Lyapunov operator".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// A stabilizing gain for a controllable pair (Bass's method).
pub fn stabilizing_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if spectral_abscissa(a) < 0.0 {
        return Ok(DMatrix::zeros(b.ncols(), n));
    }
    let beta = a.norm() + 1.0;
    let shifted = -(a + DMatrix::<f64>::identity(n, n) * beta);
    // shifted W + W shifted^T + 2 B B^T = 0
    let w = solve_lyapunov(&shifted.transpose(), &(b * b.transpose() * 2.0))?;
    let chol = w
        .cholesky()
        .ok_or_else(|| Error::Synthesis("pair (A, B) is not controllable".into()))?;
    Ok(b.transpose() * chol.inverse())
}

pub fn lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqrSolution> {
    let k0 = stabilizing_gain(a, b)?;
    lqr_gain_from(a, b, q, r, k0)
}

/// Newton–Kleinman from a given stabilizing gain `k0`.
pub fn lqr_gain_from(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    k0: DMatrix<f64>,
) -> Result<LqrSolution> {
    let (n, m) = (a.nrows(), b.ncols());
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) || k0.shape() != (m, n) {
        return Err(Error::Dimension("LQR matrices have inconsistent shapes".into()));
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Synthesis("R is singular".into()))?;
    if spectral_abscissa(&(a - b * &k0)) >= 0.0 {
        return Err(Error::Synthesis("initial gain is not stabilizing".into()));
    }
    let mut k = k0;
    let mut p = DMatrix::zeros(n, n);
    for it in 1..=MAX_ITERATIONS {
        let acl = a - b * &k;
        let w = q + k.transpose() * r * &k;
        p = solve_lyapunov(&acl, &w)?;
        let next = &r_inv * b.transpose() * &p;
        let step = (&next - &k).norm();
        let scale = next.norm().max(1.0);
        k = next;
        if !step.is_finite() {
            return Err(Error::Synthesis("Newton–Kleinman diverged".into()));
        }
        if step <= TOLERANCE * scale {
            let residual = care_residual(a, b, q, r, &p);
            if spectral_abscissa(&(a - b * &k)) >= 0.0 {
                return Err(Error::Synthesis("closed loop is not Hurwitz".into()));
            }
            return Ok(LqrSolution {
                gain: k,
                cost: p,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Synthesis(format!(
        "Newton–Kleinman did not converge in {MAX_ITERATIONS} iterations (residual {})",
        care_residual(a, b, q, r, &p)
    )))
}
