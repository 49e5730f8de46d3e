use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{generalized_sym_eigenvalues, is_symmetric, lambda_max, lambda_min, symmetrize};

/// `M = PA + AᵀP + Σᵢ σᵢᵀ P σᵢ`.
pub fn lmi_matrix(a: &DMatrix<f64>, sigmas: &[DMatrix<f64>], p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_inputs(a, sigmas, p)?;
    let mut m = p * a + a.transpose() * p;
    for s in sigmas {
        m += s.transpose() * p * s;
    }
    Ok(symmetrize(&m))
}

fn check_inputs(a: &DMatrix<f64>, sigmas: &[DMatrix<f64>], p: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() || p.shape() != (n, n) || sigmas.iter().any(|s| s.shape() != (n, n)) {
        return Err(Error::Dimension("A, P and every sigma must be n x n".into()));
    }
    if !is_symmetric(p, 1e-12) {
        return Err(Error::NotPositiveDefinite("P is not symmetric".into()));
    }
    if !(lambda_min(p) > 0.0) {
        return Err(Error::NotPositiveDefinite("P has a non-positive eigenvalue".into()));
    }
    Ok(())
}

/// True iff `λ_max(M + κ̂P) ≤ 1e-9·max(1, ‖M + κ̂P‖)`.
pub fn verify_lmi(a: &DMatrix<f64>, sigmas: &[DMatrix<f64>], p: &DMatrix<f64>, kappa_hat: f64) -> Result<bool> {
    let residual = lmi_matrix(a, sigmas, p)? + p * kappa_hat;
    let tol = 1e-9 * residual.norm().max(1.0);
    Ok(lambda_max(&residual) <= tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaHat {
    pub value: f64,
    /// Set when no positive rate is certified at this `P`.
    pub diagnostic: Option<String>,
}

/// Largest `κ̂` with `M ⪯ −κ̂P`: the smallest eigenvalue of the pencil `(−M, P)`.
pub fn max_kappa_hat(a: &DMatrix<f64>, sigmas: &[DMatrix<f64>], p: &DMatrix<f64>) -> Result<KappaHat> {
    let m = lmi_matrix(a, sigmas, p)?;
    let ev = generalized_sym_eigenvalues(&(-m), p)?;
    let k = ev[0];
    if k > 0.0 {
        Ok(KappaHat { value: k, diagnostic: None })
    } else {
        Ok(KappaHat {
            value: 0.0,
            diagnostic: Some(format!(
                "PA + AᵀP + ΣσᵀPσ is not negative definite relative to P (pencil minimum {k:.6e})"
            )),
        })
    }
}
