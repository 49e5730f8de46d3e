use super::{CertificateSet, QuadraticCertificate};
use crate::error::{Error, Result};
use crate::linalg::generalized_sym_eigenvalues;
use crate::model::{BoxSet, SwitchedSystem};

/// `μ = max_{p,p'} λ_max(P_p, P_p')^{q/2}`, so that `V_p ≤ μ·V_p'`.
pub fn compute_mu(per_mode: &[QuadraticCertificate]) -> Result<f64> {
    let first = per_mode
        .first()
        .ok_or_else(|| Error::InvalidArgument("no certificates".into()))?;
    let q = first.q;
    if per_mode.iter().any(|c| c.q != q) {
        return Err(Error::InvalidArgument("all certificates must share q".into()));
    }
    if per_mode.iter().all(|c| c.p == first.p) {
        return Ok(1.0);
    }
    let mut mu: f64 = 1.0;
    for (i, a) in per_mode.iter().enumerate() {
        for (j, b) in per_mode.iter().enumerate() {
            if i == j {
                continue;
            }
            let ev = generalized_sym_eigenvalues(&a.p, &b.p)?;
            mu = mu.max(ev.last().copied().unwrap_or(1.0));
        }
    }
    Ok(mu.powf(q / 2.0))
}

/// `β(r, s) = α̲⁻¹(ᾱ(r)·e^{−κs})` for linear envelopes.
pub fn beta(r: f64, s: f64, cert: &QuadraticCertificate) -> Result<f64> {
    if r < 0.0 || s < 0.0 {
        return Err(Error::InvalidArgument(format!("beta needs r ≥ 0 and s ≥ 0, got r={r}, s={s}")));
    }
    Ok(cert.alpha_hi_coeff / cert.alpha_lo_coeff * r * (-cert.kappa * s).exp())
}

/// `γ̂(r)` with the largest per-mode slope.
pub fn gamma_hat(r: f64, certs: &CertificateSet) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("gamma_hat needs r ≥ 0, got {r}")));
    }
    Ok(certs.gamma_hat(r))
}

/// Bound on the q-th moment gap between the stochastic and the nominal solution
/// of mode `p` started at `x`, after time `t`.
pub fn h_point_bound(x: &[f64], t: f64, p: usize, certs: &CertificateSet, sys: &SwitchedSystem) -> Result<f64> {
    let norm = crate::linalg::inf_norm(x);
    h_at_norm(norm, t, p, certs, sys)
}

pub(crate) fn h_at_norm(norm: f64, t: f64, p: usize, certs: &CertificateSet, sys: &SwitchedSystem) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("h needs t ≥ 0, got {t}")));
    }
    let cert = certs.mode(p);
    let z = sys.mode(p)?.lipschitz_diffusion;
    if t == 0.0 || z == 0.0 || norm == 0.0 {
        return Ok(0.0);
    }
    let q = cert.q;
    let k = cert.kappa;
    let ratio = (cert.alpha_hi_coeff / cert.alpha_lo_coeff).powf(2.0 / q);
    let integral = if q == 1.0 || q == 2.0 {
        ratio * norm * norm * q * (-(-2.0 * k * t / q).exp_m1()) / (2.0 * k)
    } else {
        let r = norm.powf(q);
        adaptive_simpson(&|s: f64| beta(r, s, cert).unwrap_or(0.0).powf(2.0 / q), 0.0, t, 1e-14)
    };
    let m = sys.n.min(sys.q_hat) as f64;
    let inner = 0.5 * cert.lambda_max * m * z * z * (-k * t).exp() * integral;
    Ok(inner / cert.alpha_lo_coeff)
}

/// `h_X(t) = max_p h^p_x(t)` at the largest-norm point of `X`.
pub fn h_set_bound(set: &BoxSet, t: f64, certs: &CertificateSet, sys: &SwitchedSystem) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("h_set_bound over an empty set".into()));
    }
    let norm = set.sup_norm();
    let mut worst: f64 = 0.0;
    for p in 0..certs.num_modes() {
        worst = worst.max(h_at_norm(norm, t, p, certs, sys)?);
    }
    Ok(worst)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}
