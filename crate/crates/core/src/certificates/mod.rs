//! Quadratic incremental-stability certificates `V_p(x,x') = ((1/q)(x−x')ᵀP_p(x−x'))^{q/2}`
//! with linear envelopes `α̲_p(y)=c_lo·y`, `ᾱ_p(y)=c_hi·y`, `γ̂_p(r)=s·r`.
//!
//! Envelope coefficients are stated against the infinity norm of the state:
//! `c_lo = (λ_min/q)^{q/2}`, `c_hi = (n·λ_max/q)^{q/2}`. For `q = 1` the default
//! slope is `√λ_max·√n`. The diffusion bound `h` is applied with the same closed
//! form for every `q ≥ 1`, although its Hessian hypothesis is only checked for `q ≥ 2`.

mod bounds;
mod file;
mod lmi;

pub use bounds::{adaptive_simpson, beta, compute_mu, gamma_hat, h_point_bound, h_set_bound};
pub use file::{load_certificates, parse_certificates, CertificateFile, ModeCertificateFile};
pub use lmi::{lmi_matrix, max_kappa_hat, verify_lmi, KappaHat};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, lambda_max, lambda_min};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Given,
    Computed,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Given => "given",
            Source::Computed => "computed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub kappa: Source,
    pub alpha_lo: Source,
    pub alpha_hi: Source,
    pub gamma_hat: Source,
}

#[derive(Clone, Debug)]
pub struct QuadraticCertificate {
    pub p: DMatrix<f64>,
    pub q: f64,
    pub kappa: f64,
    pub alpha_lo_coeff: f64,
    pub alpha_hi_coeff: f64,
    pub gamma_hat_slope: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub provenance: Provenance,
}

impl QuadraticCertificate {
    /// Certificate with default envelopes for `P` and rate `kappa`.
    pub fn new(p: DMatrix<f64>, q: f64, kappa: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("moment order q={q} must be at least 1")));
        }
        if !p.is_square() || !is_symmetric(&p, 1e-12) {
            return Err(Error::NotPositiveDefinite("P must be square and symmetric".into()));
        }
        let lmin = lambda_min(&p);
        let lmax = lambda_max(&p);
        if !(lmin > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("λ_min(P) = {lmin}")));
        }
        let n = p.nrows() as f64;
        let c_lo = (lmin / q).powf(q / 2.0);
        let c_hi = (n * lmax / q).powf(q / 2.0);
        let slope = default_gamma_slope(q, lmin, lmax, p.nrows());
        Ok(Self {
            p,
            q,
            kappa,
            alpha_lo_coeff: c_lo,
            alpha_hi_coeff: c_hi,
            gamma_hat_slope: slope,
            lambda_min: lmin,
            lambda_max: lmax,
            provenance: Provenance {
                kappa: Source::Given,
                alpha_lo: Source::Computed,
                alpha_hi: Source::Computed,
                gamma_hat: Source::Computed,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            let di = x[i] - y[i];
            let mut row = 0.0;
            for j in 0..n {
                row += self.p[(i, j)] * (x[j] - y[j]);
            }
            acc += di * row;
        }
        (acc.max(0.0) / self.q).powf(self.q / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("κ = {} must be positive", self.kappa)));
        }
        if !(self.alpha_lo_coeff > 0.0 && self.alpha_lo_coeff <= self.alpha_hi_coeff) {
            return Err(Error::InvalidArgument(format!(
                "envelope coefficients need 0 < c_lo ≤ c_hi, got {} and {}",
                self.alpha_lo_coeff, self.alpha_hi_coeff
            )));
        }
        if !(self.gamma_hat_slope > 0.0) {
            return Err(Error::InvalidArgument("γ̂ slope must be positive".into()));
        }
        Ok(())
    }
}

/// Slope of `γ̂` for infinity-norm arguments. For `q = 1` this is the triangle
/// inequality in the `P`-norm; other orders need a user-supplied slope.
fn default_gamma_slope(q: f64, _lmin: f64, lmax: f64, n: usize) -> f64 {
    if q == 1.0 {
        lmax.sqrt() * (n as f64).sqrt()
    } else {
        f64::NAN
    }
}

#[derive(Clone, Debug)]
pub struct CertificateSet {
    pub per_mode: Vec<QuadraticCertificate>,
    pub common: bool,
    pub q: f64,
    pub mu: f64,
    pub kappa: f64,
    pub alpha_lo_coeff: f64,
    pub alpha_hi_coeff: f64,
    pub gamma_hat_slope: f64,
}

impl CertificateSet {
    pub fn new(per_mode: Vec<QuadraticCertificate>) -> Result<Self> {
        let first = per_mode
            .first()
            .ok_or_else(|| Error::InvalidArgument("certificate set needs at least one mode".into()))?;
        let q = first.q;
        if per_mode.iter().any(|c| c.q != q) {
            return Err(Error::InvalidArgument("all certificates must share q".into()));
        }
        if per_mode.iter().any(|c| c.p.shape() != first.p.shape()) {
            return Err(Error::Dimension("certificate matrices differ in size".into()));
        }
        for c in &per_mode {
            c.validate()?;
        }
        let common = per_mode.iter().all(|c| c.p == first.p);
        let mu = compute_mu(&per_mode)?;
        let kappa = per_mode.iter().map(|c| c.kappa).fold(f64::INFINITY, f64::min);
        let alpha_lo_coeff = per_mode.iter().map(|c| c.alpha_lo_coeff).fold(f64::INFINITY, f64::min);
        let alpha_hi_coeff = per_mode.iter().map(|c| c.alpha_hi_coeff).fold(0.0, f64::max);
        let gamma_hat_slope = per_mode.iter().map(|c| c.gamma_hat_slope).fold(0.0, f64::max);
        Ok(Self { per_mode, common, q, mu, kappa, alpha_lo_coeff, alpha_hi_coeff, gamma_hat_slope })
    }

    pub fn num_modes(&self) -> usize {
        self.per_mode.len()
    }

    pub fn mode(&self, p: usize) -> &QuadraticCertificate {
        &self.per_mode[p]
    }

    pub fn alpha_lo(&self, y: f64) -> f64 {
        self.alpha_lo_coeff * y
    }

    pub fn alpha_lo_inv(&self, y: f64) -> f64 {
        y / self.alpha_lo_coeff
    }

    pub fn alpha_hi(&self, y: f64) -> f64 {
        self.alpha_hi_coeff * y
    }

    pub fn alpha_hi_inv(&self, y: f64) -> f64 {
        y / self.alpha_hi_coeff
    }

    pub fn gamma_hat(&self, r: f64) -> f64 {
        self.gamma_hat_slope * r
    }

    /// `V_p(x, y)`.
    pub fn value(&self, p: usize, x: &[f64], y: &[f64]) -> f64 {
        self.per_mode[p].value(x, y)
    }

    /// `max_p V_p(x, y)`.
    pub fn max_value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.per_mode.iter().map(|c| c.value(x, y)).fold(0.0, f64::max)
    }

    /// `(α̲⁻¹(y))^{1/q}`: converts a Lyapunov level to an infinity-norm distance.
    pub fn level_to_distance(&self, y: f64) -> f64 {
        self.alpha_lo_inv(y).max(0.0).powf(1.0 / self.q)
    }

    /// `α̲(ε^q)`.
    pub fn precision_level(&self, epsilon: f64) -> f64 {
        self.alpha_lo(epsilon.powf(self.q))
    }

    /// Radius `(ᾱ⁻¹(α̲(ε^q)))^{1/q}` of concrete states related to an abstract state at start.
    pub fn initial_radius(&self, epsilon: f64) -> f64 {
        self.alpha_hi_inv(self.precision_level(epsilon)).powf(1.0 / self.q)
    }
}
