//! TOML certificate description.
//!
//! ```toml
//! q = 1.0
//! p = [[1.0, 0.0], [0.0, 1.0]]   # common matrix for every mode, or:
//!
//! [[modes]]                       # one entry per mode
//! p = [[2.0, 0.0], [0.0, 1.0]]
//! kappa = 0.2498                  # optional, computed from the LMI when omitted
//! ```
//!
//! `kappa`, `alpha_lo`, `alpha_hi` and `gamma_slope` may also be given at top
//! level, where they apply to every mode unless a mode entry overrides them.
//! Omitted rates are computed from the LMI as half the largest feasible `κ̂`
//! (affine modes and `q ≤ 2` only).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{max_kappa_hat, CertificateSet, QuadraticCertificate, Source};
use crate::error::{Error, Result};
use crate::model::file::matrix_from_rows;
use crate::model::SwitchedSystem;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeCertificateFile>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCertificateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_slope: Option<f64>,
}

impl CertificateFile {
    pub fn build(&self, sys: &SwitchedSystem) -> Result<CertificateSet> {
        let m = sys.num_modes();
        if !self.modes.is_empty() && self.modes.len() != m {
            return Err(Error::Dimension(format!(
                "certificate lists {} modes, system has {m}",
                self.modes.len()
            )));
        }
        let empty = ModeCertificateFile::default();
        let mut per_mode = Vec::with_capacity(m);
        for p in 0..m {
            let entry = self.modes.get(p).unwrap_or(&empty);
            let rows = entry
                .p
                .as_ref()
                .or(self.p.as_ref())
                .ok_or_else(|| Error::Parse(format!("no P matrix for mode {}", p + 1)))?;
            let pm = matrix_from_rows(rows, sys.n, &format!("certificate P for mode {}", p + 1))?;
            let mut cert = QuadraticCertificate::new(pm, self.q, f64::NAN)?;
            match entry.kappa.or(self.kappa) {
                Some(k) => cert.kappa = k,
                None => {
                    cert.kappa = computed_kappa(sys, p, &cert)?;
                    cert.provenance.kappa = Source::Computed;
                }
            }
            if let Some(c) = entry.alpha_lo.or(self.alpha_lo) {
                cert.alpha_lo_coeff = c;
                cert.provenance.alpha_lo = Source::Given;
            }
            if let Some(c) = entry.alpha_hi.or(self.alpha_hi) {
                cert.alpha_hi_coeff = c;
                cert.provenance.alpha_hi = Source::Given;
            }
            if let Some(s) = entry.gamma_slope.or(self.gamma_slope) {
                cert.gamma_hat_slope = s;
                cert.provenance.gamma_hat = Source::Given;
            }
            if cert.gamma_hat_slope.is_nan() {
                return Err(Error::Parse(format!(
                    "mode {}: gamma_slope must be given when q ≠ 1",
                    p + 1
                )));
            }
            per_mode.push(cert);
        }
        CertificateSet::new(per_mode)
    }
}

fn computed_kappa(sys: &SwitchedSystem, p: usize, cert: &QuadraticCertificate) -> Result<f64> {
    let mode = sys.mode(p)?;
    let (a, _) = mode
        .affine_parts()
        .ok_or_else(|| Error::Parse(format!("mode {} is not affine; kappa must be given", p + 1)))?;
    let sigmas = mode
        .linear_sigmas()
        .ok_or_else(|| Error::Parse(format!("mode {} has general diffusion; kappa must be given", p + 1)))?;
    if cert.q > 2.0 {
        return Err(Error::Parse(format!("mode {}: kappa must be given when q > 2", p + 1)));
    }
    let k = max_kappa_hat(a, sigmas, &cert.p)?;
    if let Some(d) = k.diagnostic {
        return Err(Error::Infeasible(format!("mode {}: {d}", p + 1)));
    }
    Ok(k.value / 2.0)
}

pub fn parse_certificates(text: &str, sys: &SwitchedSystem) -> Result<CertificateSet> {
    let file: CertificateFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.build(sys)
}

pub fn load_certificates(path: impl AsRef<Path>, sys: &SwitchedSystem) -> Result<CertificateSet> {
    parse_certificates(&std::fs::read_to_string(path)?, sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_system;

    const SYSTEM: &str = r#"
n = 2
q_hat = 1
[[domain]]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
[[modes]]
a = [[-1.0, 0.0], [0.0, -1.0]]
b = [0.0, 0.0]
[[modes]]
a = [[-2.0, 0.0], [0.0, -2.0]]
b = [1.0, 0.0]
"#;

    #[test]
    fn computes_missing_kappa() {
        let sys = parse_system(SYSTEM).unwrap();
        let certs = parse_certificates("q = 1.0\np = [[1.0, 0.0], [0.0, 1.0]]\n", &sys).unwrap();
        assert!((certs.mode(0).kappa - 1.0).abs() < 1e-12);
        assert!((certs.mode(1).kappa - 2.0).abs() < 1e-12);
        assert_eq!(certs.mode(0).provenance.kappa, Source::Computed);
        assert!(certs.common);
        assert_eq!(certs.mu, 1.0);
    }

    #[test]
    fn overrides_are_given() {
        let sys = parse_system(SYSTEM).unwrap();
        let text = "q = 1.0\np = [[1.0, 0.0], [0.0, 1.0]]\nkappa = 0.3\nalpha_hi = 1.0\ngamma_slope = 1.0\n";
        let certs = parse_certificates(text, &sys).unwrap();
        assert_eq!(certs.kappa, 0.3);
        assert_eq!(certs.alpha_hi_coeff, 1.0);
        assert_eq!(certs.mode(1).provenance.gamma_hat, Source::Given);
    }

    #[test]
    fn rejects_unknown_key_and_wrong_mode_count() {
        let sys = parse_system(SYSTEM).unwrap();
        assert!(parse_certificates("q = 1.0\npp = 1\n", &sys).is_err());
        let one = "q = 1.0\n[[modes]]\np = [[1.0, 0.0], [0.0, 1.0]]\n";
        assert!(matches!(parse_certificates(one, &sys), Err(Error::Dimension(_))));
    }
}
