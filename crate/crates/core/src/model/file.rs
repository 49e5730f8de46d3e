//! TOML system description.
//!
//! ```toml
//! n = 2
//! q_hat = 1
//! dwell_time = 2.0          # optional
//!
//! [[domain]]
//! lo = [-5.0, -4.0]
//! hi = [5.0, 4.0]
//!
//! [[modes]]
//! a = [[-0.25, 1.0], [-2.0, -0.25]]
//! b = [0.25, 2.0]
//! sigmas = [[[0.01, 0.0], [0.0, 0.01]]]
//! lipschitz_diffusion = 0.01   # optional override
//! ```
//!
//! Matrices are lists of rows. A mode without `sigmas` gets `q_hat` zero matrices.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::domain::{Aabb, BoxSet};
use super::system::{lipschitz_of_linear_diffusion, Diffusion, ModeDynamics, SwitchedSystem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub q_hat: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell_time: Option<f64>,
    pub domain: Vec<Aabb>,
    pub modes: Vec<ModeFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFile {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigmas: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_diffusion: Option<f64>,
}

pub fn matrix_from_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("{what} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SystemFile {
    pub fn into_system(self) -> Result<SwitchedSystem> {
        let n = self.n;
        let mut modes = Vec::with_capacity(self.modes.len());
        for (p, m) in self.modes.iter().enumerate() {
            let a = matrix_from_rows(&m.a, n, &format!("mode {} A", p + 1))?;
            if m.b.len() != n {
                return Err(Error::Dimension(format!("mode {} b must have length {n}", p + 1)));
            }
            let b = DVector::from_vec(m.b.clone());
            let sigmas = if m.sigmas.is_empty() {
                vec![DMatrix::zeros(n, n); self.q_hat]
            } else {
                m.sigmas
                    .iter()
                    .enumerate()
                    .map(|(i, s)| matrix_from_rows(s, n, &format!("mode {} sigma {}", p + 1, i + 1)))
                    .collect::<Result<Vec<_>>>()?
            };
            let z = match m.lipschitz_diffusion {
                Some(z) => z,
                None if sigmas.is_empty() => 0.0,
                None => lipschitz_of_linear_diffusion(&sigmas)?,
            };
            let mut mode = ModeDynamics::affine(a, b, sigmas)?;
            mode.lipschitz_diffusion = z;
            modes.push(mode);
        }
        Ok(SwitchedSystem {
            n,
            q_hat: self.q_hat,
            modes,
            domain: BoxSet::new(self.domain),
            dwell_time: self.dwell_time,
        })
    }

    /// Only affine modes with linear diffusion can be written back.
    pub fn from_system(sys: &SwitchedSystem) -> Result<Self> {
        let mut modes = Vec::with_capacity(sys.modes.len());
        for (p, m) in sys.modes.iter().enumerate() {
            let (a, b) = m
                .affine_parts()
                .ok_or_else(|| Error::InvalidArgument(format!("mode {} has a general drift", p + 1)))?;
            let sigmas = match &m.diffusion {
                Diffusion::Linear { sigmas } => sigmas.iter().map(matrix_to_rows).collect(),
                Diffusion::General { .. } => {
                    return Err(Error::InvalidArgument(format!("mode {} has a general diffusion", p + 1)))
                }
            };
            modes.push(ModeFile {
                a: matrix_to_rows(a),
                b: b.iter().copied().collect(),
                sigmas,
                lipschitz_diffusion: Some(m.lipschitz_diffusion),
            });
        }
        Ok(Self {
            name: None,
            n: sys.n,
            q_hat: sys.q_hat,
            dwell_time: sys.dwell_time,
            domain: sys.domain.boxes.clone(),
            modes,
        })
    }
}

pub fn parse_system(text: &str) -> Result<SwitchedSystem> {
    let file: SystemFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_system()
}

pub fn load_system(path: impl AsRef<Path>) -> Result<SwitchedSystem> {
    parse_system(&std::fs::read_to_string(path)?)
}

pub fn system_to_toml(sys: &SwitchedSystem) -> Result<String> {
    toml::to_string(&SystemFile::from_system(sys)?).map_err(|e| Error::Parse(e.to_string()))
}
