//! Quantization parameters: precision lower bounds, the grid spacing `η`, the
//! sequence horizon `N`, the `δ_i` levels used with dwell times, and the
//! comparison between the two abstraction approaches.

mod approach;
mod delta;
mod grid;
mod sequence;

pub use approach::{compare_approaches, grid_count_estimate, seq_count_estimate, Approach, ApproachReport, SideReport};
pub use delta::{delta_closed_form, delta_sequence, DeltaSequence};
pub use grid::{grid_conditions, min_epsilon_grid, solve_eta, EtaSolution};
pub(crate) use sequence::h_source;
pub use sequence::{
    epsilon_for_sequence, eta_bar_analytic, horizon_condition, select_source_state, solve_horizon_n, source_defect,
    HorizonSolution, DEFAULT_N_MAX,
};

use std::fmt;

use crate::certificates::CertificateSet;
use crate::error::{Error, Result};
use crate::model::BoxSet;

/// Absolute slack used in every inequality check.
pub const SLACK: f64 = 1e-12;

/// One scalar inequality `lhs ≤ rhs`, kept for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + SLACK
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds() { "holds" } else { "violated" };
        write!(f, "{}: {:.6e} <= {:.6e} ({verdict})", self.name, self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridParams {
    pub tau: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub dwell_steps: Option<usize>,
}

impl GridParams {
    pub fn validate(&self, domain: &BoxSet) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!("τ={} must be positive", self.tau)));
        }
        if !(self.eta > 0.0 && self.eta <= domain.span()) {
            return Err(Error::InvalidArgument(format!(
                "η={} must lie in (0, span(D)={}]",
                self.eta,
                domain.span()
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("ε={} must be positive", self.epsilon)));
        }
        if self.dwell_steps == Some(0) {
            return Err(Error::InvalidArgument("dwell steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqParams {
    pub tau: f64,
    pub horizon: usize,
    pub source: Vec<f64>,
    pub epsilon: f64,
    pub dwell_steps: Option<usize>,
}

impl SeqParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!("τ={} must be positive", self.tau)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon N must be at least 1".into()));
        }
        if self.source.len() != n {
            return Err(Error::Dimension(format!("source state has {} entries, expected {n}", self.source.len())));
        }
        if self.dwell_steps == Some(0) {
            return Err(Error::InvalidArgument("dwell steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// `N̂ = τ_d / τ`, which must be a positive integer.
pub fn dwell_steps(dwell_time: f64, tau: f64) -> Result<usize> {
    let k = (dwell_time / tau).round();
    if !(k >= 1.0) || (k * tau - dwell_time).abs() > 1e-9 * dwell_time {
        return Err(Error::InvalidArgument(format!(
            "dwell time {dwell_time} is not a positive multiple of τ={tau}"
        )));
    }
    Ok(k as usize)
}

/// `(1/μ − e^{−κτ_d}) / (1 − e^{−κτ_d})`, the share of the precision budget
/// left once mode switches are paid for.
pub fn dwell_factor(certs: &CertificateSet, dwell_time: f64) -> Result<f64> {
    let threshold = certs.mu.ln() / certs.kappa;
    if !(dwell_time > threshold) {
        return Err(Error::Infeasible(format!(
            "dwell time too short: τ_d={dwell_time} must exceed log μ/κ = {threshold}"
        )));
    }
    let e = (-certs.kappa * dwell_time).exp();
    Ok((1.0 / certs.mu - e) / (1.0 - e))
}

/// Multiplier on `(1 − e^{−κτ})·α̲(ε^q)` in the contraction condition: 1 for a
/// common certificate, the dwell factor otherwise.
pub(crate) fn budget_factor(certs: &CertificateSet, dwell_time: Option<f64>) -> Result<f64> {
    match dwell_time {
        Some(td) => dwell_factor(certs, td),
        None => Ok(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dwell_steps_must_be_integer() {
        assert_eq!(dwell_steps(2.0, 0.5).unwrap(), 4);
        assert!(dwell_steps(2.1, 0.5).is_err());
        assert!(dwell_steps(0.1, 0.5).is_err());
    }

    #[test]
    fn inequality_slack() {
        assert!(Inequality { name: "x", lhs: 1.0 + 1e-13, rhs: 1.0 }.holds());
        assert!(!Inequality { name: "x", lhs: 1.0 + 1e-11, rhs: 1.0 }.holds());
    }
}
