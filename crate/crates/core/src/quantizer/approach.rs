use std::fmt;

use super::{dwell_steps, solve_eta, solve_horizon_n, DEFAULT_N_MAX};
use crate::certificates::CertificateSet;
use crate::error::Result;
use crate::flow::FlowMap;
use crate::model::{BoxSet, SwitchedSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approach {
    Grid,
    Sequence,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Grid => "grid",
            Approach::Sequence => "sequence",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SideReport {
    Feasible { parameter: f64, count: f64 },
    Infeasible { reason: String },
}

impl SideReport {
    pub fn count(&self) -> Option<f64> {
        match self {
            SideReport::Feasible { count, .. } => Some(*count),
            SideReport::Infeasible { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproachReport {
    pub criterion_value: f64,
    pub criterion_holds: bool,
    pub grid: SideReport,
    pub sequence: SideReport,
    pub recommendation: Option<Approach>,
}

/// `K/ηⁿ` with `K` the domain volume, times `m·N̂` with a dwell time.
pub fn grid_count_estimate(domain: &BoxSet, eta: f64, modes: usize, dwell_steps: Option<usize>) -> f64 {
    let n = domain.dim().unwrap_or(0) as i32;
    let base = domain.volume() / eta.powi(n);
    match dwell_steps {
        Some(k) => base * (modes * k) as f64,
        None => base,
    }
}

/// `m^N`, times `N̂` with a dwell time.
pub fn seq_count_estimate(modes: usize, horizon: usize, dwell_steps: Option<usize>) -> f64 {
    (modes as f64).powi(horizon as i32) * dwell_steps.unwrap_or(1) as f64
}

pub fn compare_approaches(
    sys: &SwitchedSystem,
    certs: &CertificateSet,
    flows: &FlowMap<'_>,
    epsilon: f64,
    dwell_time: Option<f64>,
    source: &[f64],
) -> Result<ApproachReport> {
    let tau = flows.tau();
    let m = sys.num_modes();
    let rate = match dwell_time {
        Some(td) => certs.kappa - certs.mu.ln() / td,
        None => certs.kappa,
    };
    let criterion_value = m as f64 * (-rate * tau * sys.n as f64 / certs.q).exp();
    let steps = match dwell_time {
        Some(td) => Some(dwell_steps(td, tau)?),
        None => None,
    };
    let grid = match solve_eta(tau, epsilon, certs, sys, &sys.domain, dwell_time) {
        Ok(sol) => SideReport::Feasible { parameter: sol.eta, count: grid_count_estimate(&sys.domain, sol.eta, m, steps) },
        Err(e) => SideReport::Infeasible { reason: e.to_string() },
    };
    let sequence = match solve_horizon_n(tau, epsilon, source, flows, certs, sys, dwell_time, DEFAULT_N_MAX) {
        Ok(sol) => SideReport::Feasible {
            parameter: sol.horizon as f64,
            count: seq_count_estimate(m, sol.horizon, steps),
        },
        Err(e) => SideReport::Infeasible { reason: e.to_string() },
    };
    let recommendation = match (grid.count(), sequence.count()) {
        (Some(g), Some(s)) => Some(if s <= g { Approach::Sequence } else { Approach::Grid }),
        (Some(_), None) => Some(Approach::Grid),
        (None, Some(_)) => Some(Approach::Sequence),
        (None, None) => None,
    };
    Ok(ApproachReport { criterion_value, criterion_holds: criterion_value <= 1.0, grid, sequence, recommendation })
}
