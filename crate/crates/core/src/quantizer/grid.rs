use super::{budget_factor, Inequality};
use crate::certificates::{h_set_bound, CertificateSet};
use crate::error::{Error, Result};
use crate::model::{BoxSet, SwitchedSystem};

/// Lower bound `ε*` on the precision of a grid abstraction at sampling time `tau`.
pub fn min_epsilon_grid(
    tau: f64,
    certs: &CertificateSet,
    sys: &SwitchedSystem,
    x0: &BoxSet,
    dwell_time: Option<f64>,
) -> Result<f64> {
    let factor = budget_factor(certs, dwell_time)?;
    let h = h_set_bound(x0, tau, certs, sys)?;
    let decay = -(-certs.kappa * tau).exp_m1();
    let level = certs.gamma_hat(h.powf(1.0 / certs.q)) / decay / factor;
    Ok(certs.level_to_distance(level))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaSolution {
    pub eta: f64,
    /// `h_{X0}(τ)`.
    pub h: f64,
    pub inequalities: Vec<Inequality>,
}

/// Both grid conditions for a given `η`.
pub fn grid_conditions(
    tau: f64,
    epsilon: f64,
    eta: f64,
    certs: &CertificateSet,
    sys: &SwitchedSystem,
    x0: &BoxSet,
    dwell_time: Option<f64>,
) -> Result<Vec<Inequality>> {
    let h = h_set_bound(x0, tau, certs, sys)?;
    conditions_with_h(tau, epsilon, eta, h, certs, dwell_time)
}

fn conditions_with_h(
    tau: f64,
    epsilon: f64,
    eta: f64,
    h: f64,
    certs: &CertificateSet,
    dwell_time: Option<f64>,
) -> Result<Vec<Inequality>> {
    let q = certs.q;
    let level = certs.precision_level(epsilon);
    let decay = (-certs.kappa * tau).exp();
    let disturbance = certs.gamma_hat(h.powf(1.0 / q) + eta);
    let first = Inequality { name: "upper envelope of η within precision", lhs: certs.alpha_hi(eta.powf(q)), rhs: level };
    let second = match dwell_time {
        None => Inequality {
            name: "one-step contraction (common certificate)",
            lhs: decay * level + disturbance,
            rhs: level,
        },
        Some(_) => Inequality {
            name: "one-step contraction (dwell time)",
            lhs: disturbance,
            rhs: budget_factor(certs, dwell_time)? * (1.0 - decay) * level,
        },
    };
    Ok(vec![first, second])
}

/// Largest `η ≤ span(D)` meeting both grid conditions at precision `epsilon`.
pub fn solve_eta(
    tau: f64,
    epsilon: f64,
    certs: &CertificateSet,
    sys: &SwitchedSystem,
    x0: &BoxSet,
    dwell_time: Option<f64>,
) -> Result<EtaSolution> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("ε={epsilon} must be positive")));
    }
    let q = certs.q;
    let factor = budget_factor(certs, dwell_time)?;
    let h = h_set_bound(x0, tau, certs, sys)?;
    let level = certs.precision_level(epsilon);
    let eta_envelope = certs.alpha_hi_inv(level).powf(1.0 / q);
    let budget = factor * (-(-certs.kappa * tau).exp_m1()) * level;
    let eta_contraction = budget / certs.gamma_hat_slope - h.powf(1.0 / q);
    let span = sys.domain.span();
    let eta = eta_envelope.min(eta_contraction).min(span);
    if !(eta > 0.0) {
        let ineq = conditions_with_h(tau, epsilon, 0.0, h, certs, dwell_time)?;
        let violated = ineq.iter().find(|i| !i.holds()).unwrap_or(&ineq[1]);
        return Err(Error::Infeasible(format!(
            "no η > 0 satisfies the grid conditions at ε={epsilon}: {violated} at η=0 \
             (precision must exceed the lower bound)"
        )));
    }
    let inequalities = conditions_with_h(tau, epsilon, eta, h, certs, dwell_time)?;
    Ok(EtaSolution { eta, h, inequalities })
}
