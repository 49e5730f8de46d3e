use super::{budget_factor, Inequality};
use crate::certificates::{h_point_bound, CertificateSet};
use crate::error::{Error, Result};
use crate::flow::FlowMap;
use crate::model::SwitchedSystem;

pub const DEFAULT_N_MAX: usize = 64;

/// `max_p V(ξ̄_{x_s p}(τ), x_s)` for a common certificate, or
/// `max_{p,p'} V_{p'}(ξ̄_{x_s p}(τ), x_s)` with multiple certificates.
pub fn source_defect(flows: &FlowMap<'_>, source: &[f64], certs: &CertificateSet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut y = vec![0.0; source.len()];
    for p in 0..certs.num_modes() {
        flows.apply(p, source, &mut y)?;
        worst = worst.max(certs.max_value(&y, source));
    }
    Ok(worst)
}

/// Decay rate of the analytic `η̄` bound per unit time.
fn eta_bar_rate(certs: &CertificateSet, dwell_time: Option<f64>) -> f64 {
    match dwell_time {
        Some(td) => certs.kappa - certs.mu.ln() / td,
        None => certs.kappa,
    }
}

/// Analytic upper bound on `η̄` for horizon `n`.
pub fn eta_bar_analytic(
    n: usize,
    flows: &FlowMap<'_>,
    source: &[f64],
    certs: &CertificateSet,
    dwell_time: Option<f64>,
) -> Result<f64> {
    let defect = source_defect(flows, source, certs)?;
    Ok(eta_bar_from_defect(n, flows.tau(), defect, certs, dwell_time))
}

fn eta_bar_from_defect(n: usize, tau: f64, defect: f64, certs: &CertificateSet, dwell_time: Option<f64>) -> f64 {
    let rate = eta_bar_rate(certs, dwell_time);
    certs.level_to_distance((-rate * n as f64 * tau).exp() * defect)
}

/// `max_p h^p_{x_s}(t)`.
pub(crate) fn h_source(source: &[f64], t: f64, certs: &CertificateSet, sys: &SwitchedSystem) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in 0..certs.num_modes() {
        worst = worst.max(h_point_bound(source, t, p, certs, sys)?);
    }
    Ok(worst)
}

/// The horizon condition for a given `N` and `η̄`.
#[allow(clippy::too_many_arguments)]
pub fn horizon_condition(
    n: usize,
    tau: f64,
    epsilon: f64,
    eta_bar: f64,
    source: &[f64],
    certs: &CertificateSet,
    sys: &SwitchedSystem,
    dwell_time: Option<f64>,
) -> Result<Inequality> {
    let h = h_source(source, (n as f64 + 1.0) * tau, certs, sys)?;
    let level = certs.precision_level(epsilon);
    let decay = (-certs.kappa * tau).exp();
    let disturbance = certs.gamma_hat(h.powf(1.0 / certs.q) + eta_bar);
    Ok(match dwell_time {
        None => Inequality { name: "sequence contraction (common certificate)", lhs: decay * level + disturbance, rhs: level },
        Some(_) => Inequality {
            name: "sequence contraction (dwell time)",
            lhs: disturbance,
            rhs: budget_factor(certs, dwell_time)? * (1.0 - decay) * level,
        },
    })
}

/// Smallest precision for which the horizon condition holds at `N` with the given `η̄`.
pub fn epsilon_for_sequence(
    n: usize,
    tau: f64,
    eta_bar: f64,
    source: &[f64],
    certs: &CertificateSet,
    sys: &SwitchedSystem,
    dwell_time: Option<f64>,
) -> Result<f64> {
    let factor = budget_factor(certs, dwell_time)?;
    let h = h_source(source, (n as f64 + 1.0) * tau, certs, sys)?;
    let disturbance = certs.gamma_hat(h.powf(1.0 / certs.q) + eta_bar);
    let level = disturbance / (-(-certs.kappa * tau).exp_m1()) / factor;
    Ok(certs.level_to_distance(level))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonSolution {
    pub horizon: usize,
    pub eta_bar: f64,
    pub condition: Inequality,
    /// Condition at `N − 1`, absent when `N = 1`.
    pub previous: Option<Inequality>,
}

/// Smallest `N ≤ n_max` satisfying the horizon condition with the analytic `η̄`.
#[allow(clippy::too_many_arguments)]
pub fn solve_horizon_n(
    tau: f64,
    epsilon: f64,
    source: &[f64],
    flows: &FlowMap<'_>,
    certs: &CertificateSet,
    sys: &SwitchedSystem,
    dwell_time: Option<f64>,
    n_max: usize,
) -> Result<HorizonSolution> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("ε={epsilon} must be positive")));
    }
    budget_factor(certs, dwell_time)?;
    let defect = source_defect(flows, source, certs)?;
    let mut previous = None;
    let mut last = None;
    for n in 1..=n_max {
        let eta_bar = eta_bar_from_defect(n, tau, defect, certs, dwell_time);
        let cond = horizon_condition(n, tau, epsilon, eta_bar, source, certs, sys, dwell_time)?;
        if cond.holds() {
            return Ok(HorizonSolution { horizon: n, eta_bar, condition: cond, previous });
        }
        previous = Some(cond.clone());
        last = Some(cond);
    }
    let detail = last.map(|c| c.to_string()).unwrap_or_default();
    Err(Error::Infeasible(format!("no horizon N ≤ {n_max} satisfies the sequence condition at ε={epsilon}; at N={n_max}: {detail}")))
}

/// Heuristic source state: the point of a coarse grid over the domain that
/// minimizes the one-step defect `source_defect`.
pub fn select_source_state(
    flows: &FlowMap<'_>,
    certs: &CertificateSet,
    budget: usize,
) -> Result<Vec<f64>> {
    let sys = flows.system();
    let bb = sys
        .domain
        .bounding_box()
        .ok_or_else(|| Error::InvalidArgument("empty domain".into()))?;
    let n = sys.n;
    let per_dim = ((budget.max(2) as f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        for i in 0..n {
            x[i] = bb.lo[i] + (bb.hi[i] - bb.lo[i]) * idx[i] as f64 / (per_dim - 1) as f64;
        }
        if sys.domain.contains(&x) {
            let v = source_defect(flows, &x, certs)?;
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x.clone()));
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return best
                    .map(|(_, x)| x)
                    .ok_or_else(|| Error::InvalidArgument("no grid point inside the domain".into()));
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < per_dim {
                break;
            }
            idx[i] = 0;
        }
    }
}
