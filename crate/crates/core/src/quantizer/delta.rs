use crate::certificates::CertificateSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaSequence {
    /// `δ_0 … δ_N̂` from the recursion `δ_{i+1} = e^{−κτ}δ_i + d`.
    pub deltas: Vec<f64>,
    /// `δ_N̂ ≤ δ_0/μ`.
    pub returns_below_ratio: bool,
    /// Set when the levels are not nonincreasing.
    pub diagnostic: Option<String>,
}

/// Closed form `e^{−iκτ}δ₀ + d(1 − e^{−iκτ})/(1 − e^{−κτ})`.
pub fn delta_closed_form(i: usize, delta0: f64, kappa: f64, tau: f64, disturbance: f64) -> f64 {
    let kt = kappa * tau;
    let geometric = if kt == 0.0 { i as f64 } else { (-(i as f64) * kt).exp_m1() / (-kt).exp_m1() };
    (-(i as f64) * kt).exp() * delta0 + disturbance * geometric
}

pub fn delta_sequence(
    epsilon: f64,
    tau: f64,
    dwell_steps: usize,
    disturbance: f64,
    certs: &CertificateSet,
) -> Result<DeltaSequence> {
    if disturbance < 0.0 || !(epsilon > 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidArgument("delta_sequence needs ε > 0, τ > 0 and d ≥ 0".into()));
    }
    let delta0 = certs.precision_level(epsilon);
    let decay = (-certs.kappa * tau).exp();
    let mut deltas = Vec::with_capacity(dwell_steps + 1);
    deltas.push(delta0);
    for i in 0..dwell_steps {
        deltas.push(decay * deltas[i] + disturbance);
    }
    let monotone = deltas.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-15) + 1e-15);
    let last = *deltas.last().expect("nonempty");
    let diagnostic = (!monotone).then(|| {
        format!(
            "levels increase: disturbance {disturbance:.6e} exceeds (1 − e^{{−κτ}})·δ₀ = {:.6e}",
            (1.0 - decay) * delta0
        )
    });
    Ok(DeltaSequence {
        returns_below_ratio: last <= delta0 / certs.mu + super::SLACK,
        deltas,
        diagnostic,
    })
}
