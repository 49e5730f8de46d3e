//! Monte Carlo checks of abstraction guarantees: closed-loop distance
//! statistics, coupled `η̂` estimates, Hoeffding sample sizes and
//! bisimulation spot-checks.

mod bisim;
mod eta_hat;
mod montecarlo;

pub use bisim::{check_bisim_sample, BisimConfig, BisimReport, BisimViolation};
pub use eta_hat::{estimate_eta_hat, EtaHatConfig, EtaHatEstimate, PairEstimate, PairSelection};
pub use montecarlo::{monte_carlo_closed_loop, MonteCarloConfig, RunSummary, ValidationReport};

use crate::error::{Error, Result};

/// Samples needed so that an empirical mean of variables with range
/// `range_width` is within `accuracy` of the true mean with probability
/// `confidence`: `⌈w²·ln(2/(1−c)) / (2a²)⌉`.
pub fn hoeffding_samples(range_width: f64, confidence: f64, accuracy: f64) -> Result<u64> {
    if !(range_width > 0.0 && accuracy > 0.0 && confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need width > 0, accuracy > 0 and 0 < confidence < 1 (got {range_width}, {accuracy}, {confidence})"
        )));
    }
    let n = range_width * range_width * (2.0 / (1.0 - confidence)).ln() / (2.0 * accuracy * accuracy);
    Ok(n.ceil() as u64)
}

/// Hoeffding half-width for `samples` draws of range `range_width`.
pub fn hoeffding_half_width(range_width: f64, confidence: f64, samples: u64) -> f64 {
    range_width * ((2.0 / (1.0 - confidence)).ln() / (2.0 * samples as f64)).sqrt()
}
