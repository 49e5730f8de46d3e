use rayon::prelude::*;

use super::hoeffding_half_width;
use crate::abstraction::{SequenceModel, SymbolicModel};
use crate::error::{Error, Result};
use crate::flow::{EulerMaruyama, FlowConfig, FlowMap, Scratch};
use crate::linalg::inf_distance;
use crate::model::SwitchedSystem;

/// Which `(sequence, input)` transitions to estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum PairSelection {
    All,
    /// The given number of transitions with the largest nominal defect.
    WorstNominal(usize),
    Explicit(Vec<(usize, usize)>),
}

#[derive(Clone, Debug)]
pub struct EtaHatConfig {
    pub samples: usize,
    pub seed: u64,
    pub confidence: f64,
    pub pairs: PairSelection,
    pub flow: FlowConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairEstimate {
    pub sequence: usize,
    pub input: usize,
    pub nominal_defect: f64,
    pub mean: f64,
    pub max_sample: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaHatEstimate {
    /// Largest per-transition mean defect.
    pub eta_hat: f64,
    /// Hoeffding half-width at the requested confidence, using the largest
    /// observed sample of the maximizing transition as the range.
    pub half_width: f64,
    pub samples: usize,
    pub pairs: Vec<PairEstimate>,
}

impl EtaHatEstimate {
    pub fn worst(&self) -> &PairEstimate {
        self.pairs
            .iter()
            .max_by(|a, b| a.mean.total_cmp(&b.mean))
            .expect("at least one pair")
    }
}

fn nominal_defect(model: &SequenceModel, flows: &FlowMap<'_>, idx: usize, u: usize, y: &mut [f64]) -> Result<f64> {
    flows.apply(u, model.sequence_output(idx), y)?;
    Ok(inf_distance(y, model.sequence_output(model.shift(idx, u))))
}

/// Empirical `η̂ = max E‖ξ_{H(s)u}(τ) − H(s')‖` over the selected
/// transitions `s --u--> s'`, where `H` is the random output started at the
/// source state. The two paths share Brownian increments period by period,
/// aligned from the end: both final periods run mode `u` on the same noise.
pub fn estimate_eta_hat(model: &SequenceModel, sys: &SwitchedSystem, cfg: &EtaHatConfig) -> Result<EtaHatEstimate> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("η̂ estimation needs at least one sample".into()));
    }
    let flows = FlowMap::new(sys, model.tau(), &cfg.flow)?;
    let n = sys.n;
    let m = model.modes();
    let pairs: Vec<(usize, usize)> = match &cfg.pairs {
        PairSelection::All => (0..model.sequence_count()).flat_map(|s| (0..m).map(move |u| (s, u))).collect(),
        PairSelection::Explicit(list) => {
            if let Some(&(s, u)) = list.iter().find(|&&(s, u)| s >= model.sequence_count() || u >= m) {
                return Err(Error::InvalidArgument(format!("transition ({s}, {u}) is out of range")));
            }
            list.clone()
        }
        PairSelection::WorstNominal(k) => {
            let mut scored: Vec<(f64, usize, usize)> = (0..model.sequence_count() * m)
                .into_par_iter()
                .map_init(
                    || vec![0.0; n],
                    |y, e| nominal_defect(model, &flows, e / m, e % m, y).map(|d| (d, e / m, e % m)),
                )
                .collect::<Result<_>>()?;
            scored.par_sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
            scored.into_iter().take((*k).max(1)).map(|(_, s, u)| (s, u)).collect()
        }
    };
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no transitions selected".into()));
    }
    let em = EulerMaruyama::new(sys, model.tau(), &cfg.flow, cfg.seed)?;
    let horizon = model.horizon();
    let mut estimates = Vec::with_capacity(pairs.len());
    let mut y = vec![0.0; n];
    for &(idx, u) in &pairs {
        let modes = model.decode_sequence(idx);
        let values: Vec<f64> = (0..cfg.samples)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, k| -> Result<f64> {
                let traj = k as u64;
                // x: p₁ … p_N u, keys N … 0
                let mut x = model.source().to_vec();
                for (j, &p) in modes.iter().chain(std::iter::once(&u)).enumerate() {
                    em.advance(p, &mut x, traj, (horizon - j) as u64, scratch)?;
                }
                // x': p₂ … p_N u, keys N−1 … 0
                let mut xs = model.source().to_vec();
                for (j, &p) in modes[1..].iter().chain(std::iter::once(&u)).enumerate() {
                    em.advance(p, &mut xs, traj, (horizon - 1 - j) as u64, scratch)?;
                }
                Ok(inf_distance(&x, &xs))
            })
            .collect::<Result<_>>()?;
        estimates.push(PairEstimate {
            sequence: idx,
            input: u,
            nominal_defect: nominal_defect(model, &flows, idx, u, &mut y)?,
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max_sample: values.iter().copied().fold(0.0, f64::max),
        });
    }
    let worst = estimates.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).expect("nonempty");
    Ok(EtaHatEstimate {
        eta_hat: worst.mean,
        half_width: hoeffding_half_width(worst.max_sample, cfg.confidence, cfg.samples as u64),
        samples: cfg.samples,
        pairs: estimates,
    })
}
