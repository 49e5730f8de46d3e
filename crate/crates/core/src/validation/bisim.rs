use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::abstraction::{Post, SymbolicModel};
use crate::certificates::CertificateSet;
use crate::error::{Error, Result};
use crate::flow::{EulerMaruyama, FlowConfig, Scratch};
use crate::model::SwitchedSystem;

#[derive(Clone, Debug)]
pub struct BisimConfig {
    /// Random input sequences per related pair.
    pub sequences: usize,
    pub steps: usize,
    /// Concrete paths per sequence.
    pub runs: usize,
    pub seed: u64,
    /// Relative allowance for Monte Carlo error.
    pub slack: f64,
    pub flow: FlowConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisimViolation {
    pub pair: usize,
    pub sequence: usize,
    pub step: usize,
    pub mean_value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisimReport {
    pub checks: usize,
    /// Largest `E[V] / α̲(ε^q)` seen.
    pub max_ratio: f64,
    pub violations: Vec<BisimViolation>,
}

/// Runs the abstract model under random enabled inputs from each related pair
/// `(x0, s0)` and checks the empirical `E[V_p(x_k, H(s_k))] ≤ α̲(ε^q)·(1+slack)`
/// at every step, with `p` the mode carried by the abstract state (any
/// mode for a common certificate).
pub fn check_bisim_sample(
    sys: &SwitchedSystem,
    model: &dyn SymbolicModel,
    certs: &CertificateSet,
    pairs: &[(Vec<f64>, usize)],
    cfg: &BisimConfig,
) -> Result<BisimReport> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("bisimulation check needs at least one run".into()));
    }
    let level = certs.precision_level(model.epsilon());
    let bound = level * (1.0 + cfg.slack);
    let em = EulerMaruyama::new(sys, model.tau(), &cfg.flow, cfg.seed)?;
    let mut checks = 0;
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for (pi, (x0, s0)) in pairs.iter().enumerate() {
        for j in 0..cfg.sequences {
            let stream = (pi * cfg.sequences + j) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            // abstract run and applied modes
            let mut states = vec![*s0];
            let mut applied = Vec::new();
            for _ in 0..cfg.steps {
                let s = *states.last().expect("nonempty");
                let enabled: Vec<(usize, usize)> = (0..model.num_inputs())
                    .filter_map(|u| match model.post(s, u) {
                        Post::One(t) => Some((u, t)),
                        Post::Many { targets, stride, offset } => targets
                            .iter()
                            .find(|&&t| t != crate::abstraction::INVALID)
                            .map(|&t| (u, t as usize * stride + offset)),
                        Post::Disabled | Post::Invalid => None,
                    })
                    .collect();
                if enabled.is_empty() {
                    break;
                }
                let (u, t) = enabled[rng.random_range(0..enabled.len())];
                applied.push(model.applied_mode(s, u));
                states.push(t);
            }
            let outputs: Vec<Vec<f64>> = states.iter().map(|&s| model.output(s)).collect();
            let cert_mode: Vec<usize> = states.iter().map(|&s| model.mode_of_state(s).unwrap_or(0)).collect();
            let sums: Vec<f64> = (0..cfg.runs)
                .into_par_iter()
                .map_init(Scratch::default, |scratch, r| -> Result<Vec<f64>> {
                    let traj = (stream * cfg.runs as u64) + r as u64;
                    let mut x = x0.clone();
                    let mut v = Vec::with_capacity(states.len());
                    v.push(certs.value(cert_mode[0], &x, &outputs[0]));
                    for (k, &p) in applied.iter().enumerate() {
                        em.advance(p, &mut x, traj, k as u64, scratch)?;
                        v.push(certs.value(cert_mode[k + 1], &x, &outputs[k + 1]));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(vec![0.0; states.len()], |mut acc, v| {
                    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                    acc
                });
            for (k, sum) in sums.into_iter().enumerate() {
                let mean = sum / cfg.runs as f64;
                checks += 1;
                max_ratio = max_ratio.max(mean / level);
                if mean > bound {
                    violations.push(BisimViolation { pair: pi, sequence: j, step: k, mean_value: mean, bound });
                }
            }
        }
    }
    Ok(BisimReport { checks, max_ratio, violations })
}
