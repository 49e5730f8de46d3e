use rayon::prelude::*;

use super::{counter_step, ModelKind, Post, SymbolicModel};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowMap};
use crate::linalg::inf_distance;
use crate::model::SwitchedSystem;
use crate::quantizer::SeqParams;

#[derive(Clone, Debug)]
pub struct SeqBuildOptions {
    pub flow: FlowConfig,
    /// Upper bound on `m^N`.
    pub max_sequences: u64,
}

impl Default for SeqBuildOptions {
    fn default() -> Self {
        Self { flow: FlowConfig::default(), max_sequences: 1 << 28 }
    }
}

/// Mode-sequence abstraction. A sequence `(p₁,…,p_N)` is the base-`m` number
/// with `p₁` most significant; with dwell time the state is `idx·N̂ + i`.
#[derive(Clone, Debug)]
pub struct SequenceModel {
    pub(crate) modes: usize,
    pub(crate) horizon: usize,
    pub(crate) tau: f64,
    pub(crate) epsilon: f64,
    pub(crate) source: Vec<f64>,
    pub(crate) dwell_steps: Option<usize>,
    /// `m^N × n`, row per sequence.
    pub(crate) outputs: Vec<f64>,
    pub(crate) eta_bar: f64,
    count: usize,
    /// `m^{N−1}`.
    high: usize,
}

impl SequenceModel {
    pub(crate) fn from_parts(params: &SeqParams, modes: usize, outputs: Vec<f64>, eta_bar: f64) -> Result<Self> {
        let count = sequence_count(modes, params.horizon, u64::MAX)?;
        let n = params.source.len();
        if outputs.len() != count * n {
            return Err(Error::Format(format!("expected {} outputs, found {}", count * n, outputs.len())));
        }
        Ok(Self {
            modes,
            horizon: params.horizon,
            tau: params.tau,
            epsilon: params.epsilon,
            source: params.source.clone(),
            dwell_steps: params.dwell_steps,
            outputs,
            eta_bar,
            count,
            high: count / modes,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn dwell_steps(&self) -> Option<usize> {
        self.dwell_steps
    }

    /// `m^N`, the number of mode sequences (states without the counter).
    pub fn sequence_count(&self) -> usize {
        self.count
    }

    /// Exact one-step defect `η̄`, computed at build time.
    pub fn eta_bar(&self) -> f64 {
        self.eta_bar
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn sequence_output(&self, idx: usize) -> &[f64] {
        let n = self.source.len();
        &self.outputs[idx * n..(idx + 1) * n]
    }

    pub fn params(&self) -> SeqParams {
        SeqParams {
            tau: self.tau,
            horizon: self.horizon,
            source: self.source.clone(),
            epsilon: self.epsilon,
            dwell_steps: self.dwell_steps,
        }
    }

    /// `(p₁,…,p_N) ↦ (p₂,…,p_N,p)`.
    pub fn shift(&self, idx: usize, p: usize) -> usize {
        (idx % self.high) * self.modes + p
    }

    pub fn last_mode(&self, idx: usize) -> usize {
        idx % self.modes
    }

    pub fn decode_sequence(&self, idx: usize) -> Vec<usize> {
        decode(idx, self.modes, self.horizon)
    }

    pub fn encode_sequence(&self, modes: &[usize]) -> Result<usize> {
        if modes.len() != self.horizon || modes.iter().any(|&p| p >= self.modes) {
            return Err(Error::InvalidArgument(format!("not a length-{} sequence over {} modes", self.horizon, self.modes)));
        }
        Ok(modes.iter().fold(0, |acc, &p| acc * self.modes + p))
    }

    fn counter_len(&self) -> usize {
        self.dwell_steps.unwrap_or(1)
    }

    /// Sequence index and counter of a state.
    pub fn decode_state(&self, s: usize) -> (usize, usize) {
        let k = self.counter_len();
        (s / k, s % k)
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }
}

fn decode(mut idx: usize, m: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % m;
        idx /= m;
    }
    out
}

fn sequence_count(m: usize, horizon: usize, cap: u64) -> Result<usize> {
    let mut count: u128 = 1;
    for _ in 0..horizon {
        count *= m as u128;
        if count > cap as u128 || count > usize::MAX as u128 {
            let needed = (m as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
            return Err(Error::CapExceeded { what: "mode sequences", needed, cap: cap as u128 });
        }
    }
    Ok(count as usize)
}

impl SymbolicModel for SequenceModel {
    fn kind(&self) -> ModelKind {
        if self.dwell_steps.is_some() {
            ModelKind::SequenceDwell
        } else {
            ModelKind::Sequence
        }
    }

    fn num_states(&self) -> usize {
        self.count * self.counter_len()
    }

    fn num_inputs(&self) -> usize {
        self.modes
    }

    fn state_dim(&self) -> usize {
        self.source.len()
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn post(&self, s: usize, u: usize) -> Post<'_> {
        match self.dwell_steps {
            None => Post::One(self.shift(s, u)),
            Some(k) => {
                let (idx, i) = (s / k, s % k);
                match counter_step(self.last_mode(idx), i, u, k) {
                    Some(i2) => Post::One(self.shift(idx, u) * k + i2),
                    None => Post::Disabled,
                }
            }
        }
    }

    fn for_each_pre(&self, t: usize, f: &mut dyn FnMut(usize, usize)) {
        let k = self.counter_len();
        let (idx_t, i_t) = (t / k, t % k);
        let u = idx_t % self.modes;
        let tail = idx_t / self.modes;
        for p1 in 0..self.modes {
            let idx = p1 * self.high + tail;
            match self.dwell_steps {
                None => f(idx, u),
                Some(k) => {
                    let last = self.last_mode(idx);
                    for i in 0..k {
                        if counter_step(last, i, u, k) == Some(i_t) {
                            f(idx * k + i, u);
                        }
                    }
                }
            }
        }
    }

    fn output_into(&self, s: usize, out: &mut [f64]) {
        out.copy_from_slice(self.sequence_output(s / self.counter_len()));
    }

    fn mode_of_state(&self, s: usize) -> Option<usize> {
        self.dwell_steps.map(|k| self.last_mode(s / k))
    }
}

/// Sequence abstraction for a common certificate.
pub fn build_seq(sys: &SwitchedSystem, params: &SeqParams, opts: &SeqBuildOptions) -> Result<SequenceModel> {
    if params.dwell_steps.is_some() {
        return Err(Error::InvalidArgument("build_seq takes no dwell steps; use build_seq_dwell".into()));
    }
    build_sequence_model(sys, params, opts)
}

/// Sequence abstraction with a dwell counter.
pub fn build_seq_dwell(sys: &SwitchedSystem, params: &SeqParams, opts: &SeqBuildOptions) -> Result<SequenceModel> {
    if params.dwell_steps.is_none() {
        return Err(Error::InvalidArgument("build_seq_dwell needs dwell steps".into()));
    }
    build_sequence_model(sys, params, opts)
}

fn build_sequence_model(sys: &SwitchedSystem, params: &SeqParams, opts: &SeqBuildOptions) -> Result<SequenceModel> {
    params.validate(sys.n)?;
    let m = sys.num_modes();
    let count = sequence_count(m, params.horizon, opts.max_sequences)?;
    let flows = FlowMap::new(sys, params.tau, &opts.flow)?;
    let outputs = tree_outputs(&flows, &params.source, m, params.horizon, count)?;
    let mut model = SequenceModel::from_parts(params, m, outputs, 0.0)?;
    model.eta_bar = eta_bar_exact(&model, &flows)?;
    Ok(model)
}

/// Leaves of the depth-`N` mode tree rooted at `x_s`, in sequence order. The
/// top levels are expanded serially and each subtree is walked in parallel.
fn tree_outputs(flows: &FlowMap<'_>, source: &[f64], m: usize, horizon: usize, count: usize) -> Result<Vec<f64>> {
    let n = source.len();
    let mut split = 0;
    while split < horizon && m.pow(split as u32) < 1024 {
        split += 1;
    }
    let prefixes = m.pow(split as u32);
    let leaves_per = count / prefixes;
    let mut outputs = vec![0.0; count * n];
    outputs
        .par_chunks_mut(leaves_per * n)
        .enumerate()
        .try_for_each(|(prefix, chunk)| -> Result<()> {
            let mut bufs = vec![vec![0.0; n]; horizon - split + 1];
            let x = flows.flow_sequence(&decode(prefix, m, split), source)?;
            subtree(flows, &x, m, horizon - split, chunk, &mut bufs)
        })?;
    Ok(outputs)
}

fn subtree(flows: &FlowMap<'_>, x: &[f64], m: usize, depth: usize, out: &mut [f64], bufs: &mut [Vec<f64>]) -> Result<()> {
    if depth == 0 {
        out.copy_from_slice(x);
        return Ok(());
    }
    let chunk = out.len() / m;
    let (head, tail) = bufs.split_first_mut().expect("one buffer per level");
    for p in 0..m {
        flows.apply(p, x, head)?;
        subtree(flows, head, m, depth - 1, &mut out[p * chunk..(p + 1) * chunk], tail)?;
    }
    Ok(())
}

/// `max ‖ξ̄_{H(s)u}(τ) − H(shift(s,u))‖∞` over all sequences and inputs. Every
/// input is enabled from some counter value, so the dwell variant has the same maximum.
pub fn eta_bar_exact(model: &SequenceModel, flows: &FlowMap<'_>) -> Result<f64> {
    let n = model.source.len();
    (0..model.count)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |y, idx| -> Result<f64> {
                let x = model.sequence_output(idx);
                let mut worst: f64 = 0.0;
                for u in 0..model.modes {
                    flows.apply(u, x, y)?;
                    worst = worst.max(inf_distance(y, model.sequence_output(model.shift(idx, u))));
                }
                Ok(worst)
            },
        )
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Dwell-respecting initial sequences with their counters: for `N ≤ N̂−1` the
/// constant sequences with counter `N`; otherwise every sequence whose runs,
/// except possibly the last, have length at least `N̂`, with counter
/// `min(last run − 1, N̂−1)`.
pub fn dwell_initial_sequences(m: usize, horizon: usize, dwell_steps: usize) -> Vec<(usize, usize)> {
    let count = m.pow(horizon as u32);
    if horizon < dwell_steps {
        let ones = (0..horizon).fold(0, |acc, _| acc * m + 1);
        return (0..m).map(|p| (p * ones, horizon)).collect();
    }
    (0..count)
        .into_par_iter()
        .filter_map(|idx| {
            let seq = decode(idx, m, horizon);
            let mut run = 1;
            for w in seq.windows(2) {
                if w[1] == w[0] {
                    run += 1;
                } else {
                    if run < dwell_steps {
                        return None;
                    }
                    run = 1;
                }
            }
            Some((idx, (run - 1).min(dwell_steps - 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_is_most_significant_first() {
        assert_eq!(decode(5, 2, 3), vec![1, 0, 1]);
        assert_eq!(decode(0, 3, 2), vec![0, 0]);
    }

    #[test]
    fn short_horizon_initial_set_is_constant_sequences() {
        let init = dwell_initial_sequences(2, 2, 4);
        assert_eq!(init, vec![(0, 2), (3, 2)]);
    }

    #[test]
    fn dwell_one_makes_every_sequence_initial() {
        let init = dwell_initial_sequences(3, 3, 1);
        assert_eq!(init.len(), 27);
        assert!(init.iter().all(|&(_, i)| i == 0));
    }
}
