use std::sync::OnceLock;

use rayon::prelude::*;

use super::{counter_step, ModelKind, Post, SymbolicModel, INVALID};
use crate::error::{Error, Result};
use crate::flow::{nominal_flow, FlowConfig, FlowMap};
use crate::linalg::inf_distance;
use crate::model::{BoxSet, Lattice, SwitchedSystem};
use crate::quantizer::GridParams;

/// Which lattice points count as successors of a sampled flow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SuccessorMode {
    /// The nearest lattice point (deterministic model).
    #[default]
    Nearest,
    /// Every lattice point within `η` (nondeterministic model).
    AllWithinEta,
}

#[derive(Clone, Debug)]
pub(crate) enum Successors {
    /// `table[x·m + p]`.
    Nearest(Vec<u32>),
    /// CSR over `x·m + p`; an `INVALID` entry marks a flow leaving the domain.
    All { offsets: Vec<u64>, targets: Vec<u32> },
}

/// Reverse lattice adjacency: for each target lattice point, the `(x·m + p)` pairs reaching it.
#[derive(Clone, Debug)]
struct Reverse {
    offsets: Vec<u64>,
    sources: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub flow: FlowConfig,
    pub successor_mode: SuccessorMode,
    /// Upper bound on `|[D]_η|·m`.
    pub max_transitions: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { flow: FlowConfig::default(), successor_mode: SuccessorMode::Nearest, max_transitions: 1 << 31 }
    }
}

/// Grid abstraction over `[D]_η`, optionally with mode and dwell counter.
#[derive(Debug)]
pub struct GridModel {
    pub(crate) domain: BoxSet,
    pub(crate) lattice: Lattice,
    pub(crate) modes: usize,
    pub(crate) tau: f64,
    pub(crate) eta: f64,
    pub(crate) epsilon: f64,
    pub(crate) dwell_steps: Option<usize>,
    pub(crate) successors: Successors,
    reverse: OnceLock<Reverse>,
}

impl GridModel {
    pub(crate) fn from_parts(
        domain: BoxSet,
        lattice: Lattice,
        modes: usize,
        params: &GridParams,
        successors: Successors,
    ) -> Self {
        Self {
            domain,
            lattice,
            modes,
            tau: params.tau,
            eta: params.eta,
            epsilon: params.epsilon,
            dwell_steps: params.dwell_steps,
            successors,
            reverse: OnceLock::new(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn domain(&self) -> &BoxSet {
        &self.domain
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dwell_steps(&self) -> Option<usize> {
        self.dwell_steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn params(&self) -> GridParams {
        GridParams { tau: self.tau, eta: self.eta, epsilon: self.epsilon, dwell_steps: self.dwell_steps }
    }

    pub fn successor_mode(&self) -> SuccessorMode {
        match self.successors {
            Successors::Nearest(_) => SuccessorMode::Nearest,
            Successors::All { .. } => SuccessorMode::AllWithinEta,
        }
    }

    fn counter_len(&self) -> usize {
        self.dwell_steps.unwrap_or(1)
    }

    /// `(lattice index, mode, counter)`; mode and counter are 0 without dwell time.
    pub fn decode(&self, s: usize) -> (usize, usize, usize) {
        match self.dwell_steps {
            None => (s, 0, 0),
            Some(k) => {
                let i = s % k;
                let rest = s / k;
                (rest / self.modes, rest % self.modes, i)
            }
        }
    }

    pub fn encode(&self, x: usize, p: usize, i: usize) -> usize {
        match self.dwell_steps {
            None => x,
            Some(k) => (x * self.modes + p) * k + i,
        }
    }

    /// Lattice successors of lattice point `x` under the flow of mode `p`.
    pub fn lattice_successors(&self, x: usize, p: usize) -> &[u32] {
        let e = x * self.modes + p;
        match &self.successors {
            Successors::Nearest(t) => std::slice::from_ref(&t[e]),
            Successors::All { offsets, targets } => &targets[offsets[e] as usize..offsets[e + 1] as usize],
        }
    }

    pub fn transition_count(&self) -> usize {
        match &self.successors {
            Successors::Nearest(t) => t.len(),
            Successors::All { targets, .. } => targets.len(),
        }
    }

    fn reverse(&self) -> &Reverse {
        self.reverse.get_or_init(|| {
            let lat = self.lattice.len();
            let edges = lat * self.modes;
            let mut counts = vec![0u64; lat + 1];
            for e in 0..edges {
                for &t in self.lattice_successors(e / self.modes, e % self.modes) {
                    if t != INVALID {
                        counts[t as usize + 1] += 1;
                    }
                }
            }
            for i in 0..lat {
                counts[i + 1] += counts[i];
            }
            let mut fill = counts.clone();
            let mut sources = vec![0u32; counts[lat] as usize];
            for e in 0..edges {
                for &t in self.lattice_successors(e / self.modes, e % self.modes) {
                    if t != INVALID {
                        let slot = &mut fill[t as usize];
                        sources[*slot as usize] = e as u32;
                        *slot += 1;
                    }
                }
            }
            Reverse { offsets: counts, sources }
        })
    }
}

impl SymbolicModel for GridModel {
    fn kind(&self) -> ModelKind {
        if self.dwell_steps.is_some() {
            ModelKind::GridDwell
        } else {
            ModelKind::Grid
        }
    }

    fn num_states(&self) -> usize {
        self.lattice.len() * self.modes_in_state() * self.counter_len()
    }

    fn num_inputs(&self) -> usize {
        self.modes
    }

    fn state_dim(&self) -> usize {
        self.lattice.dim()
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn post(&self, s: usize, u: usize) -> Post<'_> {
        match self.dwell_steps {
            None => match &self.successors {
                Successors::Nearest(t) => {
                    let v = t[s * self.modes + u];
                    if v == INVALID {
                        Post::Invalid
                    } else {
                        Post::One(v as usize)
                    }
                }
                Successors::All { .. } => Post::Many { targets: self.lattice_successors(s, u), stride: 1, offset: 0 },
            },
            Some(k) => {
                let (x, p, i) = self.decode(s);
                let Some(i2) = counter_step(p, i, u, k) else {
                    return Post::Disabled;
                };
                let offset = u * k + i2;
                let stride = self.modes * k;
                match &self.successors {
                    Successors::Nearest(t) => {
                        let v = t[x * self.modes + p];
                        if v == INVALID {
                            Post::Invalid
                        } else {
                            Post::One(v as usize * stride + offset)
                        }
                    }
                    Successors::All { .. } => Post::Many { targets: self.lattice_successors(x, p), stride, offset },
                }
            }
        }
    }

    fn for_each_pre(&self, t: usize, f: &mut dyn FnMut(usize, usize)) {
        let rev = self.reverse();
        let (xt, ut, it) = self.decode(t);
        let range = rev.offsets[xt] as usize..rev.offsets[xt + 1] as usize;
        for &e in &rev.sources[range] {
            let (x, p) = (e as usize / self.modes, e as usize % self.modes);
            match self.dwell_steps {
                None => f(x, p),
                Some(k) => {
                    for i in 0..k {
                        if counter_step(p, i, ut, k) == Some(it) {
                            f(self.encode(x, p, i), ut);
                        }
                    }
                }
            }
        }
    }

    fn output_into(&self, s: usize, out: &mut [f64]) {
        let (x, _, _) = self.decode(s);
        self.lattice.point_into(x, out);
    }

    fn mode_of_state(&self, s: usize) -> Option<usize> {
        self.dwell_steps.map(|_| self.decode(s).1)
    }

    fn applied_mode(&self, s: usize, u: usize) -> usize {
        self.mode_of_state(s).unwrap_or(u)
    }
}

impl GridModel {
    fn modes_in_state(&self) -> usize {
        if self.dwell_steps.is_some() {
            self.modes
        } else {
            1
        }
    }
}

/// Grid abstraction for a common certificate: states `[D]_η`.
pub fn build_grid(sys: &SwitchedSystem, params: &GridParams, opts: &BuildOptions) -> Result<GridModel> {
    if params.dwell_steps.is_some() {
        return Err(Error::InvalidArgument("build_grid takes no dwell steps; use build_grid_dwell".into()));
    }
    build_lattice_model(sys, params, opts)
}

/// Grid abstraction with dwell time: states `[D]_η × P × {0..N̂−1}`.
pub fn build_grid_dwell(sys: &SwitchedSystem, params: &GridParams, opts: &BuildOptions) -> Result<GridModel> {
    if params.dwell_steps.is_none() {
        return Err(Error::InvalidArgument("build_grid_dwell needs dwell steps".into()));
    }
    build_lattice_model(sys, params, opts)
}

fn build_lattice_model(sys: &SwitchedSystem, params: &GridParams, opts: &BuildOptions) -> Result<GridModel> {
    params.validate(&sys.domain)?;
    let m = sys.num_modes();
    let cap = opts.max_transitions / m as u64;
    let lattice = Lattice::with_cap(&sys.domain, params.eta, cap.min(u32::MAX as u64 - 1))?;
    let states = lattice.len() as u128 * m as u128;
    if states > opts.max_transitions as u128 {
        return Err(Error::CapExceeded { what: "grid transitions", needed: states, cap: opts.max_transitions as u128 });
    }
    let flows = FlowMap::new(sys, params.tau, &opts.flow)?;
    let n = sys.n;
    let successors = match opts.successor_mode {
        SuccessorMode::Nearest => {
            let mut table = vec![INVALID; lattice.len() * m];
            table
                .par_chunks_mut(m)
                .enumerate()
                .try_for_each_init(
                    || (vec![0.0; n], vec![0.0; n]),
                    |(x, y), (idx, row)| -> Result<()> {
                        lattice.point_into(idx, x);
                        for (p, slot) in row.iter_mut().enumerate() {
                            flows.apply(p, x, y)?;
                            *slot = lattice.nearest_index(y).map_or(INVALID, |v| v as u32);
                        }
                        Ok(())
                    },
                )?;
            Successors::Nearest(table)
        }
        SuccessorMode::AllWithinEta => {
            let lists: Vec<Vec<u32>> = (0..lattice.len() * m)
                .into_par_iter()
                .map_init(
                    || (vec![0.0; n], vec![0.0; n]),
                    |(x, y), e| -> Result<Vec<u32>> {
                        lattice.point_into(e / m, x);
                        flows.apply(e % m, x, y)?;
                        let mut list: Vec<u32> =
                            lattice.indices_within(y, params.eta).into_iter().map(|v| v as u32).collect();
                        if lattice.nearest_index(y).is_none() {
                            list.push(INVALID);
                        }
                        Ok(list)
                    },
                )
                .collect::<Result<_>>()?;
            let mut offsets = Vec::with_capacity(lists.len() + 1);
            offsets.push(0u64);
            let mut targets = Vec::new();
            for l in lists {
                targets.extend_from_slice(&l);
                offsets.push(targets.len() as u64);
            }
            Successors::All { offsets, targets }
        }
    };
    Ok(GridModel::from_parts(sys.domain.clone(), lattice, m, params, successors))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridAudit {
    pub transitions_checked: usize,
    pub max_defect: f64,
    pub violations: usize,
}

/// Recomputes every flow with step-by-step RK4 (independent of the cached
/// propagator) and checks each successor lies within `η` of it.
pub fn audit_grid(model: &GridModel, sys: &SwitchedSystem, cfg: &FlowConfig) -> Result<GridAudit> {
    let m = model.modes;
    let n = model.lattice.dim();
    let eta = model.eta;
    let tol = 1e-9 * eta;
    let (checked, max_defect, violations) = (0..model.lattice.len() * m)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(x, target), e| -> Result<(usize, f64, usize)> {
                model.lattice.point_into(e / m, x);
                let y = nominal_flow(sys, x, e % m, model.tau, cfg)?;
                let mut acc = (0usize, 0.0f64, 0usize);
                for &t in model.lattice_successors(e / m, e % m) {
                    if t == INVALID {
                        continue;
                    }
                    model.lattice.point_into(t as usize, target);
                    let d = inf_distance(&y, target);
                    acc.0 += 1;
                    acc.1 = acc.1.max(d);
                    if d > eta + tol {
                        acc.2 += 1;
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(|| (0, 0.0, 0), |a, b| Ok((a.0 + b.0, a.1.max(b.1), a.2 + b.2)))?;
    Ok(GridAudit { transitions_checked: checked, max_defect, violations })
}
