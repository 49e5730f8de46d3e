//! Finite symbolic models: grid abstractions over `[D]_η` and
//! discretization-free mode-sequence abstractions, each with an optional
//! dwell-time counter.

mod grid;
mod io;
mod registry;
mod sequence;

use std::fmt;

pub use grid::{audit_grid, build_grid, build_grid_dwell, BuildOptions, GridAudit, GridModel, SuccessorMode};
pub use io::{load_model, model_checksum, read_model, save_model, write_model, MODEL_FORMAT_VERSION};
pub use registry::{AbstractionBuilder, AbstractionRegistry, BuildRequest};
pub use sequence::{build_seq, build_seq_dwell, dwell_initial_sequences, eta_bar_exact, SeqBuildOptions, SequenceModel};

use crate::certificates::CertificateSet;
use crate::error::Result;
use crate::linalg::inf_distance;
use crate::model::SwitchedSystem;
use crate::quantizer::delta_sequence;

/// Marker for "no successor inside the domain" in successor tables.
pub const INVALID: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Grid,
    GridDwell,
    Sequence,
    SequenceDwell,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Grid => "grid",
            ModelKind::GridDwell => "grid-dwell",
            ModelKind::Sequence => "seq",
            ModelKind::SequenceDwell => "seq-dwell",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [ModelKind::Grid, ModelKind::GridDwell, ModelKind::Sequence, ModelKind::SequenceDwell]
            .into_iter()
            .find(|k| k.name() == name)
    }

    pub fn is_grid(self) -> bool {
        matches!(self, ModelKind::Grid | ModelKind::GridDwell)
    }

    pub fn has_dwell(self) -> bool {
        matches!(self, ModelKind::GridDwell | ModelKind::SequenceDwell)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Successors of a `(state, input)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Post<'a> {
    /// The input is not allowed (dwell counter forbids the switch).
    Disabled,
    /// The flow leaves the domain.
    Invalid,
    One(usize),
    /// Each target `t` (unless `INVALID`) stands for state `t·stride + offset`.
    Many { targets: &'a [u32], stride: usize, offset: usize },
}

impl Post<'_> {
    /// Calls `f` on every successor; returns false if an invalid successor is present.
    pub fn for_each(&self, mut f: impl FnMut(usize)) -> bool {
        match *self {
            Post::Disabled => true,
            Post::Invalid => false,
            Post::One(t) => {
                f(t);
                true
            }
            Post::Many { targets, stride, offset } => {
                let mut valid = true;
                for &t in targets {
                    if t == INVALID {
                        valid = false;
                    } else {
                        f(t as usize * stride + offset);
                    }
                }
                valid
            }
        }
    }

    /// True iff the input is enabled, never leaves the domain, and every successor satisfies `pred`.
    pub fn all(&self, mut pred: impl FnMut(usize) -> bool) -> bool {
        match *self {
            Post::Disabled | Post::Invalid => false,
            Post::One(t) => pred(t),
            Post::Many { targets, stride, offset } => {
                !targets.is_empty()
                    && targets.iter().all(|&t| t != INVALID && pred(t as usize * stride + offset))
            }
        }
    }
}

/// A finite transition system with outputs in `ℝⁿ`. States and inputs are
/// dense indices; inputs are modes (0-based).
pub trait SymbolicModel: Send + Sync {
    fn kind(&self) -> ModelKind;
    fn num_states(&self) -> usize;
    fn num_inputs(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn tau(&self) -> f64;
    /// Precision the model is built for.
    fn epsilon(&self) -> f64;
    fn post(&self, s: usize, u: usize) -> Post<'_>;
    /// Calls `f(s, u)` for every transition `s --u--> t`.
    fn for_each_pre(&self, t: usize, f: &mut dyn FnMut(usize, usize));
    fn output_into(&self, s: usize, out: &mut [f64]);
    /// Mode stored in the state (dwell models), used to seed runtimes.
    fn mode_of_state(&self, s: usize) -> Option<usize>;

    /// Mode the concrete system runs during the transition `s --u-->`. Grid
    /// dwell states carry the running mode and `u` is the next one; in every
    /// other model the input itself is applied.
    fn applied_mode(&self, _s: usize, u: usize) -> usize {
        u
    }

    fn output(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim()];
        self.output_into(s, &mut out);
        out
    }
}

/// Dwell counter automaton: from mode `p` with counter `i`, the next mode `u`
/// is allowed iff `i = N̂−1` or `u = p`; returns the next counter.
pub fn counter_step(p: usize, i: usize, u: usize, dwell_steps: usize) -> Option<usize> {
    let last = dwell_steps - 1;
    if i < last {
        (u == p).then_some(i + 1)
    } else if u == p {
        Some(last)
    } else {
        Some(0)
    }
}

/// A built model of any kind.
#[derive(Debug)]
pub enum AnyModel {
    Grid(GridModel),
    Sequence(SequenceModel),
}

impl AnyModel {
    pub fn as_model(&self) -> &dyn SymbolicModel {
        match self {
            AnyModel::Grid(g) => g,
            AnyModel::Sequence(s) => s,
        }
    }

    pub fn as_grid(&self) -> Option<&GridModel> {
        match self {
            AnyModel::Grid(g) => Some(g),
            AnyModel::Sequence(_) => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&SequenceModel> {
        match self {
            AnyModel::Sequence(s) => Some(s),
            AnyModel::Grid(_) => None,
        }
    }
}

/// Abstract states whose output lies within the certified initial radius of `x0`.
///
/// Without dwell time the radius is `(ᾱ⁻¹(α̲(ε^q)))^{1/q}`. With dwell time,
/// a state with mode `p` and counter `i` uses `(ᾱ_p⁻¹(δ_i))^{1/q}`. Sequence
/// dwell models only consider the dwell-respecting initial sequences.
pub fn initial_abstract_states(
    model: &AnyModel,
    x0: &[f64],
    epsilon: f64,
    certs: &CertificateSet,
    sys: &SwitchedSystem,
) -> Result<Vec<usize>> {
    let q = certs.q;
    match model {
        AnyModel::Grid(g) => {
            let lattice = g.lattice();
            match g.dwell_steps() {
                None => {
                    let r = certs.initial_radius(epsilon);
                    Ok(lattice.indices_within(x0, r))
                }
                Some(_) => {
                    let level = certs.precision_level(epsilon);
                    let mut out = Vec::new();
                    for p in 0..g.modes() {
                        let r = (level / certs.mode(p).alpha_hi_coeff).powf(1.0 / q);
                        for x in lattice.indices_within(x0, r) {
                            out.push(g.encode(x, p, 0));
                        }
                    }
                    out.sort_unstable();
                    Ok(out)
                }
            }
        }
        AnyModel::Sequence(s) => {
            let mut y = vec![0.0; s.state_dim()];
            match s.dwell_steps() {
                None => {
                    let r = certs.initial_radius(epsilon);
                    Ok((0..s.sequence_count())
                        .filter(|&idx| {
                            s.output_into(idx, &mut y);
                            inf_distance(&y, x0) <= r
                        })
                        .collect())
                }
                Some(k) => {
                    let h = crate::quantizer::h_source(s.source(), (s.horizon() as f64 + 1.0) * s.tau(), certs, sys)?;
                    let disturbance = certs.gamma_hat(h.powf(1.0 / q) + s.eta_bar());
                    let deltas = delta_sequence(epsilon, s.tau(), k, disturbance, certs)?.deltas;
                    let mut out = Vec::new();
                    for (idx, i) in dwell_initial_sequences(s.modes(), s.horizon(), k) {
                        let p = idx % s.modes();
                        let r = (deltas[i] / certs.mode(p).alpha_hi_coeff).powf(1.0 / q);
                        s.output_into(idx * k + i, &mut y);
                        if inf_distance(&y, x0) <= r {
                            out.push(idx * k + i);
                        }
                    }
                    out.sort_unstable();
                    Ok(out)
                }
            }
        }
    }
}
