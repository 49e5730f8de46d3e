//! Fixed-point controller synthesis over symbolic models and refinement into
//! runtime switching strategies.

mod io;
mod objective;
mod runtime;
mod solve;
mod stateset;

use serde::{Deserialize, Serialize};

pub use io::{load_controller, read_controller, save_controller, write_controller, write_strategy_csv, CONTROLLER_FORMAT_VERSION};
pub use objective::{Objective, ObjectiveRegistry};

/// Synthesizes with the default objective registry.
pub fn synthesize(model: &crate::abstraction::AnyModel, spec: &Spec) -> Result<Controller> {
    ObjectiveRegistry::default().synthesize(model, spec)
}
pub use runtime::{
    refine_controller, select_initial_state, GridRuntime, RuntimeFactory, RuntimeFault, SequenceRuntime, SwitchingRuntime, SwitchingStrategy,
};
pub use solve::{solve_reach, solve_reach_avoid, solve_reach_stay, solve_safety, verify_closure, Solution};
pub use stateset::StateSet;

use rayon::prelude::*;

use crate::abstraction::{ModelKind, SymbolicModel};
use crate::error::{Error, Result};
use crate::model::{BoxSet, Region};

/// Strategy entry for states outside the winning set.
pub const NO_MODE: u16 = u16::MAX;
/// Distance entry for states outside the winning set.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Safety,
    Reach,
    ReachStay,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Safety => "safety",
            ObjectiveKind::Reach => "reach",
            ObjectiveKind::ReachStay => "reach-stay",
        }
    }
}

fn default_contract() -> bool {
    true
}

/// Specification over output sets. `avoid` is removed from `safe` and
/// `target`; for reachability, a `safe` set constrains the path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spec {
    pub kind: ObjectiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safe: Option<BoxSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BoxSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoid: Option<BoxSet>,
    /// Shrink sets by ε (and grow `avoid` by ε) before labeling.
    #[serde(default = "default_contract")]
    pub contract: bool,
}

impl Spec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            ObjectiveKind::Safety if self.safe.is_none() => {
                return Err(Error::InvalidArgument("a safety specification needs a safe set".into()))
            }
            ObjectiveKind::Reach | ObjectiveKind::ReachStay if self.target.is_none() => {
                return Err(Error::InvalidArgument(format!("a {} specification needs a target set", self.kind.name())))
            }
            _ => {}
        }
        for set in [&self.safe, &self.target, &self.avoid].into_iter().flatten() {
            set.check_dim(n)?;
        }
        Ok(())
    }

    fn region(&self, set: &BoxSet, epsilon: f64) -> Region {
        let avoid = self.avoid.clone().unwrap_or_default();
        if self.contract {
            Region::new(contract_set(set, epsilon), avoid.inflate(epsilon))
        } else {
            Region::new(set.clone(), avoid)
        }
    }

    /// Region the run must stay in (`None` when unconstrained).
    pub fn safe_region(&self, epsilon: f64) -> Option<Region> {
        self.safe.as_ref().map(|s| self.region(s, epsilon))
    }

    pub fn target_region(&self, epsilon: f64) -> Option<Region> {
        self.target.as_ref().map(|t| self.region(t, epsilon))
    }
}

/// `[l,u] ↦ [l+ε, u−ε]`, dropping boxes that become empty.
pub fn contract_set(set: &BoxSet, epsilon: f64) -> BoxSet {
    set.contract(epsilon)
}

/// States whose output lies in the region (boundaries of included boxes count).
pub fn label_states(model: &dyn SymbolicModel, region: &Region) -> StateSet {
    let n = model.state_dim();
    StateSet::from_fn_par(model.num_states(), |s, buf: &mut Vec<f64>| {
        buf.resize(n, 0.0);
        model.output_into(s, buf);
        region.contains(buf)
    })
}

/// Winning set plus strategy for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct Controller {
    pub model_checksum: u32,
    pub model_kind: ModelKind,
    pub spec: Spec,
    pub winning: StateSet,
    /// 0-based mode per state; `NO_MODE` outside the winning set.
    pub strategy: Vec<u16>,
    /// Steps to the target (reach objectives; 0 inside the invariant core).
    pub distances: Option<Vec<u32>>,
}

impl Controller {
    pub fn mode(&self, s: usize) -> Option<usize> {
        let u = self.strategy[s];
        (u != NO_MODE).then_some(u as usize)
    }

    pub fn num_states(&self) -> usize {
        self.strategy.len()
    }
}

/// Per-state strategy over a winning set: the smallest mode whose successors
/// all stay in `within`.
pub(crate) fn smallest_safe_mode(model: &dyn SymbolicModel, within: &StateSet, states: &StateSet) -> Vec<u16> {
    (0..model.num_states())
        .into_par_iter()
        .map(|s| {
            if !states.contains(s) {
                return NO_MODE;
            }
            (0..model.num_inputs())
                .find(|&u| model.post(s, u).all(|t| within.contains(t)))
                .map_or(NO_MODE, |u| u as u16)
        })
        .collect()
}
