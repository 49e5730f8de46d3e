//! Runtime switching strategies refined from abstract controllers.

use std::fmt;

use super::{Controller, UNREACHED};
use crate::abstraction::{counter_step, initial_abstract_states, AnyModel, GridModel, Post, SequenceModel, SymbolicModel};
use crate::certificates::CertificateSet;
use crate::error::{Error, Result};
use crate::model::SwitchedSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuntimeFault {
    /// The measured state left the domain.
    OutsideDomain,
    /// The abstract state has no strategy entry.
    NotWinning,
}

impl fmt::Display for RuntimeFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeFault::OutsideDomain => "state outside the domain",
            RuntimeFault::NotWinning => "abstract state outside the winning set",
        })
    }
}

/// One decision per sampling instant. On a fault the runtime keeps the
/// previously applied mode and reports the fault.
pub trait SwitchingRuntime: Send {
    fn next_mode(&mut self, x: &[f64]) -> (usize, Option<RuntimeFault>);
}

/// Source of fresh runtimes, one per simulated trajectory.
pub trait RuntimeFactory: Sync {
    fn instantiate(&self) -> Box<dyn SwitchingRuntime + '_>;
}

/// Shareable refined strategy.
pub enum SwitchingStrategy<'a> {
    Grid { model: &'a GridModel, ctrl: &'a Controller },
    Sequence { model: &'a SequenceModel, ctrl: &'a Controller, initial: usize },
}

impl RuntimeFactory for SwitchingStrategy<'_> {
    fn instantiate(&self) -> Box<dyn SwitchingRuntime + '_> {
        match *self {
            SwitchingStrategy::Grid { model, ctrl } => Box::new(GridRuntime::new(model, ctrl)),
            SwitchingStrategy::Sequence { model, ctrl, initial } => Box::new(SequenceRuntime::new(model, ctrl, initial)),
        }
    }
}

fn check_match(ctrl: &Controller, model: &dyn SymbolicModel) -> Result<()> {
    if ctrl.model_kind != model.kind() || ctrl.num_states() != model.num_states() {
        return Err(Error::InvalidArgument(format!(
            "controller for a {} model with {} states does not fit a {} model with {} states",
            ctrl.model_kind,
            ctrl.num_states(),
            model.kind(),
            model.num_states()
        )));
    }
    Ok(())
}

/// Winning initial abstract state for `x0`: smallest reach distance, then smallest index.
pub fn select_initial_state(
    model: &AnyModel,
    ctrl: &Controller,
    x0: &[f64],
    certs: &CertificateSet,
    sys: &SwitchedSystem,
) -> Result<Option<usize>> {
    let candidates = initial_abstract_states(model, x0, model.as_model().epsilon(), certs, sys)?;
    Ok(candidates
        .into_iter()
        .filter(|&s| ctrl.winning.contains(s))
        .min_by_key(|&s| (ctrl.distances.as_ref().map_or(0, |d| d[s]), s)))
}

/// Grid models need measurements only; sequence models need the initial
/// condition to fix their starting abstract state.
pub fn refine_controller<'a>(
    ctrl: &'a Controller,
    model: &'a AnyModel,
    x0: &[f64],
    certs: &CertificateSet,
    sys: &SwitchedSystem,
) -> Result<SwitchingStrategy<'a>> {
    check_match(ctrl, model.as_model())?;
    match model {
        AnyModel::Grid(g) => Ok(SwitchingStrategy::Grid { model: g, ctrl }),
        AnyModel::Sequence(s) => {
            let initial = select_initial_state(model, ctrl, x0, certs, sys)?
                .ok_or_else(|| Error::Infeasible("no winning initial abstract state is related to x0".into()))?;
            Ok(SwitchingStrategy::Sequence { model: s, ctrl, initial })
        }
    }
}

/// Quantizes each measurement to the nearest lattice point; dwell models also
/// track the active mode and counter.
pub struct GridRuntime<'a> {
    model: &'a GridModel,
    ctrl: &'a Controller,
    tracked: Option<(usize, usize)>,
    last: usize,
}

impl<'a> GridRuntime<'a> {
    pub fn new(model: &'a GridModel, ctrl: &'a Controller) -> Self {
        Self { model, ctrl, tracked: None, last: 0 }
    }

    fn hold(&mut self, fault: RuntimeFault) -> (usize, Option<RuntimeFault>) {
        if let (Some((p, i)), Some(k)) = (self.tracked, self.model.dwell_steps()) {
            self.tracked = Some((p, counter_step(p, i, p, k).expect("staying is always allowed")));
        }
        (self.last, Some(fault))
    }
}

impl SwitchingRuntime for GridRuntime<'_> {
    fn next_mode(&mut self, x: &[f64]) -> (usize, Option<RuntimeFault>) {
        if !self.model.domain().contains(x) {
            return self.hold(RuntimeFault::OutsideDomain);
        }
        let Some(xq) = self.model.lattice().nearest_index(x) else {
            return self.hold(RuntimeFault::OutsideDomain);
        };
        match self.model.dwell_steps() {
            None => match self.ctrl.mode(xq) {
                Some(u) => {
                    self.last = u;
                    (u, None)
                }
                None => self.hold(RuntimeFault::NotWinning),
            },
            Some(k) => {
                if self.tracked.is_none() {
                    let start = (0..self.model.modes()).find(|&p| self.ctrl.winning.contains(self.model.encode(xq, p, 0)));
                    match start {
                        Some(p) => {
                            self.tracked = Some((p, 0));
                            self.last = p;
                        }
                        None => return (self.last, Some(RuntimeFault::NotWinning)),
                    }
                }
                let (p, i) = self.tracked.expect("set above");
                match self.ctrl.mode(self.model.encode(xq, p, i)) {
                    Some(u) => {
                        self.tracked = Some((u, counter_step(p, i, u, k).expect("strategy modes are enabled")));
                        self.last = p;
                        (p, None)
                    }
                    None => {
                        self.last = p;
                        self.hold(RuntimeFault::NotWinning)
                    }
                }
            }
        }
    }
}

/// Finite-state machine over abstract sequence states; measurements are ignored.
pub struct SequenceRuntime<'a> {
    model: &'a SequenceModel,
    ctrl: &'a Controller,
    state: usize,
    last: usize,
}

impl<'a> SequenceRuntime<'a> {
    pub fn new(model: &'a SequenceModel, ctrl: &'a Controller, initial: usize) -> Self {
        let last = model.mode_of_state(initial).unwrap_or(0);
        Self { model, ctrl, state: initial, last }
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// Remaining reach distance of the current abstract state.
    pub fn distance(&self) -> Option<u32> {
        self.ctrl.distances.as_ref().map(|d| d[self.state]).filter(|&d| d != UNREACHED)
    }
}

impl SwitchingRuntime for SequenceRuntime<'_> {
    fn next_mode(&mut self, _x: &[f64]) -> (usize, Option<RuntimeFault>) {
        let (u, fault) = match self.ctrl.mode(self.state) {
            Some(u) => (u, None),
            None => (self.last, Some(RuntimeFault::NotWinning)),
        };
        if let Post::One(t) = self.model.post(self.state, u) {
            self.state = t;
        }
        self.last = u;
        (u, fault)
    }
}
