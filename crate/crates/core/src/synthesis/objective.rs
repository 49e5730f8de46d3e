use super::{label_states, solve_reach_avoid, solve_reach_stay, solve_safety, Controller, ObjectiveKind, Solution, Spec, StateSet};
use crate::abstraction::{model_checksum, AnyModel, SymbolicModel};
use crate::error::{Error, Result};

/// A synthesis objective selectable by name.
pub trait Objective: Send + Sync {
    fn kind(&self) -> ObjectiveKind;
    fn solve(&self, model: &dyn SymbolicModel, spec: &Spec) -> Result<Solution>;
}

fn labeled(model: &dyn SymbolicModel, region: Option<crate::model::Region>) -> Option<StateSet> {
    region.map(|r| label_states(model, &r))
}

fn target_states(model: &dyn SymbolicModel, spec: &Spec) -> Result<StateSet> {
    labeled(model, spec.target_region(model.epsilon()))
        .ok_or_else(|| Error::InvalidArgument(format!("{} needs a target set", spec.kind.name())))
}

struct Safety;
struct Reach;
struct ReachStay;

impl Objective for Safety {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Safety
    }
    fn solve(&self, model: &dyn SymbolicModel, spec: &Spec) -> Result<Solution> {
        let safe = labeled(model, spec.safe_region(model.epsilon()))
            .ok_or_else(|| Error::InvalidArgument("safety needs a safe set".into()))?;
        Ok(solve_safety(model, &safe))
    }
}

impl Objective for Reach {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Reach
    }
    fn solve(&self, model: &dyn SymbolicModel, spec: &Spec) -> Result<Solution> {
        let target = target_states(model, spec)?;
        let allowed = labeled(model, spec.safe_region(model.epsilon()));
        Ok(solve_reach_avoid(model, &target, allowed.as_ref()))
    }
}

impl Objective for ReachStay {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::ReachStay
    }
    fn solve(&self, model: &dyn SymbolicModel, spec: &Spec) -> Result<Solution> {
        let target = target_states(model, spec)?;
        let allowed = labeled(model, spec.safe_region(model.epsilon()));
        Ok(solve_reach_stay(model, &target, allowed.as_ref()))
    }
}

pub struct ObjectiveRegistry {
    objectives: Vec<Box<dyn Objective>>,
}

impl Default for ObjectiveRegistry {
    fn default() -> Self {
        let mut r = Self { objectives: Vec::new() };
        r.register(Box::new(Safety));
        r.register(Box::new(Reach));
        r.register(Box::new(ReachStay));
        r
    }
}

impl ObjectiveRegistry {
    /// Adds an objective, replacing any registered for the same kind.
    pub fn register(&mut self, objective: Box<dyn Objective>) {
        self.objectives.retain(|o| o.kind() != objective.kind());
        self.objectives.push(objective);
    }

    pub fn get(&self, kind: ObjectiveKind) -> Result<&dyn Objective> {
        self.objectives
            .iter()
            .find(|o| o.kind() == kind)
            .map(|o| o.as_ref())
            .ok_or_else(|| Error::InvalidArgument(format!("no solver registered for {}", kind.name())))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.objectives.iter().map(|o| o.kind().name()).collect()
    }

    /// Labels, solves and packages a controller for `model`.
    pub fn synthesize(&self, model: &AnyModel, spec: &Spec) -> Result<Controller> {
        let m = model.as_model();
        spec.validate(m.state_dim())?;
        if m.num_inputs() > u16::MAX as usize {
            return Err(Error::InvalidArgument("too many modes for a controller".into()));
        }
        let sol = self.get(spec.kind)?.solve(m, spec)?;
        Ok(Controller {
            model_checksum: model_checksum(model),
            model_kind: m.kind(),
            spec: spec.clone(),
            winning: sol.winning,
            strategy: sol.strategy,
            distances: sol.distances,
        })
    }
}
