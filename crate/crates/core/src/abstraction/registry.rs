use super::{build_grid, build_grid_dwell, build_seq, build_seq_dwell, AnyModel, BuildOptions, SeqBuildOptions};
use crate::error::{Error, Result};
use crate::model::SwitchedSystem;
use crate::quantizer::{GridParams, SeqParams};

/// Everything a builder may need; each builder checks for the fields it uses.
#[derive(Clone, Debug)]
pub struct BuildRequest<'a> {
    pub system: &'a SwitchedSystem,
    pub tau: f64,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub horizon: Option<usize>,
    pub source: Option<Vec<f64>>,
    pub dwell_steps: Option<usize>,
    pub grid: BuildOptions,
    pub seq: SeqBuildOptions,
}

impl BuildRequest<'_> {
    fn grid_params(&self, dwell: bool) -> Result<GridParams> {
        let eta = self.eta.ok_or_else(|| Error::InvalidArgument("grid abstraction needs η".into()))?;
        Ok(GridParams { tau: self.tau, eta, epsilon: self.epsilon, dwell_steps: self.dwell(dwell)? })
    }

    fn seq_params(&self, dwell: bool) -> Result<SeqParams> {
        let horizon = self.horizon.ok_or_else(|| Error::InvalidArgument("sequence abstraction needs N".into()))?;
        let source = self
            .source
            .clone()
            .ok_or_else(|| Error::InvalidArgument("sequence abstraction needs a source state".into()))?;
        Ok(SeqParams { tau: self.tau, horizon, source, epsilon: self.epsilon, dwell_steps: self.dwell(dwell)? })
    }

    fn dwell(&self, dwell: bool) -> Result<Option<usize>> {
        match (dwell, self.dwell_steps) {
            (true, None) => Err(Error::InvalidArgument("dwell abstraction needs a dwell time".into())),
            (true, k) => Ok(k),
            (false, _) => Ok(None),
        }
    }
}

pub trait AbstractionBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn build(&self, req: &BuildRequest<'_>) -> Result<AnyModel>;
}

struct Grid;
struct GridDwell;
struct Seq;
struct SeqDwell;

impl AbstractionBuilder for Grid {
    fn name(&self) -> &'static str {
        "grid"
    }
    fn description(&self) -> &'static str {
        "lattice states, common certificate"
    }
    fn build(&self, req: &BuildRequest<'_>) -> Result<AnyModel> {
        build_grid(req.system, &req.grid_params(false)?, &req.grid).map(AnyModel::Grid)
    }
}

impl AbstractionBuilder for GridDwell {
    fn name(&self) -> &'static str {
        "grid-dwell"
    }
    fn description(&self) -> &'static str {
        "lattice states with mode and dwell counter"
    }
    fn build(&self, req: &BuildRequest<'_>) -> Result<AnyModel> {
        build_grid_dwell(req.system, &req.grid_params(true)?, &req.grid).map(AnyModel::Grid)
    }
}

impl AbstractionBuilder for Seq {
    fn name(&self) -> &'static str {
        "seq"
    }
    fn description(&self) -> &'static str {
        "mode sequences of length N, common certificate"
    }
    fn build(&self, req: &BuildRequest<'_>) -> Result<AnyModel> {
        build_seq(req.system, &req.seq_params(false)?, &req.seq).map(AnyModel::Sequence)
    }
}

impl AbstractionBuilder for SeqDwell {
    fn name(&self) -> &'static str {
        "seq-dwell"
    }
    fn description(&self) -> &'static str {
        "mode sequences of length N with dwell counter"
    }
    fn build(&self, req: &BuildRequest<'_>) -> Result<AnyModel> {
        build_seq_dwell(req.system, &req.seq_params(true)?, &req.seq).map(AnyModel::Sequence)
    }
}

/// Builders selectable by name.
pub struct AbstractionRegistry {
    builders: Vec<Box<dyn AbstractionBuilder>>,
}

impl Default for AbstractionRegistry {
    fn default() -> Self {
        let mut r = Self { builders: Vec::new() };
        r.register(Box::new(Grid));
        r.register(Box::new(GridDwell));
        r.register(Box::new(Seq));
        r.register(Box::new(SeqDwell));
        r
    }
}

impl AbstractionRegistry {
    /// Adds a builder, replacing any with the same name.
    pub fn register(&mut self, builder: Box<dyn AbstractionBuilder>) {
        self.builders.retain(|b| b.name() != builder.name());
        self.builders.push(builder);
    }

    pub fn get(&self, name: &str) -> Result<&dyn AbstractionBuilder> {
        self.builders
            .iter()
            .find(|b| b.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown abstraction {name:?}; known: {}", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.iter().map(|b| b.name()).collect()
    }
}
