use std::fmt::Write as _;

use anyhow::{bail, Context};
use switchsym_core::abstraction::ModelKind;
use switchsym_core::flow::FlowMap;
use switchsym_core::numfmt::fmt17;
use switchsym_core::quantizer::{
    compare_approaches, dwell_steps, eta_bar_analytic, grid_conditions, min_epsilon_grid, select_source_state,
    solve_eta, solve_horizon_n, Approach, SideReport,
};

use crate::config::Project;

/// Resolved abstraction parameters plus the report that justified them.
#[derive(Clone, Debug)]
pub struct Plan {
    pub kind: ModelKind,
    pub tau: f64,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub horizon: Option<usize>,
    pub source: Option<Vec<f64>>,
    pub dwell_steps: Option<usize>,
    /// `key = value` lines.
    pub report: String,
}

pub struct SolveContext<'a> {
    pub project: &'a Project,
    pub flows: FlowMap<'a>,
}

impl<'a> SolveContext<'a> {
    pub fn new(project: &'a Project) -> anyhow::Result<Self> {
        let flows = FlowMap::new(&project.system, project.config.parameters.tau, &Default::default())?;
        Ok(Self { project, flows })
    }

    fn dwell_time(&self) -> Option<f64> {
        self.project.system.dwell_time
    }

    fn dwell_steps(&self) -> anyhow::Result<Option<usize>> {
        self.dwell_time().map(|td| dwell_steps(td, self.project.config.parameters.tau)).transpose().map_err(Into::into)
    }

    fn source(&self) -> anyhow::Result<Vec<f64>> {
        let p = &self.project.config.parameters;
        match &p.source {
            Some(s) => Ok(s.clone()),
            None => Ok(select_source_state(&self.flows, &self.project.certs, p.source_budget)?),
        }
    }
}

pub trait ApproachStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn plan(&self, ctx: &SolveContext<'_>) -> anyhow::Result<Plan>;
}

struct Grid;
struct Sequence;
struct Auto;

fn line(report: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(report, "{key} = {value}");
}

impl ApproachStrategy for Grid {
    fn name(&self) -> &'static str {
        "grid"
    }
    fn description(&self) -> &'static str {
        "lattice abstraction with quantization η"
    }
    fn plan(&self, ctx: &SolveContext<'_>) -> anyhow::Result<Plan> {
        let (sys, certs) = (&ctx.project.system, &ctx.project.certs);
        let p = &ctx.project.config.parameters;
        let td = ctx.dwell_time();
        let mut report = String::new();
        line(&mut report, "approach", "\"grid\"");
        let lower = min_epsilon_grid(p.tau, certs, sys, &sys.domain, td)?;
        line(&mut report, "epsilon_lower_bound", fmt17(lower));
        let eta = match p.eta {
            Some(eta) => eta,
            None => {
                let sol = solve_eta(p.tau, p.epsilon, certs, sys, &sys.domain, td)?;
                line(&mut report, "h", fmt17(sol.h));
                sol.eta
            }
        };
        let ineq = grid_conditions(p.tau, p.epsilon, eta, certs, sys, &sys.domain, td)?;
        for (i, c) in ineq.iter().enumerate() {
            let _ = writeln!(report, "# grid condition {}: {c}", i + 1);
        }
        if let Some(bad) = ineq.iter().find(|c| !c.holds()) {
            bail!("η = {eta} violates the grid condition {bad}");
        }
        line(&mut report, "eta", fmt17(eta));
        let k = ctx.dwell_steps()?;
        let kind = if k.is_some() { ModelKind::GridDwell } else { ModelKind::Grid };
        Ok(Plan { kind, tau: p.tau, epsilon: p.epsilon, eta: Some(eta), horizon: None, source: None, dwell_steps: k, report })
    }
}

impl ApproachStrategy for Sequence {
    fn name(&self) -> &'static str {
        "sequence"
    }
    fn description(&self) -> &'static str {
        "mode sequences of length N from a source state"
    }
    fn plan(&self, ctx: &SolveContext<'_>) -> anyhow::Result<Plan> {
        let (sys, certs) = (&ctx.project.system, &ctx.project.certs);
        let p = &ctx.project.config.parameters;
        let td = ctx.dwell_time();
        let source = ctx.source()?;
        let mut report = String::new();
        line(&mut report, "approach", "\"sequence\"");
        line(&mut report, "source", format!("[{}]", source.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(", ")));
        let horizon = match p.horizon {
            Some(n) => {
                let _ = writeln!(report, "# N fixed by the project; the precision is certified after the build");
                n
            }
            None => {
                let sol = solve_horizon_n(p.tau, p.epsilon, &source, &ctx.flows, certs, sys, td, p.max_horizon)?;
                let _ = writeln!(report, "# horizon condition at N: {}", sol.condition);
                if let Some(prev) = &sol.previous {
                    let _ = writeln!(report, "# horizon condition at N - 1: {prev}");
                }
                sol.horizon
            }
        };
        line(&mut report, "horizon", horizon);
        line(&mut report, "eta_bar_analytic", fmt17(eta_bar_analytic(horizon, &ctx.flows, &source, certs, td)?));
        let k = ctx.dwell_steps()?;
        let kind = if k.is_some() { ModelKind::SequenceDwell } else { ModelKind::Sequence };
        Ok(Plan { kind, tau: p.tau, epsilon: p.epsilon, eta: None, horizon: Some(horizon), source: Some(source), dwell_steps: k, report })
    }
}

impl ApproachStrategy for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }
    fn description(&self) -> &'static str {
        "whichever feasible approach needs fewer abstract states"
    }
    fn plan(&self, ctx: &SolveContext<'_>) -> anyhow::Result<Plan> {
        let (text, choice) = comparison(ctx)?;
        let choice = choice.context("neither approach is feasible at this precision")?;
        let mut plan = match choice {
            Approach::Grid => Grid.plan(ctx)?,
            Approach::Sequence => Sequence.plan(ctx)?,
        };
        plan.report = format!("{text}{}", plan.report);
        Ok(plan)
    }
}

/// Side-by-side feasibility and size of both approaches.
pub fn comparison(ctx: &SolveContext<'_>) -> anyhow::Result<(String, Option<Approach>)> {
    let p = &ctx.project.config.parameters;
    let source = ctx.source()?;
    let r = compare_approaches(&ctx.project.system, &ctx.project.certs, &ctx.flows, p.epsilon, ctx.dwell_time(), &source)?;
    let mut text = String::new();
    line(&mut text, "criterion_value", fmt17(r.criterion_value));
    line(&mut text, "criterion_favours_sequence", r.criterion_holds);
    for (name, side) in [("grid", &r.grid), ("sequence", &r.sequence)] {
        match side {
            SideReport::Feasible { parameter, count } => {
                line(&mut text, &format!("{name}_parameter"), fmt17(*parameter));
                line(&mut text, &format!("{name}_states"), fmt17(*count));
            }
            SideReport::Infeasible { reason } => line(&mut text, &format!("{name}_infeasible"), format!("{reason:?}")),
        }
    }
    line(&mut text, "recommendation", format!("\"{}\"", r.recommendation.map_or("none".into(), |a| a.to_string())));
    Ok((text, r.recommendation))
}

pub struct ApproachRegistry {
    entries: Vec<Box<dyn ApproachStrategy>>,
}

impl Default for ApproachRegistry {
    fn default() -> Self {
        let mut r = Self { entries: Vec::new() };
        r.register(Box::new(Auto));
        r.register(Box::new(Grid));
        r.register(Box::new(Sequence));
        r
    }
}

impl ApproachRegistry {
    /// Adds a strategy, replacing any with the same name.
    pub fn register(&mut self, s: Box<dyn ApproachStrategy>) {
        self.entries.retain(|e| e.name() != s.name());
        self.entries.push(s);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ApproachStrategy> {
        self.entries.iter().find(|e| e.name() == name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}
