use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use switchsym_core::abstraction::{
    initial_abstract_states, load_model, save_model, AbstractionRegistry, AnyModel, BuildOptions, BuildRequest,
    SeqBuildOptions,
};
use switchsym_core::flow::{periods_in, EulerMaruyama, FlowConfig, Scratch};
use switchsym_core::model::{load_system, validate_system};
use switchsym_core::numfmt::fmt17;
use switchsym_core::quantizer::epsilon_for_sequence;
use switchsym_core::synthesis::{
    load_controller, refine_controller, save_controller, synthesize, write_strategy_csv, Controller, RuntimeFactory,
};
use switchsym_core::validation::{estimate_eta_hat, monte_carlo_closed_loop, EtaHatConfig, MonteCarloConfig, PairSelection};
use tracing::{info, warn};

use crate::approach::{comparison, ApproachRegistry, Plan, SolveContext};
use crate::config::Project;
use crate::error::{CliResult, Stage, StageContext};
use crate::manifest::{artifact, sha256_hex, Manifest, Timing};

pub const MODEL_FILE: &str = "model.bin";
pub const CONTROLLER_FILE: &str = "controller.bin";

/// Settings shared by every project command.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

pub struct Session {
    pub project: Project,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Session {
    pub fn open(path: &Path, globals: &Globals) -> CliResult<Self> {
        let project = Project::load(path).stage(Stage::Config)?;
        let out_dir = globals
            .output_dir
            .clone()
            .or_else(|| {
                project.config.output_dir.as_ref().map(|d| {
                    if d.is_absolute() {
                        d.clone()
                    } else {
                        path.parent().unwrap_or(Path::new(".")).join(d)
                    }
                })
            })
            .unwrap_or_else(|| PathBuf::from("out").join(project.name()));
        fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display())).stage(Stage::Other)?;
        let seed = globals.seed.unwrap_or(project.config.validation.seed);
        Ok(Self { project, out_dir, seed })
    }

    fn write(&self, name: &str, text: &str) -> CliResult<()> {
        fs::write(self.out_dir.join(name), text).with_context(|| format!("writing {name}")).stage(Stage::Other)
    }

    fn create(&self, name: &str) -> CliResult<BufWriter<fs::File>> {
        let f = fs::File::create(self.out_dir.join(name)).with_context(|| format!("creating {name}")).stage(Stage::Other)?;
        Ok(BufWriter::new(f))
    }
}

pub fn validate_system_file(path: &Path) -> CliResult<Vec<String>> {
    let sys = load_system(path).with_context(|| format!("loading {}", path.display())).stage(Stage::Config)?;
    Ok(validate_system(&sys).iter().map(|d| d.to_string()).collect())
}

pub fn solve(s: &Session) -> CliResult<Plan> {
    let registry = ApproachRegistry::default();
    let name = &s.project.config.approach;
    let strategy = registry
        .get(name)
        .ok_or_else(|| anyhow!("unknown approach {name:?}; expected one of {:?}", registry.names()))
        .stage(Stage::Config)?;
    let ctx = SolveContext::new(&s.project).stage(Stage::Solve)?;
    let plan = strategy.plan(&ctx).stage(Stage::Solve)?;
    let mut text = String::new();
    let _ = writeln!(text, "tau = {}\nepsilon = {}", fmt17(plan.tau), fmt17(plan.epsilon));
    if let Some(k) = plan.dwell_steps {
        let _ = writeln!(text, "dwell_steps = {k}");
    }
    let _ = writeln!(text, "model_kind = \"{}\"", plan.kind.name());
    text.push_str(&plan.report);
    s.write("solve.txt", &text)?;
    Ok(plan)
}

pub fn compare(s: &Session) -> CliResult<String> {
    let ctx = SolveContext::new(&s.project).stage(Stage::Solve)?;
    let (text, _) = comparison(&ctx).stage(Stage::Solve)?;
    s.write("compare.txt", &text)?;
    Ok(text)
}

/// Builds the planned model. Sequence models carry the precision their exact
/// `η̄` certifies, or the requested one if that is larger.
pub fn build_abstraction(s: &Session, plan: &Plan) -> CliResult<(AnyModel, String)> {
    let sys = &s.project.system;
    let req = BuildRequest {
        system: sys,
        tau: plan.tau,
        epsilon: plan.epsilon,
        eta: plan.eta,
        horizon: plan.horizon,
        source: plan.source.clone(),
        dwell_steps: plan.dwell_steps,
        grid: BuildOptions { successor_mode: s.project.config.parameters.successors.into(), ..BuildOptions::default() },
        seq: SeqBuildOptions::default(),
    };
    let registry = AbstractionRegistry::default();
    let builder = registry.get(plan.kind.name()).stage(Stage::Abstract)?;
    let mut model = builder.build(&req).stage(Stage::Abstract)?;
    let mut text = String::new();
    if let AnyModel::Sequence(m) = &mut model {
        let certified = epsilon_for_sequence(m.horizon(), plan.tau, m.eta_bar(), m.source(), &s.project.certs, sys, sys.dwell_time)
            .stage(Stage::Abstract)?;
        let _ = writeln!(text, "eta_bar_exact = {}", fmt17(m.eta_bar()));
        let _ = writeln!(text, "epsilon_certified = {}", fmt17(certified));
        if certified > plan.epsilon {
            warn!(requested = plan.epsilon, certified, "N is too short for the requested precision; using the certified one");
        }
        m.set_epsilon(certified.max(plan.epsilon));
    }
    let m = model.as_model();
    let _ = writeln!(text, "kind = \"{}\"\nstates = {}\ninputs = {}\nepsilon = {}", m.kind().name(), m.num_states(), m.num_inputs(), fmt17(m.epsilon()));
    Ok((model, text))
}

pub fn abstract_model(s: &Session, plan: &Plan) -> CliResult<AnyModel> {
    let (model, text) = build_abstraction(s, plan)?;
    save_model(&model, s.out_dir.join(MODEL_FILE)).stage(Stage::Abstract)?;
    s.write("model.txt", &text)?;
    Ok(model)
}

pub fn load_or(s: &Session, explicit: Option<&Path>, default: &str) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| s.out_dir.join(default))
}

pub fn read_model(path: &Path) -> CliResult<AnyModel> {
    load_model(path).with_context(|| format!("loading {} (run `abstract` first?)", path.display())).stage(Stage::Abstract)
}

pub fn read_controller(path: &Path) -> CliResult<Controller> {
    load_controller(path)
        .with_context(|| format!("loading {} (run `synthesize` first?)", path.display()))
        .stage(Stage::Synthesize)
}

pub fn synthesize_controller(s: &Session, model: &AnyModel) -> CliResult<Controller> {
    let ctrl = synthesize(model, &s.project.config.spec).stage(Stage::Synthesize)?;
    if ctrl.winning.is_empty() {
        return Err(anyhow!(
            "the winning set is empty: no abstract state can enforce the {} objective",
            s.project.config.spec.kind.name()
        ))
        .stage(Stage::Synthesize);
    }
    save_controller(&ctrl, s.out_dir.join(CONTROLLER_FILE)).stage(Stage::Synthesize)?;
    let mut text = format!(
        "objective = \"{}\"\nstates = {}\nwinning = {}\n",
        ctrl.spec.kind.name(),
        ctrl.num_states(),
        ctrl.winning.count()
    );
    if let Some(x0) = &s.project.config.validation.x0 {
        let init = initial_abstract_states(model, x0, model.as_model().epsilon(), &s.project.certs, &s.project.system)
            .stage(Stage::Synthesize)?;
        let winning = init.iter().filter(|&&q| ctrl.winning.contains(q)).count();
        let _ = writeln!(text, "initial_states = {}\ninitial_states_winning = {winning}", init.len());
    }
    s.write("synthesis.txt", &text)?;
    if s.project.config.output.strategy_csv {
        let w = s.create("strategy.csv")?;
        write_strategy_csv(&ctrl, model.as_model(), w).stage(Stage::Other)?;
    }
    Ok(ctrl)
}

fn refine<'a>(s: &Session, model: &'a AnyModel, ctrl: &'a Controller) -> CliResult<impl RuntimeFactory + 'a> {
    let x0 = s.project.x0().stage(Stage::Config)?;
    refine_controller(ctrl, model, x0, &s.project.certs, &s.project.system).stage(Stage::Simulate)
}

/// A few closed-loop sample paths: `path,t,x1..xn,mode` with 1-based modes
/// (the mode applied from `t` on; empty on the last row).
pub fn simulate(s: &Session, model: &AnyModel, ctrl: &Controller) -> CliResult<usize> {
    let strategy = refine(s, model, ctrl)?;
    let sys = &s.project.system;
    let tau = model.as_model().tau();
    let x0 = s.project.x0().stage(Stage::Config)?;
    let periods = periods_in(s.project.sim_horizon(), tau).stage(Stage::Simulate)?;
    let em = EulerMaruyama::new(sys, tau, &FlowConfig::default(), s.seed).stage(Stage::Simulate)?;
    let mut w = s.create("paths.csv")?;
    let header: Vec<String> = (1..=sys.n).map(|i| format!("x{i}")).collect();
    let io = |e: std::io::Error| anyhow::Error::from(e);
    writeln!(w, "path,t,{},mode", header.join(",")).map_err(io).stage(Stage::Other)?;
    let mut faults = 0;
    for path in 0..s.project.config.validation.sample_paths {
        let mut rt = strategy.instantiate();
        let mut scratch = Scratch::default();
        let mut x = x0.to_vec();
        for k in 0..=periods {
            let coords: Vec<String> = x.iter().map(|v| fmt17(*v)).collect();
            let t = fmt17(k as f64 * tau);
            if k == periods {
                writeln!(w, "{path},{t},{},", coords.join(",")).map_err(io).stage(Stage::Other)?;
                break;
            }
            let (p, fault) = rt.next_mode(&x);
            faults += usize::from(fault.is_some());
            writeln!(w, "{path},{t},{},{}", coords.join(","), p + 1).map_err(io).stage(Stage::Other)?;
            em.advance(p, &mut x, path as u64, k as u64, &mut scratch).stage(Stage::Simulate)?;
        }
    }
    w.flush().map_err(io).stage(Stage::Other)?;
    if faults > 0 {
        warn!(faults, "runtime faults along the sample paths (last mode held)");
    }
    Ok(faults)
}

pub fn validate(s: &Session, model: &AnyModel, ctrl: &Controller) -> CliResult<String> {
    let strategy = refine(s, model, ctrl)?;
    let v = &s.project.config.validation;
    let x0 = s.project.x0().stage(Stage::Config)?;
    let cfg = MonteCarloConfig { runs: v.runs, horizon: s.project.sim_horizon(), seed: s.seed, flow: FlowConfig::default() };
    let region = s.project.distance_region();
    let report = monte_carlo_closed_loop(&s.project.system, &strategy, x0, model.as_model().tau(), &region, &cfg)
        .stage(Stage::Simulate)?;
    let io = |e: std::io::Error| anyhow::Error::from(e);
    let mut w = s.create("distances.csv")?;
    report.write_csv(&mut w).and_then(|_| w.flush()).map_err(io).stage(Stage::Other)?;
    let mut w = s.create("runs.csv")?;
    report.write_runs_csv(&mut w).and_then(|_| w.flush()).map_err(io).stage(Stage::Other)?;
    let mut summary = report.summary();
    let _ = writeln!(summary, "epsilon = {}", fmt17(model.as_model().epsilon()));
    if let (Some(samples), AnyModel::Sequence(m)) = (v.eta_hat_samples, model) {
        info!(samples, "estimating η̂");
        let cfg = EtaHatConfig {
            samples,
            seed: s.seed,
            confidence: v.confidence,
            pairs: PairSelection::WorstNominal(v.eta_hat_pairs),
            flow: FlowConfig::default(),
        };
        let est = estimate_eta_hat(m, &s.project.system, &cfg).stage(Stage::Simulate)?;
        let _ = writeln!(
            summary,
            "eta_hat = {}\neta_hat_half_width = {}\neta_hat_samples = {}\neta_bar_exact = {}",
            fmt17(est.eta_hat),
            fmt17(est.half_width),
            est.samples,
            fmt17(m.eta_bar())
        );
    }
    s.write("validation.txt", &summary)?;
    Ok(summary)
}

/// solve → abstract → synthesize → simulate → validate, then a manifest of
/// every artifact.
pub fn pipeline(s: &Session, config_path: &Path) -> CliResult<Manifest> {
    let mut timings = Vec::new();
    let mut clock = |stage: &str, start: Instant| timings.push(Timing { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
    let t = Instant::now();
    let plan = solve(s)?;
    clock("solve", t);
    let t = Instant::now();
    let model = abstract_model(s, &plan)?;
    clock("abstract", t);
    let t = Instant::now();
    let ctrl = synthesize_controller(s, &model)?;
    clock("synthesize", t);
    let t = Instant::now();
    simulate(s, &model, &ctrl)?;
    clock("simulate", t);
    let t = Instant::now();
    validate(s, &model, &ctrl)?;
    clock("validate", t);

    let mut names = vec!["solve.txt", "model.txt", MODEL_FILE, "synthesis.txt", CONTROLLER_FILE, "paths.csv", "distances.csv", "runs.csv", "validation.txt"];
    if s.project.config.output.strategy_csv {
        names.push("strategy.csv");
    }
    let artifacts = names.iter().map(|n| artifact(&s.out_dir, n)).collect::<anyhow::Result<Vec<_>>>().stage(Stage::Other)?;
    let config_bytes = fs::read(config_path).stage(Stage::Other)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        project: s.project.name(),
        config_sha256: sha256_hex(&config_bytes),
        seed: s.seed,
        threads: rayon::current_num_threads(),
        timings,
        artifacts,
    };
    manifest.write(&s.out_dir).stage(Stage::Other)?;
    Ok(manifest)
}

pub fn ensure_winning(ctrl: &Controller) -> anyhow::Result<()> {
    if ctrl.winning.is_empty() {
        bail!("controller has an empty winning set");
    }
    Ok(())
}
