//! Command-line workflow: solve parameters, build an abstraction, synthesize
//! a controller, and validate it by simulation, writing every artifact to an
//! output directory.
//!
//! Exit codes: 0 success, 1 I/O or usage, 2 configuration, 3 solve,
//! 4 abstraction, 5 synthesis, 6 simulation or validation, 7 manifest
//! verification.

pub mod approach;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{Globals, Session, CONTROLLER_FILE, MODEL_FILE};
use error::{CliResult, Stage, StageContext};

#[derive(Debug, Parser)]
#[command(name = "switchsym", version, about = "Symbolic controller synthesis for stochastic switched systems")]
pub struct Cli {
    /// Seed for every random stream (overrides validation.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Where artifacts go (overrides output_dir in the project file).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a system file and list every violated invariant.
    ValidateSystem { system: PathBuf },
    /// Solve for η or N and report every inequality.
    Solve { project: PathBuf },
    /// Compare the grid and sequence approaches.
    Compare { project: PathBuf },
    /// Build the abstraction and save it.
    Abstract { project: PathBuf },
    /// Synthesize a controller for a saved model.
    Synthesize {
        project: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write closed-loop sample paths.
    Simulate {
        project: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Monte Carlo distance statistics (and η̂ for sequence models).
    Validate {
        project: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Every stage end to end, plus a checksummed manifest.
    Pipeline { project: PathBuf },
    /// Recompute the checksums listed in a manifest.
    VerifyManifest { dir: PathBuf },
}

impl Cli {
    fn globals(&self) -> Globals {
        Globals { seed: self.seed, threads: self.threads, output_dir: self.output_dir.clone() }
    }
}

/// Runs one command; returns the text to print on success.
pub fn run(cli: Cli) -> CliResult<String> {
    if let Some(t) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let g = cli.globals();
    match &cli.command {
        Command::ValidateSystem { system } => {
            let diags = commands::validate_system_file(system)?;
            if diags.is_empty() {
                Ok("system is valid\n".into())
            } else {
                Err(anyhow::anyhow!("{} problem(s): {}", diags.len(), diags.join("; "))).stage(Stage::Config)
            }
        }
        Command::Solve { project } => {
            let s = Session::open(project, &g)?;
            let plan = commands::solve(&s)?;
            Ok(format!("model_kind = \"{}\"\n{}", plan.kind.name(), plan.report))
        }
        Command::Compare { project } => commands::compare(&Session::open(project, &g)?),
        Command::Abstract { project } => {
            let s = Session::open(project, &g)?;
            let plan = commands::solve(&s)?;
            let model = commands::abstract_model(&s, &plan)?;
            Ok(format!("{} states written to {}\n", model.as_model().num_states(), s.out_dir.join(MODEL_FILE).display()))
        }
        Command::Synthesize { project, model } => {
            let s = Session::open(project, &g)?;
            let model = commands::read_model(&commands::load_or(&s, model.as_deref(), MODEL_FILE))?;
            let ctrl = commands::synthesize_controller(&s, &model)?;
            Ok(format!("{} winning states, controller written to {}\n", ctrl.winning.count(), s.out_dir.join(CONTROLLER_FILE).display()))
        }
        Command::Simulate { project, model, controller } => {
            let s = Session::open(project, &g)?;
            let model = commands::read_model(&commands::load_or(&s, model.as_deref(), MODEL_FILE))?;
            let ctrl = commands::read_controller(&commands::load_or(&s, controller.as_deref(), CONTROLLER_FILE))?;
            commands::ensure_winning(&ctrl).stage(Stage::Simulate)?;
            let faults = commands::simulate(&s, &model, &ctrl)?;
            Ok(format!("sample paths written to {} ({faults} runtime faults)\n", s.out_dir.join("paths.csv").display()))
        }
        Command::Validate { project, model, controller } => {
            let s = Session::open(project, &g)?;
            let model = commands::read_model(&commands::load_or(&s, model.as_deref(), MODEL_FILE))?;
            let ctrl = commands::read_controller(&commands::load_or(&s, controller.as_deref(), CONTROLLER_FILE))?;
            commands::ensure_winning(&ctrl).stage(Stage::Simulate)?;
            commands::validate(&s, &model, &ctrl)
        }
        Command::Pipeline { project } => {
            let s = Session::open(project, &g)?;
            let manifest = commands::pipeline(&s, project)?;
            Ok(format!("{} artifacts in {}\n", manifest.artifacts.len(), s.out_dir.display()))
        }
        Command::VerifyManifest { dir } => {
            let n = manifest::verify(dir).stage(Stage::Manifest)?;
            Ok(format!("{n} artifacts verified\n"))
        }
    }
}
