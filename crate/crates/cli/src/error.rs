use std::fmt;

/// Pipeline stage a failure belongs to; each maps to its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Solve,
    Abstract,
    Synthesize,
    Simulate,
    Manifest,
    Other,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Other => 1,
            Stage::Config => 2,
            Stage::Solve => 3,
            Stage::Abstract => 4,
            Stage::Synthesize => 5,
            Stage::Simulate => 6,
            Stage::Manifest => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Solve => "solve",
            Stage::Abstract => "abstract",
            Stage::Synthesize => "synthesize",
            Stage::Simulate => "simulate",
            Stage::Manifest => "manifest",
            Stage::Other => "io",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub source: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {:#}", self.stage.name(), self.source)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with the stage it came from.
pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> CliResult<T> {
        self.map_err(|e| CliError { stage, source: e.into() })
    }
}
