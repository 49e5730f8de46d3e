use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{periods_in, EulerMaruyama, FlowConfig, Scratch};
use crate::model::{Region, SwitchedSystem};
use crate::numfmt::fmt17;
use crate::synthesis::{RuntimeFactory, RuntimeFault};

#[derive(Clone, Debug)]
pub struct MonteCarloConfig {
    pub runs: usize,
    /// Simulated time `T`, a multiple of `τ`.
    pub horizon: f64,
    pub seed: u64,
    pub flow: FlowConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub max_distance: f64,
    pub terminal_distance: f64,
    /// Mean distance over the sampling instants.
    pub time_average: f64,
    /// First sampling instant at distance 0.
    pub first_entry: Option<f64>,
    pub fault: Option<(f64, RuntimeFault)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub runs: usize,
    pub seed: u64,
    pub time_grid: Vec<f64>,
    pub mean_distance: Vec<f64>,
    pub stderr: Vec<f64>,
    pub per_run: Vec<RunSummary>,
    /// Modes applied along the first trajectory.
    pub first_run_modes: Vec<usize>,
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl ValidationReport {
    pub fn terminal_mean(&self) -> (f64, f64) {
        (*self.mean_distance.last().expect("nonempty"), *self.stderr.last().expect("nonempty"))
    }

    /// Mean over runs of each run's time-averaged distance, with its standard error.
    pub fn time_average(&self) -> (f64, f64) {
        mean_stderr(self.per_run.iter().map(|r| r.time_average))
    }

    pub fn fault_count(&self) -> usize {
        self.per_run.iter().filter(|r| r.fault.is_some()).count()
    }

    /// `t,mean_distance,stderr`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,mean_distance,stderr")?;
        for i in 0..self.time_grid.len() {
            writeln!(w, "{},{},{}", fmt17(self.time_grid[i]), fmt17(self.mean_distance[i]), fmt17(self.stderr[i]))?;
        }
        Ok(())
    }

    /// `run,max_distance,terminal_distance,time_average,first_entry,fault_time,fault`.
    pub fn write_runs_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "run,max_distance,terminal_distance,time_average,first_entry,fault_time,fault")?;
        for (i, r) in self.per_run.iter().enumerate() {
            let entry = r.first_entry.map(fmt17).unwrap_or_default();
            let (ft, f) = r.fault.map(|(t, f)| (fmt17(t), f.to_string())).unwrap_or_default();
            writeln!(
                w,
                "{i},{},{},{},{entry},{ft},{f}",
                fmt17(r.max_distance),
                fmt17(r.terminal_distance),
                fmt17(r.time_average)
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let (tm, ts) = self.terminal_mean();
        let (am, as_) = self.time_average();
        let reached = self.per_run.iter().filter(|r| r.first_entry.is_some()).count();
        format!(
            "runs = {}\nseed = {}\nterminal_mean_distance = {}\nterminal_stderr = {}\ntime_average_distance = {}\ntime_average_stderr = {}\nruns_entering_target = {reached}\nruns_with_fault = {}\n",
            self.runs,
            self.seed,
            fmt17(tm),
            fmt17(ts),
            fmt17(am),
            fmt17(as_),
            self.fault_count()
        )
    }
}

struct Trace {
    distances: Vec<f64>,
    modes: Vec<usize>,
    fault: Option<(f64, RuntimeFault)>,
}

/// Simulates `runs` closed-loop Euler–Maruyama paths from `x0` and reports the
/// infinity-norm distance to `target` at every sampling instant.
pub fn monte_carlo_closed_loop(
    sys: &SwitchedSystem,
    strategy: &dyn RuntimeFactory,
    x0: &[f64],
    tau: f64,
    target: &Region,
    cfg: &MonteCarloConfig,
) -> Result<ValidationReport> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("at least one run is needed".into()));
    }
    if x0.len() != sys.n {
        return Err(Error::Dimension(format!("x0 has {} entries, expected {}", x0.len(), sys.n)));
    }
    let periods = periods_in(cfg.horizon, tau)?;
    let em = EulerMaruyama::new(sys, tau, &cfg.flow, cfg.seed)?;
    let traces: Vec<Trace> = (0..cfg.runs)
        .into_par_iter()
        .map(|traj| -> Result<Trace> {
            let mut rt = strategy.instantiate();
            let mut scratch = Scratch::default();
            let mut x = x0.to_vec();
            let mut distances = Vec::with_capacity(periods + 1);
            let mut modes = Vec::with_capacity(periods);
            let mut fault = None;
            distances.push(target.distance(&x));
            for k in 0..periods {
                let (p, f) = rt.next_mode(&x);
                if let (None, Some(f)) = (fault, f) {
                    fault = Some((k as f64 * tau, f));
                }
                em.advance(p, &mut x, traj as u64, k as u64, &mut scratch)?;
                modes.push(p);
                distances.push(target.distance(&x));
            }
            Ok(Trace { distances, modes, fault })
        })
        .collect::<Result<_>>()?;
    let time_grid: Vec<f64> = (0..=periods).map(|k| k as f64 * tau).collect();
    let (mean_distance, stderr): (Vec<f64>, Vec<f64>) =
        (0..=periods).map(|k| mean_stderr(traces.iter().map(|t| t.distances[k]))).unzip();
    let per_run = traces
        .iter()
        .map(|t| RunSummary {
            max_distance: t.distances.iter().copied().fold(0.0, f64::max),
            terminal_distance: *t.distances.last().expect("nonempty"),
            time_average: t.distances.iter().sum::<f64>() / t.distances.len() as f64,
            first_entry: t.distances.iter().position(|&d| d == 0.0).map(|k| time_grid[k]),
            fault: t.fault,
        })
        .collect();
    Ok(ValidationReport {
        runs: cfg.runs,
        seed: cfg.seed,
        time_grid,
        mean_distance,
        stderr,
        per_run,
        first_run_modes: traces[0].modes.clone(),
    })
}
