use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{FlowConfig, FlowMap};
use crate::error::{Error, Result};
use crate::model::SwitchedSystem;
use crate::numfmt::fmt17;

/// Independent normal stream for one sampling period of one trajectory.
/// Streams are keyed by `(seed, trajectory, period)` only, so results do not
/// depend on which thread simulates which trajectory.
pub fn period_rng(seed: u64, trajectory: u64, period: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory);
    rng.set_word_pos((period as u128) << 32);
    rng
}

/// Euler–Maruyama integrator for one sampling period at a time. Modes
/// without diffusion take the nominal flow, so a noise-free system
/// reproduces the ODE solution exactly.
#[derive(Clone, Debug)]
pub struct EulerMaruyama<'a> {
    sys: &'a SwitchedSystem,
    tau: f64,
    substeps: usize,
    seed: u64,
    flows: FlowMap<'a>,
}

impl<'a> EulerMaruyama<'a> {
    pub fn new(sys: &'a SwitchedSystem, tau: f64, cfg: &FlowConfig, seed: u64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("sampling time {tau} must be positive")));
        }
        let flows = FlowMap::new(sys, tau, cfg)?;
        Ok(Self { sys, tau, substeps: cfg.sde_substeps_per_tau, seed, flows })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn system(&self) -> &SwitchedSystem {
        self.sys
    }

    /// Advances `x` by one period under mode `p` using the stream of
    /// `(trajectory, period)`.
    pub fn advance(&self, p: usize, x: &mut [f64], trajectory: u64, period: u64, scratch: &mut Scratch) -> Result<()> {
        let mode = self.sys.mode(p)?;
        let n = self.sys.n;
        let q = self.sys.q_hat;
        scratch.ensure(n, q);
        if mode.has_zero_diffusion() {
            self.flows.apply(p, x, &mut scratch.next)?;
            x.copy_from_slice(&scratch.next);
            return Ok(());
        }
        let dt = self.tau / self.substeps as f64;
        let sq = dt.sqrt();
        let mut rng = period_rng(self.seed, trajectory, period);
        for step in 0..self.substeps {
            for w in scratch.dw.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = z * sq;
            }
            mode.drift_into(x, &mut scratch.f);
            for i in 0..n {
                scratch.next[i] = x[i] + scratch.f[i] * dt;
            }
            mode.add_diffusion_increment(x, &scratch.dw, &mut scratch.next, &mut scratch.g);
            x.copy_from_slice(&scratch.next);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { mode: p, t: (period as f64) * self.tau + dt * (step + 1) as f64 });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Scratch {
    f: Vec<f64>,
    next: Vec<f64>,
    dw: Vec<f64>,
    g: Vec<f64>,
}

impl Scratch {
    fn ensure(&mut self, n: usize, q: usize) {
        if self.f.len() != n || self.dw.len() != q {
            self.f = vec![0.0; n];
            self.next = vec![0.0; n];
            self.dw = vec![0.0; q];
            self.g = vec![0.0; n * q];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl SamplePath {
    /// CSV with header `t,x1,…,xn`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(fmt17(*t)).chain(x.iter().map(|v| fmt17(*v))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Euler–Maruyama path under an open-loop switching sequence, returned at the
/// sampling instants `0, τ, …, T`.
#[allow(clippy::too_many_arguments)]
pub fn sde_sample_path(
    sys: &SwitchedSystem,
    x0: &[f64],
    switching: &[usize],
    tau: f64,
    horizon: f64,
    seed: u64,
    trajectory: u64,
    cfg: &FlowConfig,
) -> Result<SamplePath> {
    let steps = periods_in(horizon, tau)?;
    if switching.len() < steps {
        return Err(Error::InvalidArgument(format!(
            "switching sequence has {} entries, horizon needs {steps}",
            switching.len()
        )));
    }
    let em = EulerMaruyama::new(sys, tau, cfg, seed)?;
    let mut scratch = Scratch::default();
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    for (k, &p) in switching.iter().take(steps).enumerate() {
        em.advance(p, &mut x, trajectory, k as u64, &mut scratch)?;
        times.push((k + 1) as f64 * tau);
        states.push(x.clone());
    }
    Ok(SamplePath { times, states })
}

/// Number of whole periods in `horizon`; the horizon must be a multiple of `tau`.
pub fn periods_in(horizon: f64, tau: f64) -> Result<usize> {
    let k = (horizon / tau).round();
    if !(k >= 0.0) || (k * tau - horizon).abs() > 1e-9 * horizon.abs().max(tau) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is not a multiple of τ={tau}")));
    }
    Ok(k as usize)
}
