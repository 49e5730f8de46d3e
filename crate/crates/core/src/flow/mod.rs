//! Nominal flows (RK4, with a matrix-exponential reference for affine modes)
//! and Euler–Maruyama sample paths of the switched SDE.

mod ode;
mod sde;

pub use ode::{affine_flow_exact, nominal_flow, FlowMap};
pub use sde::{period_rng, periods_in, sde_sample_path, EulerMaruyama, SamplePath, Scratch};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowConfig {
    pub ode_substeps_per_tau: usize,
    pub sde_substeps_per_tau: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { ode_substeps_per_tau: 64, sde_substeps_per_tau: 100 }
    }
}
