use nalgebra::{DMatrix, DVector};

use super::FlowConfig;
use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::model::{ModeDynamics, SwitchedSystem};

/// Fourth-order Runge–Kutta approximation of the nominal flow of mode `p`
/// from `x` over `tau`, using `cfg.ode_substeps_per_tau` steps.
pub fn nominal_flow(sys: &SwitchedSystem, x: &[f64], p: usize, tau: f64, cfg: &FlowConfig) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("flow time {tau} must be positive")));
    }
    let mode = sys.mode(p)?;
    let mut y = x.to_vec();
    rk4_integrate(mode, p, &mut y, tau, cfg.ode_substeps_per_tau)?;
    Ok(y)
}

pub(crate) fn rk4_integrate(mode: &ModeDynamics, p: usize, y: &mut [f64], tau: f64, steps: usize) -> Result<()> {
    let n = y.len();
    let h = tau / steps as f64;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for step in 0..steps {
        mode.drift_into(y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        mode.drift_into(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        mode.drift_into(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        mode.drift_into(&tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { mode: p, t: h * (step + 1) as f64 });
        }
    }
    Ok(())
}

/// `e^{At}x + (∫₀ᵗ e^{As}ds)b` from the exponential of the augmented matrix.
pub fn affine_flow_exact(a: &DMatrix<f64>, b: &DVector<f64>, x: &[f64], t: f64) -> Vec<f64> {
    let n = b.len();
    let e = expm(&(augmented(a, b) * t));
    (0..n)
        .map(|i| (0..n).map(|j| e[(i, j)] * x[j]).sum::<f64>() + e[(i, n)])
        .collect()
}

fn augmented(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = b.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, 1)).copy_from(b);
    m
}

#[derive(Clone, Debug)]
enum StepKind {
    /// One sampling period of RK4 on an affine field is itself affine: `x ↦ Φx + c`.
    Affine { phi: Vec<f64>, c: Vec<f64> },
    Stepped,
}

/// Sampled nominal flow `x ↦ ξ̄_{xp}(τ)` for every mode, with affine modes
/// precomputed as a single matrix–vector product.
#[derive(Clone, Debug)]
pub struct FlowMap<'a> {
    sys: &'a SwitchedSystem,
    tau: f64,
    substeps: usize,
    kinds: Vec<StepKind>,
}

impl<'a> FlowMap<'a> {
    pub fn new(sys: &'a SwitchedSystem, tau: f64, cfg: &FlowConfig) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("sampling time {tau} must be positive")));
        }
        let n = sys.n;
        let steps = cfg.ode_substeps_per_tau;
        let h = tau / steps as f64;
        let kinds = sys
            .modes
            .iter()
            .map(|mode| match mode.affine_parts() {
                Some((a, b)) => {
                    let hm = augmented(a, b) * h;
                    let id = DMatrix::<f64>::identity(n + 1, n + 1);
                    let hm2 = &hm * &hm;
                    let hm3 = &hm2 * &hm;
                    let hm4 = &hm3 * &hm;
                    let one = id.clone() + &hm + hm2 / 2.0 + hm3 / 6.0 + hm4 / 24.0;
                    let mut t = id;
                    for _ in 0..steps {
                        t = &one * &t;
                    }
                    let phi = (0..n * n).map(|k| t[(k / n, k % n)]).collect();
                    let c = (0..n).map(|i| t[(i, n)]).collect();
                    StepKind::Affine { phi, c }
                }
                None => StepKind::Stepped,
            })
            .collect();
        Ok(Self { sys, tau, substeps: steps, kinds })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n(&self) -> usize {
        self.sys.n
    }

    pub fn system(&self) -> &SwitchedSystem {
        self.sys
    }

    pub fn apply(&self, p: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kinds[p] {
            StepKind::Affine { phi, c } => {
                let n = c.len();
                for i in 0..n {
                    let row = &phi[i * n..(i + 1) * n];
                    let mut acc = c[i];
                    for j in 0..n {
                        acc += row[j] * x[j];
                    }
                    out[i] = acc;
                }
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { mode: p, t: self.tau });
                }
                Ok(())
            }
            StepKind::Stepped => {
                out.copy_from_slice(x);
                rk4_integrate(&self.sys.modes[p], p, out, self.tau, self.substeps)
            }
        }
    }

    pub fn flow(&self, p: usize, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.apply(p, x, &mut out)?;
        Ok(out)
    }

    /// Flow through a mode sequence, one sampling period per entry.
    pub fn flow_sequence(&self, modes: &[usize], x: &[f64]) -> Result<Vec<f64>> {
        let mut cur = x.to_vec();
        let mut next = vec![0.0; x.len()];
        for &p in modes {
            self.apply(p, &cur, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }
}
