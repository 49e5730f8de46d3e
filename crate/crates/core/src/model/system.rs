use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::domain::BoxSet;
use crate::error::{Error, Result};
use crate::linalg::{induced_inf_norm, inf_norm};

/// A vector field `ℝⁿ → ℝⁿ` supplied by the caller.
pub trait VectorField: Send + Sync {
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

/// A diffusion term `ℝⁿ → ℝ^{n×q̂}`; `out` is column-major with `q̂` columns.
pub trait DiffusionField: Send + Sync {
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Clone)]
pub enum Drift {
    Affine { a: DMatrix<f64>, b: DVector<f64> },
    General { field: Arc<dyn VectorField>, lipschitz: f64 },
}

#[derive(Clone)]
pub enum Diffusion {
    /// `g(x) = [σ₁x … σ_q̂x]`.
    Linear { sigmas: Vec<DMatrix<f64>> },
    General { field: Arc<dyn DiffusionField>, q_hat: usize },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Affine { a, b } => f.debug_struct("Affine").field("a", a).field("b", b).finish(),
            Drift::General { lipschitz, .. } => {
                f.debug_struct("General").field("lipschitz", lipschitz).finish_non_exhaustive()
            }
        }
    }
}

impl fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusion::Linear { sigmas } => f.debug_struct("Linear").field("sigmas", sigmas).finish(),
            Diffusion::General { q_hat, .. } => {
                f.debug_struct("General").field("q_hat", q_hat).finish_non_exhaustive()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModeDynamics {
    pub drift: Drift,
    pub diffusion: Diffusion,
    /// Declared Lipschitz constant `Z_p` of the diffusion term.
    pub lipschitz_diffusion: f64,
}

impl ModeDynamics {
    /// Affine drift with linear diffusion; `Z_p` is computed from the sigmas.
    pub fn affine(a: DMatrix<f64>, b: DVector<f64>, sigmas: Vec<DMatrix<f64>>) -> Result<Self> {
        let z = if sigmas.is_empty() { 0.0 } else { lipschitz_of_linear_diffusion(&sigmas)? };
        Ok(Self { drift: Drift::Affine { a, b }, diffusion: Diffusion::Linear { sigmas }, lipschitz_diffusion: z })
    }

    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Affine { a, b } => {
                let n = b.len();
                for i in 0..n {
                    let mut acc = b[i];
                    for j in 0..n {
                        acc += a[(i, j)] * x[j];
                    }
                    out[i] = acc;
                }
            }
            Drift::General { field, .. } => field.eval(x, out),
        }
    }

    pub fn q_hat(&self) -> usize {
        match &self.diffusion {
            Diffusion::Linear { sigmas } => sigmas.len(),
            Diffusion::General { q_hat, .. } => *q_hat,
        }
    }

    /// Writes `g(x)` column-major into `out` (length `n·q̂`).
    pub fn diffusion_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.diffusion {
            Diffusion::Linear { sigmas } => {
                let n = x.len();
                for (c, s) in sigmas.iter().enumerate() {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += s[(i, j)] * x[j];
                        }
                        out[c * n + i] = acc;
                    }
                }
            }
            Diffusion::General { field, .. } => field.eval(x, out),
        }
    }

    /// Adds `g(x)·dw` to `out`.
    pub fn add_diffusion_increment(&self, x: &[f64], dw: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let n = x.len();
        match &self.diffusion {
            Diffusion::Linear { sigmas } => {
                for (s, w) in sigmas.iter().zip(dw) {
                    if *w == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += s[(i, j)] * x[j];
                        }
                        out[i] += acc * w;
                    }
                }
            }
            Diffusion::General { field, .. } => {
                field.eval(x, scratch);
                for (c, w) in dw.iter().enumerate() {
                    for i in 0..n {
                        out[i] += scratch[c * n + i] * w;
                    }
                }
            }
        }
    }

    /// True when the diffusion term is structurally zero.
    pub fn has_zero_diffusion(&self) -> bool {
        match &self.diffusion {
            Diffusion::Linear { sigmas } => sigmas.iter().all(|s| s.iter().all(|v| *v == 0.0)),
            Diffusion::General { .. } => self.lipschitz_diffusion == 0.0,
        }
    }

    pub fn affine_parts(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        match &self.drift {
            Drift::Affine { a, b } => Some((a, b)),
            Drift::General { .. } => None,
        }
    }

    pub fn linear_sigmas(&self) -> Option<&[DMatrix<f64>]> {
        match &self.diffusion {
            Diffusion::Linear { sigmas } => Some(sigmas),
            Diffusion::General { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SwitchedSystem {
    pub n: usize,
    pub q_hat: usize,
    pub modes: Vec<ModeDynamics>,
    pub domain: BoxSet,
    pub dwell_time: Option<f64>,
}

impl SwitchedSystem {
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, p: usize) -> Result<&ModeDynamics> {
        self.modes
            .get(p)
            .ok_or_else(|| Error::InvalidArgument(format!("mode index {p} out of range (m={})", self.modes.len())))
    }

    pub fn is_affine(&self) -> bool {
        self.modes.iter().all(|m| m.affine_parts().is_some())
    }

    pub fn has_zero_diffusion(&self) -> bool {
        self.modes.iter().all(ModeDynamics::has_zero_diffusion)
    }

    /// Fails with the collected diagnostics if any invariant is violated.
    pub fn validated(self) -> Result<Self> {
        let diags = validate_system(&self);
        if diags.is_empty() {
            Ok(self)
        } else {
            let msg: Vec<String> = diags.iter().map(ToString::to_string).collect();
            Err(Error::InvalidArgument(msg.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub mode: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Some(p) => write!(f, "mode {}: {}", p + 1, self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// `Z_p = maxᵢ ‖σᵢ‖∞` (induced infinity norm).
pub fn lipschitz_of_linear_diffusion(sigmas: &[DMatrix<f64>]) -> Result<f64> {
    let first = sigmas
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one diffusion matrix is required".into()))?;
    let n = first.nrows();
    let mut z: f64 = 0.0;
    for s in sigmas {
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Dimension(format!(
                "diffusion matrix is {}x{}, expected {n}x{n}",
                s.nrows(),
                s.ncols()
            )));
        }
        z = z.max(induced_inf_norm(s));
    }
    Ok(z)
}

pub const LIPSCHITZ_AUDIT_PAIRS: usize = 1000;
const AUDIT_SEED: u64 = 0x5eed_1a55;

/// Checks every structural invariant; one diagnostic per violation.
pub fn validate_system(sys: &SwitchedSystem) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let global = |m: &str| Diagnostic { mode: None, message: m.to_string() };
    if sys.modes.is_empty() {
        diags.push(global("no modes"));
    }
    if sys.n == 0 {
        diags.push(global("state dimension is zero"));
    }
    if sys.domain.boxes.is_empty() {
        diags.push(global("domain is empty"));
    }
    for (i, b) in sys.domain.boxes.iter().enumerate() {
        if b.dim() != sys.n {
            diags.push(global(&format!("domain box {i} has dimension {}, expected {}", b.dim(), sys.n)));
        } else if !(b.span() > 0.0) {
            diags.push(global(&format!("domain box {i} has non-positive span")));
        }
    }
    if let Some(td) = sys.dwell_time {
        if !(td > 0.0 && td.is_finite()) {
            diags.push(global("dwell time must be positive"));
        }
    }
    for (p, mode) in sys.modes.iter().enumerate() {
        let mut push = |m: String| diags.push(Diagnostic { mode: Some(p), message: m });
        match &mode.drift {
            Drift::Affine { a, b } => {
                if a.nrows() != sys.n || a.ncols() != sys.n || b.len() != sys.n {
                    push(format!(
                        "drift has A {}x{} and b of length {}, expected n={}",
                        a.nrows(),
                        a.ncols(),
                        b.len(),
                        sys.n
                    ));
                }
                if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    push("drift has non-finite entries".into());
                }
            }
            Drift::General { lipschitz, .. } => {
                if !(*lipschitz >= 0.0) {
                    push("drift Lipschitz constant must be nonnegative".into());
                }
            }
        }
        if mode.q_hat() != sys.q_hat {
            push(format!("diffusion has {} noise channels, expected q_hat={}", mode.q_hat(), sys.q_hat));
            continue;
        }
        if !(mode.lipschitz_diffusion >= 0.0) {
            push("diffusion Lipschitz constant must be nonnegative".into());
        }
        if let Diffusion::Linear { sigmas } = &mode.diffusion {
            if sigmas.iter().any(|s| s.nrows() != sys.n || s.ncols() != sys.n) {
                push("diffusion matrix has wrong shape".into());
                continue;
            }
        }
        if sys.n == 0 || sys.q_hat == 0 {
            continue;
        }
        let mut g0 = vec![0.0; sys.n * sys.q_hat];
        mode.diffusion_into(&vec![0.0; sys.n], &mut g0);
        if inf_norm(&g0) != 0.0 {
            push("diffusion does not vanish at the origin".into());
        }
        if let Some(q) = audit_diffusion_lipschitz(sys, p) {
            if q > mode.lipschitz_diffusion * (1.0 + 1e-9) + 1e-15 {
                push(format!(
                    "declared diffusion Lipschitz constant {} is below a sampled difference quotient {q}",
                    mode.lipschitz_diffusion
                ));
            }
        }
    }
    diags
}

/// Largest sampled `‖g(x)−g(x')‖ / ‖x−x'‖∞` over random pairs in the domain's
/// bounding box. The matrix norm is the largest column infinity norm, which
/// `maxᵢ ‖σᵢ‖∞` dominates for linear diffusion.
pub fn audit_diffusion_lipschitz(sys: &SwitchedSystem, p: usize) -> Option<f64> {
    let bb = sys.domain.bounding_box()?;
    if bb.dim() != sys.n {
        return None;
    }
    let mode = sys.modes.get(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED ^ p as u64);
    let n = sys.n;
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut gx = vec![0.0; n * sys.q_hat];
    let mut gy = vec![0.0; n * sys.q_hat];
    let mut worst: f64 = 0.0;
    for _ in 0..LIPSCHITZ_AUDIT_PAIRS {
        for i in 0..n {
            let (lo, hi) = (bb.lo[i], bb.hi[i]);
            x[i] = rng.random_range(lo..=hi);
            y[i] = rng.random_range(lo..=hi);
        }
        let dx = crate::linalg::inf_distance(&x, &y);
        if dx == 0.0 {
            continue;
        }
        mode.diffusion_into(&x, &mut gx);
        mode.diffusion_into(&y, &mut gy);
        let dg = crate::linalg::inf_distance(&gx, &gy);
        worst = worst.max(dg / dx);
    }
    Some(worst)
}
