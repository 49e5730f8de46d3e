#![allow(dead_code)]

use std::path::PathBuf;

use switchsym_core::certificates::{load_certificates, CertificateSet};
use switchsym_core::model::{load_system, SwitchedSystem};

pub const ROOM_SOURCE: [f64; 6] = [18.0, 17.72, 17.72, 18.0, 17.46, 17.46];
pub const ROOM_TAU: f64 = 30.0;
pub const PLANAR_TAU: f64 = 0.5;

pub fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> (SwitchedSystem, CertificateSet) {
    let dir = config_dir().join(name);
    let sys = load_system(dir.join("system.toml")).expect("system file");
    let certs = load_certificates(dir.join("certificate.toml"), &sys).expect("certificate file");
    (sys, certs)
}

pub fn room() -> (SwitchedSystem, CertificateSet) {
    load("room")
}

pub fn planar() -> (SwitchedSystem, CertificateSet) {
    load("switched2d")
}

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use switchsym_core::certificates::{max_kappa_hat, QuadraticCertificate};
use switchsym_core::model::{Aabb, BoxSet, ModeDynamics};

/// Noise-free affine system `ẋ = A_p x + b_p` on a single box.
pub fn affine_system(modes: Vec<(DMatrix<f64>, DVector<f64>)>, lo: f64, hi: f64) -> SwitchedSystem {
    let n = modes[0].1.len();
    SwitchedSystem {
        n,
        q_hat: 1,
        modes: modes
            .into_iter()
            .map(|(a, b)| ModeDynamics::affine(a, b, vec![DMatrix::zeros(n, n)]).unwrap())
            .collect(),
        domain: BoxSet::single(Aabb::cube(n, lo, hi)),
        dwell_time: None,
    }
}

/// Random contractive affine system with `m` modes in dimension `n`, with the
/// common certificate `P = I`.
pub fn random_stable_system(rng: &mut impl Rng, n: usize, m: usize) -> (SwitchedSystem, CertificateSet) {
    let modes = (0..m)
        .map(|_| {
            let a = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    -1.0 - rng.random::<f64>()
                } else {
                    0.6 * (rng.random::<f64>() - 0.5)
                }
            });
            let b = DVector::from_fn(n, |_, _| 2.0 * (rng.random::<f64>() - 0.5));
            (a, b)
        })
        .collect();
    let sys = affine_system(modes, -3.0, 3.0);
    let p = DMatrix::<f64>::identity(n, n);
    let kappa = sys
        .modes
        .iter()
        .map(|md| {
            let (a, _) = md.affine_parts().unwrap();
            max_kappa_hat(a, md.linear_sigmas().unwrap(), &p).unwrap().value / 2.0
        })
        .fold(f64::INFINITY, f64::min);
    assert!(kappa > 0.0);
    let certs = CertificateSet::new(vec![QuadraticCertificate::new(p, 1.0, kappa).unwrap(); m]).unwrap();
    (sys, certs)
}
