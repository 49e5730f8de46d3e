//! Stochastic switched systems with affine or general modes and a box-union working domain.

pub mod domain;
pub mod file;
pub mod system;

pub use domain::{Aabb, BoxSet, Lattice, Region};
pub use file::{load_system, parse_system, system_to_toml, SystemFile};
pub use system::{
    lipschitz_of_linear_diffusion, validate_system, Diagnostic, DiffusionField, Diffusion, Drift,
    ModeDynamics, SwitchedSystem, VectorField,
};
