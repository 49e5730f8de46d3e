//! Finite symbolic models of stochastic switched systems, switching controller
//! synthesis over them, and Monte Carlo validation of the closed loop.

pub mod abstraction;
pub mod certificates;
mod container;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod model;
pub mod numfmt;
pub mod quantizer;
pub mod synthesis;
pub mod validation;

pub use error::{Error, Result};
