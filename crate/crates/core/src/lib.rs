//! Hierarchical drift-diffusion modelling of binary delegation choices:
//! first-passage densities, a non-centered hierarchical likelihood, NUTS
//! sampling, convergence and predictive diagnostics, and post-hoc analyses.

pub mod analysis;
pub mod config;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod io;
pub mod math;
pub mod model;
pub mod pipeline;
pub mod sampler;
pub mod synth;
pub mod wiener;

pub use error::{Error, Result};
