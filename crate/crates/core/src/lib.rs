//! Bayesian optimization for expensive, mixed-discrete, hierarchical
//! problems whose evaluations can fail.

pub mod encoding;
pub mod error;
pub mod forest;
pub mod gp;
pub mod infill;
pub mod metrics;
pub mod optim;
pub mod pov;
pub mod problems;
pub mod runner;
pub mod sampling;
pub mod sobol;
pub mod space;
pub mod strategy;
pub mod stats;

pub use error::{Error, Result};
