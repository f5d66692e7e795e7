//! Longitudinal dynamics, control, energy and stability analysis of mixed
//! human/automated vehicle chains, including virtual rings closed through
//! backward connectivity.

pub mod controllers;
pub mod energy;
pub mod error;
pub mod export;
pub mod freq;
pub mod model;
pub mod parallel;
pub mod simulator;
pub mod stability;

pub use error::{Error, Result};
