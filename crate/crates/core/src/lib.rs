//! Memristive nonlinear resistive networks trained with equilibrium
//! propagation.

pub mod data;
pub mod device;
pub mod error;
pub mod network;
pub mod solver;
pub mod trainer;

pub use error::{Error, Result};
