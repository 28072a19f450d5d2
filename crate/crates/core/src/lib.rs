//! Simulation and analysis of microwave power-to-frequency transduction by an
//! injection-pulled self-sustained oscillator read out through a Rydberg
//! ladder system.

pub mod analysis;
pub mod atoms;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod oscillator;
pub mod signal;

pub use error::{Error, Result};
