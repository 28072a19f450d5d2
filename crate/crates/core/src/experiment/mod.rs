//! End-to-end power-sweep scenarios: oscillator, atoms, readout chain and
//! analysis wired together.

mod compare;
mod config;
mod sweep;

pub use compare::{
    rf_atomic_consistency, run_detuning_comparison, ComparisonReport, ConsistencyReport,
    ConsistencyRow, DetuningComparison, Ordering, ONSET_FRACTION,
};
pub use config::{
    ScenarioConfig, SceneCalibration, SweepSpec, DEFAULT_DELTA_F0, DEFAULT_F_INJ, DEFAULT_KAPPA0,
};
pub use sweep::{run_power_sweep, PathResult, SweepResult};
