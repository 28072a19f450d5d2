use std::f64::consts::TAU;

use crate::atoms::{DriveFields, LadderSystem};
use crate::error::{Error, Result};
use crate::oscillator::{OscillatorParams, SoftPullModel};
use crate::signal::BandpassSpec;

/// Microwave anchor of the baseline scenario (resonant Rydberg transition), Hz.
pub const DEFAULT_F_INJ: f64 = 5.489e9;
/// Baseline free-running detuning, Hz.
pub const DEFAULT_DELTA_F0: f64 = 131e3;
/// Baseline coupling, Hz per sqrt(mW): 78.6 kHz at -20 dBm.
pub const DEFAULT_KAPPA0: f64 = 786e3;

/// Maps injected power onto the atomic RF scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneCalibration {
    /// LO Rabi frequency at the atoms, rad/s.
    pub omega_lo: f64,
    /// Signal Rabi frequency per sqrt(mW) of injected power, rad/s.
    pub rabi_sig_per_sqrt_mw: f64,
    /// Signal detuning from the Rydberg-Rydberg resonance, rad/s.
    pub delta_sig: f64,
}

impl Default for SceneCalibration {
    fn default() -> Self {
        Self {
            omega_lo: TAU * 1e6,
            rabi_sig_per_sqrt_mw: TAU * 1e6,
            delta_sig: 0.0,
        }
    }
}

/// Stepped power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub start_dbm: f64,
    pub stop_dbm: f64,
    pub step_db: f64,
    /// Time spent at each power, s.
    pub dwell_s: f64,
    /// Leading fraction of each dwell excluded from the spectrogram.
    pub transient_fraction: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            start_dbm: -50.0,
            stop_dbm: -20.0,
            step_db: 1.0,
            dwell_s: 10e-3,
            transient_fraction: 0.2,
        }
    }
}

impl SweepSpec {
    /// Power of every step, `start + k * step`, up to and including `stop`.
    pub fn powers(&self) -> Vec<f64> {
        let n = ((self.stop_dbm - self.start_dbm) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|k| self.start_dbm + k as f64 * self.step_db)
            .collect()
    }
}

/// Everything needed to reproduce one power-sweep measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub oscillator: OscillatorParams,
    /// Replaces the Adler integration by a phase ramp at the softened detuning.
    pub soft_model: Option<SoftPullModel>,
    pub atoms: LadderSystem,
    pub fields: DriveFields,
    pub scene: SceneCalibration,
    pub sweep: SweepSpec,
    /// Readout sample rate, Hz.
    pub fs: f64,
    pub window: usize,
    pub hop: usize,
    /// Peak-search band for both tracks, Hz.
    pub band: (f64, f64),
    pub filter: BandpassSpec,
    /// Adler integration steps per readout sample.
    pub ode_substeps: usize,
    /// Run power steps concurrently, each from a random initial phase.
    pub parallel: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            oscillator: OscillatorParams::from_detuning(
                DEFAULT_F_INJ,
                DEFAULT_DELTA_F0,
                DEFAULT_KAPPA0,
            )
            .expect("baseline oscillator is valid"),
            soft_model: None,
            atoms: LadderSystem::default(),
            fields: DriveFields::default(),
            scene: SceneCalibration::default(),
            sweep: SweepSpec::default(),
            fs: 2e6,
            window: 4096,
            hop: 1024,
            band: (10e3, 250e3),
            filter: BandpassSpec::default(),
            ode_substeps: 8,
            parallel: false,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Free-running detuning actually driving the sweep, Hz.
    pub fn delta_f0(&self) -> f64 {
        self.soft_model
            .map(|m| m.delta_f0())
            .unwrap_or_else(|| self.oscillator.delta_f0())
    }

    pub fn samples_per_step(&self) -> usize {
        (self.sweep.dwell_s * self.fs).round() as usize
    }

    pub fn transient_samples(&self) -> usize {
        (self.samples_per_step() as f64 * self.sweep.transient_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        if !(s.start_dbm.is_finite() && s.stop_dbm.is_finite())
            || !(s.step_db > 0.0)
            || s.stop_dbm < s.start_dbm
        {
            return Err(Error::invalid(format!(
                "sweep must be monotone: start {} dBm, stop {} dBm, step {} dB",
                s.start_dbm, s.stop_dbm, s.step_db
            )));
        }
        if !(s.dwell_s > 0.0) {
            return Err(Error::invalid(format!(
                "dwell_s must be > 0, got {}",
                s.dwell_s
            )));
        }
        if !(0.0..1.0).contains(&s.transient_fraction) {
            return Err(Error::invalid(format!(
                "transient_fraction must be in [0, 1), got {}",
                s.transient_fraction
            )));
        }
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::invalid(format!("fs must be > 0, got {}", self.fs)));
        }
        if !self.window.is_power_of_two() || self.window < 16 {
            return Err(Error::invalid(format!(
                "window must be a power of two >= 16, got {}",
                self.window
            )));
        }
        if self.hop == 0 || self.hop > self.window {
            return Err(Error::invalid(format!(
                "hop must be in 1..={}, got {}",
                self.window, self.hop
            )));
        }
        let n = self.samples_per_step();
        if n < 4 * self.window {
            return Err(Error::invalid(format!(
                "dwell_s * fs = {n} samples, need at least 4 windows ({})",
                4 * self.window
            )));
        }
        if n - self.transient_samples() < self.window {
            return Err(Error::invalid(
                "post-transient dwell is shorter than one window",
            ));
        }
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi < self.fs / 2.0) {
            return Err(Error::invalid(format!(
                "band [{lo}, {hi}] Hz must lie inside (0, {}) Hz",
                self.fs / 2.0
            )));
        }
        self.filter.validate(self.fs)?;
        if self.ode_substeps == 0 {
            return Err(Error::invalid("ode_substeps must be >= 1"));
        }
        self.atoms.validate()?;
        self.fields.validate()?;
        let c = &self.scene;
        if !(c.omega_lo >= 0.0 && c.rabi_sig_per_sqrt_mw >= 0.0) || !c.delta_sig.is_finite() {
            return Err(Error::invalid(
                "scene Rabi calibrations must be >= 0 and delta_sig finite",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_matches_baseline() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.delta_f0(), 131e3);
        assert!((cfg.oscillator.kappa_at(-20.0) - 78.6e3).abs() < 1e-6);
        let p = cfg.sweep.powers();
        assert_eq!(p.len(), 31);
        assert_eq!((p[0], p[30]), (-50.0, -20.0));
    }

    #[test]
    fn fractional_steps_include_stop() {
        let s = SweepSpec {
            start_dbm: -30.0,
            stop_dbm: -29.0,
            step_db: 0.1,
            ..Default::default()
        };
        let p = s.powers();
        assert_eq!(p.len(), 11);
        assert!((p[10] + 29.0).abs() < 1e-12);
    }

    #[test]
    fn invariants_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.sweep.step_db = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::default();
        cfg.sweep.dwell_s = 5e-3;
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::default();
        cfg.band = (10e3, 1.5e6);
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::default();
        cfg.sweep.transient_fraction = 1.0;
        assert!(cfg.validate().is_err());
    }
}
