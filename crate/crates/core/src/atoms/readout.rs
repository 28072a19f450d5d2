use std::f64::consts::TAU;

use num_complex::Complex64;

use super::ladder::{normalized_absorption, probe_transmission, DriveFields, LadderSystem};
use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// IF content allowed, as a fraction of the slowest optical coherence rate in Hz.
pub const QUASI_STATIC_FRACTION: f64 = 0.25;

/// Microwave fields at the cell: the pulled LO plus the injected signal.
#[derive(Debug, Clone, PartialEq)]
pub struct RfScene {
    pub omega_lo: f64,
    pub omega_sig: f64,
    /// LO phase relative to the signal tone, sampled at the readout rate.
    pub phi_lo: Vec<f64>,
    pub delta_sig: f64,
}

impl RfScene {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_lo >= 0.0 && self.omega_sig >= 0.0) {
            return Err(Error::invalid("LO and signal Rabi amplitudes must be >= 0"));
        }
        if !self.delta_sig.is_finite() || self.phi_lo.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("RF scene contains non-finite values"));
        }
        Ok(())
    }
}

/// Highest IF (Hz) for which the steady-state readout is treated as adiabatic.
pub fn quasi_static_limit_hz(system: &LadderSystem) -> f64 {
    QUASI_STATIC_FRACTION * system.gamma2.min(system.gamma3) / TAU
}

/// Balanced probe readout under the beating RF fields.
///
/// Each sample evaluates the steady-state transmission at the instantaneous
/// RF Rabi amplitude `|omega_lo e^{i phi_lo} + omega_sig e^{i delta_sig t}|`,
/// with the LO's instantaneous detuning added to `delta_rf`. The record mean
/// is subtracted.
pub fn if_photodetector_signal(
    system: &LadderSystem,
    fields: &DriveFields,
    scene: &RfScene,
    fs: f64,
    duration: f64,
) -> Result<TimeSeries<f64>> {
    system.validate()?;
    fields.validate()?;
    scene.validate()?;
    if !(fs > 0.0) || !(duration > 0.0) {
        return Err(Error::invalid("sample rate and duration must be positive"));
    }
    let n = (duration * fs).round() as usize;
    if n < 2 || n > scene.phi_lo.len() {
        return Err(Error::invalid(format!(
            "readout needs {n} samples but the LO phase record has {}",
            scene.phi_lo.len()
        )));
    }
    let phi = &scene.phi_lo[..n];

    let mean_lo_hz = (phi[n - 1] - phi[0]).abs() / (TAU * (n - 1) as f64 / fs);
    let if_hz = mean_lo_hz + scene.delta_sig.abs() / TAU;
    let limit_hz = quasi_static_limit_hz(system);
    if if_hz > limit_hz {
        return Err(Error::QuasiStatic { if_hz, limit_hz });
    }

    let lo_rate = |k: usize| -> f64 {
        let (a, b) = match k {
            0 => (0, 1),
            k if k == n - 1 => (n - 2, n - 1),
            k => (k - 1, k + 1),
        };
        (phi[b] - phi[a]) * fs / (b - a) as f64
    };

    let mut out: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            let field = Complex64::from_polar(scene.omega_lo, phi[k])
                + Complex64::from_polar(scene.omega_sig, scene.delta_sig * t);
            let f = DriveFields {
                omega_rf: field.norm(),
                delta_rf: fields.delta_rf + lo_rate(k),
                ..*fields
            };
            probe_transmission(normalized_absorption(system, &f), system)
        })
        .collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    for v in &mut out {
        *v -= mean;
    }
    TimeSeries::new(fs, 0.0, out)
}
