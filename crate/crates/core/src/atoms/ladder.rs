use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Decay and dephasing of the ladder plus the optical depth of the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderSystem {
    /// Coherence decay of the probe, two-photon and three-photon coherences.
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Population decay of levels 2..=4 (cascade 4 -> 3 -> 2 -> 1).
    pub big_gamma2: f64,
    pub big_gamma3: f64,
    pub big_gamma4: f64,
    pub optical_depth: f64,
}

impl LadderSystem {
    pub fn new(gamma: [f64; 3], big_gamma: [f64; 3], optical_depth: f64) -> Result<Self> {
        let sys = Self {
            gamma2: gamma[0],
            gamma3: gamma[1],
            gamma4: gamma[2],
            big_gamma2: big_gamma[0],
            big_gamma3: big_gamma[1],
            big_gamma4: big_gamma[2],
            optical_depth,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Builds coherence rates as half the population decay plus pure dephasing.
    pub fn from_decay_and_dephasing(
        big_gamma: [f64; 3],
        dephasing: [f64; 3],
        optical_depth: f64,
    ) -> Result<Self> {
        if dephasing.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::invalid("dephasing rates must be >= 0"));
        }
        Self::new(
            [
                big_gamma[0] / 2.0 + dephasing[0],
                big_gamma[1] / 2.0 + dephasing[1],
                big_gamma[2] / 2.0 + dephasing[2],
            ],
            big_gamma,
            optical_depth,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma2", self.gamma2, self.big_gamma2),
            ("gamma3", self.gamma3, self.big_gamma3),
            ("gamma4", self.gamma4, self.big_gamma4),
        ];
        for (name, g, big) in rates {
            if !(g > 0.0 && big > 0.0) || !g.is_finite() || !big.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} and its population decay must be > 0"
                )));
            }
            // Rounding slack for rates built as big/2 + 0.
            if g < big / 2.0 * (1.0 - 1e-12) {
                return Err(Error::invalid(format!(
                    "{name} = {g} is below half its population decay {big}"
                )));
            }
        }
        if !(self.optical_depth >= 0.0) || !self.optical_depth.is_finite() {
            return Err(Error::invalid("optical_depth must be >= 0"));
        }
        Ok(())
    }

    /// Pure dephasing of level `k` (2..=4) implied by the coherence and decay rates.
    pub fn dephasing(&self, level: usize) -> f64 {
        let (g, big) = match level {
            2 => (self.gamma2, self.big_gamma2),
            3 => (self.gamma3, self.big_gamma3),
            4 => (self.gamma4, self.big_gamma4),
            _ => return 0.0,
        };
        (g - big / 2.0).max(0.0)
    }
}

impl Default for LadderSystem {
    /// Cs D2 natural width on the probe step, 1 kHz Rydberg decay, and
    /// 1 MHz of transit/laser dephasing on the Rydberg coherences.
    fn default() -> Self {
        Self::from_decay_and_dephasing(
            [TAU * 5.2e6, TAU * 1e3, TAU * 1e3],
            [0.0, TAU * 1e6, TAU * 1e6],
            1.0,
        )
        .expect("default ladder rates are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveFields {
    pub omega_p: f64,
    pub omega_c: f64,
    pub omega_rf: f64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_rf: f64,
}

impl DriveFields {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("omega_rf", self.omega_rf),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("delta_rf", self.delta_rf),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

impl Default for DriveFields {
    fn default() -> Self {
        Self {
            omega_p: TAU * 52e3,
            omega_c: TAU * 2e6,
            omega_rf: 0.0,
            delta_p: 0.0,
            delta_c: 0.0,
            delta_rf: 0.0,
        }
    }
}

/// First-order-in-probe coherence of the ladder as a continued fraction.
///
/// The sign convention makes `Im >= 0` for an absorbing medium; it equals the
/// `(1, 2)` element of the steady-state density matrix.
pub fn weak_probe_coherence(system: &LadderSystem, fields: &DriveFields) -> Complex64 {
    let i = Complex64::i();
    let d2 = fields.delta_p;
    let d3 = d2 + fields.delta_c;
    let d4 = d3 + fields.delta_rf;
    let inner = Complex64::new(system.gamma4, -d4);
    let mid = Complex64::new(system.gamma3, -d3) + fields.omega_rf.powi(2) / 4.0 / inner;
    let outer = Complex64::new(system.gamma2, -d2) + fields.omega_c.powi(2) / 4.0 / mid;
    i * (fields.omega_p / 2.0) / outer
}

/// `Im rho21` normalized to the bare resonant two-level value `omega_p / (2 gamma2)`.
///
/// Independent of the probe strength in the weak-probe limit.
pub fn normalized_absorption(system: &LadderSystem, fields: &DriveFields) -> f64 {
    let unit = DriveFields {
        omega_p: 1.0,
        ..*fields
    };
    weak_probe_coherence(system, &unit).im * 2.0 * system.gamma2
}

/// Beer-Lambert transmission of the probe through the cell.
pub fn probe_transmission(rho21_imag_scaled: f64, system: &LadderSystem) -> f64 {
    (-system.optical_depth * rho21_imag_scaled).exp()
}

/// Coupling detunings at which probe absorption has a local minimum.
///
/// Scans `grid` (ascending) and refines each interior minimum with a
/// three-point parabola.
pub fn transparency_peaks(system: &LadderSystem, fields: &DriveFields, grid: &[f64]) -> Vec<f64> {
    let absorption: Vec<f64> = grid
        .iter()
        .map(|&dc| {
            normalized_absorption(
                system,
                &DriveFields {
                    delta_c: dc,
                    ..*fields
                },
            )
        })
        .collect();
    let mut peaks = Vec::new();
    for k in 1..grid.len().saturating_sub(1) {
        let (a, b, c) = (absorption[k - 1], absorption[k], absorption[k + 1]);
        if b < a && b <= c {
            let denom = a - 2.0 * b + c;
            let offset = if denom > 0.0 {
                0.5 * (a - c) / denom
            } else {
                0.0
            };
            let step = grid[k + 1] - grid[k];
            peaks.push(grid[k] + offset * step);
        }
    }
    peaks
}
