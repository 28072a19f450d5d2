//! TOML scenario files.
//!
//! Frequencies are given as cyclic values with the unit in the key name
//! (`_ghz`, `_mhz`, `_khz`); Rabi frequencies and rates in `[atoms]` and
//! `[scene]` are converted to angular units on load. Every key is optional.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::read_text;
use crate::atoms::{DriveFields, LadderSystem};
use crate::error::{Error, Result};
use crate::experiment::{ScenarioConfig, SceneCalibration, SweepSpec};
use crate::oscillator::{OscillatorParams, SoftPullModel};
use crate::signal::BandpassSpec;

pub const SEED_ENV: &str = "PULLSIM_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSection {
    pub f_inj_ghz: f64,
    pub delta_f0_khz: f64,
    /// kHz per sqrt(mW).
    pub kappa_0: f64,
    /// Hz^2/Hz.
    pub freq_noise_psd: f64,
    pub amplitude: f64,
    pub phi0: f64,
    /// Present: drive the sweep from the softened law instead of the phase equation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soft_beta_per_mw: Option<f64>,
}

impl Default for OscillatorSection {
    fn default() -> Self {
        Self {
            f_inj_ghz: 5.489,
            delta_f0_khz: 131.0,
            kappa_0: 786.0,
            freq_noise_psd: 0.0,
            amplitude: 1.0,
            phi0: 0.0,
            soft_beta_per_mw: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomsSection {
    /// Population decay of levels 2, 3, 4 over 2 pi.
    pub decay_mhz: [f64; 3],
    /// Pure dephasing of the coherences with levels 2, 3, 4 over 2 pi.
    pub dephasing_mhz: [f64; 3],
    pub optical_depth: f64,
    pub omega_p_mhz: f64,
    pub omega_c_mhz: f64,
    pub delta_p_mhz: f64,
    pub delta_c_mhz: f64,
    pub delta_rf_mhz: f64,
}

impl Default for AtomsSection {
    fn default() -> Self {
        Self {
            decay_mhz: [5.2, 1e-3, 1e-3],
            dephasing_mhz: [0.0, 1.0, 1.0],
            optical_depth: 1.0,
            omega_p_mhz: 0.052,
            omega_c_mhz: 2.0,
            delta_p_mhz: 0.0,
            delta_c_mhz: 0.0,
            delta_rf_mhz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSection {
    pub omega_lo_mhz: f64,
    pub rabi_sig_mhz_per_sqrt_mw: f64,
    pub delta_sig_mhz: f64,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            omega_lo_mhz: 1.0,
            rabi_sig_mhz_per_sqrt_mw: 1.0,
            delta_sig_mhz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub start_dbm: f64,
    pub stop_dbm: f64,
    pub step_db: f64,
    pub dwell_ms: f64,
    pub transient_fraction: f64,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            start_dbm: -50.0,
            stop_dbm: -20.0,
            step_db: 1.0,
            dwell_ms: 10.0,
            transient_fraction: 0.2,
            parallel: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub fs_mhz: f64,
    pub window: usize,
    pub hop: usize,
    pub band_khz: [f64; 2],
    pub filter_khz: [f64; 2],
    pub filter_order: usize,
    pub ode_substeps: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            fs_mhz: 2.0,
            window: 4096,
            hop: 1024,
            band_khz: [10.0, 250.0],
            filter_khz: [10.0, 250.0],
            filter_order: 4,
            ode_substeps: 8,
        }
    }
}

/// On-disk form of a [`ScenarioConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub oscillator: OscillatorSection,
    pub atoms: AtomsSection,
    pub scene: SceneSection,
    pub sweep: SweepSection,
    pub analysis: AnalysisSection,
}

fn field_err(path: &Path, field: &str, e: Error) -> Error {
    let detail = match e {
        Error::InvalidInput(m) => m,
        other => other.to_string(),
    };
    Error::Config {
        path: path.to_path_buf(),
        message: format!("{field}: {detail}"),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    (line, column)
                }
                None => (0, 0),
            };
            Error::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    /// Converts to a validated scenario; errors name the offending key.
    pub fn to_config(&self, path: &Path) -> Result<ScenarioConfig> {
        let o = &self.oscillator;
        let mhz = |v: f64| TAU * v * 1e6;
        let oscillator = OscillatorParams::from_detuning(
            o.f_inj_ghz * 1e9,
            o.delta_f0_khz * 1e3,
            o.kappa_0 * 1e3,
        )
        .map_err(|e| field_err(path, "oscillator.kappa_0", e))?
        .with_noise(o.freq_noise_psd)
        .map_err(|e| field_err(path, "oscillator.freq_noise_psd", e))?
        .with_amplitude(o.amplitude)
        .map_err(|e| field_err(path, "oscillator.amplitude", e))?
        .with_initial_phase(o.phi0);
        let soft_model = o
            .soft_beta_per_mw
            .map(|beta| SoftPullModel::new(o.delta_f0_khz * 1e3, beta))
            .transpose()
            .map_err(|e| field_err(path, "oscillator.soft_beta_per_mw", e))?;

        let a = &self.atoms;
        let atoms = LadderSystem::from_decay_and_dephasing(
            a.decay_mhz.map(mhz),
            a.dephasing_mhz.map(mhz),
            a.optical_depth,
        )
        .map_err(|e| field_err(path, "atoms", e))?;
        let fields = DriveFields {
            omega_p: mhz(a.omega_p_mhz),
            omega_c: mhz(a.omega_c_mhz),
            omega_rf: 0.0,
            delta_p: mhz(a.delta_p_mhz),
            delta_c: mhz(a.delta_c_mhz),
            delta_rf: mhz(a.delta_rf_mhz),
        };
        fields.validate().map_err(|e| field_err(path, "atoms", e))?;

        let s = &self.scene;
        let scene = SceneCalibration {
            omega_lo: mhz(s.omega_lo_mhz),
            rabi_sig_per_sqrt_mw: mhz(s.rabi_sig_mhz_per_sqrt_mw),
            delta_sig: mhz(s.delta_sig_mhz),
        };
        let w = &self.sweep;
        let n = &self.analysis;
        let cfg = ScenarioConfig {
            oscillator,
            soft_model,
            atoms,
            fields,
            scene,
            sweep: SweepSpec {
                start_dbm: w.start_dbm,
                stop_dbm: w.stop_dbm,
                step_db: w.step_db,
                dwell_s: w.dwell_ms * 1e-3,
                transient_fraction: w.transient_fraction,
            },
            fs: n.fs_mhz * 1e6,
            window: n.window,
            hop: n.hop,
            band: (n.band_khz[0] * 1e3, n.band_khz[1] * 1e3),
            filter: BandpassSpec {
                f_lo: n.filter_khz[0] * 1e3,
                f_hi: n.filter_khz[1] * 1e3,
                order: n.filter_order,
            },
            ode_substeps: n.ode_substeps,
            parallel: w.parallel,
            seed: w.seed,
        };
        cfg.validate().map_err(|e| field_err(path, "scenario", e))?;
        Ok(cfg)
    }

    /// File form of an in-memory scenario.
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let per_mhz = |v: f64| v / TAU / 1e6;
        let o = &cfg.oscillator;
        let a = &cfg.atoms;
        ScenarioFile {
            oscillator: OscillatorSection {
                f_inj_ghz: o.f_inj() / 1e9,
                delta_f0_khz: cfg.delta_f0() / 1e3,
                kappa_0: o.kappa0() / 1e3,
                freq_noise_psd: o.freq_noise_psd(),
                amplitude: o.amplitude(),
                phi0: o.phi0(),
                soft_beta_per_mw: cfg.soft_model.map(|m| m.beta()),
            },
            atoms: AtomsSection {
                decay_mhz: [a.big_gamma2, a.big_gamma3, a.big_gamma4].map(per_mhz),
                dephasing_mhz: [a.dephasing(2), a.dephasing(3), a.dephasing(4)].map(per_mhz),
                optical_depth: a.optical_depth,
                omega_p_mhz: per_mhz(cfg.fields.omega_p),
                omega_c_mhz: per_mhz(cfg.fields.omega_c),
                delta_p_mhz: per_mhz(cfg.fields.delta_p),
                delta_c_mhz: per_mhz(cfg.fields.delta_c),
                delta_rf_mhz: per_mhz(cfg.fields.delta_rf),
            },
            scene: SceneSection {
                omega_lo_mhz: per_mhz(cfg.scene.omega_lo),
                rabi_sig_mhz_per_sqrt_mw: per_mhz(cfg.scene.rabi_sig_per_sqrt_mw),
                delta_sig_mhz: per_mhz(cfg.scene.delta_sig),
            },
            sweep: SweepSection {
                start_dbm: cfg.sweep.start_dbm,
                stop_dbm: cfg.sweep.stop_dbm,
                step_db: cfg.sweep.step_db,
                dwell_ms: cfg.sweep.dwell_s * 1e3,
                transient_fraction: cfg.sweep.transient_fraction,
                parallel: cfg.parallel,
                seed: cfg.seed,
            },
            analysis: AnalysisSection {
                fs_mhz: cfg.fs / 1e6,
                window: cfg.window,
                hop: cfg.hop,
                band_khz: [cfg.band.0 / 1e3, cfg.band.1 / 1e3],
                filter_khz: [cfg.filter.f_lo / 1e3, cfg.filter.f_hi / 1e3],
                filter_order: cfg.filter.order,
                ode_substeps: cfg.ode_substeps,
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario file serializes")
    }
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig> {
    ScenarioFile::parse(&read_text(path)?, path)?.to_config(path)
}

/// Seed precedence: command-line flag, then environment, then config file.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        None => Ok(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<ScenarioConfig> {
        let p = Path::new("scenario.toml");
        ScenarioFile::parse(text, p)?.to_config(p)
    }

    #[test]
    fn empty_file_is_baseline() {
        let cfg = load("").unwrap();
        let base = ScenarioConfig::default();
        assert_eq!(cfg.delta_f0(), 131e3);
        assert_eq!(cfg.sweep, base.sweep);
        assert_eq!(cfg.band, base.band);
        assert!((cfg.oscillator.kappa0() - base.oscillator.kappa0()).abs() < 1e-6);
        assert!((cfg.atoms.gamma3 / base.atoms.gamma3 - 1.0).abs() < 1e-12);
        assert!((cfg.fields.omega_c / base.fields.omega_c - 1.0).abs() < 1e-12);
        assert!((cfg.scene.omega_lo / base.scene.omega_lo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detuning_override() {
        let cfg = load("[oscillator]\ndelta_f0_khz = 96\n").unwrap();
        assert!((cfg.delta_f0() - 96e3).abs() < 1e-6);
    }

    #[test]
    fn invariant_violation_names_field() {
        let msg = load("[oscillator]\nkappa_0 = -1\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("kappa0"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        match load("[sweep]\nstart_dbm = -40\nstpe_db = 0.5\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("stpe_db"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(load("[bogus]\nx = 1\n").is_err());
    }

    #[test]
    fn soft_model_section() {
        let cfg = load("[oscillator]\nsoft_beta_per_mw = 0.8\n").unwrap();
        assert_eq!(cfg.soft_model.unwrap().beta(), 0.8);
        assert!(load("[oscillator]\nsoft_beta_per_mw = 0\n").is_err());
    }

    #[test]
    fn file_form_round_trips() {
        let text = "[oscillator]\ndelta_f0_khz = 96\nsoft_beta_per_mw = 2.5\n[sweep]\nseed = 9\nparallel = true\n";
        let cfg = load(text).unwrap();
        let again = load(&ScenarioFile::from_config(&cfg).to_toml()).unwrap();
        assert_eq!(again.seed, 9);
        assert!(again.parallel);
        assert_eq!(again.soft_model, cfg.soft_model);
        assert!((again.atoms.gamma2 / cfg.atoms.gamma2 - 1.0).abs() < 1e-12);
        assert_eq!(
            ScenarioFile::from_config(&again).to_toml(),
            ScenarioFile::from_config(&cfg).to_toml()
        );
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some("2"), 3).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some("2"), 3).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, 3).unwrap(), 3);
        assert!(resolve_seed(None, Some("x"), 3).is_err());
    }
}
