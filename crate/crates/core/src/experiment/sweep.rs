use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

use super::config::ScenarioConfig;
use crate::analysis::{
    fit_adler_model, responsivity_numeric, track_resolved_peaks, AdlerFit, PeakTrack,
    ResponsivityCurve,
};
use crate::atoms::{if_photodetector_signal, RfScene};
use crate::error::{Error, Result};
use crate::oscillator::{integrate_adler, linear_phase_trajectory, AdlerTrajectory};
use crate::signal::{dbm_to_mw, stft, Bandpass, Spectrogram, TimeSeries};

/// Track, fit and responsivity for one observation path (RF or atomic IF).
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub spectrogram: Spectrogram,
    /// Peak offset magnitude per resolved power.
    pub track: Option<PeakTrack>,
    /// Powers without an in-band peak (locked steps, silent records).
    pub unresolved_dbm: Vec<f64>,
    pub fit: Option<AdlerFit>,
    pub responsivity: Option<ResponsivityCurve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Configured sweep powers.
    pub power_axis: Vec<f64>,
    /// Injected power during each spectrogram column.
    pub schedule: Vec<f64>,
    pub rf: PathResult,
    pub atomic_if: PathResult,
    /// Human-readable notes about missing tracks or failed fits.
    pub diagnostics: Vec<String>,
}

struct StepOutput {
    rf: Spectrogram,
    atomic_if: Spectrogram,
    final_phase: f64,
}

/// Phase record at the readout rate plus the exact end phase of the dwell.
fn step_phase(
    cfg: &ScenarioConfig,
    p_dbm: f64,
    phi0: f64,
    seed: u64,
) -> Result<(AdlerTrajectory, f64)> {
    let n = cfg.samples_per_step();
    let dt = 1.0 / cfg.fs;
    match cfg.soft_model {
        Some(model) => {
            let traj = linear_phase_trajectory(model.detuning_at_dbm(p_dbm), phi0, dt, n + 1)?;
            let end = traj.final_phase();
            Ok((traj, end))
        }
        None => {
            let params = cfg.oscillator.with_initial_phase(phi0);
            let sub = cfg.ode_substeps;
            let fine = integrate_adler(&params, p_dbm, n as f64 * dt, dt / sub as f64, seed)?;
            let end = fine.final_phase();
            Ok((fine.decimate(sub)?, end))
        }
    }
}

fn run_step(
    cfg: &ScenarioConfig,
    filter: &Bandpass,
    k: usize,
    p_dbm: f64,
    phi0: f64,
    seed: u64,
) -> Result<StepOutput> {
    let n = cfg.samples_per_step();
    let t0 = k as f64 * n as f64 / cfg.fs;
    let skip = cfg.transient_samples();
    let (traj, final_phase) = step_phase(cfg, p_dbm, phi0, seed)?;
    let phi = &traj.phi()[..n];

    let amp = cfg.oscillator.amplitude();
    let baseband = TimeSeries::new(
        cfg.fs,
        t0,
        phi.iter().map(|&p| Complex64::from_polar(amp, p)).collect(),
    )?;
    let rf = stft(&baseband.slice_from(skip), cfg.window, cfg.hop)?;

    let scene = RfScene {
        omega_lo: cfg.scene.omega_lo,
        omega_sig: cfg.scene.rabi_sig_per_sqrt_mw * dbm_to_mw(p_dbm).sqrt(),
        phi_lo: phi.to_vec(),
        delta_sig: cfg.scene.delta_sig,
    };
    let raw = if_photodetector_signal(&cfg.atoms, &cfg.fields, &scene, cfg.fs, n as f64 / cfg.fs)?;
    let filtered = TimeSeries::new(cfg.fs, t0, filter.filtfilt(raw.samples()))?;
    let atomic_if = stft(&filtered.slice_from(skip), cfg.window, cfg.hop)?;

    Ok(StepOutput {
        rf,
        atomic_if,
        final_phase,
    })
}

fn concat(parts: &[&Spectrogram]) -> Result<Spectrogram> {
    let freq_axis = parts[0].freq_axis().to_vec();
    let mut times = Vec::new();
    let mut columns = Vec::new();
    for spg in parts {
        for j in 0..spg.n_frames() {
            times.push(spg.time_axis()[j]);
            columns.push(spg.column(j).to_vec());
        }
    }
    Spectrogram::from_columns(times, freq_axis, &columns)
}

fn analyze_path(
    label: &str,
    spectrogram: Spectrogram,
    schedule: &[f64],
    band: (f64, f64),
    mirror: bool,
    diagnostics: &mut Vec<String>,
) -> Result<PathResult> {
    let search = if mirror { (-band.1, -band.0) } else { band };
    let outcome = track_resolved_peaks(&spectrogram, schedule, search)?;
    let track = match outcome.track {
        Some(t) if mirror => Some(PeakTrack::new(
            t.p_inj_dbm().to_vec(),
            t.f_peak().iter().map(|f| -f).collect(),
            t.linewidth_3db().to_vec(),
            t.edge_clamped().to_vec(),
        )?),
        other => other,
    };
    if !outcome.unresolved_dbm.is_empty() {
        diagnostics.push(format!(
            "{label}: no in-band peak at {} of {} powers",
            outcome.unresolved_dbm.len(),
            outcome.unresolved_dbm.len() + track.as_ref().map_or(0, |t| t.len())
        ));
    }
    let fit = match &track {
        Some(t) => match fit_adler_model(t) {
            Ok(fit) => {
                if !fit.converged {
                    diagnostics.push(format!("{label}: pulling-law fit did not converge"));
                }
                Some(fit)
            }
            Err(e) => {
                diagnostics.push(format!("{label}: fit skipped: {e}"));
                None
            }
        },
        None => {
            diagnostics.push(format!("{label}: no track"));
            None
        }
    };
    let responsivity = track.as_ref().and_then(|t| responsivity_numeric(t).ok());
    Ok(PathResult {
        spectrogram,
        track,
        unresolved_dbm: outcome.unresolved_dbm,
        fit,
        responsivity,
    })
}

/// Steps the injected power, simulating the RF offset and atomic IF records.
///
/// Sequential mode carries the oscillator phase from step to step. Parallel
/// mode starts each step from its own seeded random phase. Both are
/// deterministic for a given seed.
pub fn run_power_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let powers = cfg.sweep.powers();
    let filter = Bandpass::design(cfg.filter, cfg.fs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<(u64, f64)> = powers
        .iter()
        .map(|_| (rng.random(), TAU * rng.random::<f64>()))
        .collect();
    let annotate = |k: usize, e: Error| Error::Sweep {
        step: k,
        power_dbm: powers[k],
        source: Box::new(e),
    };

    let steps: Vec<StepOutput> = if cfg.parallel {
        powers
            .par_iter()
            .enumerate()
            .map(|(k, &p)| {
                run_step(cfg, &filter, k, p, seeds[k].1, seeds[k].0).map_err(|e| annotate(k, e))
            })
            .collect::<Result<_>>()?
    } else {
        let mut out = Vec::with_capacity(powers.len());
        let mut phi = cfg.oscillator.phi0();
        for (k, &p) in powers.iter().enumerate() {
            let step = run_step(cfg, &filter, k, p, phi, seeds[k].0).map_err(|e| annotate(k, e))?;
            phi = step.final_phase;
            out.push(step);
        }
        out
    };

    let schedule: Vec<f64> = steps
        .iter()
        .zip(&powers)
        .flat_map(|(s, &p)| std::iter::repeat_n(p, s.rf.n_frames()))
        .collect();
    let rf_spg = concat(&steps.iter().map(|s| &s.rf).collect::<Vec<_>>())?;
    let if_spg = concat(&steps.iter().map(|s| &s.atomic_if).collect::<Vec<_>>())?;

    let mut diagnostics = Vec::new();
    let rf = analyze_path(
        "rf",
        rf_spg,
        &schedule,
        cfg.band,
        cfg.delta_f0() < 0.0,
        &mut diagnostics,
    )?;
    let atomic_if = analyze_path("if", if_spg, &schedule, cfg.band, false, &mut diagnostics)?;
    Ok(SweepResult {
        power_axis: powers,
        schedule,
        rf,
        atomic_if,
        diagnostics,
    })
}
