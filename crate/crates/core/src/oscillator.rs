//! Self-sustained oscillator under microwave injection.
//!
//! The oscillator phase is tracked in the frame rotating with the injected
//! tone, so `phi` advances at the instantaneous detuning `f_osc - f_inj` and
//! obeys the Adler equation `dphi/dt = dw0 - kappa * sin(phi)`.

use std::f64::consts::{LN_10, PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::{dbm_to_mw, TimeSeries};

/// Largest phase advance per integration step, in radians.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

/// Fraction of a trajectory treated as start-up transient by the beat estimator.
pub const BEAT_TRANSIENT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    f_free: f64,
    f_inj: f64,
    kappa0: f64,
    freq_noise_psd: f64,
    amplitude: f64,
    phi0: f64,
}

impl OscillatorParams {
    /// `kappa0` is the injection coupling in Hz per sqrt(mW).
    pub fn new(f_free: f64, f_inj: f64, kappa0: f64) -> Result<Self> {
        if !f_free.is_finite() || !f_inj.is_finite() {
            return Err(Error::invalid("oscillator frequencies must be finite"));
        }
        if !(kappa0 >= 0.0) || !kappa0.is_finite() {
            return Err(Error::invalid(format!("kappa0 must be >= 0, got {kappa0}")));
        }
        Ok(Self {
            f_free,
            f_inj,
            kappa0,
            freq_noise_psd: 0.0,
            amplitude: 1.0,
            phi0: 0.0,
        })
    }

    pub fn from_detuning(f_inj: f64, delta_f0: f64, kappa0: f64) -> Result<Self> {
        Self::new(f_inj + delta_f0, f_inj, kappa0)
    }

    /// One-sided white frequency-noise level in Hz^2/Hz.
    pub fn with_noise(mut self, freq_noise_psd: f64) -> Result<Self> {
        if !(freq_noise_psd >= 0.0) || !freq_noise_psd.is_finite() {
            return Err(Error::invalid(format!(
                "freq_noise_psd must be >= 0, got {freq_noise_psd}"
            )));
        }
        self.freq_noise_psd = freq_noise_psd;
        Ok(self)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::invalid(format!(
                "amplitude must be > 0, got {amplitude}"
            )));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    pub fn with_initial_phase(mut self, phi0: f64) -> Self {
        self.phi0 = phi0;
        self
    }

    pub fn f_free(&self) -> f64 {
        self.f_free
    }

    pub fn f_inj(&self) -> f64 {
        self.f_inj
    }

    pub fn delta_f0(&self) -> f64 {
        self.f_free - self.f_inj
    }

    pub fn delta_omega0(&self) -> f64 {
        TAU * self.delta_f0()
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn freq_noise_psd(&self) -> f64 {
        self.freq_noise_psd
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Coupling in Hz at the given injected power.
    pub fn kappa_at(&self, p_inj_dbm: f64) -> f64 {
        kappa_from_power(self.kappa0, p_inj_dbm)
    }
}

/// Softened pulling law `df(P) = df0 / sqrt(1 + beta * P)`, `P` in mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftPullModel {
    delta_f0: f64,
    beta: f64,
}

impl SoftPullModel {
    pub fn new(delta_f0: f64, beta: f64) -> Result<Self> {
        if !delta_f0.is_finite() {
            return Err(Error::invalid("delta_f0 must be finite"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self { delta_f0, beta })
    }

    pub fn delta_f0(&self) -> f64 {
        self.delta_f0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same law expressed on a dBm axis.
    pub fn detuning_at_dbm(&self, p_dbm: f64) -> f64 {
        pulled_detuning_soft(self, dbm_to_mw(p_dbm))
    }
}

pub fn kappa_from_power(kappa0: f64, p_inj_dbm: f64) -> f64 {
    kappa0 * dbm_to_mw(p_inj_dbm).sqrt()
}

/// Beat frequency of the ideal Adler solution; zero once locked.
pub fn beat_frequency_analytic(delta_f0: f64, kappa: f64) -> f64 {
    if kappa.abs() < delta_f0.abs() {
        (delta_f0 * delta_f0 - kappa * kappa).sqrt()
    } else {
        0.0
    }
}

/// Stable fixed point `asin(dw0 / kappa)` when the coupling locks the oscillator.
pub fn locked_phase(delta_f0: f64, kappa: f64) -> Option<f64> {
    (kappa > 0.0 && kappa >= delta_f0.abs()).then(|| (delta_f0 / kappa).asin())
}

pub fn pulled_detuning_soft(model: &SoftPullModel, p_inj_mw: f64) -> f64 {
    model.delta_f0 / (1.0 + model.beta * p_inj_mw).sqrt()
}

/// `|d(df)/dP_dB|` of the soft law, in Hz per dB.
pub fn responsivity_analytic(model: &SoftPullModel, p_dbm: f64) -> f64 {
    let p = dbm_to_mw(p_dbm);
    let bp = model.beta * p;
    (model.delta_f0 * bp * (LN_10 / 20.0) * (1.0 + bp).powf(-1.5)).abs()
}

/// Sampled phase path of the pulled oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdlerTrajectory {
    dt: f64,
    t0: f64,
    phi: Vec<f64>,
}

impl AdlerTrajectory {
    pub fn new(dt: f64, t0: f64, phi: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if phi.len() < 2 {
            return Err(Error::invalid("trajectory needs at least two samples"));
        }
        if phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("trajectory contains non-finite phase"));
        }
        Ok(Self { dt, t0, phi })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn final_phase(&self) -> f64 {
        self.phi[self.phi.len() - 1]
    }

    /// Keeps every `factor`-th sample.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("decimation factor must be >= 1"));
        }
        Self::new(
            self.dt * factor as f64,
            self.t0,
            self.phi.iter().step_by(factor).copied().collect(),
        )
    }

    /// Mean beat frequency in Hz, signed with the direction of phase travel.
    ///
    /// Counts successive 2*pi level crossings of the unwrapped phase after the
    /// first 10% of the record and averages over the complete periods. Records
    /// with fewer than two crossings fall back to the net phase slope.
    pub fn mean_beat_frequency(&self) -> f64 {
        let start = (self.phi.len() as f64 * BEAT_TRANSIENT_FRACTION) as usize;
        let seg = &self.phi[start.min(self.phi.len() - 2)..];
        let t_offset = self.time(start.min(self.phi.len() - 2));
        let (first, last) = (seg[0], seg[seg.len() - 1]);
        let span = (seg.len() - 1) as f64 * self.dt;
        let dir = if last >= first { 1.0 } else { -1.0 };

        let mut level = if dir > 0.0 {
            TAU * ((first / TAU).floor() + 1.0)
        } else {
            TAU * ((first / TAU).ceil() - 1.0)
        };
        let mut crossings: Vec<f64> = Vec::new();
        for i in 1..seg.len() {
            while (seg[i] - level) * dir >= 0.0 {
                let frac = (level - seg[i - 1]) / (seg[i] - seg[i - 1]);
                crossings.push(t_offset + (i as f64 - 1.0 + frac) * self.dt);
                level += dir * TAU;
            }
        }
        if crossings.len() >= 2 {
            let periods = (crossings.len() - 1) as f64;
            dir * periods / (crossings[crossings.len() - 1] - crossings[0])
        } else {
            (last - first) / (TAU * span)
        }
    }
}

/// Integrates the Adler equation at the coupling set by `p_inj_dbm`.
///
/// Deterministic drift uses fixed-step RK4. A nonzero noise PSD adds an
/// Euler-Maruyama angular-frequency noise increment `sigma * sqrt(dt) * N(0, 1)`
/// per step with `sigma^2 = (2 pi)^2 * psd / 2`.
pub fn integrate_adler(
    params: &OscillatorParams,
    p_inj_dbm: f64,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<AdlerTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    if !(duration >= dt) || !duration.is_finite() {
        return Err(Error::invalid(format!(
            "duration {duration} s must cover at least one step of {dt} s"
        )));
    }
    let dw0 = params.delta_omega0();
    let kappa = TAU * params.kappa_at(p_inj_dbm);
    let phase_per_step = dt * dw0.abs().max(kappa);
    if !(phase_per_step < MAX_PHASE_PER_STEP) {
        return Err(Error::StepSize {
            phase_per_step,
            limit: MAX_PHASE_PER_STEP,
        });
    }

    let steps = (duration / dt).round() as usize;
    let rhs = |p: f64| dw0 - kappa * p.sin();
    let sigma = TAU * (params.freq_noise_psd / 2.0).sqrt();
    let noise_scale = sigma * dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut phi = Vec::with_capacity(steps + 1);
    let mut p = params.phi0;
    phi.push(p);
    for _ in 0..steps {
        let k1 = rhs(p);
        let k2 = rhs(p + 0.5 * dt * k1);
        let k3 = rhs(p + 0.5 * dt * k2);
        let k4 = rhs(p + dt * k3);
        p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if noise_scale > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            p += noise_scale * z;
        }
        phi.push(p);
    }
    AdlerTrajectory::new(dt, 0.0, phi)
}

/// Complex baseband `A * exp(i phi)` in the frame of the injected tone.
pub fn synthesize_baseband(
    params: &OscillatorParams,
    traj: &AdlerTrajectory,
) -> Result<TimeSeries<Complex64>> {
    let a = params.amplitude;
    TimeSeries::new(
        1.0 / traj.dt,
        traj.t0,
        traj.phi
            .iter()
            .map(|&p| Complex64::from_polar(a, p))
            .collect(),
    )
}

/// Turns a pulled-detuning value into a phase ramp, bypassing the ODE.
pub fn linear_phase_trajectory(
    detuning_hz: f64,
    phi0: f64,
    dt: f64,
    samples: usize,
) -> Result<AdlerTrajectory> {
    let w = 2.0 * PI * detuning_hz;
    AdlerTrajectory::new(
        dt,
        0.0,
        (0..samples).map(|n| phi0 + w * n as f64 * dt).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::stft;
    use proptest::prelude::*;

    fn params(delta_f0: f64, kappa0: f64) -> OscillatorParams {
        OscillatorParams::from_detuning(5.489e9, delta_f0, kappa0).unwrap()
    }

    #[test]
    fn kappa_power_scaling() {
        assert!((kappa_from_power(10e3, 0.0) - 10e3).abs() < 1e-9);
        assert!((kappa_from_power(10e3, 20.0) - 100e3).abs() < 1e-6);
        // sqrt(0.1) = 0.316227766...
        let expected = 10e3 * 0.1f64.sqrt();
        assert!((kappa_from_power(10e3, -10.0) - expected).abs() < 1e-9);
        assert!((expected - 3162.28).abs() < 0.01);
        for p in [-60.0, -33.3, 0.0, 7.5] {
            let r = kappa_from_power(1.0, p + 20.0) / kappa_from_power(1.0, p);
            assert!((r - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn detuning_is_derived() {
        let p = OscillatorParams::new(5.489131e9, 5.489e9, 0.0).unwrap();
        assert_eq!(p.delta_f0(), p.f_free() - p.f_inj());
        assert!(OscillatorParams::new(1.0, 0.0, -1.0).is_err());
        assert!(p.with_noise(-1.0).is_err());
        assert!(p.with_amplitude(0.0).is_err());
    }

    #[test]
    fn analytic_beat_reference_values() {
        assert_eq!(beat_frequency_analytic(131e3, 0.0), 131e3);
        assert_eq!(beat_frequency_analytic(-131e3, 0.0), 131e3);
        assert_eq!(beat_frequency_analytic(131e3, 131e3), 0.0);
        assert_eq!(beat_frequency_analytic(131e3, 200e3), 0.0);
        // sqrt(131^2 - 78.6^2) = sqrt(10983.04) = 104.8
        assert!((beat_frequency_analytic(131e3, 78.6e3) - 104.8e3).abs() < 1e-6);
    }

    #[test]
    fn free_running_is_linear_ramp() {
        let p = params(131e3, 0.0).with_initial_phase(0.3);
        let traj = integrate_adler(&p, -30.0, 1e-3, 1e-7, 1).unwrap();
        let dw = p.delta_omega0();
        for (n, &phi) in traj.phi().iter().enumerate() {
            let t = traj.time(n);
            assert!(
                (phi - (0.3 + dw * t)).abs() <= 1e-12 * (dw * t).abs().max(1.0),
                "n={n}"
            );
        }
    }

    #[test]
    fn locks_to_fixed_point() {
        // kappa = 120 kHz at 0 dBm, df0 = 100 kHz.
        let p = params(100e3, 120e3);
        let traj = integrate_adler(&p, 0.0, 2e-3, 1e-7, 0).unwrap();
        let target = (100.0f64 / 120.0).asin();
        let end = traj.final_phase();
        let wrapped = end - TAU * ((end - target) / TAU).round();
        assert!((wrapped - target).abs() < 1e-9, "{wrapped} vs {target}");
        let phi = traj.phi();
        let step = (phi[phi.len() - 1] - phi[phi.len() - 2]).abs();
        assert!(step < 1e-9);
        assert_eq!(locked_phase(100e3, 120e3), Some(target));
        assert_eq!(locked_phase(100e3, 90e3), None);
    }

    #[test]
    fn pulled_beat_matches_analytic_and_fine_reference() {
        let p = params(131e3, 78.6e3);
        let dt = 1e-7;
        let coarse = integrate_adler(&p, 0.0, 1.2e-3, dt, 0)
            .unwrap()
            .mean_beat_frequency();
        let fine = integrate_adler(&p, 0.0, 1.2e-3, dt / 16.0, 0)
            .unwrap()
            .mean_beat_frequency();
        assert!((coarse - 104.8e3).abs() / 104.8e3 < 1e-3, "{coarse}");
        assert!((coarse - fine).abs() / fine < 1e-6, "{coarse} vs {fine}");
    }

    #[test]
    fn rejects_coarse_step() {
        let p = params(131e3, 0.0);
        let err = integrate_adler(&p, 0.0, 1e-3, 1e-6, 0).unwrap_err();
        assert!(matches!(err, Error::StepSize { .. }));
        let p = params(1e3, 1e6);
        assert!(integrate_adler(&p, 0.0, 1e-3, 1e-7, 0).is_err());
        assert!(integrate_adler(&params(1e3, 0.0), 0.0, 1e-3, 0.0, 0).is_err());
    }

    #[test]
    fn sign_symmetry() {
        let a = params(131e3, 90e3).with_initial_phase(0.4);
        let b = params(-131e3, 90e3).with_initial_phase(-0.4);
        let ta = integrate_adler(&a, 0.0, 5e-4, 1e-7, 0).unwrap();
        let tb = integrate_adler(&b, 0.0, 5e-4, 1e-7, 0).unwrap();
        for (x, y) in ta.phi().iter().zip(tb.phi()) {
            assert!((x + y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        assert!((ta.mean_beat_frequency() + tb.mean_beat_frequency()).abs() < 1e-6);
    }

    #[test]
    fn noise_is_seeded() {
        let p = params(131e3, 50e3).with_noise(1e4).unwrap();
        let a = integrate_adler(&p, 0.0, 2e-4, 1e-7, 7).unwrap();
        let b = integrate_adler(&p, 0.0, 2e-4, 1e-7, 7).unwrap();
        let c = integrate_adler(&p, 0.0, 2e-4, 1e-7, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_variance_matches_psd() {
        // Free-running phase diffusion: Var[phi(T)] = sigma^2 T.
        let psd = 2e3;
        let p = params(0.0, 0.0).with_noise(psd).unwrap();
        let (t, dt) = (1e-3, 1e-6);
        let finals: Vec<f64> = (0..400)
            .map(|s| integrate_adler(&p, 0.0, t, dt, s).unwrap().final_phase())
            .collect();
        let var = finals.iter().map(|x| x * x).sum::<f64>() / finals.len() as f64;
        let expected = TAU * TAU * psd / 2.0 * t;
        assert!((var / expected - 1.0).abs() < 0.2, "{var} vs {expected}");
    }

    #[test]
    fn soft_law_reference_points() {
        let m = SoftPullModel::new(131e3, 0.8).unwrap();
        assert_eq!(pulled_detuning_soft(&m, 0.0), 131e3);
        assert!((pulled_detuning_soft(&m, 3.0 / 0.8) - 65.5e3).abs() < 1e-9);
        assert!(SoftPullModel::new(131e3, 0.0).is_err());
        assert!(responsivity_analytic(&m, -300.0) < 1e-20);
    }

    #[test]
    fn responsivity_has_single_interior_maximum() {
        let m = SoftPullModel::new(96e3, 0.5).unwrap();
        let grid: Vec<f64> = (0..=1200).map(|i| -60.0 + i as f64 * 0.1).collect();
        let r: Vec<f64> = grid.iter().map(|&p| responsivity_analytic(&m, p)).collect();
        let peaks = (1..r.len() - 1)
            .filter(|&i| r[i] > r[i - 1] && r[i] >= r[i + 1])
            .count();
        assert_eq!(peaks, 1);
        assert!(r[0] < 1e-3 * r.iter().cloned().fold(0.0, f64::max));
        assert!(r[r.len() - 1] < 1e-2 * r.iter().cloned().fold(0.0, f64::max));
        // Maximum sits at beta * P = 2.
        let imax = (0..r.len()).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap();
        assert!((m.beta() * dbm_to_mw(grid[imax]) - 2.0).abs() < 0.05);
    }

    #[test]
    fn baseband_lines() {
        let fs = 2e6;
        let dt = 1.0 / (fs * 8.0);
        let window = 4096;

        let check = |p: &OscillatorParams, expect: f64| {
            let traj = integrate_adler(p, 0.0, 8e-3, dt, 0)
                .unwrap()
                .decimate(8)
                .unwrap();
            let bb = synthesize_baseband(p, &traj).unwrap();
            assert!(bb
                .samples()
                .iter()
                .all(|s| (s.norm() - p.amplitude()).abs() < 1e-12));
            let spg = stft(&bb.slice_from(bb.len() / 5), window, window / 4).unwrap();
            let col = spg.column(spg.n_frames() - 1);
            let imax = (0..col.len())
                .max_by(|&a, &b| col[a].total_cmp(&col[b]))
                .unwrap();
            let f = spg.freq_axis()[imax];
            assert!((f - expect).abs() <= spg.bin_width(), "{f} vs {expect}");
            (spg, imax)
        };

        check(&params(131e3, 0.0), 131e3);
        check(&params(100e3, 150e3), 0.0);
        let (spg, imax) = check(&params(131e3, 100e3), beat_frequency_analytic(131e3, 100e3));
        // The non-sinusoidal beat carries a second harmonic.
        let col = spg.column(spg.n_frames() - 1);
        let f2 = 2.0 * spg.freq_axis()[imax];
        let i2 = spg
            .freq_axis()
            .iter()
            .position(|&f| (f - f2).abs() <= spg.bin_width() / 2.0)
            .unwrap();
        let local = col[i2 - 2..=i2 + 2]
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max);
        assert!(local > -60.0, "harmonic level {local} dB");
    }

    proptest! {
        #[test]
        fn analytic_responsivity_matches_finite_difference(
            d0 in 10e3f64..300e3, beta in 0.01f64..100.0, p in -40.0f64..20.0
        ) {
            let m = SoftPullModel::new(d0, beta).unwrap();
            let h = 0.01;
            let fd = ((m.detuning_at_dbm(p + h) - m.detuning_at_dbm(p - h)) / (2.0 * h)).abs();
            let an = responsivity_analytic(&m, p);
            prop_assume!(an > 1e-6 * d0);
            prop_assert!((fd - an).abs() <= 1e-6 * an, "fd {} an {}", fd, an);
        }

        #[test]
        fn soft_law_monotone(d0 in 1e3f64..500e3, beta in 1e-3f64..1e3, p in 0.0f64..100.0, dp in 1e-6f64..10.0) {
            let m = SoftPullModel::new(d0, beta).unwrap();
            let a = pulled_detuning_soft(&m, p);
            let b = pulled_detuning_soft(&m, p + dp);
            prop_assert!(b < a && b > 0.0);
        }
    }
}
