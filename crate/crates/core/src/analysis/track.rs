use crate::error::{Error, Result};
use crate::signal::{Spectrogram, DB_FLOOR};

use super::peak::{extract_peak, PeakEstimate};

/// Dominant IF (or RF offset) frequency and its 3 dB width per injected power.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakTrack {
    p_inj_dbm: Vec<f64>,
    f_peak: Vec<f64>,
    linewidth_3db: Vec<f64>,
    edge_clamped: Vec<bool>,
}

impl PeakTrack {
    pub fn new(
        p_inj_dbm: Vec<f64>,
        f_peak: Vec<f64>,
        linewidth_3db: Vec<f64>,
        edge_clamped: Vec<bool>,
    ) -> Result<Self> {
        let n = p_inj_dbm.len();
        if f_peak.len() != n || linewidth_3db.len() != n || edge_clamped.len() != n {
            return Err(Error::invalid("peak track columns must have equal lengths"));
        }
        if p_inj_dbm.iter().any(|p| !p.is_finite()) || p_inj_dbm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "power axis must be finite and strictly increasing",
            ));
        }
        if f_peak.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid("peak frequencies must be finite"));
        }
        if linewidth_3db.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("linewidths must be positive"));
        }
        Ok(Self {
            p_inj_dbm,
            f_peak,
            linewidth_3db,
            edge_clamped,
        })
    }

    /// Track with a nominal width and no clamping flags, for model-generated data.
    pub fn from_points(p_inj_dbm: Vec<f64>, f_peak: Vec<f64>, linewidth: f64) -> Result<Self> {
        let n = p_inj_dbm.len();
        Self::new(p_inj_dbm, f_peak, vec![linewidth; n], vec![false; n])
    }

    pub fn p_inj_dbm(&self) -> &[f64] {
        &self.p_inj_dbm
    }

    pub fn f_peak(&self) -> &[f64] {
        &self.f_peak
    }

    pub fn linewidth_3db(&self) -> &[f64] {
        &self.linewidth_3db
    }

    pub fn edge_clamped(&self) -> &[bool] {
        &self.edge_clamped
    }

    pub fn len(&self) -> usize {
        self.p_inj_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_inj_dbm.is_empty()
    }
}

/// Extracts one peak per distinct injected power.
///
/// `schedule[j]` is the power applied during spectrogram column `j`; columns
/// sharing a power are averaged in linear power first. Any power without an
/// in-band peak is an error.
pub fn track_peaks(spg: &Spectrogram, schedule: &[f64], band: (f64, f64)) -> Result<PeakTrack> {
    let (mut p, mut f, mut w, mut c) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (power, est) in per_power_estimates(spg, schedule, band)? {
        let est = est?;
        p.push(power);
        f.push(est.freq);
        w.push(est.linewidth_3db);
        c.push(est.edge_clamped);
    }
    PeakTrack::new(p, f, w, c)
}

/// Result of [`track_resolved_peaks`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutcome {
    /// `None` when no power produced an in-band peak.
    pub track: Option<PeakTrack>,
    /// Powers whose averaged column had nothing above the noise floor in band.
    pub unresolved_dbm: Vec<f64>,
}

/// Like [`track_peaks`], but powers without an in-band peak are listed
/// instead of failing the whole track.
pub fn track_resolved_peaks(
    spg: &Spectrogram,
    schedule: &[f64],
    band: (f64, f64),
) -> Result<TrackOutcome> {
    let (mut p, mut f, mut w, mut c) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut unresolved = Vec::new();
    for (power, est) in per_power_estimates(spg, schedule, band)? {
        match est {
            Ok(est) => {
                p.push(power);
                f.push(est.freq);
                w.push(est.linewidth_3db);
                c.push(est.edge_clamped);
            }
            Err(Error::NoPeak { .. }) => unresolved.push(power),
            Err(e) => return Err(e),
        }
    }
    let track = if p.is_empty() {
        None
    } else {
        Some(PeakTrack::new(p, f, w, c)?)
    };
    Ok(TrackOutcome {
        track,
        unresolved_dbm: unresolved,
    })
}

fn per_power_estimates(
    spg: &Spectrogram,
    schedule: &[f64],
    band: (f64, f64),
) -> Result<Vec<(f64, Result<PeakEstimate>)>> {
    let (powers, columns) = average_by_power(spg, schedule)?;
    Ok(powers
        .into_iter()
        .zip(columns)
        .map(|(p, col)| (p, extract_peak(&col, spg.freq_axis(), band)))
        .collect())
}

/// Averages (in linear power) all columns that share a scheduled power.
///
/// Returns the sorted distinct powers and one dB column per power.
pub fn average_by_power(spg: &Spectrogram, schedule: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if schedule.len() != spg.n_frames() {
        return Err(Error::invalid(format!(
            "schedule has {} entries for {} spectrogram columns",
            schedule.len(),
            spg.n_frames()
        )));
    }
    if schedule.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("schedule powers must be finite"));
    }
    let mut powers: Vec<f64> = schedule.to_vec();
    powers.sort_by(|a, b| a.total_cmp(b));
    powers.dedup();

    let bins = spg.n_bins();
    let mut columns = Vec::with_capacity(powers.len());
    for &p in &powers {
        let mut acc = vec![0.0; bins];
        let mut count = 0usize;
        for (j, _) in schedule.iter().enumerate().filter(|(_, &s)| s == p) {
            for (a, &v) in acc.iter_mut().zip(spg.column(j)) {
                *a += 10f64.powf(v / 10.0);
            }
            count += 1;
        }
        columns.push(
            acc.iter()
                .map(|&s| {
                    let mean = s / count as f64;
                    if mean > 0.0 {
                        (10.0 * mean.log10()).max(DB_FLOOR)
                    } else {
                        DB_FLOOR
                    }
                })
                .collect(),
        );
    }
    Ok((powers, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{
        linear_phase_trajectory, synthesize_baseband, OscillatorParams, SoftPullModel,
    };
    use crate::signal::stft;

    const FS: f64 = 2e6;

    fn tone_columns(freqs: &[f64], frames_per: usize) -> Spectrogram {
        let params = OscillatorParams::from_detuning(5.489e9, 131e3, 0.0).unwrap();
        let mut cols = Vec::new();
        let mut times = Vec::new();
        let mut freq_axis = Vec::new();
        let mut t = 0.0;
        for &f in freqs {
            let traj =
                linear_phase_trajectory(f, 0.0, 1.0 / FS, 4096 + 1024 * (frames_per - 1)).unwrap();
            let spg = stft(&synthesize_baseband(&params, &traj).unwrap(), 4096, 1024).unwrap();
            for j in 0..spg.n_frames() {
                cols.push(spg.column(j).to_vec());
                times.push(t);
                t += 1e-3;
            }
            freq_axis = spg.freq_axis().to_vec();
        }
        Spectrogram::from_columns(times, freq_axis, &cols).unwrap()
    }

    #[test]
    fn stationary_tone_gives_flat_track() {
        let spg = tone_columns(&[131e3; 5], 3);
        let schedule: Vec<f64> = (0..15).map(|j| -50.0 + (j / 3) as f64).collect();
        let track = track_peaks(&spg, &schedule, (10e3, 250e3)).unwrap();
        assert_eq!(track.len(), 5);
        for &f in track.f_peak() {
            assert!((f - 131e3).abs() < 0.1 * spg.bin_width());
        }
    }

    #[test]
    fn recovers_soft_model_trajectory() {
        let model = SoftPullModel::new(131e3, 3000.0).unwrap();
        let powers: Vec<f64> = (0..16).map(|i| -50.0 + 2.0 * i as f64).collect();
        let freqs: Vec<f64> = powers.iter().map(|&p| model.detuning_at_dbm(p)).collect();
        let spg = tone_columns(&freqs, 2);
        // Shuffled schedule order must not matter.
        let schedule: Vec<f64> = powers.iter().flat_map(|&p| [p, p]).collect();
        let track = track_peaks(&spg, &schedule, (10e3, 250e3)).unwrap();
        assert_eq!(track.p_inj_dbm(), &powers[..]);
        for (got, want) in track.f_peak().iter().zip(&freqs) {
            assert!((got - want).abs() <= spg.bin_width(), "{got} vs {want}");
        }
    }

    #[test]
    fn schedule_mismatch_rejected() {
        let spg = tone_columns(&[100e3], 2);
        assert!(track_peaks(&spg, &[0.0], (10e3, 250e3)).is_err());
    }

    #[test]
    fn output_sorted_by_power() {
        let spg = tone_columns(&[60e3, 120e3], 1);
        let track = track_peaks(&spg, &[-10.0, -30.0], (10e3, 250e3)).unwrap();
        assert_eq!(track.p_inj_dbm(), &[-30.0, -10.0]);
        assert!((track.f_peak()[0] - 120e3).abs() < 500.0);
    }

    #[test]
    fn invariants_enforced() {
        assert!(PeakTrack::from_points(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).is_err());
        assert!(PeakTrack::from_points(vec![0.0, 1.0], vec![1.0, 1.0], 0.0).is_err());
        assert!(PeakTrack::new(vec![0.0], vec![1.0], vec![1.0], vec![]).is_err());
    }

    #[test]
    fn silent_columns_are_listed_not_fatal() {
        let tone = tone_columns(&[80e3], 1);
        let silent = vec![DB_FLOOR; tone.n_bins()];
        let spg = Spectrogram::from_columns(
            vec![0.0, 1e-3],
            tone.freq_axis().to_vec(),
            &[tone.column(0).to_vec(), silent],
        )
        .unwrap();
        let schedule = [-30.0, -20.0];
        assert!(matches!(
            track_peaks(&spg, &schedule, (10e3, 250e3)),
            Err(Error::NoPeak { .. })
        ));
        let out = track_resolved_peaks(&spg, &schedule, (10e3, 250e3)).unwrap();
        assert_eq!(out.unresolved_dbm, vec![-20.0]);
        assert_eq!(out.track.unwrap().p_inj_dbm(), &[-30.0]);
    }
}
