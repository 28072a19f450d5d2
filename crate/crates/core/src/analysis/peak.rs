use crate::error::{Error, Result};
use crate::signal::DB_FLOOR;

/// Dominant in-band spectral line of one spectrum column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEstimate {
    pub freq: f64,
    pub linewidth_3db: f64,
    pub peak_db: f64,
    /// A -3 dB crossing fell outside the band and the width was clamped to the edge.
    pub edge_clamped: bool,
}

/// Finds the strongest bin in `band`, refines it with a parabola on the dB
/// values, and measures the full width between the -3 dB crossings.
pub fn extract_peak(
    spectrum_db: &[f64],
    freq_axis: &[f64],
    band: (f64, f64),
) -> Result<PeakEstimate> {
    if spectrum_db.len() != freq_axis.len() {
        return Err(Error::invalid(format!(
            "spectrum has {} bins but frequency axis has {}",
            spectrum_db.len(),
            freq_axis.len()
        )));
    }
    let (lo, hi) = band;
    if !(lo < hi) {
        return Err(Error::invalid(format!("degenerate band [{lo}, {hi}] Hz")));
    }
    let (first, last) = match (freq_axis.first(), freq_axis.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::invalid("empty frequency axis")),
    };
    if lo < first || hi > last {
        return Err(Error::invalid(format!(
            "band [{lo}, {hi}] Hz lies outside the frequency axis [{first}, {last}] Hz"
        )));
    }
    let start = freq_axis.partition_point(|&f| f < lo);
    let end = freq_axis.partition_point(|&f| f <= hi);
    if end < start + 5 {
        return Err(Error::invalid(format!(
            "band [{lo}, {hi}] Hz holds {} bins, need at least 5",
            end.saturating_sub(start)
        )));
    }
    let spec = &spectrum_db[start..end];
    let axis = &freq_axis[start..end];

    let (k, &peak) = spec
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("band is non-empty");
    if peak <= DB_FLOOR + 3.0 {
        return Err(Error::NoPeak { lo, hi });
    }

    let step = axis[1] - axis[0];
    let (mut freq, mut peak_db) = (axis[k], peak);
    if k > 0 && k + 1 < spec.len() {
        let (a, b, c) = (spec[k - 1], spec[k], spec[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            let offset = 0.5 * (a - c) / denom;
            freq = axis[k] + offset * step;
            peak_db = b - 0.25 * (a - c) * offset;
        }
    }

    let level = peak_db - 3.0;
    let mut clamped = false;
    let cross = |i: usize, j: usize| -> f64 {
        // Linear interpolation between an above-level bin i and below-level bin j.
        let t = (spec[i] - level) / (spec[i] - spec[j]);
        axis[i] + t * (axis[j] - axis[i])
    };
    let left = match (0..k).rev().find(|&i| spec[i] < level) {
        Some(i) => cross(i + 1, i),
        None => {
            clamped = true;
            axis[0]
        }
    };
    let right = match (k + 1..spec.len()).find(|&i| spec[i] < level) {
        Some(i) => cross(i - 1, i),
        None => {
            clamped = true;
            axis[spec.len() - 1]
        }
    };
    // A lone in-band bin at the edge still has a resolution-limited width.
    let linewidth_3db = (right - left).max(step * 1e-6);

    Ok(PeakEstimate {
        freq,
        linewidth_3db,
        peak_db,
        edge_clamped: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{periodogram, Window};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    const N: usize = 1024;
    const FS: f64 = 1024.0;

    fn tone_column(bin: f64) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<Complex64> = (0..N)
            .map(|i| Complex64::from_polar(1.0, TAU * bin * i as f64 / N as f64))
            .collect();
        let p = periodogram(&x, Window::Hann);
        let db = p.iter().map(|v| (10.0 * v.log10()).max(DB_FLOOR)).collect();
        let axis = (0..N)
            .map(|j| (j as f64 - (N / 2) as f64) * FS / N as f64)
            .collect();
        (db, axis)
    }

    #[test]
    fn exact_bin_tone() {
        let (db, axis) = tone_column(100.0);
        let est = extract_peak(&db, &axis, (50.0, 200.0)).unwrap();
        assert_eq!(est.freq, 100.0);
        assert!(est.linewidth_3db <= 2.0 && est.linewidth_3db > 0.0);
        assert!(!est.edge_clamped);
    }

    #[test]
    fn fractional_offsets_within_tenth_of_bin() {
        let mut worst: f64 = 0.0;
        for i in 0..=50 {
            let frac = i as f64 / 100.0;
            let (db, axis) = tone_column(100.0 + frac);
            let est = extract_peak(&db, &axis, (50.0, 200.0)).unwrap();
            worst = worst.max((est.freq - (100.0 + frac)).abs());
        }
        assert!(worst < 0.1, "worst interpolation error {worst} bins");
        let (db, axis) = tone_column(100.3);
        let est = extract_peak(&db, &axis, (50.0, 200.0)).unwrap();
        assert!((est.freq - 100.3).abs() < 0.1);
    }

    #[test]
    fn lorentzian_width_recovered() {
        let axis: Vec<f64> = (0..2001).map(|i| i as f64 * 100.0).collect();
        for width in [2e3, 5e3, 20e3] {
            let f0 = 83_333.0;
            let db: Vec<f64> = axis
                .iter()
                .map(|f| {
                    let x = 2.0 * (f - f0) / width;
                    -10.0 * (1.0 + x * x).log10()
                })
                .collect();
            let est = extract_peak(&db, &axis, (10e3, 190e3)).unwrap();
            assert!(
                (est.linewidth_3db / width - 1.0).abs() < 0.05,
                "{}",
                est.linewidth_3db
            );
            assert!((est.freq - f0).abs() < 100.0);
        }
    }

    #[test]
    fn clamps_at_band_edge() {
        let axis: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let db: Vec<f64> = axis
            .iter()
            .map(|f| -0.01 * (f - 20.0) * (f - 20.0))
            .collect();
        let est = extract_peak(&db, &axis, (15.0, 60.0)).unwrap();
        assert!(est.edge_clamped);
        assert!((est.freq - 20.0).abs() < 1e-9);
        assert!(est.linewidth_3db > 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        let axis: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let db = vec![-10.0; 100];
        assert!(extract_peak(&db, &axis, (10.0, 12.0)).is_err());
        assert!(extract_peak(&db, &axis, (50.0, 50.0)).is_err());
        assert!(extract_peak(&db, &axis, (-5.0, 50.0)).is_err());
        assert!(extract_peak(&db[..50], &axis, (10.0, 40.0)).is_err());
        let floor = vec![DB_FLOOR; 100];
        assert!(matches!(
            extract_peak(&floor, &axis, (10.0, 40.0)),
            Err(Error::NoPeak { .. })
        ));
    }

    proptest! {
        #[test]
        fn offset_invariance(offset in -80.0f64..80.0, frac in 0.0f64..1.0) {
            let (db, axis) = tone_column(120.0 + frac);
            let shifted: Vec<f64> = db.iter().map(|v| v + offset).collect();
            let a = extract_peak(&db, &axis, (60.0, 300.0)).unwrap();
            let b = extract_peak(&shifted, &axis, (60.0, 300.0)).unwrap();
            prop_assert!((a.freq - b.freq).abs() < 1e-9);
            prop_assert!((a.linewidth_3db - b.linewidth_3db).abs() < 1e-9);
        }
    }
}
