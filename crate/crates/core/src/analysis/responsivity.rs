use crate::error::{Error, Result};

use super::track::PeakTrack;

/// `|df/dP|` in Hz per dB along a track's power axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsivityCurve {
    pub p_inj_dbm: Vec<f64>,
    pub hz_per_db: Vec<f64>,
}

impl ResponsivityCurve {
    /// Largest value and the power where it occurs.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.p_inj_dbm
            .iter()
            .zip(&self.hz_per_db)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(&p, &r)| (p, r))
    }
}

/// Central differences inside, one-sided differences at both ends.
pub fn responsivity_numeric(track: &PeakTrack) -> Result<ResponsivityCurve> {
    responsivity_from_points(track.p_inj_dbm(), track.f_peak())
}

pub fn responsivity_from_points(p: &[f64], f: &[f64]) -> Result<ResponsivityCurve> {
    let n = p.len();
    if n < 3 || f.len() != n {
        return Err(Error::invalid(format!(
            "responsivity needs at least 3 paired points, got {n} powers and {} frequencies",
            f.len()
        )));
    }
    if p.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("power axis must be strictly increasing"));
    }
    let slope = |a: usize, b: usize| ((f[b] - f[a]) / (p[b] - p[a])).abs();
    let hz_per_db = (0..n)
        .map(|i| match i {
            0 => slope(0, 1),
            i if i == n - 1 => slope(n - 2, n - 1),
            i => slope(i - 1, i + 1),
        })
        .collect();
    Ok(ResponsivityCurve {
        p_inj_dbm: p.to_vec(),
        hz_per_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{responsivity_analytic, SoftPullModel};

    #[test]
    fn flat_track_has_zero_responsivity() {
        let track = PeakTrack::from_points(vec![-3.0, -2.0, -1.0, 0.0], vec![5e4; 4], 1.0).unwrap();
        let r = responsivity_numeric(&track).unwrap();
        assert!(r.hz_per_db.iter().all(|&v| v == 0.0));
        assert_eq!(r.p_inj_dbm.len(), 4);
    }

    #[test]
    fn matches_analytic_derivative() {
        let m = SoftPullModel::new(131e3, 0.8).unwrap();
        let p: Vec<f64> = (0..=80).map(|i| -20.0 + 0.5 * i as f64).collect();
        let f: Vec<f64> = p.iter().map(|&x| m.detuning_at_dbm(x)).collect();
        let r = responsivity_from_points(&p, &f).unwrap();
        for i in 1..p.len() - 1 {
            let an = responsivity_analytic(&m, p[i]);
            if an > 1e-3 * 131e3 * 0.0443 {
                assert!(
                    (r.hz_per_db[i] / an - 1.0).abs() < 0.02,
                    "at {} dBm: {} vs {an}",
                    p[i],
                    r.hz_per_db[i]
                );
            }
            assert!(r.hz_per_db[i] >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(responsivity_from_points(&[0.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(responsivity_from_points(&[0.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(responsivity_from_points(&[0.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn kappa_matched_detunings_order_responsivity() {
        // Matching the small-power slope of the ideal Adler law gives beta = kappa0^2 / df0^2.
        let kappa0: f64 = 300e3;
        let p: Vec<f64> = (0..=40).map(|i| -40.0 + 0.5 * i as f64).collect();
        let curve = |d0: f64| {
            let m = SoftPullModel::new(d0, (kappa0 / d0).powi(2)).unwrap();
            let f: Vec<f64> = p.iter().map(|&x| m.detuning_at_dbm(x)).collect();
            responsivity_from_points(&p, &f).unwrap()
        };
        let (small, large) = (curve(96e3), curve(131e3));
        let top = p.len() - 1;
        assert!(small.hz_per_db[top] > large.hz_per_db[top]);
    }
}
