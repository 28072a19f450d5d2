use crate::error::{Error, Result};

/// Converts a power level in dBm to linear milliwatts.
pub fn dbm_to_mw(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0)
}

/// Converts linear milliwatts to dBm. Nonpositive power has no dB value.
pub fn mw_to_dbm(p_mw: f64) -> Result<f64> {
    if !(p_mw > 0.0) || !p_mw.is_finite() {
        return Err(Error::invalid(format!(
            "power must be positive and finite to express in dBm, got {p_mw} mW"
        )));
    }
    Ok(10.0 * p_mw.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_points() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(-30.0) - 1e-3).abs() < 1e-18);
        assert!((mw_to_dbm(100.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(mw_to_dbm(0.0).is_err());
        assert!(mw_to_dbm(-1.0).is_err());
        assert!(mw_to_dbm(f64::NAN).is_err());
    }

    #[test]
    fn round_trip_over_range() {
        let mut p = -120.0;
        while p <= 30.0 {
            let back = mw_to_dbm(dbm_to_mw(p)).unwrap();
            assert!(
                (back - p).abs() <= 1e-12 * p.abs().max(1.0),
                "{p} -> {back}"
            );
            p += 0.25;
        }
    }

    proptest! {
        #[test]
        fn inverse_pair(p in -120.0f64..30.0) {
            let mw = dbm_to_mw(p);
            let back = dbm_to_mw(mw_to_dbm(mw).unwrap());
            prop_assert!((back - mw).abs() <= 1e-12 * mw);
        }
    }
}
