use super::config::ScenarioConfig;
use super::sweep::{run_power_sweep, SweepResult};
use crate::analysis::PeakTrack;
use crate::error::{Error, Result};

/// Fractional shift of the IF below `|delta_f0|` that marks strong pulling.
pub const ONSET_FRACTION: f64 = 0.1;

/// Which of two scenarios wins a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    First,
    Second,
    Tie,
    /// At least one side has no value to compare.
    Undetermined,
}

impl Ordering {
    pub fn swapped(self) -> Self {
        match self {
            Ordering::First => Ordering::Second,
            Ordering::Second => Ordering::First,
            other => other,
        }
    }

    fn larger(a: Option<f64>, b: Option<f64>, tie: f64) -> Self {
        match (a, b) {
            (Some(a), Some(b)) if (a - b).abs() <= tie => Ordering::Tie,
            (Some(a), Some(b)) if a > b => Ordering::First,
            (Some(_), Some(_)) => Ordering::Second,
            _ => Ordering::Undetermined,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Lowest power whose IF has moved `ONSET_FRACTION * |delta_f0|` from the free-running value.
    pub onset_dbm: [Option<f64>; 2],
    /// Highest power at which both IF tracks are resolved.
    pub reference_dbm: Option<f64>,
    /// `|delta_f0| - f_IF` at the reference power, Hz.
    pub shift_hz: [Option<f64>; 2],
    /// Responsivity at the reference power, Hz/dB.
    pub responsivity_hz_per_db: [Option<f64>; 2],
    /// `First` when the first scenario reaches strong pulling at lower power.
    pub onset_order: Ordering,
    pub shift_order: Ordering,
    pub responsivity_order: Ordering,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetuningComparison {
    pub first: SweepResult,
    pub second: SweepResult,
    pub report: ComparisonReport,
}

fn onset(track: Option<&PeakTrack>, delta_f0: f64) -> Option<f64> {
    let t = track?;
    t.p_inj_dbm()
        .iter()
        .zip(t.f_peak())
        .find(|(_, &f)| delta_f0.abs() - f >= ONSET_FRACTION * delta_f0.abs())
        .map(|(&p, _)| p)
}

fn value_at(p_axis: &[f64], values: &[f64], p: f64) -> Option<f64> {
    p_axis.iter().position(|&x| x == p).map(|i| values[i])
}

/// Runs two sweeps that differ only in detuning and compares their pulling.
///
/// Both configurations must share the power axis and the coupling `kappa0`.
pub fn run_detuning_comparison(
    first: &ScenarioConfig,
    second: &ScenarioConfig,
) -> Result<DetuningComparison> {
    if first.sweep.powers() != second.sweep.powers() {
        return Err(Error::invalid(
            "detuning comparison needs identical sweep axes",
        ));
    }
    if first.oscillator.kappa0() != second.oscillator.kappa0() {
        return Err(Error::invalid(format!(
            "detuning comparison needs identical kappa0, got {} and {}",
            first.oscillator.kappa0(),
            second.oscillator.kappa0()
        )));
    }
    let a = run_power_sweep(first)?;
    let b = run_power_sweep(second)?;
    let report = compare_sweeps(
        &a,
        first.delta_f0(),
        &b,
        second.delta_f0(),
        first.sweep.step_db,
    );
    Ok(DetuningComparison {
        first: a,
        second: b,
        report,
    })
}

fn compare_sweeps(
    a: &SweepResult,
    df_a: f64,
    b: &SweepResult,
    df_b: f64,
    step_db: f64,
) -> ComparisonReport {
    let ta = a.atomic_if.track.as_ref();
    let tb = b.atomic_if.track.as_ref();
    let onset_dbm = [onset(ta, df_a), onset(tb, df_b)];
    let onset_order = match onset_dbm {
        [Some(x), Some(y)] if x == y => Ordering::Tie,
        [Some(x), Some(y)] if x < y => Ordering::First,
        [Some(_), Some(_)] => Ordering::Second,
        [Some(_), None] => Ordering::First,
        [None, Some(_)] => Ordering::Second,
        [None, None] => Ordering::Tie,
    };

    let reference_dbm = match (ta, tb) {
        (Some(ta), Some(tb)) => ta
            .p_inj_dbm()
            .iter()
            .rev()
            .copied()
            .find(|p| tb.p_inj_dbm().contains(p)),
        _ => None,
    };
    let shift = |t: Option<&PeakTrack>, df: f64| {
        let t = t?;
        value_at(t.p_inj_dbm(), t.f_peak(), reference_dbm?).map(|f| df.abs() - f)
    };
    let resp = |r: &SweepResult| {
        let c = r.atomic_if.responsivity.as_ref()?;
        value_at(&c.p_inj_dbm, &c.hz_per_db, reference_dbm?)
    };
    let shift_hz = [shift(ta, df_a), shift(tb, df_b)];
    let responsivity_hz_per_db = [resp(a), resp(b)];
    let bin = a.atomic_if.spectrogram.bin_width();
    ComparisonReport {
        onset_dbm,
        reference_dbm,
        shift_hz,
        responsivity_hz_per_db,
        onset_order,
        shift_order: Ordering::larger(shift_hz[0], shift_hz[1], 0.5 * bin),
        responsivity_order: Ordering::larger(
            responsivity_hz_per_db[0],
            responsivity_hz_per_db[1],
            0.5 * bin / step_db,
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub p_inj_dbm: f64,
    pub rf_hz: f64,
    pub if_hz: f64,
    pub deviation_hz: f64,
    pub if_linewidth_hz: f64,
    pub exceeds_linewidth: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
    pub diagnostic: Option<String>,
}

impl ConsistencyReport {
    pub fn max_deviation(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.deviation_hz).reduce(f64::max)
    }

    pub fn all_within_linewidth(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| !r.exceeds_linewidth)
    }
}

/// Compares the RF offset track with the atomic IF track power by power.
pub fn rf_atomic_consistency(result: &SweepResult) -> ConsistencyReport {
    let (rf, atomic) = match (&result.rf.track, &result.atomic_if.track) {
        (Some(rf), Some(atomic)) => (rf, atomic),
        (rf, atomic) => {
            let missing: Vec<&str> = [("rf", rf.is_none()), ("if", atomic.is_none())]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(n, _)| *n)
                .collect();
            return ConsistencyReport {
                rows: Vec::new(),
                diagnostic: Some(format!("no in-band peak track for: {}", missing.join(", "))),
            };
        }
    };
    let rows: Vec<ConsistencyRow> = atomic
        .p_inj_dbm()
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| {
            let rf_hz = value_at(rf.p_inj_dbm(), rf.f_peak(), p)?;
            let if_hz = atomic.f_peak()[i];
            let width = atomic.linewidth_3db()[i];
            let deviation = (rf_hz - if_hz).abs();
            Some(ConsistencyRow {
                p_inj_dbm: p,
                rf_hz,
                if_hz,
                deviation_hz: deviation,
                if_linewidth_hz: width,
                exceeds_linewidth: deviation > width,
            })
        })
        .collect();
    let diagnostic = rows
        .is_empty()
        .then(|| "rf and if tracks share no resolved power".to_string());
    ConsistencyReport { rows, diagnostic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::SweepSpec;
    use crate::oscillator::OscillatorParams;

    fn cfg(delta_f0: f64) -> ScenarioConfig {
        ScenarioConfig {
            oscillator: OscillatorParams::from_detuning(5.489e9, delta_f0, 786e3).unwrap(),
            sweep: SweepSpec {
                start_dbm: -32.0,
                stop_dbm: -20.0,
                step_db: 2.0,
                dwell_s: 8.2e-3,
                transient_fraction: 0.2,
            },
            ..Default::default()
        }
    }

    #[test]
    fn smaller_detuning_pulls_harder() {
        let cmp = run_detuning_comparison(&cfg(96e3), &cfg(131e3)).unwrap();
        let r = &cmp.report;
        assert_eq!(r.reference_dbm, Some(-20.0));
        assert_eq!(r.onset_order, Ordering::First);
        assert_eq!(r.shift_order, Ordering::First);
        assert_eq!(r.responsivity_order, Ordering::First);

        let swapped = run_detuning_comparison(&cfg(131e3), &cfg(96e3))
            .unwrap()
            .report;
        assert_eq!(swapped.onset_order, r.onset_order.swapped());
        assert_eq!(swapped.shift_order, r.shift_order.swapped());
        assert_eq!(swapped.responsivity_order, r.responsivity_order.swapped());
        assert_eq!(swapped.shift_hz, [r.shift_hz[1], r.shift_hz[0]]);
    }

    #[test]
    fn identical_detunings_tie() {
        let r = run_detuning_comparison(&cfg(131e3), &cfg(131e3))
            .unwrap()
            .report;
        assert_eq!(r.onset_order, Ordering::Tie);
        assert_eq!(r.shift_order, Ordering::Tie);
        assert_eq!(r.responsivity_order, Ordering::Tie);
    }

    #[test]
    fn mismatched_scenarios_rejected() {
        let mut other = cfg(96e3);
        other.sweep.stop_dbm = -22.0;
        assert!(run_detuning_comparison(&cfg(131e3), &other).is_err());

        let mut other = cfg(96e3);
        other.oscillator = OscillatorParams::from_detuning(5.489e9, 96e3, 500e3).unwrap();
        assert!(run_detuning_comparison(&cfg(131e3), &other).is_err());
    }
}
