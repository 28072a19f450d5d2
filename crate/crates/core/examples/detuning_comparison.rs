//! Two free-running detunings under the same coupling: the smaller one pulls
//! earlier and responds more strongly.
//!
//! cargo run --release --example detuning_comparison

use pullsim::experiment::{run_detuning_comparison, ScenarioConfig};
use pullsim::oscillator::OscillatorParams;

fn main() -> pullsim::Result<()> {
    let large = ScenarioConfig::default();
    let small = ScenarioConfig {
        oscillator: OscillatorParams::from_detuning(5.489e9, 96e3, large.oscillator.kappa0())?,
        ..large.clone()
    };
    let cmp = run_detuning_comparison(&small, &large)?;
    print!(
        "{}",
        pullsim::cli::comparison_text(&small, &large, &cmp.report)
    );

    let (a, b) = (
        cmp.first.atomic_if.responsivity,
        cmp.second.atomic_if.responsivity,
    );
    if let (Some(a), Some(b)) = (a, b) {
        println!(
            "{:>8} {:>14} {:>14}",
            "P (dBm)", "96 kHz (Hz/dB)", "131 kHz (Hz/dB)"
        );
        for i in (0..a.p_inj_dbm.len()).step_by(3) {
            println!(
                "{:>8.1} {:>14.0} {:>14.0}",
                a.p_inj_dbm[i], a.hz_per_db[i], b.hz_per_db[i]
            );
        }
    }
    Ok(())
}
