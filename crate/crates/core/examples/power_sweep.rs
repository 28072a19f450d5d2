//! Full measurement chain at the baseline scenario: the pulled oscillator
//! drives the atoms, the IF is band-passed and tracked across injected power.
//!
//! cargo run --release --example power_sweep

use pullsim::experiment::{rf_atomic_consistency, run_power_sweep, ScenarioConfig};

fn main() -> pullsim::Result<()> {
    let cfg = ScenarioConfig::default();
    let result = run_power_sweep(&cfg)?;
    let report = rf_atomic_consistency(&result);
    println!(
        "{:>8} {:>12} {:>12} {:>10}",
        "P (dBm)", "IF (kHz)", "RF (kHz)", "3 dB (Hz)"
    );
    for row in &report.rows {
        println!(
            "{:>8.1} {:>12.3} {:>12.3} {:>10.0}",
            row.p_inj_dbm,
            row.if_hz / 1e3,
            row.rf_hz / 1e3,
            row.if_linewidth_hz
        );
    }
    if let Some(fit) = &result.atomic_if.fit {
        println!(
            "soft-law fit: df0 = {:.1} Hz, beta = {:.3} /mW, residual {:.0} Hz",
            fit.delta_f0_hat, fit.beta_hat, fit.residual_rms
        );
    }
    for note in &result.diagnostics {
        println!("note: {note}");
    }
    Ok(())
}
