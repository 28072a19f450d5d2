//! Probe absorption of the four-level ladder versus coupling detuning, with the
//! Autler-Townes doublet opened by the microwave field.
//!
//! cargo run --example eit_autler_townes

use std::f64::consts::TAU;

use pullsim::atoms::{
    lindblad_steady_state, normalized_absorption, transparency_peaks, weak_probe_coherence,
    DriveFields, LadderSystem,
};

fn main() -> pullsim::Result<()> {
    let sys = LadderSystem::default();
    for omega_rf_mhz in [0.0, 10.0, 30.0] {
        let fields = DriveFields {
            omega_rf: TAU * omega_rf_mhz * 1e6,
            ..Default::default()
        };
        let span = TAU * 40e6;
        let grid: Vec<f64> = (0..=8000)
            .map(|k| -span + 2.0 * span * k as f64 / 8000.0)
            .collect();
        let peaks: Vec<String> = transparency_peaks(&sys, &fields, &grid)
            .iter()
            .map(|d| format!("{:.3}", d / TAU / 1e6))
            .collect();
        let on_res = normalized_absorption(&sys, &fields);
        println!(
            "Omega_rf/2pi = {omega_rf_mhz:>4} MHz: absorption at line centre {on_res:.4}, transparency at [{}] MHz",
            peaks.join(", ")
        );
    }

    let fields = DriveFields {
        omega_p: sys.big_gamma2 / 100.0,
        omega_rf: TAU * 5e6,
        delta_p: TAU * 1e6,
        ..Default::default()
    };
    let rho = lindblad_steady_state(&sys, &fields)?;
    println!(
        "weak-probe rho12 = {:.4e}, density-matrix rho12 = {:.4e}",
        weak_probe_coherence(&sys, &fields),
        rho.probe_coherence()
    );
    Ok(())
}
