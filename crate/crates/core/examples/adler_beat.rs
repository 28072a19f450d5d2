//! Beat frequency of the injection-pulled oscillator against the analytic
//! Adler result, and locking above threshold.
//!
//! cargo run --example adler_beat

use pullsim::oscillator::{
    beat_frequency_analytic, integrate_adler, locked_phase, OscillatorParams,
};

fn main() -> pullsim::Result<()> {
    let delta_f0 = 131e3;
    println!(
        "{:>10} {:>14} {:>14}",
        "kappa/df0", "numeric (Hz)", "analytic (Hz)"
    );
    for ratio in [0.0, 0.3, 0.6, 0.9, 0.99, 1.05] {
        // kappa0 is the coupling at 1 mW, so 0 dBm gives kappa = kappa0.
        let params = OscillatorParams::from_detuning(5.489e9, delta_f0, ratio * delta_f0)?;
        let traj = integrate_adler(&params, 0.0, 5e-3, 2e-8, 0)?;
        println!(
            "{ratio:>10.2} {:>14.1} {:>14.1}",
            traj.mean_beat_frequency(),
            beat_frequency_analytic(delta_f0, ratio * delta_f0)
        );
    }
    let kappa = 1.05 * delta_f0;
    if let Some(phi) = locked_phase(delta_f0, kappa) {
        println!("locked phase at kappa = 1.05 df0: {phi:.6} rad");
    }
    Ok(())
}
