//! Fit the softened pulling law to a noisy track and derive its responsivity.
//!
//! cargo run --example fit_pulling_law

use pullsim::analysis::{fit_adler_model, responsivity_numeric, PeakTrack};
use pullsim::oscillator::{responsivity_analytic, SoftPullModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> pullsim::Result<()> {
    let truth = SoftPullModel::new(131e3, 0.8)?;
    let powers: Vec<f64> = (0..30).map(|i| -10.0 + 21.0 * i as f64 / 29.0).collect();
    let noise = Normal::new(1.0, 0.002).expect("valid normal");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f: Vec<f64> = powers
        .iter()
        .map(|&p| truth.detuning_at_dbm(p) * noise.sample(&mut rng))
        .collect();
    let track = PeakTrack::from_points(powers, f, 500.0)?;

    let fit = fit_adler_model(&track)?;
    println!(
        "df0 = {:.1} +/- {:.1} Hz, beta = {:.4} +/- {:.4} /mW, rms residual {:.1} Hz, {} iterations",
        fit.delta_f0_hat,
        fit.covariance[0][0].sqrt(),
        fit.beta_hat,
        fit.covariance[1][1].sqrt(),
        fit.residual_rms,
        fit.n_iterations
    );

    let curve = responsivity_numeric(&track)?;
    let model = fit.model()?;
    for (p, r) in curve.p_inj_dbm.iter().zip(&curve.hz_per_db).step_by(5) {
        println!(
            "{p:>6.1} dBm: numeric {:>7.2} kHz/dB, fitted law {:>7.2} kHz/dB",
            r / 1e3,
            responsivity_analytic(&model, *p) / 1e3
        );
    }
    Ok(())
}
