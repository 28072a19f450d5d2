//! Write a sweep as CSV datasets and figures, read the IF matrix back and
//! re-derive its track, as one would with externally published data.
//!
//! cargo run --release --example dataset_roundtrip [output-dir]

use std::path::PathBuf;

use pullsim::analysis::{fit_adler_model, track_peaks};
use pullsim::experiment::{run_power_sweep, ScenarioConfig, SweepSpec};
use pullsim::io::{pgm_heatmap, read_spectrogram_csv, write_atomic, DatasetPaths};

fn main() -> pullsim::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pullsim-roundtrip"));
    let cfg = ScenarioConfig {
        sweep: SweepSpec {
            start_dbm: -40.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let result = run_power_sweep(&cfg)?;
    let manifest = pullsim::cli::write_sweep_outputs(&dir, &cfg, &result)?;
    print!("{manifest}");

    let ds = read_spectrogram_csv(&DatasetPaths::in_dir(&dir, "if_spectrogram", "power"))?;
    write_atomic(&dir.join("if_spectrogram.pgm"), &pgm_heatmap(&ds.power_db))?;
    let track = track_peaks(&ds.to_spectrogram()?, ds.column_axis.values(), cfg.band)?;
    let fit = fit_adler_model(&track)?;
    println!(
        "re-read {}x{} matrix from {}: df0 = {:.1} Hz, beta = {:.3} /mW",
        ds.power_db.nrows(),
        ds.power_db.ncols(),
        dir.display(),
        fit.delta_f0_hat,
        fit.beta_hat
    );
    if let Some(direct) = &result.atomic_if.fit {
        println!(
            "in-memory fit:  df0 = {:.1} Hz, beta = {:.3} /mW",
            direct.delta_f0_hat, direct.beta_hat
        );
    }
    Ok(())
}
