//! The detector chain on its own: band-pass a two-tone record and locate the
//! IF line in a short-time spectrum.
//!
//! cargo run --example readout_chain

use std::f64::consts::TAU;

use pullsim::analysis::extract_peak;
use pullsim::signal::{bandpass, stft, BandpassSpec, TimeSeries};

fn main() -> pullsim::Result<()> {
    let fs = 2e6;
    let n = 40_000;
    // A 1 kHz drift term plus the 104.8 kHz IF line.
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            5.0 * (TAU * 1e3 * t).sin() + (TAU * 104.8e3 * t).sin()
        })
        .collect();
    let raw = TimeSeries::new(fs, 0.0, samples)?;
    let spec = BandpassSpec::default();
    let filtered = bandpass(&raw, spec)?;
    println!(
        "band-pass {} - {} kHz, order {}",
        spec.f_lo / 1e3,
        spec.f_hi / 1e3,
        spec.order
    );

    for (label, ts) in [("raw", &raw), ("filtered", &filtered)] {
        let spg = stft(ts, 4096, 1024)?;
        let col = spg.column(spg.n_frames() / 2);
        let low = extract_peak(col, spg.freq_axis(), (200.0, 5e3))?;
        let line = extract_peak(col, spg.freq_axis(), (10e3, 250e3))?;
        println!(
            "{label:>8}: 1 kHz term {:.1} dB, IF line {:.2} kHz at {:.1} dB (3 dB width {:.0} Hz)",
            low.peak_db,
            line.freq / 1e3,
            line.peak_db,
            line.linewidth_3db
        );
    }
    Ok(())
}
