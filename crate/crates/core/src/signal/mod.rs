//! Time-series plumbing: units, the IF band-pass chain and spectrograms.

mod filter;
mod series;
mod spectrogram;
mod units;

pub use filter::{bandpass, Bandpass, BandpassSpec, Biquad};
pub use series::{Sample, TimeSeries};
pub use spectrogram::{periodogram, stft, Spectrogram, Window, DB_FLOOR};
pub use units::{dbm_to_mw, mw_to_dbm};
