//! Observables extracted from spectrograms: peak tracks with 3 dB widths,
//! fits of the softened pulling law, and responsivity curves.

mod fit;
mod peak;
mod responsivity;
mod track;

pub use fit::{fit_adler_model, fit_adler_model_with, AdlerFit, FitOptions};
pub use peak::{extract_peak, PeakEstimate};
pub use responsivity::{responsivity_from_points, responsivity_numeric, ResponsivityCurve};
pub use track::{average_by_power, track_peaks, track_resolved_peaks, PeakTrack, TrackOutcome};
