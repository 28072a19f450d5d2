//! Datasets, tables, scenario files and figures on disk.
//!
//! Every writer produces bytes that depend only on its input, and files are
//! replaced atomically.

mod config;
mod dataset;
mod plot;
mod tables;
mod text;

pub use config::{
    read_config, resolve_seed, AnalysisSection, AtomsSection, OscillatorSection, ScenarioFile,
    SceneSection, SweepSection, SEED_ENV,
};
pub use dataset::{
    read_axis_csv, read_matrix_csv, read_spectrogram_csv, write_spectrogram_csv, ColumnAxis,
    DatasetPaths, MatrixFile, SpectrogramDataset, FREQ_UNIT,
};
pub use plot::{pgm_heatmap, LinePlot, Series, SeriesStyle};
pub use tables::{
    consistency_csv, fit_report, read_fit_report, read_responsivity_csv, read_track_csv,
    responsivity_csv, track_csv, write_responsivity_csv, write_track_csv, CONSISTENCY_HEADER,
    RESPONSIVITY_HEADER, TRACK_HEADER,
};
pub use text::{fmt_sci, read_text, write_atomic};
