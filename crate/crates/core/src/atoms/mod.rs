//! Four-level Cs ladder readout: 6S1/2 -> 6P3/2 -> 49D3/2 -> 50P3/2, the last
//! step dressed by the microwave field.
//!
//! Level indices run 1..=4 from the ground state up. All rates and Rabi
//! frequencies are angular (rad/s).

mod ladder;
mod lindblad;
mod readout;

pub use ladder::{
    normalized_absorption, probe_transmission, transparency_peaks, weak_probe_coherence,
    DriveFields, LadderSystem,
};
pub use lindblad::{lindblad_steady_state, DensityMatrix};
pub use readout::{if_photodetector_signal, quasi_static_limit_hz, RfScene, QUASI_STATIC_FRACTION};
