//! Time-scale and pitch modification: the (non-differentiable) environment
//! the prosody agent acts on.

mod edits;
mod pitch;
mod resample;
mod stretch;
mod window;

pub use edits::{apply_edits, SegmentEdit, CROSSFADE_SECONDS};
pub use pitch::estimate_f0_autocorr;
pub use resample::resample_linear;
pub use stretch::{
    invert_map, output_anchors, overlap_add_synthesize, time_stretch, wsola_adjust, TimeStretchMap, WsolaParams,
    OLA_DENOMINATOR_FLOOR,
};
pub use window::{cola_deviation, hann_window, ola_denominator};

/// Signal-to-noise ratio of `test` against `reference` in dB.
pub fn snr_db(reference: &[f32], test: &[f32]) -> f64 {
    let (mut sig, mut err) = (0.0f64, 0.0f64);
    for (&r, &t) in reference.iter().zip(test) {
        sig += (r as f64).powi(2);
        err += (r as f64 - t as f64).powi(2);
    }
    if err == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (sig / err).log10()
}
