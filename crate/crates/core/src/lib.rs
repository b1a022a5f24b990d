//! Emotion-targeted prosody modification.
//!
//! The crate is organised bottom-up:
//!
//! - [`signal`]: WAV I/O, frame energies and a synthetic emotional corpus.
//! - [`dsp`]: WSOLA time stretching, resampling pitch shift and segment edits.
//! - [`grad`]: a small tape-based reverse-mode autodiff engine with Adam.
//! - [`salience`]: the Markov-masked emotional salience predictor.
//! - [`rl`]: the single-step actor-critic agent that picks duration, pitch
//!   and gain factors for salient segments.
//! - [`cli`]: the `prosody` command-line front end.

pub mod cli;
pub mod dsp;
pub mod emotion;
pub mod error;
pub mod grad;
pub mod rl;
pub mod salience;
pub mod seed;
pub mod signal;

pub use emotion::{Emotion, EmotionDistribution, NUM_EMOTIONS};
pub use error::{Error, Result};
