//! Audio buffers, WAV persistence, frame energies and the synthetic corpus.

mod audio;
pub mod corpus;
mod energy;
pub mod synth;
mod wav;

pub use audio::{AudioBuffer, SAMPLE_RATE};
pub use corpus::{gen_corpus, read_manifest, split_holdout, write_manifest, CorpusEntry};
pub use energy::frame_energy;
pub use synth::{gen_synthetic_utterance, Archetype, SyntheticSpec, SyntheticUtterance};
pub use wav::{read_wav, write_wav};
