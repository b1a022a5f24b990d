//! Applies duration, pitch and gain edits to one segment of a synthetic
//! utterance and writes before/after WAVs.
//!
//! cargo run --example pitch_edit -- [out_dir]

use prosody_core::dsp::{apply_edits, estimate_f0_autocorr, SegmentEdit, WsolaParams};
use prosody_core::signal::{gen_synthetic_utterance, write_wav, SyntheticSpec};

fn main() -> prosody_core::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&out)?;
    let utt = gen_synthetic_utterance(&SyntheticSpec::default(), 0, 3)?;
    let (s, e) = utt.cue_span;
    let before = estimate_f0_autocorr(&utt.audio.slice(s, e), 60.0, 500.0)?;
    let edit = SegmentEdit { span: (s, e), duration_factor: 1.3, pitch_factor: 1.25, gain: 1.2 };
    let z = apply_edits(&utt.audio, &[edit], &WsolaParams::default())?;
    let new_end = s + ((e - s) as f64 * 1.3) as usize;
    let after = estimate_f0_autocorr(&z.slice(s + 400, new_end - 400), 60.0, 500.0)?;
    println!("segment [{s}, {e}) f0 {before:.1} Hz -> {after:.1} Hz (x{:.3})", after / before);
    println!("length {} -> {} samples", utt.audio.len(), z.len());
    write_wav(out.join("pitch_edit_before.wav"), &utt.audio)?;
    write_wav(out.join("pitch_edit_after.wav"), &z)?;
    Ok(())
}
