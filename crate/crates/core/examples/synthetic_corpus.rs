//! Writes a small synthetic corpus and prints each utterance's label and cue.
//!
//! cargo run --example synthetic_corpus -- [out_dir] [n_per_class]

use prosody_core::signal::{gen_corpus, read_manifest, SyntheticSpec};

fn main() -> prosody_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().cloned().unwrap_or_else(|| "corpus".into());
    let n: usize = args.get(1).map_or(2, |s| s.parse().expect("n_per_class"));
    let manifest = gen_corpus(&SyntheticSpec::default(), n, &out, 1)?;
    for e in read_manifest(&manifest)? {
        let probs: Vec<String> = e.saliency.probs().iter().map(|p| format!("{p:.2}")).collect();
        println!("{:<14} {:<8} cue {:?}  [{}]", e.id, e.label().name(), e.cue_span, probs.join(" "));
    }
    println!("manifest: {}", manifest.display());
    Ok(())
}
