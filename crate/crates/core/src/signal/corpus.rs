//! Corpus generation and the CSV manifest.
//!
//! Manifest columns: `id,path,neutral,angry,happy,sad,fearful,cue_start,cue_end`.
//! Paths are stored relative to the manifest's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use super::synth::{gen_synthetic_utterance, SyntheticSpec};
use super::wav::write_wav;
use crate::emotion::{Emotion, EmotionDistribution, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::seed::{rng_from, SeedStream};

pub const MANIFEST_HEADER: [&str; 9] = ["id", "path", "neutral", "angry", "happy", "sad", "fearful", "cue_start", "cue_end"];
pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub id: String,
    pub audio_path: PathBuf,
    pub saliency: EmotionDistribution,
    pub cue_span: Option<(usize, usize)>,
}

impl CorpusEntry {
    pub fn label(&self) -> Emotion {
        self.saliency.argmax()
    }
}

/// Rounds to 6 decimals in integer micro-units, pushing the rounding residue
/// onto the largest component so the written values sum to exactly 1.
fn micro_units(d: &EmotionDistribution) -> [i64; NUM_EMOTIONS] {
    let mut u = d.probs().map(|p| (p * 1e6).round() as i64);
    let residue = 1_000_000 - u.iter().sum::<i64>();
    u[d.argmax().index()] += residue;
    u
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[CorpusEntry]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MANIFEST_HEADER)?;
    for e in entries {
        let rel = e.audio_path.strip_prefix(base).unwrap_or(&e.audio_path);
        let mut rec = vec![e.id.clone(), rel.to_string_lossy().into_owned()];
        rec.extend(micro_units(&e.saliency).iter().map(|u| format!("{}.{:06}", u / 1_000_000, u % 1_000_000)));
        match e.cue_span {
            Some((s, t)) => rec.extend([s.to_string(), t.to_string()]),
            None => rec.extend([String::new(), String::new()]),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != MANIFEST_HEADER {
        return Err(Error::Config(format!("unexpected manifest header {header:?}")));
    }
    let bad = |line: usize, m: &str| Error::Config(format!("{}: row {line}: {m}", path.display()));
    let mut entries = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut probs = [0.0; NUM_EMOTIONS];
        for (k, p) in probs.iter_mut().enumerate() {
            *p = rec[2 + k].trim().parse().map_err(|_| bad(line, "bad saliency value"))?;
        }
        let saliency = EmotionDistribution::new(probs).map_err(|_| bad(line, "saliency not on the simplex"))?;
        let cue_span = match (rec[7].trim(), rec[8].trim()) {
            ("", "") => None,
            (s, t) => Some((
                s.parse().map_err(|_| bad(line, "bad cue_start"))?,
                t.parse().map_err(|_| bad(line, "bad cue_end"))?,
            )),
        };
        let p = PathBuf::from(&rec[1]);
        let audio_path = if p.is_absolute() { p } else { base.join(p) };
        entries.push(CorpusEntry { id: rec[0].to_owned(), audio_path, saliency, cue_span });
    }
    Ok(entries)
}

/// Writes `5 * n_per_class` utterances plus the manifest into `out_dir`.
/// Returns the manifest path.
pub fn gen_corpus(spec: &SyntheticSpec, n_per_class: usize, out_dir: impl AsRef<Path>, seed: u64) -> Result<PathBuf> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let seeds = SeedStream::new(seed);
    let mut entries = Vec::with_capacity(n_per_class * NUM_EMOTIONS);
    for emotion in Emotion::ALL {
        for i in 0..n_per_class {
            let index = (emotion.index() * n_per_class + i) as u64;
            let utt = gen_synthetic_utterance(spec, emotion.index(), seeds.indexed("corpus", index))?;
            if utt.clipped > 0 {
                log::warn!("{emotion}_{i}: {} samples clipped", utt.clipped);
            }
            let id = format!("{}_{i:04}", emotion.name());
            let audio_path = out_dir.join(format!("{id}.wav"));
            write_wav(&audio_path, &utt.audio)?;
            // the neutral archetype is also the carrier, so neutral items plant no cue
            let cue_span = (emotion != Emotion::Neutral).then_some(utt.cue_span);
            entries.push(CorpusEntry { id, audio_path, saliency: utt.saliency, cue_span });
        }
    }
    let manifest = out_dir.join(MANIFEST_NAME);
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}

/// Deterministic stratified split: `holdout_fraction` of every class (by
/// argmax label) goes to the second list.
pub fn split_holdout(entries: &[CorpusEntry], holdout_fraction: f64, seed: u64) -> (Vec<CorpusEntry>, Vec<CorpusEntry>) {
    let mut by_class: BTreeMap<Emotion, Vec<&CorpusEntry>> = BTreeMap::new();
    for e in entries {
        by_class.entry(e.label()).or_default().push(e);
    }
    let mut rng = rng_from(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut group) in by_class {
        group.shuffle(&mut rng);
        let k = (group.len() as f64 * holdout_fraction).round() as usize;
        test.extend(group[..k].iter().map(|e| (*e).clone()));
        train.extend(group[k..].iter().map(|e| (*e).clone()));
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec { utterance_seconds: 0.5, ..Default::default() }
    }

    #[test]
    fn manifest_rows_and_sums() {
        let dir = tempfile::tempdir().unwrap();
        let m = gen_corpus(&small_spec(), 2, dir.path(), 3).unwrap();
        let entries = read_manifest(&m).unwrap();
        assert_eq!(entries.len(), 10);
        for e in &entries {
            assert!((e.saliency.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            assert!(e.audio_path.exists());
            assert_eq!(e.cue_span.is_some(), e.label() != Emotion::Neutral);
        }
        let text = std::fs::read_to_string(&m).unwrap();
        assert!(text.starts_with("id,path,neutral,angry,happy,sad,fearful,cue_start,cue_end\n"));
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = gen_corpus(&small_spec(), 1, a.path(), 8).unwrap();
        let mb = gen_corpus(&small_spec(), 1, b.path(), 8).unwrap();
        assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
        for e in read_manifest(&ma).unwrap() {
            let other = b.path().join(e.audio_path.file_name().unwrap());
            assert_eq!(std::fs::read(&e.audio_path).unwrap(), std::fs::read(other).unwrap());
        }
    }

    #[test]
    fn split_is_stratified() {
        let dir = tempfile::tempdir().unwrap();
        let m = gen_corpus(&small_spec(), 4, dir.path(), 1).unwrap();
        let entries = read_manifest(&m).unwrap();
        let (train, test) = split_holdout(&entries, 0.25, 9);
        assert_eq!(test.len(), 5);
        assert_eq!(train.len(), 15);
        for e in Emotion::ALL {
            assert_eq!(test.iter().filter(|x| x.label() == e).count(), 1);
        }
    }

    #[test]
    fn micro_units_sum_exactly() {
        let d = EmotionDistribution::from_weights([1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(micro_units(&d).iter().sum::<i64>(), 1_000_000);
    }
}
