//! Synthetic emotional utterances.
//!
//! Each utterance is a harmonic tone with a syllabic amplitude envelope,
//! spoken in the neutral archetype except for one contiguous cue span that
//! uses the target emotion's archetype. Classes differ only in prosody
//! (F0 level and contour, syllable rate, loudness).

use std::f64::consts::PI;

use rand::Rng as _;

use super::audio::{AudioBuffer, SAMPLE_RATE};
use crate::emotion::{Emotion, EmotionDistribution, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::seed::rng_from;

const HARMONICS: usize = 10;
/// Syllables per second at rate factor 1.
const BASE_SYLLABLE_RATE: f64 = 4.0;
const BASE_LEVEL: f64 = 0.3;
/// Parameter crossfade at cue boundaries and voicing on/offsets.
const TRANSITION_SECONDS: f64 = 0.01;
const NOISE_LEVEL: f64 = 3e-4;
/// Per-utterance speaker jitter on F0 and level.
const JITTER: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Archetype {
    pub f0_base: f64,
    /// Relative F0 change from the start to the end of the span.
    pub f0_slope: f64,
    pub rate_factor: f64,
    pub gain_factor: f64,
    pub vibrato_depth_hz: f64,
    pub vibrato_rate_hz: f64,
}

impl Archetype {
    const fn plain(f0_base: f64, f0_slope: f64, rate_factor: f64, gain_factor: f64) -> Self {
        Self { f0_base, f0_slope, rate_factor, gain_factor, vibrato_depth_hz: 0.0, vibrato_rate_hz: 0.0 }
    }

    fn key_params(&self) -> [f64; 3] {
        [self.f0_base, self.rate_factor, self.gain_factor]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Indexed by `Emotion::index()`.
    pub archetypes: [Archetype; NUM_EMOTIONS],
    pub utterance_seconds: f64,
    pub cue_fraction: f64,
    pub label_noise_scale: f64,
    /// Silence before and after the voiced region.
    pub edge_silence_seconds: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            archetypes: [
                Archetype::plain(140.0, -0.05, 1.0, 1.0),
                Archetype::plain(190.0, 0.0, 1.3, 1.4),
                Archetype::plain(175.0, 0.10, 1.15, 1.15),
                Archetype::plain(110.0, -0.10, 0.8, 0.7),
                Archetype { vibrato_depth_hz: 20.0, vibrato_rate_hz: 6.0, ..Archetype::plain(200.0, 0.05, 1.05, 0.9) },
            ],
            utterance_seconds: 1.2,
            cue_fraction: 0.3,
            label_noise_scale: 0.2,
            edge_silence_seconds: 0.1,
        }
    }
}

impl SyntheticSpec {
    pub fn archetype(&self, e: Emotion) -> &Archetype {
        &self.archetypes[e.index()]
    }

    pub fn total_samples(&self) -> usize {
        (self.utterance_seconds * SAMPLE_RATE as f64).round() as usize
    }

    pub fn cue_samples(&self) -> usize {
        (self.cue_fraction * self.total_samples() as f64).round() as usize
    }

    fn edge_samples(&self) -> usize {
        (self.edge_silence_seconds * SAMPLE_RATE as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.utterance_seconds > 0.0) {
            return bad(format!("utterance_seconds {} must be positive", self.utterance_seconds));
        }
        if !(self.cue_fraction > 0.0 && self.cue_fraction < 1.0) {
            return bad(format!("cue_fraction {} outside (0, 1)", self.cue_fraction));
        }
        if !(self.label_noise_scale >= 0.0 && self.label_noise_scale < 1.0) {
            return bad(format!("label_noise_scale {} outside [0, 1)", self.label_noise_scale));
        }
        if self.edge_silence_seconds < 0.0 {
            return bad("edge_silence_seconds must be nonnegative".into());
        }
        let voiced = self.total_samples().saturating_sub(2 * self.edge_samples());
        if self.cue_samples() == 0 || self.cue_samples() > voiced {
            return bad(format!("cue of {} samples does not fit the {voiced}-sample voiced region", self.cue_samples()));
        }
        for a in &self.archetypes {
            let ok = a.f0_base > 0.0 && a.rate_factor > 0.0 && a.gain_factor > 0.0 && a.vibrato_depth_hz >= 0.0;
            if !ok || a.f0_base * 1.5 * HARMONICS as f64 >= SAMPLE_RATE as f64 {
                return bad(format!("invalid archetype {a:?}"));
            }
        }
        for i in 0..NUM_EMOTIONS {
            for j in i + 1..NUM_EMOTIONS {
                let (a, b) = (self.archetypes[i].key_params(), self.archetypes[j].key_params());
                let distinct = a.iter().zip(b.iter()).any(|(x, y)| (x - y).abs() >= 0.1 * x.abs().max(y.abs()));
                if !distinct {
                    return bad(format!(
                        "archetypes {} and {} differ by less than 10% in every parameter",
                        Emotion::ALL[i],
                        Emotion::ALL[j]
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticUtterance {
    pub audio: AudioBuffer,
    pub saliency: EmotionDistribution,
    /// Sample interval `[start, end)` where the emotion archetype is used.
    pub cue_span: (usize, usize),
    /// Samples saturated to +-1 during synthesis.
    pub clipped: usize,
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

pub fn gen_synthetic_utterance(spec: &SyntheticSpec, emotion: usize, seed: u64) -> Result<SyntheticUtterance> {
    spec.validate()?;
    let emotion = Emotion::from_index(emotion).ok_or_else(|| Error::InvalidSpec(format!("emotion index {emotion} not in 0..5")))?;
    let mut rng = rng_from(seed);
    let sr = SAMPLE_RATE as f64;
    let n = spec.total_samples();
    let edge = spec.edge_samples();
    let cue_len = spec.cue_samples();
    let (v_start, v_end) = (edge, n - edge);
    let cue_start = v_start + rng.gen_range(0..=(v_end - v_start - cue_len));
    let cue_end = cue_start + cue_len;

    let f0_jitter = 1.0 + rng.gen_range(-JITTER..=JITTER);
    let gain_jitter = 1.0 + rng.gen_range(-JITTER..=JITTER);
    let mut phase = rng.gen_range(0.0..2.0 * PI);
    let mut syllable_phase = rng.gen_range(0.0..1.0);
    let carrier = spec.archetype(Emotion::Neutral);
    let cue = spec.archetype(emotion);
    let ramp = (TRANSITION_SECONDS * sr).round().max(1.0);
    let voiced_len = (v_end - v_start) as f64;

    let mut samples = vec![0.0f64; n];
    for (i, out) in samples.iter_mut().enumerate() {
        let noise = rng.gen_range(-NOISE_LEVEL..=NOISE_LEVEL);
        if i < v_start || i >= v_end {
            *out = noise;
            continue;
        }
        // Weight of the cue archetype, ramped at the cue boundaries.
        let w = if i < cue_start || i >= cue_end {
            0.0
        } else {
            (((i - cue_start) as f64 + 1.0) / ramp).min(((cue_end - i) as f64) / ramp).min(1.0)
        };
        let t = i as f64 / sr;
        let rel = (i - v_start) as f64 / voiced_len - 0.5;
        let f0_of = |a: &Archetype| {
            a.f0_base * (1.0 + a.f0_slope * rel) + a.vibrato_depth_hz * (2.0 * PI * a.vibrato_rate_hz * t).sin()
        };
        let f0 = lerp(f0_of(carrier), f0_of(cue), w) * f0_jitter;
        let rate = lerp(carrier.rate_factor, cue.rate_factor, w);
        let gain = lerp(carrier.gain_factor, cue.gain_factor, w) * gain_jitter;

        phase = (phase + 2.0 * PI * f0 / sr) % (2.0 * PI);
        syllable_phase = (syllable_phase + BASE_SYLLABLE_RATE * rate / sr) % 1.0;
        let envelope = 0.4 + 0.6 * (PI * syllable_phase).sin().powi(2);
        let onset = (((i - v_start) as f64 + 1.0) / ramp).min(((v_end - i) as f64) / ramp).min(1.0);
        let tone: f64 = (1..=HARMONICS).map(|h| (h as f64 * phase).sin() / h as f64).sum::<f64>() / 1.8;
        *out = BASE_LEVEL * gain * envelope * onset * tone + noise;
    }

    let mut audio = AudioBuffer::from_f64(&samples, SAMPLE_RATE)?;
    let clipped = audio.clip();

    let mut weights = emotion.one_hot();
    if spec.label_noise_scale > 0.0 {
        for w in &mut weights {
            *w += spec.label_noise_scale * rng.gen_range(0.0..1.0);
        }
    }
    let saliency = EmotionDistribution::from_weights(weights)?;
    Ok(SyntheticUtterance { audio, saliency, cue_span: (cue_start, cue_end), clipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::estimate_f0_autocorr;

    #[test]
    fn noiseless_labels_are_one_hot() {
        let spec = SyntheticSpec { label_noise_scale: 0.0, ..Default::default() };
        for e in 0..NUM_EMOTIONS {
            let u = gen_synthetic_utterance(&spec, e, 11).unwrap();
            assert_eq!(u.saliency.probs(), &Emotion::ALL[e].one_hot());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SyntheticSpec::default();
        let a = gen_synthetic_utterance(&spec, 2, 99).unwrap();
        let b = gen_synthetic_utterance(&spec, 2, 99).unwrap();
        assert_eq!(a.audio, b.audio);
        assert_eq!(a.cue_span, b.cue_span);
        let c = gen_synthetic_utterance(&spec, 2, 100).unwrap();
        assert_ne!(a.audio, c.audio);
    }

    #[test]
    fn cue_span_length() {
        let spec = SyntheticSpec { utterance_seconds: 3.0, cue_fraction: 0.3, ..Default::default() };
        let u = gen_synthetic_utterance(&spec, 1, 5).unwrap();
        let len = u.cue_span.1 - u.cue_span.0;
        assert!((len as i64 - 14400).abs() <= 320, "cue length {len}");
        assert_eq!(u.audio.len(), 48000);
    }

    #[test]
    fn noisy_labels_keep_planted_argmax() {
        let spec = SyntheticSpec::default();
        for seed in 0..20 {
            let u = gen_synthetic_utterance(&spec, 3, seed).unwrap();
            assert_eq!(u.saliency.argmax(), Emotion::Sad);
            assert!((u.saliency.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cue_carries_archetype_pitch() {
        let spec = SyntheticSpec { utterance_seconds: 2.0, ..Default::default() };
        let u = gen_synthetic_utterance(&spec, Emotion::Sad.index(), 3).unwrap();
        let (s, e) = u.cue_span;
        let mid = (s + e) / 2;
        let f0 = estimate_f0_autocorr(&u.audio.slice(mid - 1600, mid + 1600), 75.0, 400.0).unwrap();
        assert!((f0 - 110.0).abs() < 110.0 * 0.06, "f0 {f0}");
        assert_eq!(u.clipped, 0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(gen_synthetic_utterance(&SyntheticSpec::default(), 5, 0).is_err());
        let spec = SyntheticSpec { cue_fraction: 1.0, ..Default::default() };
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
        let mut spec = SyntheticSpec::default();
        spec.archetypes[2] = spec.archetypes[1];
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }
}
