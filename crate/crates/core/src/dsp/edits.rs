//! Segmentwise duration, pitch and gain edits.
//!
//! A segment with duration factor `a` and pitch factor `b` is time-stretched
//! by `a * b` and then resampled by `b`, giving net duration `a` and pitch
//! `b`. Gain is applied to the processed segment, and both ends are linearly
//! crossfaded with the original signal over 10 ms.

use super::resample::resample_linear;
use super::stretch::{time_stretch, TimeStretchMap, WsolaParams};
use crate::error::{Error, Result};
use crate::signal::AudioBuffer;

pub const CROSSFADE_SECONDS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentEdit {
    /// Input sample interval `[start, end)`.
    pub span: (usize, usize),
    pub duration_factor: f64,
    pub pitch_factor: f64,
    pub gain: f64,
}

impl SegmentEdit {
    pub fn identity(span: (usize, usize)) -> Self {
        Self { span, duration_factor: 1.0, pitch_factor: 1.0, gain: 1.0 }
    }
}

fn process_segment(seg: &AudioBuffer, edit: &SegmentEdit, params: &WsolaParams) -> Result<Vec<f32>> {
    let stretch = edit.duration_factor * edit.pitch_factor;
    let mut out = if stretch == 1.0 && edit.pitch_factor == 1.0 && seg.len() < params.window_len {
        seg.clone()
    } else {
        time_stretch(seg, &TimeStretchMap::uniform(seg.len(), stretch)?, params)?
    };
    if edit.pitch_factor != 1.0 {
        out = resample_linear(&out, edit.pitch_factor)?;
    }
    let g = edit.gain as f32;
    Ok(out.samples.into_iter().map(|s| s * g).collect())
}

pub fn apply_edits(y: &AudioBuffer, edits: &[SegmentEdit], params: &WsolaParams) -> Result<AudioBuffer> {
    let mut cursor = 0;
    for e in edits {
        let (s, t) = e.span;
        if s < cursor || t <= s {
            return Err(Error::OverlappingSpans(s));
        }
        if t > y.len() {
            return Err(Error::SpanOutOfBounds { start: s, end: t, len: y.len() });
        }
        if !(e.duration_factor > 0.0 && e.pitch_factor > 0.0 && e.gain > 0.0) {
            return Err(Error::Config(format!("edit factors must be positive: {e:?}")));
        }
        cursor = t;
    }

    let ramp_len = (CROSSFADE_SECONDS * y.sample_rate as f64).round() as usize;
    let mut out = Vec::with_capacity(y.len());
    let mut cursor = 0;
    for e in edits {
        let (s, t) = e.span;
        out.extend_from_slice(&y.samples[cursor..s]);
        let orig = &y.samples[s..t];
        let mut proc = process_segment(&y.slice(s, t), e, params)?;
        let r = ramp_len.min(proc.len() / 2).min(orig.len() / 2);
        for i in 0..r {
            let w = (i as f32 + 0.5) / r as f32;
            proc[i] = (1.0 - w) * orig[i] + w * proc[i];
            let (pi, oi) = (proc.len() - r + i, orig.len() - r + i);
            proc[pi] = (1.0 - w) * proc[pi] + w * orig[oi];
        }
        out.extend_from_slice(&proc);
        cursor = t;
    }
    out.extend_from_slice(&y.samples[cursor..]);
    AudioBuffer::new(out, y.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{estimate_f0_autocorr, snr_db};
    use std::f64::consts::PI;

    fn tone(freq: f64, n: usize) -> AudioBuffer {
        AudioBuffer::from_f64(&(0..n).map(|i| 0.4 * (2.0 * PI * freq * i as f64 / 16000.0).sin()).collect::<Vec<_>>(), 16000).unwrap()
    }

    #[test]
    fn empty_edit_list_is_exact_identity() {
        let y = tone(150.0, 5000);
        assert_eq!(apply_edits(&y, &[], &WsolaParams::default()).unwrap(), y);
    }

    #[test]
    fn identity_edit() {
        let y = tone(150.0, 32000);
        let z = apply_edits(&y, &[SegmentEdit::identity((8000, 24000))], &WsolaParams::default()).unwrap();
        assert_eq!(z.len(), y.len());
        assert_eq!(&z.samples[..8000], &y.samples[..8000]);
        assert_eq!(&z.samples[24000..], &y.samples[24000..]);
        assert!(snr_db(&y.samples[8000..24000], &z.samples[8000..24000]) >= 25.0);
    }

    #[test]
    fn gain_halves_rms() {
        let y = tone(200.0, 32000);
        let edit = SegmentEdit { gain: 0.5, ..SegmentEdit::identity((8000, 24000)) };
        let z = apply_edits(&y, &[edit], &WsolaParams::default()).unwrap();
        let ratio = z.slice(8500, 23500).rms() / y.slice(8500, 23500).rms();
        assert!((ratio - 0.5).abs() <= 0.01, "ratio {ratio}");
    }

    #[test]
    fn duration_and_pitch_edit() {
        let y = tone(220.0, 32000);
        let edit = SegmentEdit { duration_factor: 1.5, pitch_factor: 1.25, ..SegmentEdit::identity((8000, 24000)) };
        let z = apply_edits(&y, &[edit], &WsolaParams::default()).unwrap();
        let seg_len = z.len() - 16000;
        assert!((seg_len as f64 - 24000.0).abs() <= 512.0, "segment {seg_len}");
        let f0 = estimate_f0_autocorr(&z.slice(9000, 8000 + seg_len - 1000), 75.0, 400.0).unwrap();
        assert!((f0 - 275.0).abs() < 275.0 * 0.03, "f0 {f0}");
    }

    #[test]
    fn span_validation() {
        let y = tone(200.0, 10000);
        let p = WsolaParams::default();
        let a = SegmentEdit::identity((1000, 3000));
        let b = SegmentEdit::identity((2500, 4000));
        assert!(matches!(apply_edits(&y, &[a, b], &p), Err(Error::OverlappingSpans(2500))));
        assert!(matches!(apply_edits(&y, &[b, a], &p), Err(Error::OverlappingSpans(1000))));
        let c = SegmentEdit::identity((9000, 12000));
        assert!(matches!(apply_edits(&y, &[c], &p), Err(Error::SpanOutOfBounds { .. })));
    }
}
