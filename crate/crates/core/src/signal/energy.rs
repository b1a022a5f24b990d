use super::audio::AudioBuffer;
use crate::error::{Error, Result};

/// RMS per frame, frames starting at 0, hop, 2*hop, ...; `ceil(len / hop)`
/// frames, the trailing ones zero-padded.
pub fn frame_energy(buf: &AudioBuffer, frame_len: usize, hop: usize) -> Result<Vec<f64>> {
    if buf.is_empty() {
        return Err(Error::EmptySignal);
    }
    if frame_len == 0 || hop == 0 {
        return Err(Error::Config("frame_len and hop must be at least 1".into()));
    }
    let n = buf.len();
    let frames = n.div_ceil(hop);
    Ok((0..frames)
        .map(|f| {
            let start = f * hop;
            let end = (start + frame_len).min(n);
            let ss: f64 = buf.samples[start..end].iter().map(|&s| (s as f64).powi(2)).sum();
            (ss / frame_len as f64).sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buf(samples: Vec<f32>) -> AudioBuffer {
        AudioBuffer::new(samples, 16000).unwrap()
    }

    #[test]
    fn zeros_and_constants() {
        assert!(frame_energy(&buf(vec![0.0; 1000]), 320, 320).unwrap().iter().all(|&e| e == 0.0));
        let e = frame_energy(&buf(vec![0.5; 1000]), 320, 320).unwrap();
        assert_eq!(e.len(), 4);
        assert!((e[0] - 0.5).abs() < 1e-12);
        assert!(e[3] < 0.5);
    }

    #[test]
    fn sine_rms() {
        // 100 Hz at 16 kHz: 160 samples per period; frame of 4 periods.
        let s: Vec<f32> = (0..3200).map(|n| (2.0 * std::f64::consts::PI * n as f64 / 160.0).sin() as f32).collect();
        let e = frame_energy(&buf(s), 640, 640).unwrap();
        for v in e {
            assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        }
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(frame_energy(&buf(vec![]), 4, 4), Err(Error::EmptySignal)));
    }

    proptest! {
        #[test]
        fn shift_covariance(samples in proptest::collection::vec(-1.0f32..1.0, 1..500), hop in 1usize..40, extra in 0usize..40) {
            let frame_len = hop + extra;
            let base = frame_energy(&buf(samples.clone()), frame_len, hop).unwrap();
            let mut shifted = vec![0.0; hop];
            shifted.extend_from_slice(&samples);
            let e = frame_energy(&buf(shifted), frame_len, hop).unwrap();
            prop_assert_eq!(e.len(), base.len() + 1);
            prop_assert_eq!(&e[1..], &base[..]);
            // The first frame may overlap the signal when frame_len > hop.
            if extra == 0 {
                prop_assert_eq!(e[0], 0.0);
            }
        }
    }
}
