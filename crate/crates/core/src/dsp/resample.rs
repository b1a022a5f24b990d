use crate::error::{Error, Result};
use crate::signal::AudioBuffer;

/// Linear-interpolation resampling read at positions `n * ratio`; played
/// back at the original rate the pitch scales by `ratio`. No anti-aliasing.
pub fn resample_linear(y: &AudioBuffer, ratio: f64) -> Result<AudioBuffer> {
    if !(0.25..=4.0).contains(&ratio) {
        return Err(Error::BadRatio(ratio));
    }
    if y.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = y.len();
    let out_len = (n as f64 / ratio).round() as usize;
    let s = &y.samples;
    let out = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let k = pos.floor() as usize;
            if k + 1 >= n {
                return s[n - 1];
            }
            let f = pos - k as f64;
            ((1.0 - f) * s[k] as f64 + f * s[k + 1] as f64) as f32
        })
        .collect();
    AudioBuffer::new(out, y.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::estimate_f0_autocorr;
    use std::f64::consts::PI;

    fn tone(freq: f64, n: usize) -> AudioBuffer {
        AudioBuffer::from_f64(&(0..n).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / 16000.0).sin()).collect::<Vec<_>>(), 16000).unwrap()
    }

    #[test]
    fn unit_ratio_is_identity() {
        let y = tone(220.0, 1000);
        assert_eq!(resample_linear(&y, 1.0).unwrap(), y);
    }

    #[test]
    fn doubling_raises_octave() {
        let y = tone(220.0, 16000);
        let z = resample_linear(&y, 2.0).unwrap();
        assert!((z.len() as i64 - 8000).abs() <= 1);
        let f0 = estimate_f0_autocorr(&z, 75.0, 500.0).unwrap();
        assert!((f0 - 440.0).abs() < 440.0 * 0.03, "f0 {f0}");
    }

    #[test]
    fn halving_doubles_length() {
        let z = resample_linear(&tone(220.0, 1001), 0.5).unwrap();
        assert!((z.len() as i64 - 2002).abs() <= 1);
    }

    #[test]
    fn ratio_bounds() {
        let y = tone(220.0, 100);
        assert!(matches!(resample_linear(&y, 0.2), Err(Error::BadRatio(_))));
        assert!(matches!(resample_linear(&y, 4.5), Err(Error::BadRatio(_))));
    }
}
