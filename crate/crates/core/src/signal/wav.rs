//! 16-bit PCM mono WAV persistence.
//!
//! Reading scales codes by 1/32768; writing quantizes with round(x * 32768)
//! clamped to the symmetric range [-32767, 32767], so every code a file
//! written here can contain survives a read/write cycle unchanged.

use std::path::Path;

use super::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

const SCALE: f64 = 32768.0;
const MAX_CODE: f64 = 32767.0;

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let unsupported = |reason: String| Error::UnsupportedFormat { path: path.to_path_buf(), reason };
    if spec.channels != 1 {
        return Err(unsupported(format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(unsupported(format!(
            "{:?} {}-bit samples, expected 16-bit PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(unsupported(format!("sample rate {} Hz, expected {SAMPLE_RATE}", spec.sample_rate)));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|c| (c as f64 / SCALE) as f32))
        .collect::<std::result::Result<Vec<f32>, _>>()
        .map_err(|e| map_hound(path, e))?;
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Quantizes one sample to its 16-bit code.
pub fn quantize(sample: f32) -> i16 {
    (sample as f64 * SCALE).round().clamp(-MAX_CODE, MAX_CODE) as i16
}

pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    if buf.samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("write_wav"));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in &buf.samples {
        writer.write_sample(quantize(s)).map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        // hound reports short reads with kind Other
        hound::Error::IoError(io)
            if matches!(io.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            Error::MalformedWav { path: path.to_path_buf(), reason: format!("truncated file: {io}") }
        }
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "unsupported encoding".into(),
        },
        other => Error::MalformedWav { path: path.to_path_buf(), reason: other.to_string() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_codes(path: &Path, codes: &[i16], channels: u16, rate: u32) {
        let spec = hound::WavSpec { channels, sample_rate: rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &c in codes {
            w.write_sample(c).unwrap();
        }
        w.finalize().unwrap();
    }

    fn read_codes(path: &Path) -> Vec<i16> {
        hound::WavReader::open(path).unwrap().into_samples::<i16>().map(|s| s.unwrap()).collect()
    }

    #[test]
    fn silence_reads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_codes(&p, &[0; 16], 1, 16000);
        let buf = read_wav(&p).unwrap();
        assert_eq!(buf.samples, vec![0.0; 16]);
        assert_eq!(buf.sample_rate, 16000);
    }

    #[test]
    fn max_code_scales_by_32768() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wav");
        write_codes(&p, &[32767], 1, 16000);
        let buf = read_wav(&p).unwrap();
        assert_eq!(buf.samples[0], (32767.0f64 / 32768.0) as f32);
        assert!((buf.samples[0] - 0.99997).abs() < 1e-5);
    }

    #[test]
    fn quantizer_boundaries() {
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(-1.0), -32767);
        assert_eq!(quantize(3.0), 32767);
    }

    #[test]
    fn rejects_stereo_and_rate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        write_codes(&p, &[0; 8], 2, 16000);
        assert!(matches!(read_wav(&p), Err(Error::UnsupportedFormat { .. })));
        let p = dir.path().join("r.wav");
        write_codes(&p, &[0; 8], 1, 44100);
        assert!(matches!(read_wav(&p), Err(Error::UnsupportedFormat { .. })));
    }

    #[test]
    fn rejects_garbage_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.wav");
        std::fs::write(&p, b"RIFX0000WAVEjunkjunkjunk").unwrap();
        let r = read_wav(&p);
        assert!(matches!(r, Err(Error::MalformedWav { .. })), "{r:?}");
        let p = dir.path().join("t.wav");
        std::fs::write(&p, b"RIFF").unwrap();
        let r = read_wav(&p);
        assert!(matches!(r, Err(Error::MalformedWav { .. })), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn read_write_preserves_codes(codes in proptest::collection::vec(-32767i16..=32767, 1..300)) {
            let dir = tempfile::tempdir().unwrap();
            let a = dir.path().join("a.wav");
            let b = dir.path().join("b.wav");
            write_codes(&a, &codes, 1, 16000);
            let buf = read_wav(&a).unwrap();
            write_wav(&b, &buf).unwrap();
            prop_assert_eq!(read_codes(&b), codes);
        }
    }
}
