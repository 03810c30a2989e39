//! Compressed spectral features and their binary serialization.

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex;

use super::stft::{compress, stft, Spectrogram, StftConfig};
use super::{AudioClip, AudioError};
use crate::scalar::real;

/// File magic of the feature format.
pub const FEATURE_MAGIC: [u8; 4] = *b"ACDF";
const FEATURE_VERSION: u32 = 1;

/// Compressed complex spectrogram stored as real tensor of shape
/// (frames, bins, 2), channel 0 = real part, channel 1 = imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFeature {
    pub frames: usize,
    pub bins: usize,
    /// Row-major (frame, bin, channel), channels interleaved last.
    pub data: Vec<f32>,
}

impl SpectralFeature {
    pub fn from_spectrogram(spec: &Spectrogram<f32>) -> Self {
        let mut data = Vec::with_capacity(spec.data.len() * 2);
        for v in &spec.data {
            data.push(v.re);
            data.push(v.im);
        }
        Self {
            frames: spec.frames,
            bins: spec.bins,
            data,
        }
    }

    #[inline]
    pub fn at(&self, frame: usize, bin: usize) -> (f32, f32) {
        let i = (frame * self.bins + bin) * 2;
        (self.data[i], self.data[i + 1])
    }

    /// Compressed magnitude sqrt(re^2 + im^2) at one cell.
    #[inline]
    pub fn magnitude(&self, frame: usize, bin: usize) -> f32 {
        let (re, im) = self.at(frame, bin);
        (re * re + im * im).sqrt()
    }
}

/// Full analysis chain: STFT then magnitude compression.
pub fn featurize(clip: &AudioClip, cfg: &StftConfig) -> Result<SpectralFeature, AudioError> {
    let spec = stft::<f32>(clip, cfg)?;
    let compressed = compress(&spec, real::<f32>(cfg.compression_exponent));
    Ok(SpectralFeature::from_spectrogram(&compressed))
}

/// Write a feature tensor: 16-byte header (magic, version, frames, bins as
/// little-endian u32) followed by little-endian f32 data.
pub fn write_feature(path: impl AsRef<Path>, feature: &SpectralFeature) -> Result<(), AudioError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| AudioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    out.write_all(&FEATURE_MAGIC).map_err(io_err)?;
    out.write_all(&FEATURE_VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&(feature.frames as u32).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&(feature.bins as u32).to_le_bytes())
        .map_err(io_err)?;
    for v in &feature.data {
        out.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_feature(path: impl AsRef<Path>) -> Result<SpectralFeature, AudioError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| AudioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let corrupt = |detail: &str| AudioError::CorruptFeature {
        path: path.to_path_buf(),
        detail: detail.into(),
    };
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(io_err)?);
    let mut header = [0u8; 16];
    file.read_exact(&mut header).map_err(io_err)?;
    if header[0..4] != FEATURE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(corrupt(&format!("unsupported version {version}")));
    }
    let frames = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let bins = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let len = frames
        .checked_mul(bins)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| corrupt("dimension overflow"))?;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw).map_err(io_err)?;
    if raw.len() != len * 4 {
        return Err(corrupt(&format!(
            "payload of {} bytes does not match {frames}x{bins}x2 floats",
            raw.len()
        )));
    }
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(SpectralFeature { frames, bins, data })
}

/// Convert a feature back to complex form (used by oracles and tests).
pub fn to_spectrogram(feature: &SpectralFeature) -> Spectrogram<f32> {
    let data = feature
        .data
        .chunks_exact(2)
        .map(|c| Complex::new(c[0], c[1]))
        .collect();
    Spectrogram {
        frames: feature.frames,
        bins: feature.bins,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn default_config_shape_is_624_257_2() {
        let mut rng = crate::rng::seeded_rng(3);
        let samples: Vec<f32> = (0..160_000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let clip = AudioClip::new(samples, 16_000);
        let feature = featurize(&clip, &StftConfig::default()).unwrap();
        assert_eq!((feature.frames, feature.bins), (624, 257));
        assert_eq!(feature.data.len(), 624 * 257 * 2);
        assert!(feature.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn file_roundtrip_and_header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.acdf");
        let feature = SpectralFeature {
            frames: 2,
            bins: 3,
            data: (0..12).map(|i| i as f32 * 0.25).collect(),
        };
        write_feature(&path, &feature).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"ACDF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 16 + 12 * 4);

        assert_eq!(read_feature(&path).unwrap(), feature);
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.acdf");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        match read_feature(&path) {
            Err(AudioError::CorruptFeature { .. }) => {}
            other => panic!("expected CorruptFeature, got {other:?}"),
        }
    }
}
