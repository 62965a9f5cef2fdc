//! Distortion and rate figures for one compression run.

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::codec::IndexMap;
use crate::pixelgrid::{GrayImage, BLOCK_DIM};

/// Bits per pixel of the uncompressed 8-bit source.
pub const ORIGINAL_BPP: f64 = 8.0;
const PEAK: f64 = 255.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("image sizes differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
    #[error("mse must be non-negative, got {0}")]
    NegativeMse(f64),
    #[error("entropy of an empty index sequence is undefined")]
    EmptyIndices,
    #[error("index {index} is outside an alphabet of {m} symbols")]
    IndexOutOfRange { index: usize, m: usize },
}

/// Mean squared pixel difference.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricsError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::DimensionMismatch {
            a_width: a.width(),
            a_height: a.height(),
            b_width: b.width(),
            b_height: b.height(),
        });
    }
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = u64::from(x.abs_diff(y));
            d * d
        })
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB for 8-bit data; infinite when `mse == 0`.
pub fn psnr(mse: f64) -> Result<f64, MetricsError> {
    if mse.is_nan() || mse < 0.0 {
        return Err(MetricsError::NegativeMse(mse));
    }
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

/// Empirical Shannon entropy of `indices` in bits per symbol.
pub fn shannon_entropy(indices: &[u16], m: usize) -> Result<f64, MetricsError> {
    if indices.is_empty() {
        return Err(MetricsError::EmptyIndices);
    }
    let mut counts = vec![0u64; m];
    for &i in indices {
        let i = usize::from(i);
        if i >= m {
            return Err(MetricsError::IndexOutOfRange { index: i, m });
        }
        counts[i] += 1;
    }
    let n = indices.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            (c / n) * (n / c).log2()
        })
        .sum();
    // Summation error must not push the estimate outside [0, log2 m].
    Ok(h.clamp(0.0, (m as f64).log2()))
}

/// Bits needed for one raw index into an `m`-entry codebook.
pub fn index_bits(m: usize) -> u32 {
    m.next_power_of_two().trailing_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub raw_index_bpp: f64,
    pub entropy_bpp: f64,
    pub original_bpp: f64,
    /// Original over raw-index bits per pixel. Codebook storage is excluded.
    pub compression_ratio: f64,
}

pub fn rate_report(map: &IndexMap, entropy_bits: f64) -> Rates {
    rates_for(map.codebook_size(), entropy_bits)
}

pub fn rates_for(codebook_size: usize, entropy_bits: f64) -> Rates {
    let pixels_per_index = BLOCK_DIM as f64;
    let raw_index_bpp = f64::from(index_bits(codebook_size)) / pixels_per_index;
    Rates {
        raw_index_bpp,
        entropy_bpp: entropy_bits / pixels_per_index,
        original_bpp: ORIGINAL_BPP,
        compression_ratio: ORIGINAL_BPP / raw_index_bpp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr_db: f64,
    pub entropy_bits: f64,
    pub raw_index_bpp: f64,
    pub entropy_bpp: f64,
    pub original_bpp: f64,
    pub compression_ratio: f64,
}

impl QualityReport {
    /// Scores a reconstruction against its original and the index map it was
    /// decoded from.
    pub fn evaluate(
        original: &GrayImage,
        reconstructed: &GrayImage,
        map: &IndexMap,
    ) -> Result<Self, MetricsError> {
        let mse = mse(original, reconstructed)?;
        let psnr_db = psnr(mse)?;
        let entropy_bits = shannon_entropy(map.indices(), map.codebook_size())?;
        let rates = rate_report(map, entropy_bits);
        Ok(Self {
            mse,
            psnr_db,
            entropy_bits,
            raw_index_bpp: rates.raw_index_bpp,
            entropy_bpp: rates.entropy_bpp,
            original_bpp: rates.original_bpp,
            compression_ratio: rates.compression_ratio,
        })
    }

    /// Field names and values in report order.
    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("mse", self.mse),
            ("psnr_db", self.psnr_db),
            ("entropy_bits", self.entropy_bits),
            ("raw_index_bpp", self.raw_index_bpp),
            ("entropy_bpp", self.entropy_bpp),
            ("original_bpp", self.original_bpp),
            ("compression_ratio", self.compression_ratio),
        ]
    }
}

/// Text form of a report value. Infinity is written as `inf`.
pub fn format_value(value: f64) -> String {
    if value == f64::INFINITY {
        "inf".to_string()
    } else {
        value.to_string()
    }
}

/// JSON form of a report value. JSON has no infinity, so it becomes the
/// string `"inf"`.
pub fn json_value(value: f64) -> Value {
    match Number::from_f64(value) {
        Some(n) => Value::Number(n),
        None if value == f64::INFINITY => Value::String("inf".into()),
        None => Value::Null,
    }
}

/// Renders `key = value` lines.
pub fn render_text(entries: &[(&str, f64)]) -> String {
    entries
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", format_value(*v)))
        .collect()
}

/// Renders a single flat JSON object, keys in the given order.
pub fn render_json(entries: &[(&str, f64)]) -> String {
    let mut object = Map::new();
    for (k, v) in entries {
        object.insert((*k).to_string(), json_value(*v));
    }
    Value::Object(object).to_string()
}
