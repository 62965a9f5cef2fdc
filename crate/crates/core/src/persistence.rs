//! On-disk formats.
//!
//! Codebooks are CSV text: a header line `vqc,1,<M>,4` followed by one line
//! of four comma-separated components per centroid. Components are written
//! in the shortest decimal form that parses back to the same `f64`.
//!
//! Index maps are binary, every integer big-endian:
//!
//! ```text
//! "VQI1" | orig_width u32 | orig_height u32 | block_w u8 = 2 | block_h u8 = 2
//!        | codebook_size u32 | blocks_w * blocks_h indices as u16, row-major
//! ```

use thiserror::Error;

use crate::codec::{CodecError, IndexMap, MAX_CODEBOOK_SIZE};
use crate::pixelgrid::{block_grid, BlockVector, ImageError, BLOCK_DIM, BLOCK_SIDE};
use crate::quantizer::Codebook;

pub const CODEBOOK_TAG: &str = "vqc";
pub const CODEBOOK_VERSION: u32 = 1;
pub const INDEX_MAGIC: &[u8; 4] = b"VQI1";
/// Bytes before the index payload.
pub const INDEX_HEADER_LEN: usize = 18;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodebookFileError {
    #[error("codebook file is not UTF-8 text")]
    NotText,
    #[error("missing or malformed header line")]
    BadHeader,
    #[error("bad format tag {0:?}, expected \"vqc\"")]
    BadTag(String),
    #[error("unsupported codebook version {0}")]
    UnsupportedVersion(String),
    #[error("header declares {declared} centroids but {found} rows follow")]
    SizeMismatch { declared: usize, found: usize },
    #[error("line {line}: non-numeric field {field:?}")]
    NonNumeric { line: usize, field: String },
    #[error("line {line}: dimension {found}, expected 4")]
    Dimension { line: usize, found: usize },
    #[error("line {line}: component {value} outside [0, 255]")]
    OutOfRange { line: usize, value: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexFileError {
    #[error("bad magic, expected \"VQI1\"")]
    BadMagic,
    #[error("truncated index file: need {expected} bytes, have {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0} unexpected bytes after the index payload")]
    TrailingBytes(usize),
    #[error("unsupported block size {0}x{1}")]
    BlockSize(u8, u8),
    #[error("index {index} at block {position} is outside a {size}-entry codebook")]
    IndexOutOfRange {
        position: usize,
        index: u16,
        size: usize,
    },
    #[error("invalid index map: {0}")]
    Invalid(CodecError),
}

pub fn save_codebook(codebook: &Codebook) -> Vec<u8> {
    let mut out = format!(
        "{CODEBOOK_TAG},{CODEBOOK_VERSION},{},{BLOCK_DIM}\n",
        codebook.len()
    );
    for c in codebook.centroids() {
        let row: Vec<String> = c.0.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn load_codebook(bytes: &[u8]) -> Result<Codebook, CodebookFileError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CodebookFileError::NotText)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or(CodebookFileError::BadHeader)?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(CodebookFileError::BadHeader);
    }
    if fields[0] != CODEBOOK_TAG {
        return Err(CodebookFileError::BadTag(fields[0].to_string()));
    }
    if fields[1].parse::<u32>().ok() != Some(CODEBOOK_VERSION) {
        return Err(CodebookFileError::UnsupportedVersion(fields[1].to_string()));
    }
    let declared: usize = fields[2]
        .parse()
        .map_err(|_| CodebookFileError::BadHeader)?;
    let dimension: usize = fields[3]
        .parse()
        .map_err(|_| CodebookFileError::BadHeader)?;
    if dimension != BLOCK_DIM {
        return Err(CodebookFileError::Dimension {
            line: 1,
            found: dimension,
        });
    }

    let rows: Vec<(usize, &str)> = lines
        .enumerate()
        .map(|(k, l)| (k + 2, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if declared == 0 || rows.len() != declared {
        return Err(CodebookFileError::SizeMismatch {
            declared,
            found: rows.len(),
        });
    }

    let mut centroids = Vec::with_capacity(declared);
    for (line, row) in rows {
        let parts: Vec<&str> = row.split(',').map(str::trim).collect();
        if parts.len() != BLOCK_DIM {
            return Err(CodebookFileError::Dimension {
                line,
                found: parts.len(),
            });
        }
        let mut c = [0.0; BLOCK_DIM];
        for (slot, field) in c.iter_mut().zip(&parts) {
            let value: f64 = field.parse().map_err(|_| CodebookFileError::NonNumeric {
                line,
                field: field.to_string(),
            })?;
            if !(0.0..=255.0).contains(&value) {
                return Err(CodebookFileError::OutOfRange {
                    line,
                    value: field.to_string(),
                });
            }
            *slot = value;
        }
        centroids.push(BlockVector(c));
    }
    // Every row was range-checked above, so construction cannot fail.
    Ok(Codebook::new(centroids).expect("validated centroids"))
}

pub fn save_index_file(map: &IndexMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(INDEX_HEADER_LEN + 2 * map.indices().len());
    out.extend_from_slice(INDEX_MAGIC);
    out.extend_from_slice(&(map.orig_width() as u32).to_be_bytes());
    out.extend_from_slice(&(map.orig_height() as u32).to_be_bytes());
    out.push(BLOCK_SIDE as u8);
    out.push(BLOCK_SIDE as u8);
    out.extend_from_slice(&(map.codebook_size() as u32).to_be_bytes());
    for &i in map.indices() {
        out.extend_from_slice(&i.to_be_bytes());
    }
    out
}

pub fn load_index_file(bytes: &[u8]) -> Result<IndexMap, IndexFileError> {
    if bytes.len() < INDEX_MAGIC.len() || &bytes[..4] != INDEX_MAGIC {
        return Err(IndexFileError::BadMagic);
    }
    if bytes.len() < INDEX_HEADER_LEN {
        return Err(IndexFileError::Truncated {
            expected: INDEX_HEADER_LEN,
            found: bytes.len(),
        });
    }
    let be32 =
        |at: usize| u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
    let width = be32(4) as usize;
    let height = be32(8) as usize;
    if width == 0 || height == 0 {
        return Err(IndexFileError::Invalid(CodecError::Image(
            ImageError::ZeroDimension { width, height },
        )));
    }
    let (block_w, block_h) = (bytes[12], bytes[13]);
    if usize::from(block_w) != BLOCK_SIDE || usize::from(block_h) != BLOCK_SIDE {
        return Err(IndexFileError::BlockSize(block_w, block_h));
    }
    let codebook_size = be32(14) as usize;
    if codebook_size == 0 || codebook_size > MAX_CODEBOOK_SIZE {
        return Err(IndexFileError::Invalid(CodecError::BadCodebookSize(
            codebook_size,
        )));
    }
    let (blocks_w, blocks_h) = block_grid(width, height);
    let expected = INDEX_HEADER_LEN + 2 * blocks_w * blocks_h;
    if bytes.len() < expected {
        return Err(IndexFileError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(IndexFileError::TrailingBytes(bytes.len() - expected));
    }
    let indices: Vec<u16> = bytes[INDEX_HEADER_LEN..]
        .chunks_exact(2)
        .map(|p| u16::from_be_bytes([p[0], p[1]]))
        .collect();
    if let Some((position, &index)) = indices
        .iter()
        .enumerate()
        .find(|(_, &i)| usize::from(i) >= codebook_size)
    {
        return Err(IndexFileError::IndexOutOfRange {
            position,
            index,
            size: codebook_size,
        });
    }
    IndexMap::new(width, height, codebook_size, indices).map_err(IndexFileError::Invalid)
}
