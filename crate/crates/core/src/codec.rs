//! Image <-> index-map conversion against a trained codebook.

use thiserror::Error;

use crate::pixelgrid::{self, block_grid, GrayImage, ImageError};
use crate::quantizer::{find_match, Codebook};

/// Largest codebook an index map can address with 16-bit indices.
pub const MAX_CODEBOOK_SIZE: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("codebook has {0} entries; at most 65536 fit 16-bit indices")]
    CodebookTooLarge(usize),
    #[error("index map expects a {expected}-entry codebook, got {found}")]
    CodebookSizeMismatch { expected: usize, found: usize },
    #[error("index {index} at block {position} is outside a {size}-entry codebook")]
    IndexOutOfRange {
        position: usize,
        index: u16,
        size: usize,
    },
    #[error("{found} indices do not fill a {blocks_w}x{blocks_h} block grid")]
    IndexCount {
        blocks_w: usize,
        blocks_h: usize,
        found: usize,
    },
    #[error("codebook size must be in 1..=65536, got {0}")]
    BadCodebookSize(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// The compressed form of an image: one codeword index per 2x2 block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    orig_width: usize,
    orig_height: usize,
    codebook_size: usize,
    indices: Vec<u16>,
}

impl IndexMap {
    pub fn new(
        orig_width: usize,
        orig_height: usize,
        codebook_size: usize,
        indices: Vec<u16>,
    ) -> Result<Self, CodecError> {
        if orig_width == 0 || orig_height == 0 {
            return Err(ImageError::ZeroDimension {
                width: orig_width,
                height: orig_height,
            }
            .into());
        }
        if codebook_size == 0 || codebook_size > MAX_CODEBOOK_SIZE {
            return Err(CodecError::BadCodebookSize(codebook_size));
        }
        let (blocks_w, blocks_h) = block_grid(orig_width, orig_height);
        if indices.len() != blocks_w * blocks_h {
            return Err(CodecError::IndexCount {
                blocks_w,
                blocks_h,
                found: indices.len(),
            });
        }
        if let Some((position, &index)) = indices
            .iter()
            .enumerate()
            .find(|(_, &i)| usize::from(i) >= codebook_size)
        {
            return Err(CodecError::IndexOutOfRange {
                position,
                index,
                size: codebook_size,
            });
        }
        Ok(Self {
            orig_width,
            orig_height,
            codebook_size,
            indices,
        })
    }

    pub fn orig_width(&self) -> usize {
        self.orig_width
    }

    pub fn orig_height(&self) -> usize {
        self.orig_height
    }

    pub fn blocks_w(&self) -> usize {
        block_grid(self.orig_width, self.orig_height).0
    }

    pub fn blocks_h(&self) -> usize {
        block_grid(self.orig_width, self.orig_height).1
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }
}

/// Replaces every block of `image` with the index of its nearest codeword.
pub fn compress_image(image: &GrayImage, codebook: &Codebook) -> Result<IndexMap, CodecError> {
    if codebook.len() > MAX_CODEBOOK_SIZE {
        return Err(CodecError::CodebookTooLarge(codebook.len()));
    }
    let indices = pixelgrid::image_to_blocks(image)
        .iter()
        .map(|b| find_match(b, codebook) as u16)
        .collect();
    Ok(IndexMap {
        orig_width: image.width(),
        orig_height: image.height(),
        codebook_size: codebook.len(),
        indices,
    })
}

/// Looks every index up in `codebook` and reassembles the image.
pub fn decompress_image(map: &IndexMap, codebook: &Codebook) -> Result<GrayImage, CodecError> {
    if map.codebook_size != codebook.len() {
        return Err(CodecError::CodebookSizeMismatch {
            expected: map.codebook_size,
            found: codebook.len(),
        });
    }
    let blocks = map
        .indices
        .iter()
        .enumerate()
        .map(|(position, &index)| {
            codebook
                .get(usize::from(index))
                .copied()
                .ok_or(CodecError::IndexOutOfRange {
                    position,
                    index,
                    size: codebook.len(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pixelgrid::blocks_to_image(
        &blocks,
        map.orig_width,
        map.orig_height,
    )?)
}
