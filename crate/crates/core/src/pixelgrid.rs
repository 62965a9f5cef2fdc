//! 8-bit grayscale images, Netpbm PGM I/O, and 2x2 block extraction.
//!
//! Blocks are taken row-major over the block grid; the components of one
//! block are `[top-left, top-right, bottom-left, bottom-right]`. Images with
//! an odd width or height are padded on the right/bottom by replicating the
//! last column/row, and the padding is dropped again on reconstruction.

use thiserror::Error;

/// Side length of the square pixel blocks that become training vectors.
pub const BLOCK_SIDE: usize = 2;
/// Number of components in a [`BlockVector`].
pub const BLOCK_DIM: usize = BLOCK_SIDE * BLOCK_SIDE;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("unsupported magic {0:?}: only grayscale P2/P5 is accepted")]
    UnsupportedMagic(String),
    #[error("malformed header: bad or missing {0}")]
    MalformedHeader(&'static str),
    #[error("maxval {0} is out of range (1..=255)")]
    BadMaxval(u32),
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    TruncatedPixels { expected: usize, found: usize },
    #[error("pixel {index} has value {value} above maxval {maxval}")]
    PixelAboveMaxval {
        index: usize,
        value: u32,
        maxval: u32,
    },
    #[error("malformed pixel sample at index {0}")]
    MalformedPixel(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("pixel buffer has {found} entries, {width}x{height} needs {expected}")]
    PixelCount {
        width: usize,
        height: usize,
        expected: usize,
        found: usize,
    },
    #[error("{found} blocks cannot cover a {width}x{height} image ({expected} needed)")]
    BlockCount {
        width: usize,
        height: usize,
        expected: usize,
        found: usize,
    },
}

/// A row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::PixelCount {
                width,
                height,
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Pixel at `(row, col)`, with coordinates past the edge clamped to the
    /// last row/column.
    #[inline]
    fn replicated(&self, row: usize, col: usize) -> u8 {
        let r = row.min(self.height - 1);
        let c = col.min(self.width - 1);
        self.pixels[r * self.width + c]
    }

    /// Number of blocks across and down, `(ceil(w/2), ceil(h/2))`.
    pub fn block_grid(&self) -> (usize, usize) {
        block_grid(self.width, self.height)
    }
}

/// Block grid dimensions for a `width` x `height` image.
pub fn block_grid(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(BLOCK_SIDE), height.div_ceil(BLOCK_SIDE))
}

/// One 2x2 pixel block as a real 4-vector.
///
/// Vectors produced by this crate keep every component in `[0, 255]`; see
/// [`BlockVector::is_feasible`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockVector(pub [f64; BLOCK_DIM]);

impl BlockVector {
    pub const fn new(components: [f64; BLOCK_DIM]) -> Self {
        Self(components)
    }

    pub const fn splat(value: f64) -> Self {
        Self([value; BLOCK_DIM])
    }

    pub fn components(&self) -> &[f64; BLOCK_DIM] {
        &self.0
    }

    /// Squared Euclidean distance `(x - c)'(x - c)`.
    #[inline]
    pub fn squared_error(&self, other: &BlockVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// True when every component is a finite value in `[0, 255]`.
    pub fn is_feasible(&self) -> bool {
        self.0.iter().all(|v| (0.0..=255.0).contains(v))
    }
}

impl From<[f64; BLOCK_DIM]> for BlockVector {
    fn from(components: [f64; BLOCK_DIM]) -> Self {
        Self(components)
    }
}

/// Splits an image into 2x2 blocks, replicating the right/bottom edge for odd
/// dimensions.
pub fn image_to_blocks(image: &GrayImage) -> Vec<BlockVector> {
    let (bw, bh) = image.block_grid();
    let mut blocks = Vec::with_capacity(bw * bh);
    for br in 0..bh {
        let r = br * BLOCK_SIDE;
        for bc in 0..bw {
            let c = bc * BLOCK_SIDE;
            blocks.push(BlockVector([
                f64::from(image.replicated(r, c)),
                f64::from(image.replicated(r, c + 1)),
                f64::from(image.replicated(r + 1, c)),
                f64::from(image.replicated(r + 1, c + 1)),
            ]));
        }
    }
    blocks
}

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub fn quantize_sample(value: f64) -> u8 {
    if value.is_nan() {
        return 0;
    }
    // f64::round rounds ties away from zero.
    value.round().clamp(0.0, 255.0) as u8
}

/// Reassembles an image from its block sequence, discarding padding.
pub fn blocks_to_image(
    blocks: &[BlockVector],
    width: usize,
    height: usize,
) -> Result<GrayImage, ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height });
    }
    let (bw, bh) = block_grid(width, height);
    if blocks.len() != bw * bh {
        return Err(ImageError::BlockCount {
            width,
            height,
            expected: bw * bh,
            found: blocks.len(),
        });
    }
    let mut pixels = vec![0u8; width * height];
    for (k, block) in blocks.iter().enumerate() {
        let r0 = (k / bw) * BLOCK_SIDE;
        let c0 = (k % bw) * BLOCK_SIDE;
        for (slot, &value) in block.0.iter().enumerate() {
            let r = r0 + slot / BLOCK_SIDE;
            let c = c0 + slot % BLOCK_SIDE;
            if r < height && c < width {
                pixels[r * width + c] = quantize_sample(value);
            }
        }
    }
    GrayImage::new(width, height, pixels)
}

/// Encodes an image as binary PGM (P5, maxval 255).
pub fn save_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width, image.height);
    let mut out = Vec::with_capacity(header.len() + image.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&image.pixels);
    out
}

/// Decodes a grayscale PGM, either binary (P5) or ASCII (P2).
///
/// Sample values are kept as stored; images with a maxval below 255 are not
/// rescaled.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 {
        return Err(PgmError::MalformedHeader("magic"));
    }
    let ascii = match &bytes[..2] {
        b"P5" => false,
        b"P2" => true,
        other => {
            return Err(PgmError::UnsupportedMagic(
                String::from_utf8_lossy(other).into(),
            ))
        }
    };
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 {
        return Err(PgmError::MalformedHeader("width"));
    }
    if height == 0 {
        return Err(PgmError::MalformedHeader("height"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::BadMaxval(maxval));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .ok_or(PgmError::MalformedHeader("width"))?;

    let pixels = if ascii {
        read_ascii_raster(&mut cursor, expected, maxval)?
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        match bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(PgmError::MalformedHeader("maxval")),
        }
        let raster = &bytes[cursor.pos..];
        if raster.len() < expected {
            return Err(PgmError::TruncatedPixels {
                expected,
                found: raster.len(),
            });
        }
        let raster = &raster[..expected];
        if let Some((index, &value)) = raster
            .iter()
            .enumerate()
            .find(|(_, &v)| u32::from(v) > maxval)
        {
            return Err(PgmError::PixelAboveMaxval {
                index,
                value: value.into(),
                maxval,
            });
        }
        raster.to_vec()
    };
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

fn read_ascii_raster(
    cursor: &mut HeaderCursor<'_>,
    expected: usize,
    maxval: u32,
) -> Result<Vec<u8>, PgmError> {
    let mut pixels = Vec::with_capacity(expected);
    for index in 0..expected {
        cursor.skip_space_and_comments();
        let token = cursor.token();
        if token.is_empty() {
            return Err(PgmError::TruncatedPixels {
                expected,
                found: index,
            });
        }
        let value: u32 = std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PgmError::MalformedPixel(index))?;
        if value > maxval {
            return Err(PgmError::PixelAboveMaxval {
                index,
                value,
                maxval,
            });
        }
        pixels.push(value as u8);
    }
    Ok(pixels)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> &'a [u8] {
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        &self.bytes[start..self.pos]
    }

    fn number(&mut self, field: &'static str) -> Result<u32, PgmError> {
        let start = self.pos;
        self.skip_space_and_comments();
        // Header fields must be separated from whatever precedes them.
        if self.pos == start {
            return Err(PgmError::MalformedHeader(field));
        }
        let token = self.token();
        if token.is_empty() || !token.iter().all(u8::is_ascii_digit) {
            return Err(PgmError::MalformedHeader(field));
        }
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PgmError::MalformedHeader(field))
    }
}
