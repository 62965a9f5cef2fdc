//! Lossy compression of 8-bit grayscale images by vector quantization of
//! 2x2 pixel blocks.
//!
//! The codebook is grown from the global mean by repeated doubling: every
//! centroid is kept and a randomly mutated copy is appended, then Lloyd
//! passes (nearest-centroid assignment, centroid migration) settle the new
//! codebook. Images are encoded as one 16-bit codeword index per block.
//!
//! ```
//! use vqsplit::{codec, pixelgrid, quantizer};
//!
//! let image = pixelgrid::GrayImage::new(4, 2, vec![0, 0, 200, 200, 0, 0, 200, 200]).unwrap();
//! let vectors = pixelgrid::image_to_blocks(&image);
//! let (codebook, _) = quantizer::train_codebook(&vectors, &quantizer::TrainerConfig::new(2)).unwrap();
//! let map = codec::compress_image(&image, &codebook).unwrap();
//! assert_eq!(codec::decompress_image(&map, &codebook).unwrap(), image);
//! ```

pub mod cli;
pub mod codec;
pub mod metrics;
pub mod persistence;
pub mod pixelgrid;
pub mod quantizer;
pub mod rng;

pub use codec::{compress_image, decompress_image, IndexMap};
pub use metrics::QualityReport;
pub use pixelgrid::{BlockVector, GrayImage};
pub use quantizer::{train_codebook, Codebook, Membership, TrainerConfig, TrainerReport};
