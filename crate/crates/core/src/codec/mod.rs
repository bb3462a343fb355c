//! Pixel-domain and quantized-DCT-domain images, the 8×8 DCT, quantization
//! tables and the PGM / QDCT file formats.

mod dct;
mod image;
mod io;
mod quant;

pub use dct::{dct_f64, Block, Dct8};
pub use image::{compress, decompress, dequantized_spatial, round_half_away, CoefficientImage, SpatialImage};
pub use io::{read_pgm, read_pgm_from, read_qdct, read_qdct_from, write_pgm, write_pgm_to, write_qdct, write_qdct_to};
pub use quant::{quant_table, QuantTable};

/// Side length of a DCT block.
pub const BLOCK: usize = 8;
/// Coefficients per DCT block.
pub const BLOCK_LEN: usize = 64;
