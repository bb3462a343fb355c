use super::dct::dct_f64;
use super::quant::QuantTable;
use super::{BLOCK, BLOCK_LEN};
use crate::{Error, Result};

/// Rounds half away from zero (MATLAB `round`), which is what `f64::round` does.
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(BLOCK) || !height.is_multiple_of(BLOCK) {
        return Err(Error::Format(format!(
            "dimensions {width}x{height} are not positive multiples of 8"
        )));
    }
    Ok(())
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl SpatialImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() != width * height {
            return Err(Error::Format(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
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

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Copies out the `width`×`height` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::InvalidArgument("crop window exceeds image".into()));
        }
        let mut px = Vec::with_capacity(width * height);
        for r in row..row + height {
            px.extend_from_slice(&self.pixels[r * self.width + col..r * self.width + col + width]);
        }
        Self::new(width, height, px)
    }
}

/// Quantized DCT coefficients of a grayscale JPEG plus its quantization table.
///
/// Coefficients are stored block-major: block `b` (raster order over the
/// block grid) occupies `coeffs[b * 64 .. b * 64 + 64]`, row-major within the
/// block. A flat coefficient index is therefore `block * 64 + mode`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientImage {
    width: usize,
    height: usize,
    qtable: QuantTable,
    coeffs: Vec<i16>,
}

impl CoefficientImage {
    pub fn new(width: usize, height: usize, qtable: QuantTable, coeffs: Vec<i16>) -> Result<Self> {
        check_dims(width, height)?;
        if coeffs.len() != width * height {
            return Err(Error::Format(format!(
                "expected {} coefficients, got {}",
                width * height,
                coeffs.len()
            )));
        }
        Ok(Self {
            width,
            height,
            qtable,
            coeffs,
        })
    }

    pub fn zeros(width: usize, height: usize, qtable: QuantTable) -> Result<Self> {
        Self::new(width, height, qtable, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn qtable(&self) -> &QuantTable {
        &self.qtable
    }

    pub fn blocks_wide(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_high(&self) -> usize {
        self.height / BLOCK
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks_wide() * self.blocks_high()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[i16] {
        &self.coeffs
    }

    pub fn get(&self, index: usize) -> i16 {
        self.coeffs[index]
    }

    pub fn set(&mut self, index: usize, value: i16) {
        self.coeffs[index] = value;
    }

    pub fn block(&self, b: usize) -> [i16; 64] {
        let mut out = [0i16; 64];
        out.copy_from_slice(&self.coeffs[b * BLOCK_LEN..(b + 1) * BLOCK_LEN]);
        out
    }

    pub fn set_block(&mut self, b: usize, block: &[i16; 64]) {
        self.coeffs[b * BLOCK_LEN..(b + 1) * BLOCK_LEN].copy_from_slice(block);
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[i16]> {
        self.coeffs.chunks_exact(BLOCK_LEN)
    }

    /// Coefficient at grid position `(row, col)`, i.e. the layout where block
    /// `(br, bc)` covers rows `8br..8br+8` and columns `8bc..8bc+8`.
    pub fn at(&self, row: usize, col: usize) -> i16 {
        self.coeffs[self.grid_index(row, col)]
    }

    pub fn grid_index(&self, row: usize, col: usize) -> usize {
        let b = (row / BLOCK) * self.blocks_wide() + col / BLOCK;
        b * BLOCK_LEN + (row % BLOCK) * BLOCK + col % BLOCK
    }

    /// Top-left pixel `(row, col)` of block `b`.
    pub fn block_origin(&self, b: usize) -> (usize, usize) {
        ((b / self.blocks_wide()) * BLOCK, (b % self.blocks_wide()) * BLOCK)
    }

    pub fn with_qtable(mut self, qtable: QuantTable) -> Self {
        self.qtable = qtable;
        self
    }

    /// Count of nonzero AC coefficients.
    pub fn nonzero_ac(&self) -> usize {
        self.blocks()
            .map(|b| b[1..].iter().filter(|&&c| c != 0).count())
            .sum()
    }
}

pub(crate) fn to_i16(v: f64, index: usize) -> i16 {
    if v < i16::MIN as f64 || v > i16::MAX as f64 {
        panic!("{}", Error::CoefficientOverflow(index));
    }
    v as i16
}

/// Block-level forward path: level shift, DCT, divide by `q`, round.
pub(crate) fn compress_block(pixels: &[f64; 64], q: &QuantTable) -> [i16; 64] {
    let mut shifted = [0.0; 64];
    for (s, &p) in shifted.iter_mut().zip(pixels.iter()) {
        *s = p - 128.0;
    }
    let c = dct_f64().forward(&shifted);
    let mut out = [0i16; 64];
    for m in 0..64 {
        out[m] = to_i16(round_half_away(c[m] / q.step(m) as f64), m);
    }
    out
}

/// Block-level inverse path: dequantize, IDCT, round, +128, clamp to `[0, 255]`.
pub(crate) fn decompress_block(coeffs: &[i16; 64], q: &QuantTable) -> [f64; 64] {
    let mut deq = [0.0; 64];
    for m in 0..64 {
        deq[m] = coeffs[m] as f64 * q.step(m) as f64;
    }
    let x = dct_f64().inverse(&deq);
    let mut out = [0.0; 64];
    for (o, &v) in out.iter_mut().zip(x.iter()) {
        *o = (round_half_away(v) + 128.0).clamp(0.0, 255.0);
    }
    out
}

/// JPEG-compresses a spatial image with table `q`.
pub fn compress(img: &SpatialImage, q: &QuantTable) -> CoefficientImage {
    let mut ci = CoefficientImage::zeros(img.width, img.height, *q).expect("dims already valid");
    for b in 0..ci.num_blocks() {
        let (r0, c0) = ci.block_origin(b);
        let mut px = [0.0; 64];
        for x in 0..BLOCK {
            for y in 0..BLOCK {
                px[x * BLOCK + y] = img.get(r0 + x, c0 + y) as f64;
            }
        }
        ci.set_block(b, &compress_block(&px, q));
    }
    ci
}

/// Decodes to 8-bit pixels.
pub fn decompress(ci: &CoefficientImage) -> SpatialImage {
    let mut pixels = vec![0u8; ci.width * ci.height];
    for b in 0..ci.num_blocks() {
        let (r0, c0) = ci.block_origin(b);
        let px = decompress_block(&ci.block(b), &ci.qtable);
        for x in 0..BLOCK {
            for y in 0..BLOCK {
                pixels[(r0 + x) * ci.width + c0 + y] = px[x * BLOCK + y] as u8;
            }
        }
    }
    SpatialImage {
        width: ci.width,
        height: ci.height,
        pixels,
    }
}

/// Real-valued, zero-centred decoded image (dequantize + IDCT, no rounding,
/// no level shift, no clamping), row-major.
pub fn dequantized_spatial(ci: &CoefficientImage) -> Vec<f64> {
    let mut out = vec![0.0; ci.width * ci.height];
    let dct = dct_f64();
    for b in 0..ci.num_blocks() {
        let (r0, c0) = ci.block_origin(b);
        let block = ci.block(b);
        let mut deq = [0.0; 64];
        for m in 0..64 {
            deq[m] = block[m] as f64 * ci.qtable.step(m) as f64;
        }
        let x = dct.inverse(&deq);
        for i in 0..BLOCK {
            for j in 0..BLOCK {
                out[(r0 + i) * ci.width + c0 + j] = x[i * BLOCK + j];
            }
        }
    }
    out
}
