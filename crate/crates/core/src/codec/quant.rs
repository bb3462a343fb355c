use crate::{Error, Result};

/// Annex K luminance quantization table, row-major.
const LUMA_BASE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// 8×8 quantization steps for one quality factor. Steps are stored row-major,
/// so mode `(u, v)` lives at index `u * 8 + v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantTable {
    steps: [u16; 64],
    quality: u8,
}

impl QuantTable {
    pub fn steps(&self) -> &[u16; 64] {
        &self.steps
    }

    pub fn step(&self, mode: usize) -> u16 {
        self.steps[mode]
    }

    pub fn quality(&self) -> u8 {
        self.quality
    }
}

/// IJG-scaled Annex K luminance table for `quality` in `1..=100`.
pub fn quant_table(quality: u32) -> Result<QuantTable> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidArgument(format!(
            "quality must be in 1..=100, got {quality}"
        )));
    }
    let scale = if quality < 50 { 5000 / quality } else { 200 - 2 * quality };
    let mut steps = [0u16; 64];
    for (s, &b) in steps.iter_mut().zip(LUMA_BASE.iter()) {
        *s = ((b as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(QuantTable {
        steps,
        quality: quality as u8,
    })
}
