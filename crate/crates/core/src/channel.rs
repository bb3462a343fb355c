//! JPEG recompression channel and transport channel matching (TCM).
//!
//! One channel pass decodes every block with the image's table (dequantize,
//! IDCT, round, +128, clamp) and re-encodes it with the channel's table
//! (−128, DCT, divide, round). Blocks never interact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{dct_f64, round_half_away, CoefficientImage, QuantTable, BLOCK_LEN};
use crate::{Error, Result};

/// Default cap on TCM recompression passes.
pub const DEFAULT_MAX_TCM_ITERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelParams {
    /// Table the incoming image was quantized with.
    pub q1: QuantTable,
    /// Table the channel re-encodes with.
    pub q2: QuantTable,
}

impl ChannelParams {
    pub fn new(q1: QuantTable, q2: QuantTable) -> Self {
        Self { q1, q2 }
    }

    /// Image and channel share one table.
    pub fn matched(q: QuantTable) -> Self {
        Self { q1: q, q2: q }
    }
}

/// One block through the channel.
pub fn recompress_block(block: &[i16; 64], params: &ChannelParams) -> [i16; 64] {
    let dct = dct_f64();
    let mut deq = [0.0; 64];
    for m in 0..BLOCK_LEN {
        deq[m] = block[m] as f64 * params.q1.step(m) as f64;
    }
    let mut px = dct.inverse(&deq);
    for p in px.iter_mut() {
        // decoder output, then the encoder's level shift
        *p = (round_half_away(*p) + 128.0).clamp(0.0, 255.0) - 128.0;
    }
    let c = dct.forward(&px);
    let mut out = [0i16; 64];
    for m in 0..BLOCK_LEN {
        out[m] = round_half_away(c[m] / params.q2.step(m) as f64) as i16;
    }
    out
}

/// Every block through the channel; the result carries `q2`.
pub fn recompress_image(ci: &CoefficientImage, params: &ChannelParams) -> CoefficientImage {
    let mut coeffs = ci.coeffs().to_vec();
    coeffs.par_chunks_exact_mut(BLOCK_LEN).for_each(|chunk| {
        let mut block = [0i16; 64];
        block.copy_from_slice(chunk);
        chunk.copy_from_slice(&recompress_block(&block, params));
    });
    CoefficientImage::new(ci.width(), ci.height(), params.q2, coeffs).expect("same dims")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcmResult {
    pub image: CoefficientImage,
    /// Channel passes performed.
    pub iterations: usize,
    /// Coefficients that still change when `image` passes the channel once more.
    pub residual_changes: usize,
    /// Change count of every pass, in order.
    pub history: Vec<usize>,
}

/// Transport channel matching: recompress until a pass changes nothing, the
/// change count stops decreasing, or `max_iters` passes have run.
///
/// The returned image is the pass input with the smallest observed change
/// count, so `residual_changes` is exact rather than an estimate. When the
/// image's table differs from the channel's, the first pass only converts
/// tables and its change count is not compared.
pub fn tcm(ci: &CoefficientImage, params: &ChannelParams, max_iters: usize) -> Result<TcmResult> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("TCM needs at least one pass".into()));
    }
    let mut history = Vec::new();
    let mut current = ci.clone();
    let mut passes = 0;
    if params.q1 != params.q2 {
        current = recompress_image(&current, params);
        passes += 1;
        history.push(diff_count(ci, &current));
    }
    let matched = ChannelParams::matched(params.q2);
    let mut best: Option<(CoefficientImage, usize)> = None;
    while passes < max_iters {
        let next = recompress_image(&current, &matched);
        passes += 1;
        let changes = diff_count(&current, &next);
        history.push(changes);
        if changes == 0 {
            return Ok(TcmResult {
                image: current,
                iterations: passes,
                residual_changes: 0,
                history,
            });
        }
        match &best {
            Some((_, best_changes)) if changes >= *best_changes => break,
            _ => best = Some((current, changes)),
        }
        current = next;
    }
    let (image, residual_changes) = match best {
        Some(b) => b,
        // only the table-conversion pass ran
        None => {
            let changes = diff_count(&current, &recompress_image(&current, &matched));
            (current, changes)
        }
    };
    Ok(TcmResult {
        image,
        iterations: passes,
        residual_changes,
        history,
    })
}

fn diff_count(a: &CoefficientImage, b: &CoefficientImage) -> usize {
    a.coeffs().iter().zip(b.coeffs()).filter(|(x, y)| x != y).count()
}

/// Per-mode and aggregate count of coefficients that differ between two images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub changed_total: u64,
    pub changed_by_mode: [[u64; 8]; 8],
    pub total_coeffs: u64,
    pub p_e: f64,
}

pub fn diff_report(a: &CoefficientImage, b: &CoefficientImage) -> Result<ChannelReport> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mut by_mode = [[0u64; 8]; 8];
    let mut total = 0u64;
    for (i, (x, y)) in a.coeffs().iter().zip(b.coeffs()).enumerate() {
        if x != y {
            let m = i % BLOCK_LEN;
            by_mode[m / 8][m % 8] += 1;
            total += 1;
        }
    }
    let n = a.len() as u64;
    Ok(ChannelReport {
        changed_total: total,
        changed_by_mode: by_mode,
        total_coeffs: n,
        p_e: total as f64 / n as f64,
    })
}
