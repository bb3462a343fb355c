use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embed::{embed_prepared, extract_detailed, frame_message, prepare_cover, received_coded_bits, Cover, PreparedCover};
use super::{EmbedParams, Method, StegoKey};
use crate::channel::{diff_report, recompress_image};
use crate::codec::SpatialImage;
use crate::ecc::{BchCode, BCH_N};
use crate::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub methods: Vec<Method>,
    pub qualities: Vec<u32>,
    pub payloads: Vec<f64>,
    pub bch_k: usize,
    pub h: usize,
    pub subimages: usize,
    pub max_tcm_iters: usize,
    /// Seed for the random test messages.
    pub message_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let p = EmbedParams::default();
        Self {
            methods: vec![Method::Rsvrc, Method::Baseline],
            qualities: vec![75, 85, 95],
            payloads: vec![0.05, 0.1],
            bch_k: p.bch_k,
            h: p.h,
            subimages: p.subimages,
            max_tcm_iters: p.max_tcm_iters,
            message_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEval {
    pub name: String,
    pub message_bytes: usize,
    pub tcm_residual_changes: usize,
    pub changes: usize,
    pub penalties: usize,
    pub recompression_errors: u64,
    pub p_e: f64,
    /// Coded-bit error rate against the true coded bits.
    pub p_s: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub method: Method,
    pub quality: u32,
    pub payload: f64,
    /// Images that carried a message.
    pub images: usize,
    /// Images too small for a single codeword at this payload.
    pub skipped: Vec<String>,
    /// Mean per-image channel error rate.
    pub p_e: f64,
    /// Mean per-image coded-bit error rate.
    pub p_s: f64,
    /// Fraction of images whose message was recovered.
    pub r_s: f64,
    /// BCH coding efficiency k/n.
    pub e: f64,
    pub embed_changes_by_mode: [[u64; 8]; 8],
    pub recompression_errors_by_mode: [[u64; 8]; 8],
    pub per_image: Vec<ImageEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub config: EvalConfig,
    pub cells: Vec<EvalCell>,
}

impl EvalReport {
    pub fn cell(&self, method: Method, quality: u32, payload: f64) -> Option<&EvalCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.quality == quality && c.payload == payload)
    }
}

fn add_grid(acc: &mut [[u64; 8]; 8], g: &[[u64; 8]; 8]) {
    for (a, b) in acc.iter_mut().flatten().zip(g.iter().flatten()) {
        *a += b;
    }
}

/// Longest message whose framed, coded form fits `capacity_bits`.
fn max_message_bytes(capacity_bits: usize, k: usize) -> Option<usize> {
    let blocks = capacity_bits / BCH_N;
    let bits = blocks * k;
    (bits >= 16 + 8).then(|| ((bits - 16) / 8).min(u16::MAX as usize))
}

fn evaluate_one(
    name: &str,
    prepared: &PreparedCover,
    msg: &[u8],
    key: &StegoKey,
    p: &EmbedParams,
    code: &BchCode,
) -> Result<(ImageEval, [[u64; 8]; 8], [[u64; 8]; 8])> {
    let (stego, report) = embed_prepared(prepared, msg, key, p)?;
    let received = recompress_image(&stego, &prepared.channel);
    let channel = diff_report(&stego, &received)?;
    let truth = code.encode_blocks(&frame_message(msg, code.k())?)?;
    let read = received_coded_bits(&received, key, p, report.bch_blocks)?;
    let wrong = truth.iter().zip(&read).filter(|(a, b)| a != b).count();
    let outcome = extract_detailed(&received, key, p)?;
    let eval = ImageEval {
        name: name.to_string(),
        message_bytes: msg.len(),
        tcm_residual_changes: prepared.tcm.residual_changes,
        changes: report.changes,
        penalties: report.subimages.iter().map(|s| s.penalties).sum(),
        recompression_errors: channel.changed_total,
        p_e: channel.p_e,
        p_s: wrong as f64 / truth.len() as f64,
        success: outcome.message.as_deref() == Some(msg),
    };
    Ok((eval, report.changes_by_mode, channel.changed_by_mode))
}

/// Embeds a maximum-length random message into every cover for every
/// (quality, payload, method), passes the stego through the channel once and
/// measures what survives.
pub fn evaluate(covers: &[(String, SpatialImage)], cfg: &EvalConfig, key: &StegoKey) -> Result<EvalReport> {
    if covers.is_empty() {
        return Err(Error::InvalidArgument("evaluation needs at least one cover".into()));
    }
    let code = BchCode::new(cfg.bch_k)?;
    let mut cells = Vec::new();
    for &quality in &cfg.qualities {
        let prepared: Vec<PreparedCover> = covers
            .iter()
            .map(|(_, img)| prepare_cover(Cover::Spatial(img), quality, cfg.max_tcm_iters))
            .collect::<Result<_>>()?;
        for &payload in &cfg.payloads {
            // one message per image, shared by every method
            let messages: Vec<Option<Vec<u8>>> = prepared
                .iter()
                .enumerate()
                .map(|(i, pc)| {
                    let cap = (payload * pc.image.nonzero_ac() as f64).floor() as usize;
                    max_message_bytes(cap, code.k()).map(|len| {
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.message_seed);
                        rng.set_stream(((quality as u64) << 40) ^ ((payload * 1e6) as u64) << 20 ^ i as u64);
                        (0..len).map(|_| rng.gen()).collect()
                    })
                })
                .collect();
            for &method in &cfg.methods {
                let p = EmbedParams {
                    payload,
                    quality,
                    max_tcm_iters: cfg.max_tcm_iters,
                    h: cfg.h,
                    bch_k: cfg.bch_k,
                    subimages: cfg.subimages,
                    method,
                };
                let mut cell = EvalCell {
                    method,
                    quality,
                    payload,
                    images: 0,
                    skipped: Vec::new(),
                    p_e: 0.0,
                    p_s: 0.0,
                    r_s: 0.0,
                    e: code.k() as f64 / BCH_N as f64,
                    embed_changes_by_mode: [[0; 8]; 8],
                    recompression_errors_by_mode: [[0; 8]; 8],
                    per_image: Vec::new(),
                };
                for (((name, _), pc), msg) in covers.iter().zip(&prepared).zip(&messages) {
                    let Some(msg) = msg else {
                        cell.skipped.push(name.clone());
                        continue;
                    };
                    let (eval, changes, errors) = evaluate_one(name, pc, msg, key, &p, &code)?;
                    add_grid(&mut cell.embed_changes_by_mode, &changes);
                    add_grid(&mut cell.recompression_errors_by_mode, &errors);
                    cell.per_image.push(eval);
                }
                let n = cell.per_image.len();
                cell.images = n;
                if n > 0 {
                    cell.p_e = cell.per_image.iter().map(|e| e.p_e).sum::<f64>() / n as f64;
                    cell.p_s = cell.per_image.iter().map(|e| e.p_s).sum::<f64>() / n as f64;
                    cell.r_s = cell.per_image.iter().filter(|e| e.success).count() as f64 / n as f64;
                }
                cells.push(cell);
            }
        }
    }
    Ok(EvalReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        cells,
    })
}

/// Minimum over thresholds of `(P_FA + P_MD) / 2`, classifying a score above
/// the threshold as stego.
pub fn pe_min(cover_scores: &[f64], stego_scores: &[f64]) -> Result<f64> {
    if cover_scores.is_empty() || stego_scores.is_empty() {
        return Err(Error::InvalidArgument("score lists must be nonempty".into()));
    }
    if cover_scores.iter().chain(stego_scores).any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores must not be NaN".into()));
    }
    let mut all: Vec<(f64, bool)> = cover_scores
        .iter()
        .map(|&s| (s, false))
        .chain(stego_scores.iter().map(|&s| (s, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nc, ns) = (cover_scores.len() as f64, stego_scores.len() as f64);
    // threshold below every score: everything is called stego
    let mut covers_below = 0usize;
    let mut stegos_below = 0usize;
    let mut best = 0.5;
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                stegos_below += 1;
            } else {
                covers_below += 1;
            }
            i += 1;
        }
        let p_fa = (cover_scores.len() - covers_below) as f64 / nc;
        let p_md = stegos_below as f64 / ns;
        best = f64::min(best, 0.5 * (p_fa + p_md));
    }
    Ok(best)
}

/// Cosine similarity of two 8×8 histograms; 0 when either is empty.
pub fn cosine_similarity(a: &[[u64; 8]; 8], b: &[[u64; 8]; 8]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().flatten().zip(b.iter().flatten()) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
