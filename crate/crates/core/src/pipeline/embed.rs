use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layout::{build_lattice, partition_blocks, split_sizes, Lattice};
use super::{EmbedParams, Method, StegoKey};
use crate::channel::{tcm, ChannelParams, ChannelReport};
use crate::codec::{compress, quant_table, CoefficientImage, SpatialImage};
use crate::distortion::{juniward_costmap, CostMap};
use crate::ecc::{depermute, permute, BchCode, PermKey, BCH_N};
use crate::robustness::{max_finite_cost, RobustnessConfig};
use crate::stc::{build_hhat, stc_embed, stc_extract, SubMatrix};
use crate::vrcstc::{lattice_cover, verify_stego, vrcstc_embed, SignSource, VrcstcParams};
use crate::{Error, Result};

const HEADER_BITS: usize = 16;

#[derive(Debug, Clone, Copy)]
pub enum Cover<'a> {
    /// Pixels; compressed at the channel quality first.
    Spatial(&'a SpatialImage),
    /// Already-quantized coefficients, at any table.
    Coefficients(&'a CoefficientImage),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcmSummary {
    pub iterations: usize,
    pub residual_changes: usize,
    pub history: Vec<usize>,
}

/// A channel-matched cover with its cost map, reusable across messages and methods.
#[derive(Debug, Clone)]
pub struct PreparedCover {
    pub image: CoefficientImage,
    pub tcm: TcmSummary,
    pub costs: CostMap<f64>,
    pub channel: ChannelParams,
}

pub fn prepare_cover(cover: Cover<'_>, quality: u32, max_tcm_iters: usize) -> Result<PreparedCover> {
    let q = quant_table(quality)?;
    let (start, first) = match cover {
        Cover::Spatial(img) => (compress(img, &q), ChannelParams::matched(q)),
        Cover::Coefficients(ci) => (ci.clone(), ChannelParams::new(*ci.qtable(), q)),
    };
    let t = tcm(&start, &first, max_tcm_iters)?;
    let costs = juniward_costmap::<f64>(&t.image);
    Ok(PreparedCover {
        image: t.image,
        tcm: TcmSummary {
            iterations: t.iterations,
            residual_changes: t.residual_changes,
            history: t.history,
        },
        costs,
        channel: ChannelParams::matched(q),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubimageReport {
    pub message_bits: usize,
    pub width: usize,
    pub weight: f64,
    pub distortion: f64,
    pub penalties: usize,
    pub changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedReport {
    pub method: Method,
    pub tcm: TcmSummary,
    /// Message bits allowed at the requested payload.
    pub capacity_bits: usize,
    pub message_bytes: usize,
    pub bch_blocks: usize,
    pub coded_bits: usize,
    pub subimages: Vec<SubimageReport>,
    pub changes: usize,
    pub changes_by_mode: [[u64; 8]; 8],
    /// One channel pass over the stego.
    pub verify: ChannelReport,
}

/// Header (16-bit byte count) plus message bits, zero-padded to a multiple of `k`.
pub fn frame_message(msg: &[u8], k: usize) -> Result<Vec<u8>> {
    if msg.len() > u16::MAX as usize {
        return Err(Error::InvalidArgument(format!("message of {} bytes exceeds the 65535-byte limit", msg.len())));
    }
    let mut bits = Vec::with_capacity(HEADER_BITS + 8 * msg.len() + k);
    let len = msg.len() as u16;
    bits.extend((0..HEADER_BITS).rev().map(|i| ((len >> i) & 1) as u8));
    for &byte in msg {
        bits.extend((0..8).rev().map(|i| (byte >> i) & 1));
    }
    bits.resize(bits.len().div_ceil(k) * k, 0);
    Ok(bits)
}

fn unframe(bits: &[u8], k: usize) -> Option<Vec<u8>> {
    if bits.len() < HEADER_BITS {
        return None;
    }
    let len = bits[..HEADER_BITS].iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    let used = HEADER_BITS + 8 * len;
    if used.div_ceil(k) * k != bits.len() || bits[used..].iter().any(|&b| b != 0) {
        return None;
    }
    Some(
        bits[HEADER_BITS..used]
            .chunks(8)
            .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
            .collect(),
    )
}

fn layout(image: &CoefficientImage, key: &StegoKey, p: &EmbedParams) -> Result<Vec<Lattice>> {
    let groups = partition_blocks(image.num_blocks(), p.subimages, key.partition_seed)?;
    Ok(groups
        .iter()
        .enumerate()
        .map(|(s, g)| build_lattice(g, image, key.lattice_seed, s as u64))
        .collect())
}

fn submatrix(lattice: &Lattice, message_bits: usize, key: &StegoKey, s: usize, h: usize) -> Result<SubMatrix> {
    let w = lattice.len() / message_bits.max(1);
    if w == 0 {
        return Err(Error::CapacityExceeded {
            needed: message_bits,
            available: lattice.len(),
        });
    }
    build_hhat(h, w, key.hhat_key(s))
}

fn coded_bits_for(code: &BchCode, msg: &[u8], key: &StegoKey) -> Result<Vec<u8>> {
    let framed = frame_message(msg, code.k())?;
    Ok(permute(&code.encode_blocks(&framed)?, PermKey(key.perm_seed)))
}

/// Embeds into a cover that is already channel-matched.
pub fn embed_prepared(prepared: &PreparedCover, msg: &[u8], key: &StegoKey, p: &EmbedParams) -> Result<(CoefficientImage, EmbedReport)> {
    p.validate()?;
    let code = BchCode::new(p.bch_k)?;
    let image = &prepared.image;
    let capacity_bits = (p.payload * image.nonzero_ac() as f64).floor() as usize;
    let lattices = layout(image, key, p)?;

    let mut report = EmbedReport {
        method: p.method,
        tcm: prepared.tcm.clone(),
        capacity_bits,
        message_bytes: msg.len(),
        bch_blocks: 0,
        coded_bits: 0,
        subimages: Vec::new(),
        changes: 0,
        changes_by_mode: [[0; 8]; 8],
        verify: verify_stego(image, &prepared.channel),
    };
    if msg.is_empty() {
        return Ok((image.clone(), report));
    }

    let coded = coded_bits_for(&code, msg, key)?;
    if coded.len() > capacity_bits {
        return Err(Error::CapacityExceeded {
            needed: coded.len(),
            available: capacity_bits,
        });
    }
    let sizes = split_sizes(coded.len(), p.subimages);
    let mut offsets = vec![0usize];
    for s in &sizes {
        offsets.push(offsets.last().unwrap() + s);
    }

    let signs = SignSource::new(key.rng_seed, image.len());
    let results: Vec<Result<(Vec<(usize, i16)>, SubimageReport)>> = (0..p.subimages)
        .into_par_iter()
        .map(|s| {
            let lattice = &lattices[s];
            let part = &coded[offsets[s]..offsets[s + 1]];
            let hh = submatrix(lattice, part.len(), key, s, p.h)?;
            let costs: Vec<f64> = lattice.positions.iter().map(|&q| prepared.costs.get(q)).collect();
            let (changes, weight, distortion, penalties) = match p.method {
                Method::Rsvrc => {
                    let c = max_finite_cost(costs.iter().copied(), prepared.costs.wet_cap())?;
                    let vp = VrcstcParams {
                        hh: hh.clone(),
                        config: RobustnessConfig::new(c, prepared.channel)?,
                        rng_key: key.rng_seed,
                    };
                    let out = vrcstc_embed(image, &lattice.positions, &prepared.costs, part, &vp)?;
                    let changes: Vec<(usize, i16)> = out.changes.iter().map(|&q| (q, out.stego.get(q))).collect();
                    (changes, out.weight, out.distortion, out.penalties)
                }
                Method::Baseline => {
                    let cover = lattice_cover(image, &lattice.positions, &prepared.costs)?;
                    let out = stc_embed(&cover, part, &hh)?;
                    let changes: Vec<(usize, i16)> = lattice
                        .positions
                        .iter()
                        .zip(out.stego.iter().zip(&lattice.bits))
                        .filter(|(_, (a, b))| a != b)
                        .map(|(&q, _)| (q, signs.changed_value(q, image.get(q))))
                        .collect();
                    (changes, out.cost, out.cost, 0)
                }
            };
            let sub = SubimageReport {
                message_bits: part.len(),
                width: hh.width(),
                weight,
                distortion,
                penalties,
                changes: changes.len(),
            };
            Ok((changes, sub))
        })
        .collect();

    let mut stego = image.clone();
    for r in results {
        let (changes, sub) = r?;
        for (q, v) in changes {
            stego.set(q, v);
            report.changes_by_mode[(q % 64) / 8][q % 8] += 1;
        }
        report.changes += sub.changes;
        report.subimages.push(sub);
    }
    report.bch_blocks = coded.len() / BCH_N;
    report.coded_bits = coded.len();
    report.verify = verify_stego(&stego, &prepared.channel);
    Ok((stego, report))
}

/// Channel-matches `cover` at `p.quality`, then embeds `msg`.
pub fn embed(cover: Cover<'_>, msg: &[u8], key: &StegoKey, p: &EmbedParams) -> Result<(CoefficientImage, EmbedReport)> {
    p.validate()?;
    let prepared = prepare_cover(cover, p.quality, p.max_tcm_iters)?;
    embed_prepared(&prepared, msg, key, p)
}

/// Coded bits read from `received` assuming `bch_blocks` BCH blocks, after
/// depermutation (so they line up with the encoder output).
pub fn received_coded_bits(received: &CoefficientImage, key: &StegoKey, p: &EmbedParams, bch_blocks: usize) -> Result<Vec<u8>> {
    let lattices = layout(received, key, p)?;
    read_coded(&lattices, key, p, bch_blocks)
}

fn read_coded(lattices: &[Lattice], key: &StegoKey, p: &EmbedParams, bch_blocks: usize) -> Result<Vec<u8>> {
    let total = bch_blocks * BCH_N;
    let mut permuted = Vec::with_capacity(total);
    for (s, m) in split_sizes(total, p.subimages).into_iter().enumerate() {
        if m == 0 {
            continue;
        }
        let hh = submatrix(&lattices[s], m, key, s, p.h)?;
        permuted.extend(stc_extract(&lattices[s].bits, &hh, m)?);
    }
    Ok(depermute(&permuted, PermKey(key.perm_seed)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractStats {
    /// Block count of the accepted candidate, or of the best guess on failure.
    pub bch_blocks: usize,
    pub coded_bits: usize,
    /// Bits the BCH decoder corrected.
    pub corrected: usize,
    /// Blocks the decoder rejected (only nonzero on failure).
    pub failed_blocks: usize,
    /// Corrected bits over coded bits: the pre-correction error rate as seen by the receiver.
    pub p_s_estimate: f64,
    pub candidates_tried: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub message: Option<Vec<u8>>,
    pub stats: ExtractStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub message: Vec<u8>,
    pub stats: ExtractStats,
}

fn decode_candidate(code: &BchCode, coded: &[u8]) -> (Option<Vec<u8>>, usize, usize) {
    let mut msg = Vec::with_capacity(coded.len() / BCH_N * code.k());
    let mut corrected = 0;
    let mut failed = 0;
    for block in coded.chunks(BCH_N) {
        match code.decode(block) {
            Ok(d) => {
                corrected += d.corrected;
                msg.extend(d.message);
            }
            Err(_) => {
                failed += 1;
                msg.extend(std::iter::repeat_n(0, code.k()));
            }
        }
    }
    if failed > 0 {
        return (None, corrected, failed);
    }
    (unframe(&msg, code.k()), corrected, failed)
}

/// Extracts without treating decode failure as an error.
///
/// The receiver does not know the block count, so candidates are tried
/// starting from the count the received image's capacity suggests. A
/// candidate is accepted only if every block decodes and the length header
/// implies exactly that many blocks.
pub fn extract_detailed(received: &CoefficientImage, key: &StegoKey, p: &EmbedParams) -> Result<ExtractOutcome> {
    p.validate()?;
    let code = BchCode::new(p.bch_k)?;
    let lattices = layout(received, key, p)?;
    let lattice_len: usize = lattices.iter().map(|l| l.len()).sum();
    let max_blocks = lattice_len / BCH_N;
    if max_blocks == 0 {
        return Err(Error::ExtractionFailed("image too small to carry a codeword".into()));
    }
    let estimate = ((p.payload * received.nonzero_ac() as f64).floor() as usize / BCH_N).clamp(1, max_blocks);
    let mut order = vec![estimate];
    for d in 1..max_blocks {
        if estimate > d {
            order.push(estimate - d);
        }
        if estimate + d <= max_blocks {
            order.push(estimate + d);
        }
    }

    let mut fallback = None;
    for (tried, &nb) in order.iter().enumerate() {
        let coded = read_coded(&lattices, key, p, nb)?;
        let (msg, corrected, failed) = decode_candidate(&code, &coded);
        let stats = ExtractStats {
            bch_blocks: nb,
            coded_bits: coded.len(),
            corrected,
            failed_blocks: failed,
            p_s_estimate: corrected as f64 / coded.len() as f64,
            candidates_tried: tried + 1,
        };
        if let Some(m) = msg {
            return Ok(ExtractOutcome {
                message: Some(m),
                stats,
            });
        }
        if fallback.is_none() {
            fallback = Some(stats);
        }
    }
    let mut stats = fallback.expect("at least one candidate");
    stats.candidates_tried = order.len();
    Ok(ExtractOutcome { message: None, stats })
}

/// Extracts the message or fails with [`Error::ExtractionFailed`].
pub fn extract(received: &CoefficientImage, key: &StegoKey, p: &EmbedParams) -> Result<Extraction> {
    let out = extract_detailed(received, key, p)?;
    match out.message {
        Some(message) => Ok(Extraction { message, stats: out.stats }),
        None => Err(Error::ExtractionFailed(format!(
            "no block count decodes consistently; best guess {} blocks, {} failed, {} bits corrected",
            out.stats.bch_blocks, out.stats.failed_blocks, out.stats.corrected
        ))),
    }
}
