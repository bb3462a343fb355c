//! Binary syndrome-trellis codes.
//!
//! The parity-check matrix is a band built from one `h × w` submatrix: message
//! bit `i` is the XOR of cover columns `i*w .. i*w + w`, shifted down by one
//! row per block and truncated at the bottom. A trellis state holds the `h`
//! pending syndrome bits with the current row in bit 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distortion::WET_COST;
use crate::{Error, Result, Scalar};

/// `h × w` submatrix, one `h`-bit column per cover element of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubMatrix {
    h: usize,
    columns: Vec<u32>,
}

impl SubMatrix {
    pub fn new(h: usize, columns: Vec<u32>) -> Result<Self> {
        if !(2..=8).contains(&h) {
            return Err(Error::InvalidArgument(format!("STC height must be in 2..=8, got {h}")));
        }
        if columns.is_empty() {
            return Err(Error::InvalidArgument("STC width must be at least 1".into()));
        }
        let top = 1u32 << (h - 1);
        for &c in &columns {
            if c >> h != 0 || c & 1 == 0 || c & top == 0 {
                return Err(Error::InvalidArgument(format!("column {c:#b} is not well formed for h={h}")));
            }
        }
        Ok(Self { h, columns })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[u32] {
        &self.columns
    }

    pub fn num_states(&self) -> usize {
        1 << self.h
    }
}

/// Keyed pseudo-random submatrix with the first and last row bits forced on.
pub fn build_hhat(h: usize, w: usize, key: u64) -> Result<SubMatrix> {
    if !(2..=8).contains(&h) {
        return Err(Error::InvalidArgument(format!("STC height must be in 2..=8, got {h}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let mask = (1u32 << h) - 1;
    let forced = 1 | (1u32 << (h - 1));
    let columns = (0..w).map(|_| (rng.gen::<u32>() & mask) | forced).collect();
    SubMatrix::new(h, columns)
}

/// Cover bits with the cost of flipping each one.
#[derive(Debug, Clone, PartialEq)]
pub struct BitCover<T> {
    bits: Vec<u8>,
    costs: Vec<T>,
    wet_cap: T,
}

impl<T: Scalar> BitCover<T> {
    pub fn new(bits: Vec<u8>, costs: Vec<T>) -> Result<Self> {
        Self::with_wet_cap(bits, costs, T::of(WET_COST))
    }

    pub fn with_wet_cap(bits: Vec<u8>, costs: Vec<T>, wet_cap: T) -> Result<Self> {
        if bits.len() != costs.len() {
            return Err(Error::DimensionMismatch(format!("{} bits vs {} costs", bits.len(), costs.len())));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("cover bits must be 0 or 1".into()));
        }
        if costs.iter().any(|&c| c.is_nan() || c < T::zero() || c > wet_cap) {
            return Err(Error::InvalidArgument("costs must lie in [0, wet_cap]".into()));
        }
        Ok(Self { bits, costs, wet_cap })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn costs(&self) -> &[T] {
        &self.costs
    }

    pub fn wet_cap(&self) -> T {
        self.wet_cap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StcOutput<T> {
    pub stego: Vec<u8>,
    /// Final trellis weight, i.e. the summed cost of flipped bits.
    pub cost: T,
}

fn check_capacity(cover_len: usize, msg_len: usize, hh: &SubMatrix) -> Result<()> {
    if cover_len < hh.width() * msg_len {
        return Err(Error::InvalidArgument(format!(
            "cover of {cover_len} bits cannot carry {msg_len} message bits at width {}",
            hh.width()
        )));
    }
    Ok(())
}

/// Viterbi embedding: the minimum-cost stego whose syndrome is `msg`.
///
/// Only the first `w * msg.len()` cover bits take part; the rest are copied.
pub fn stc_embed<T: Scalar>(cover: &BitCover<T>, msg: &[u8], hh: &SubMatrix) -> Result<StcOutput<T>> {
    check_capacity(cover.len(), msg.len(), hh)?;
    let mut stego = cover.bits.clone();
    if msg.is_empty() {
        return Ok(StcOutput { stego, cost: T::zero() });
    }
    let w = hh.width();
    let states = hh.num_states();
    let half = states / 2;
    let used = w * msg.len();
    let inf = T::infinity();
    let mut wght = vec![inf; states];
    wght[0] = T::zero();
    let mut next = vec![inf; states];
    // chosen stego bit per (column, state)
    let mut path = vec![0u8; used * states];

    for (i, &bit) in msg.iter().enumerate() {
        for (j, &col) in hh.columns.iter().enumerate() {
            let idx = i * w + j;
            let x = cover.bits[idx];
            let rho = cover.costs[idx];
            let xf = if x == 1 { T::one() } else { T::zero() };
            for k in 0..states {
                let w0 = wght[k] + xf * rho;
                let w1 = wght[k ^ col as usize] + (T::one() - xf) * rho;
                let take_one = w1 < w0 || (w1 == w0 && x == 1);
                path[idx * states + k] = take_one as u8;
                next[k] = if take_one { w1 } else { w0 };
            }
            std::mem::swap(&mut wght, &mut next);
        }
        for j in 0..half {
            wght[j] = wght[2 * j + bit as usize];
        }
        for v in wght[half..].iter_mut() {
            *v = inf;
        }
    }

    let (mut state, best) = wght
        .iter()
        .enumerate()
        .fold((0, inf), |(bi, bw), (i, &v)| if v < bw { (i, v) } else { (bi, bw) });
    if !best.is_finite() || best >= cover.wet_cap {
        return Err(Error::EmbedFailure("no stego avoids wet elements".into()));
    }
    for (i, &bit) in msg.iter().enumerate().rev() {
        state = (state << 1) | bit as usize;
        for (j, &col) in hh.columns.iter().enumerate().rev() {
            let idx = i * w + j;
            let b = path[idx * states + state];
            stego[idx] = b;
            if b == 1 {
                state ^= col as usize;
            }
        }
    }
    debug_assert_eq!(state, 0);
    Ok(StcOutput { stego, cost: best })
}

/// Syndrome of the first `w * msg_len` stego bits.
pub fn stc_extract(stego: &[u8], hh: &SubMatrix, msg_len: usize) -> Result<Vec<u8>> {
    check_capacity(stego.len(), msg_len, hh)?;
    let w = hh.width();
    let mut state = 0u32;
    let mut msg = Vec::with_capacity(msg_len);
    for i in 0..msg_len {
        for (j, &col) in hh.columns.iter().enumerate() {
            if stego[i * w + j] & 1 == 1 {
                state ^= col;
            }
        }
        msg.push((state & 1) as u8);
        state >>= 1;
    }
    Ok(msg)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Explicit band parity-check matrix, `m` rows by `w*m` columns.
    pub(crate) fn dense_h(hh: &SubMatrix, m: usize) -> Vec<Vec<u8>> {
        let w = hh.width();
        let mut h = vec![vec![0u8; w * m]; m];
        for i in 0..m {
            for (j, &col) in hh.columns().iter().enumerate() {
                for r in 0..hh.height() {
                    if i + r < m && (col >> r) & 1 == 1 {
                        h[i + r][i * w + j] = 1;
                    }
                }
            }
        }
        h
    }

    pub(crate) fn dense_syndrome(h: &[Vec<u8>], y: &[u8]) -> Vec<u8> {
        h.iter()
            .map(|row| row.iter().zip(y).fold(0u8, |acc, (&a, &b)| acc ^ (a & b)))
            .collect()
    }

    /// Exhaustive minimum cost over all stego vectors with the right syndrome.
    pub(crate) fn brute_force_min(cover: &[u8], costs: &[f64], msg: &[u8], hh: &SubMatrix) -> Option<f64> {
        let n = cover.len();
        let h = dense_h(hh, msg.len());
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << n) {
            let y: Vec<u8> = (0..n).map(|i| cover[i] ^ ((mask >> i) & 1) as u8).collect();
            if dense_syndrome(&h, &y) == msg {
                let c: f64 = (0..n).filter(|i| (mask >> i) & 1 == 1).map(|i| costs[i]).sum();
                best = Some(best.map_or(c, |b: f64| b.min(c)));
            }
        }
        best
    }

    #[test]
    fn h2_columns_are_all_binary_11() {
        let hh = build_hhat(2, 9, 77).unwrap();
        assert!(hh.columns().iter().all(|&c| c == 3));
    }

    #[test]
    fn h3_columns_are_5_or_7() {
        let hh = build_hhat(3, 50, 1).unwrap();
        assert!(hh.columns().iter().all(|&c| c == 5 || c == 7));
        assert_eq!(hh, build_hhat(3, 50, 1).unwrap());
    }

    #[test]
    fn malformed_submatrices_rejected() {
        assert!(SubMatrix::new(3, vec![3]).is_err());
        assert!(SubMatrix::new(1, vec![1]).is_err());
        assert!(SubMatrix::new(3, vec![]).is_err());
        assert!(build_hhat(9, 4, 0).is_err());
    }

    #[test]
    fn matching_syndrome_means_no_change() {
        let hh = build_hhat(3, 4, 2).unwrap();
        let bits: Vec<u8> = (0..40).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let msg = stc_extract(&bits, &hh, 10).unwrap();
        let cover = BitCover::new(bits.clone(), vec![1.0; 40]).unwrap();
        let out = stc_embed(&cover, &msg, &hh).unwrap();
        assert_eq!(out.stego, bits);
        assert_eq!(out.cost, 0.0);
    }

    #[test]
    fn zero_stego_has_zero_syndrome() {
        let hh = build_hhat(3, 5, 3).unwrap();
        assert_eq!(stc_extract(&[0; 50], &hh, 10).unwrap(), vec![0; 10]);
    }

    #[test]
    fn extract_matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for h in 2..=6 {
            let hh = build_hhat(h, 3, h as u64).unwrap();
            let m = 12;
            let dense = dense_h(&hh, m);
            for _ in 0..20 {
                let y: Vec<u8> = (0..3 * m).map(|_| rng.gen_range(0..2)).collect();
                assert_eq!(stc_extract(&y, &hh, m).unwrap(), dense_syndrome(&dense, &y));
            }
        }
    }

    #[test]
    fn single_flip_touches_at_most_h_syndrome_bits() {
        let hh = build_hhat(3, 4, 5).unwrap();
        let m = 10;
        let zero = vec![0u8; 4 * m];
        for pos in 0..4 * m {
            let mut y = zero.clone();
            y[pos] = 1;
            let s = stc_extract(&y, &hh, m).unwrap();
            let block = pos / 4;
            let touched: Vec<usize> = (0..m).filter(|&i| s[i] == 1).collect();
            assert!(touched.len() <= 3);
            assert!(touched.iter().all(|&i| i >= block && i < block + 3));
            let col = hh.columns()[pos % 4];
            for r in 0..3 {
                if block + r < m {
                    assert_eq!(s[block + r] as u32, (col >> r) & 1);
                }
            }
        }
    }

    #[test]
    fn optimal_on_eight_bit_covers() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let hh = build_hhat(3, 2, rng.gen()).unwrap();
            let bits: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2)).collect();
            let costs: Vec<f64> = (0..8).map(|_| rng.gen()).collect();
            let msg: Vec<u8> = (0..4).map(|_| rng.gen_range(0..2)).collect();
            let out = stc_embed(&BitCover::new(bits.clone(), costs.clone()).unwrap(), &msg, &hh).unwrap();
            let best = brute_force_min(&bits, &costs, &msg, &hh).unwrap();
            assert!((out.cost - best).abs() < 1e-12);
            assert_eq!(stc_extract(&out.stego, &hh, 4).unwrap(), msg);
        }
    }

    #[test]
    fn uniform_cost_change_rate_is_efficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (m, w) = (32, 2);
        let mut changes = 0usize;
        let trials = 10_000;
        for _ in 0..trials {
            let hh = build_hhat(3, w, rng.gen()).unwrap();
            let bits: Vec<u8> = (0..m * w).map(|_| rng.gen_range(0..2)).collect();
            let msg: Vec<u8> = (0..m).map(|_| rng.gen_range(0..2)).collect();
            let out = stc_embed(&BitCover::new(bits.clone(), vec![1.0; m * w]).unwrap(), &msg, &hh).unwrap();
            changes += out.stego.iter().zip(&bits).filter(|(a, b)| a != b).count();
        }
        let rate = changes as f64 / (trials * m * w) as f64;
        let payload = 1.0 / w as f64;
        assert!(rate < 0.5 * payload * 1.2, "change rate {rate}");
    }

    #[test]
    fn wet_everywhere_fails() {
        let hh = build_hhat(2, 2, 1).unwrap();
        let cover = BitCover::new(vec![0; 4], vec![WET_COST; 4]).unwrap();
        assert!(matches!(stc_embed(&cover, &[1, 0], &hh), Err(Error::EmbedFailure(_))));
    }

    #[test]
    fn wet_bits_are_avoided_when_possible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let hh = build_hhat(3, 6, 9).unwrap();
        let n = 120;
        let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let costs: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { WET_COST } else { 1.0 }).collect();
        let msg: Vec<u8> = (0..20).map(|_| rng.gen_range(0..2)).collect();
        let out = stc_embed(&BitCover::new(bits.clone(), costs).unwrap(), &msg, &hh).unwrap();
        for i in (0..n).step_by(3) {
            assert_eq!(out.stego[i], bits[i]);
        }
    }

    #[test]
    fn too_long_message_rejected() {
        let hh = build_hhat(3, 4, 1).unwrap();
        let cover = BitCover::new(vec![0; 10], vec![1.0; 10]).unwrap();
        assert!(matches!(stc_embed(&cover, &[0, 1, 1], &hh), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn f32_costs_work() {
        let hh = build_hhat(3, 3, 4).unwrap();
        let cover = BitCover::<f32>::new(vec![1, 0, 1, 1, 0, 0, 1, 0, 1], vec![0.5; 9]).unwrap();
        let out = stc_embed(&cover, &[1, 0, 1], &hh).unwrap();
        assert_eq!(stc_extract(&out.stego, &hh, 3).unwrap(), vec![1, 0, 1]);
    }

    proptest! {
        #[test]
        fn extraction_is_linear(seed in any::<u64>(), h in 2usize..=5, w in 1usize..6, m in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hh = build_hhat(h, w, seed).unwrap();
            let a: Vec<u8> = (0..w * m).map(|_| rng.gen_range(0..2)).collect();
            let b: Vec<u8> = (0..w * m).map(|_| rng.gen_range(0..2)).collect();
            let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let (sa, sb, sab) = (stc_extract(&a, &hh, m).unwrap(), stc_extract(&b, &hh, m).unwrap(), stc_extract(&ab, &hh, m).unwrap());
            let xor: Vec<u8> = sa.iter().zip(&sb).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(sab, xor);
        }

        #[test]
        fn embed_then_extract_recovers(seed in any::<u64>(), h in 2usize..=6, w in 1usize..8, m in 0usize..40, extra in 0usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hh = build_hhat(h, w, seed ^ 1).unwrap();
            let n = w * m + extra;
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let costs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
            let msg: Vec<u8> = (0..m).map(|_| rng.gen_range(0..2)).collect();
            let out = stc_embed(&BitCover::new(bits.clone(), costs.clone()).unwrap(), &msg, &hh).unwrap();
            prop_assert_eq!(stc_extract(&out.stego, &hh, m).unwrap(), msg);
            prop_assert_eq!(&out.stego[w * m..], &bits[w * m..]);
            let flipped: f64 = (0..n).filter(|&i| out.stego[i] != bits[i]).map(|i| costs[i]).sum();
            prop_assert!((flipped - out.cost).abs() <= 1e-9 * flipped.max(1.0));
        }
    }
}
