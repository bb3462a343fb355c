//! Robustness penalty for a tentative modification.
//!
//! A modified block is robust when one channel pass returns it unchanged. The
//! penalty is two-valued: zero for a robust block, `C` otherwise, where `C` is
//! the largest finite distortion cost. The test looks at the whole block as
//! modified so far, so an earlier non-robust change in the same block also
//! makes every later change there cost `C`.

use crate::channel::{recompress_block, ChannelParams};
use crate::codec::{CoefficientImage, BLOCK_LEN};
use crate::distortion::CostMap;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct RobustnessConfig<T> {
    /// Penalty for a change that does not survive the channel.
    pub c: T,
    pub params: ChannelParams,
}

impl<T: Scalar> RobustnessConfig<T> {
    pub fn new(c: T, params: ChannelParams) -> Result<Self> {
        if c.is_nan() || c < T::zero() {
            return Err(Error::InvalidArgument("robustness penalty must be nonnegative".into()));
        }
        Ok(Self { c, params })
    }
}

/// Largest cost strictly below the wet cap.
pub fn max_finite_cost<T: Scalar>(costs: impl IntoIterator<Item = T>, wet_cap: T) -> Result<T> {
    costs
        .into_iter()
        .filter(|&r| r < wet_cap && r.is_finite())
        .fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.max(r))))
        .ok_or_else(|| Error::EmbedFailure("every element is wet; nothing is embeddable".into()))
}

/// `C` for a whole cost map.
pub fn compute_c<T: Scalar>(cm: &CostMap<T>) -> Result<T> {
    max_finite_cost(cm.rho().iter().copied(), cm.wet_cap())
}

/// Whether a block passes the channel unchanged.
pub fn is_robust_block(block: &[i16; 64], params: &ChannelParams) -> bool {
    recompress_block(block, params) == *block
}

/// Penalty for the block as it currently stands.
pub fn block_cost<T: Scalar>(block: &[i16; 64], config: &RobustnessConfig<T>) -> T {
    if is_robust_block(block, &config.params) {
        T::zero()
    } else {
        config.c
    }
}

/// Penalty for block `block_index` of a tentative stego image.
pub fn robustness_cost<T: Scalar>(state_img: &CoefficientImage, block_index: usize, config: &RobustnessConfig<T>) -> T {
    debug_assert!(block_index * BLOCK_LEN < state_img.len());
    block_cost(&state_img.block(block_index), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{recompress_image, tcm};
    use crate::codec::{compress, quant_table, SpatialImage};
    use crate::distortion::{SIGMA, WET_COST};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn c_is_max_of_finite_costs() {
        let cm = CostMap::from_costs(8, 8, (0..64).map(|i| (i % 3 + 1) as f64).collect(), WET_COST, SIGMA).unwrap();
        assert_eq!(compute_c(&cm).unwrap(), 3.0);
        let mut costs = vec![1.0; 64];
        costs[5] = WET_COST;
        let cm = CostMap::from_costs(8, 8, costs, WET_COST, SIGMA).unwrap();
        assert_eq!(compute_c(&cm).unwrap(), 1.0);
        let all_wet = CostMap::from_costs(8, 8, vec![WET_COST; 64], WET_COST, SIGMA).unwrap();
        assert!(compute_c(&all_wet).is_err());
    }

    #[test]
    fn c_on_a_decoded_image_is_its_finite_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let px: Vec<u8> = (0..32 * 32).map(|_| rng.gen()).collect();
        let ci = compress(&SpatialImage::new(32, 32, px).unwrap(), &quant_table(85).unwrap());
        let cm = crate::distortion::juniward_costmap::<f64>(&ci);
        let mut expected = 0.0f64;
        for &r in cm.rho() {
            if r < WET_COST {
                expected = expected.max(r);
            }
        }
        assert_eq!(compute_c(&cm).unwrap(), expected);
    }

    #[test]
    fn negative_penalty_rejected() {
        let p = ChannelParams::matched(quant_table(85).unwrap());
        assert!(RobustnessConfig::new(-1.0, p).is_err());
    }

    #[test]
    fn unmodified_stable_block_costs_zero() {
        let q = quant_table(85).unwrap();
        let p = ChannelParams::matched(q);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let px: Vec<u8> = (0..64 * 64).map(|_| rng.gen_range(60..190)).collect();
        let ci = compress(&SpatialImage::new(64, 64, px).unwrap(), &q);
        let t = tcm(&ci, &p, 12).unwrap();
        let cfg = RobustnessConfig::new(7.5, p).unwrap();
        let stable = recompress_image(&t.image, &p);
        for b in 0..t.image.num_blocks() {
            if stable.block(b) == t.image.block(b) {
                assert_eq!(robustness_cost(&t.image, b, &cfg), 0.0);
            } else {
                assert_eq!(robustness_cost(&t.image, b, &cfg), 7.5);
            }
        }
    }

    #[test]
    fn saturated_block_modification_costs_c() {
        let q = quant_table(85).unwrap();
        let p = ChannelParams::matched(q);
        let ci = compress(&SpatialImage::filled(8, 8, 255).unwrap(), &q);
        let cfg = RobustnessConfig::new(2.0, p).unwrap();
        assert_eq!(robustness_cost(&ci, 0, &cfg), 0.0);
        let mut flipped = 0;
        for m in 1..64 {
            let mut y = ci.clone();
            y.set(m, ci.get(m) + 1);
            if robustness_cost(&y, 0, &cfg) == 2.0 {
                flipped += 1;
            }
        }
        // lifting any AC basis above a clipped plateau gets clipped away
        assert!(flipped > 0);
    }

    #[test]
    fn mid_gray_modification_survives() {
        let q = quant_table(75).unwrap();
        let p = ChannelParams::matched(q);
        let ci = compress(&SpatialImage::filled(8, 8, 128).unwrap(), &q);
        let mut y = ci.clone();
        y.set(1, 1);
        let cfg = RobustnessConfig::new(4.0, p).unwrap();
        assert_eq!(robustness_cost(&y, 0, &cfg), 0.0);
    }

    #[test]
    fn two_valued_and_matches_channel_oracle() {
        let q = quant_table(85).unwrap();
        let p = ChannelParams::matched(q);
        let cfg = RobustnessConfig::new(3.25, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let px: Vec<u8> = (0..64 * 64).map(|_| rng.gen()).collect();
        let base = tcm(&compress(&SpatialImage::new(64, 64, px).unwrap(), &q), &p, 12).unwrap().image;
        for _ in 0..1000 {
            let b = rng.gen_range(0..base.num_blocks());
            let m = rng.gen_range(0..64);
            let mut y = base.clone();
            y.set(b * 64 + m, base.get(b * 64 + m) + if rng.gen() { 1 } else { -1 });
            let r = robustness_cost(&y, b, &cfg);
            let again = recompress_image(&y, &p);
            let expected = if again.block(b) == y.block(b) { 0.0 } else { 3.25 };
            assert_eq!(r, expected);
            assert_eq!(r, robustness_cost(&y, b, &cfg));
        }
    }
}
