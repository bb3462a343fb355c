//! J-UNIWARD additive distortion for ±1 changes of quantized DCT coefficients.
//!
//! The decoded image is filtered with the three first-level Daubechies-8
//! directional filters (LH, HL, HH). The cost of changing one coefficient is
//! the relative change it causes in all three residuals, summed over the
//! image. Both the filters and a single DCT basis function are separable, so
//! the residual change of a coefficient factors into a row profile and a
//! column profile; mirror padding is separable too, which keeps the factored
//! form exact at image borders.

use rayon::prelude::*;

use crate::codec::{dct_f64, dequantized_spatial, CoefficientImage, BLOCK, BLOCK_LEN};
use crate::{Error, Result, Scalar};

/// Daubechies-8 low-pass decomposition filter.
const DB8_LO: [f64; 16] = [
    -0.000_117_476_784_002_281_92,
    0.000_675_449_405_998_556_8,
    -0.000_391_740_372_995_977_1,
    -0.004_870_352_993_010_66,
    0.008_746_094_047_015_655,
    0.013_981_027_917_015_516,
    -0.044_088_253_931_064_72,
    -0.017_369_301_002_022_11,
    0.128_747_426_620_186,
    0.000_472_484_573_997_972_54,
    -0.284_015_542_962_428_1,
    -0.015_829_105_256_023_893,
    0.585_354_683_654_869_1,
    0.675_630_736_298_012_8,
    0.312_871_590_914_465_9,
    0.054_415_842_243_081_61,
];

/// Stabilizing constant in the residual denominator.
pub const SIGMA: f64 = 1.0 / 64.0;
/// Cost of a forbidden change.
pub const WET_COST: f64 = 1e13;
/// Changes are forbidden for coefficients at or beyond this magnitude.
pub const MAX_ABS_COEFF: i16 = 1023;

/// Tap offset of the 16-tap filters: `out[u] = Σ h[i] x[u + i - 7]`.
const TAP_OFFSET: isize = 7;

/// Daubechies-8 high-pass decomposition filter, `hi[k] = (-1)^(k+1) lo[15-k]`.
fn db8_hi() -> [f64; 16] {
    let mut hi = [0.0; 16];
    for (k, h) in hi.iter_mut().enumerate() {
        let s = if k % 2 == 0 { -1.0 } else { 1.0 };
        *h = s * DB8_LO[15 - k];
    }
    hi
}

/// `(row filter, column filter)` pairs for LH, HL and HH.
fn filter_bank<T: Scalar>() -> [([T; 16], [T; 16]); 3] {
    let lo = DB8_LO.map(T::of);
    let hi = db8_hi().map(T::of);
    [(lo, hi), (hi, lo), (hi, hi)]
}

/// Half-sample symmetric index reflection into `0..n`.
#[inline]
fn mirror(j: isize, n: usize) -> usize {
    let n = n as isize;
    let r = j.rem_euclid(2 * n);
    (if r < n { r } else { 2 * n - 1 - r }) as usize
}

/// The three directional residuals of a real-valued image.
#[derive(Debug, Clone)]
pub struct ResidualSet<T> {
    width: usize,
    height: usize,
    planes: [Vec<T>; 3],
}

impl<T: Scalar> ResidualSet<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Plane `k` (0 = LH, 1 = HL, 2 = HH), row-major.
    pub fn plane(&self, k: usize) -> &[T] {
        &self.planes[k]
    }
}

fn correlate_separable<T: Scalar>(img: &[T], width: usize, height: usize, row_f: &[T; 16], col_f: &[T; 16]) -> Vec<T> {
    let mut tmp = vec![T::zero(); width * height];
    for r in 0..height {
        let line = &img[r * width..(r + 1) * width];
        for c in 0..width {
            let mut acc = T::zero();
            for (j, &f) in col_f.iter().enumerate() {
                acc = acc + f * line[mirror(c as isize + j as isize - TAP_OFFSET, width)];
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![T::zero(); width * height];
    for r in 0..height {
        for (i, &f) in row_f.iter().enumerate() {
            let src = mirror(r as isize + i as isize - TAP_OFFSET, height);
            for c in 0..width {
                out[r * width + c] = out[r * width + c] + f * tmp[src * width + c];
            }
        }
    }
    out
}

/// Mirror-padded "same" correlation of `img` (row-major) with the LH, HL and
/// HH filters.
pub fn wavelet_residuals<T: Scalar>(img: &[T], width: usize, height: usize) -> Result<ResidualSet<T>> {
    if !width.is_multiple_of(BLOCK) || !height.is_multiple_of(BLOCK) || width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!("{width}x{height} is not a multiple of 8")));
    }
    if img.len() != width * height {
        return Err(Error::DimensionMismatch(format!("{} samples for {width}x{height}", img.len())));
    }
    let bank = filter_bank::<T>();
    let planes = [0, 1, 2].map(|k| correlate_separable(img, width, height, &bank[k].0, &bank[k].1));
    Ok(ResidualSet {
        width,
        height,
        planes,
    })
}

/// Per-coefficient cost of a ±1 change, block-major like [`CoefficientImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap<T> {
    width: usize,
    height: usize,
    rho: Vec<T>,
    wet_cap: T,
    sigma: T,
}

impl<T: Scalar> CostMap<T> {
    /// Builds a map from raw costs; negative or non-finite entries are
    /// rejected and anything above `wet_cap` is clamped to it.
    pub fn from_costs(width: usize, height: usize, mut rho: Vec<T>, wet_cap: T, sigma: T) -> Result<Self> {
        if rho.len() != width * height {
            return Err(Error::DimensionMismatch(format!("{} costs for {width}x{height}", rho.len())));
        }
        if !(sigma > T::zero()) {
            return Err(Error::InvalidArgument("sigma must be positive".into()));
        }
        for r in rho.iter_mut() {
            if r.is_nan() || *r < T::zero() {
                return Err(Error::InvalidArgument("costs must be nonnegative".into()));
            }
            if *r > wet_cap {
                *r = wet_cap;
            }
        }
        Ok(Self {
            width,
            height,
            rho,
            wet_cap,
            sigma,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn get(&self, index: usize) -> T {
        self.rho[index]
    }

    pub fn wet_cap(&self) -> T {
        self.wet_cap
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn is_wet(&self, index: usize) -> bool {
        self.rho[index] >= self.wet_cap
    }

    /// Marks one coefficient as unchangeable.
    pub fn set_wet(&mut self, index: usize) {
        self.rho[index] = self.wet_cap;
    }
}

/// Residual-change profile of 1-D basis function `p` placed at `origin`,
/// evaluated for output samples `lo..hi` after mirror padding.
fn basis_profile<T: Scalar>(filter: &[T; 16], basis: &[[T; 8]; 8], p: usize, origin: usize, n: usize, lo: usize, hi: usize) -> Vec<T> {
    (lo..hi)
        .map(|u| {
            let mut acc = T::zero();
            for (i, &f) in filter.iter().enumerate() {
                let src = mirror(u as isize + i as isize - TAP_OFFSET, n);
                if src >= origin && src < origin + BLOCK {
                    acc = acc + f * basis[p][src - origin];
                }
            }
            acc.abs()
        })
        .collect()
}

/// J-UNIWARD cost of changing each coefficient by one quantization step.
pub fn juniward_costmap<T: Scalar>(ci: &CoefficientImage) -> CostMap<T> {
    let (width, height) = (ci.width(), ci.height());
    let spatial: Vec<T> = dequantized_spatial(ci).into_iter().map(T::of).collect();
    let residuals = wavelet_residuals(&spatial, width, height).expect("coefficient image dims are valid");
    let sigma = T::of(SIGMA);
    let xi: Vec<Vec<T>> = residuals
        .planes
        .iter()
        .map(|p| p.iter().map(|&w| T::one() / (sigma + w.abs())).collect())
        .collect();
    let basis = dct_f64().basis().map(|row| row.map(T::of));
    let bank = filter_bank::<T>();
    let wet = T::of(WET_COST);

    let per_block: Vec<[T; 64]> = (0..ci.num_blocks())
        .into_par_iter()
        .map(|b| {
            let (r0, c0) = ci.block_origin(b);
            let (u_lo, u_hi) = (r0.saturating_sub(8), (r0 + 15).min(height));
            let (v_lo, v_hi) = (c0.saturating_sub(8), (c0 + 15).min(width));
            let mut cost = [T::zero(); 64];
            for (k, (row_f, col_f)) in bank.iter().enumerate() {
                let rows: Vec<Vec<T>> = (0..8).map(|p| basis_profile(row_f, &basis, p, r0, height, u_lo, u_hi)).collect();
                let cols: Vec<Vec<T>> = (0..8).map(|l| basis_profile(col_f, &basis, l, c0, width, v_lo, v_hi)).collect();
                // partial[u][l] = Σ_v |cols[l][v]| ξ[u][v]
                let nu = u_hi - u_lo;
                let mut partial = vec![[T::zero(); 8]; nu];
                for (du, part) in partial.iter_mut().enumerate() {
                    let xi_row = &xi[k][(u_lo + du) * width..(u_lo + du + 1) * width];
                    for (l, col) in cols.iter().enumerate() {
                        let mut acc = T::zero();
                        for (dv, &c) in col.iter().enumerate() {
                            acc = acc + c * xi_row[v_lo + dv];
                        }
                        part[l] = acc;
                    }
                }
                for (p, row) in rows.iter().enumerate() {
                    for l in 0..8 {
                        let mut acc = T::zero();
                        for (du, &r) in row.iter().enumerate() {
                            acc = acc + r * partial[du][l];
                        }
                        cost[p * 8 + l] = cost[p * 8 + l] + acc;
                    }
                }
            }
            let coeffs = ci.block(b);
            for m in 0..BLOCK_LEN {
                cost[m] = cost[m] * T::of(ci.qtable().step(m) as f64);
                if !cost[m].is_finite() || cost[m] > wet || coeffs[m].abs() >= MAX_ABS_COEFF {
                    cost[m] = wet;
                }
            }
            cost
        })
        .collect();

    CostMap {
        width,
        height,
        rho: per_block.into_iter().flatten().collect(),
        wet_cap: wet,
        sigma,
    }
}
