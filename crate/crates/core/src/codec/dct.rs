use std::sync::OnceLock;

use crate::Scalar;

/// One 8×8 block, row-major.
pub type Block<T> = [T; 64];

/// Orthonormal 2-D type-II DCT on 8×8 blocks, computed separably from a
/// precomputed basis matrix `basis[u][x] = c(u) cos((2x + 1) u π / 16)`.
#[derive(Debug, Clone)]
pub struct Dct8<T> {
    basis: [[T; 8]; 8],
}

impl<T: Scalar> Default for Dct8<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Dct8<T> {
    pub fn new() -> Self {
        let mut basis = [[T::zero(); 8]; 8];
        for (u, row) in basis.iter_mut().enumerate() {
            let c = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (x, b) in row.iter_mut().enumerate() {
                let angle = (2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0;
                *b = T::of(c * angle.cos());
            }
        }
        Self { basis }
    }

    /// `basis[u][x]`, the 1-D basis function `u` sampled at `x`.
    pub fn basis(&self) -> &[[T; 8]; 8] {
        &self.basis
    }

    /// Forward transform: `basis · block · basisᵀ`.
    pub fn forward(&self, block: &Block<T>) -> Block<T> {
        let b = &self.basis;
        let mut tmp = [T::zero(); 64];
        // rows: tmp[x][v] = sum_y block[x][y] * b[v][y]
        for x in 0..8 {
            for v in 0..8 {
                let mut acc = T::zero();
                for y in 0..8 {
                    acc = acc + block[x * 8 + y] * b[v][y];
                }
                tmp[x * 8 + v] = acc;
            }
        }
        let mut out = [T::zero(); 64];
        for u in 0..8 {
            for v in 0..8 {
                let mut acc = T::zero();
                for x in 0..8 {
                    acc = acc + b[u][x] * tmp[x * 8 + v];
                }
                out[u * 8 + v] = acc;
            }
        }
        out
    }

    /// Inverse transform: `basisᵀ · coeffs · basis`.
    pub fn inverse(&self, coeffs: &Block<T>) -> Block<T> {
        let b = &self.basis;
        let mut tmp = [T::zero(); 64];
        // tmp[u][y] = sum_v coeffs[u][v] * b[v][y]
        for u in 0..8 {
            for y in 0..8 {
                let mut acc = T::zero();
                for v in 0..8 {
                    acc = acc + coeffs[u * 8 + v] * b[v][y];
                }
                tmp[u * 8 + y] = acc;
            }
        }
        let mut out = [T::zero(); 64];
        for x in 0..8 {
            for y in 0..8 {
                let mut acc = T::zero();
                for u in 0..8 {
                    acc = acc + b[u][x] * tmp[u * 8 + y];
                }
                out[x * 8 + y] = acc;
            }
        }
        out
    }
}

/// Shared double-precision transform.
pub fn dct_f64() -> &'static Dct8<f64> {
    static DCT: OnceLock<Dct8<f64>> = OnceLock::new();
    DCT.get_or_init(Dct8::new)
}
