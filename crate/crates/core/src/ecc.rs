//! Binary BCH(127, k) code and keyed bit permutation.
//!
//! Narrow-sense, systematic, over GF(2^7) with primitive polynomial
//! x^7 + x^3 + 1. Codeword bit `i` is the coefficient of `x^i`: parity sits in
//! `[0, n-k)`, the message in `[n-k, n)`. The error-correcting capability is the
//! largest `t` whose generator has degree exactly `n - k`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const BCH_N: usize = 127;
const GF_M: u32 = 7;
const GF_PRIM: u16 = 0x89;

#[derive(Debug, Clone)]
struct Gf {
    exp: [u8; 254],
    log: [u8; 128],
}

impl Gf {
    fn new() -> Self {
        let mut exp = [0u8; 254];
        let mut log = [0u8; 128];
        let mut x: u16 = 1;
        for i in 0..127 {
            exp[i] = x as u8;
            exp[i + 127] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & (1 << GF_M) != 0 {
                x ^= GF_PRIM;
            }
        }
        Self { exp, log }
    }

    fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    fn inv(&self, a: u8) -> u8 {
        debug_assert!(a != 0);
        self.exp[(127 - self.log[a as usize] as usize) % 127]
    }

    fn pow_alpha(&self, e: usize) -> u8 {
        self.exp[e % 127]
    }
}

fn clmul(a: u128, b: u128) -> u128 {
    let mut out = 0u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            out ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    out
}

fn degree(p: u128) -> usize {
    127 - p.leading_zeros() as usize
}

fn poly_mod(mut a: u128, g: u128) -> u128 {
    let dg = degree(g);
    while a != 0 && degree(a) >= dg {
        a ^= g << (degree(a) - dg);
    }
    a
}

/// Minimal polynomial of `alpha^i` as a binary polynomial.
fn minimal_poly(gf: &Gf, i: usize) -> u128 {
    let mut coset = vec![i % 127];
    let mut j = (i * 2) % 127;
    while j != i % 127 {
        coset.push(j);
        j = (j * 2) % 127;
    }
    // product of (x + alpha^j) with GF(2^7) coefficients, low degree first
    let mut p: Vec<u8> = vec![1];
    for &e in &coset {
        let r = gf.pow_alpha(e);
        let mut next = vec![0u8; p.len() + 1];
        for (d, &c) in p.iter().enumerate() {
            next[d + 1] ^= c;
            next[d] ^= gf.mul(c, r);
        }
        p = next;
    }
    p.iter().enumerate().fold(0u128, |acc, (d, &c)| {
        debug_assert!(c <= 1, "minimal polynomial has binary coefficients");
        acc | ((c as u128) << d)
    })
}

fn generator_for(gf: &Gf, t: usize) -> u128 {
    let mut seen = [false; 127];
    let mut g = 1u128;
    for i in 1..=2 * t {
        let r = i % 127;
        if seen[r] {
            continue;
        }
        let mut j = r;
        loop {
            seen[j] = true;
            j = (j * 2) % 127;
            if j == r {
                break;
            }
        }
        g = clmul(g, minimal_poly(gf, r));
    }
    g
}

#[derive(Debug, Clone)]
pub struct BchCode {
    k: usize,
    t: usize,
    generator: u128,
    gf: Gf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BchDecoded {
    pub message: Vec<u8>,
    pub corrected: usize,
}

impl BchCode {
    /// Code of length 127 with `k` message bits. Fails when no narrow-sense
    /// generator has degree `127 - k`.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k >= BCH_N {
            return Err(Error::InvalidArgument(format!("BCH message length {k} out of range")));
        }
        let gf = Gf::new();
        let target = BCH_N - k;
        let mut found = None;
        for t in 1..=63 {
            let g = generator_for(&gf, t);
            match degree(g).cmp(&target) {
                std::cmp::Ordering::Equal => found = Some((t, g)),
                std::cmp::Ordering::Greater => break,
                std::cmp::Ordering::Less => {}
            }
        }
        let (t, generator) = found.ok_or_else(|| Error::InvalidArgument(format!("no BCH(127, {k}) code exists")))?;
        Ok(Self { k, t, generator, gf })
    }

    pub fn n(&self) -> usize {
        BCH_N
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Generator polynomial, bit `i` = coefficient of `x^i`.
    pub fn generator(&self) -> u128 {
        self.generator
    }

    fn parity_len(&self) -> usize {
        BCH_N - self.k
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k {
            return Err(Error::InvalidArgument(format!("BCH message must be {} bits, got {}", self.k, message.len())));
        }
        let np = self.parity_len();
        let mut m = 0u128;
        for (i, &b) in message.iter().enumerate() {
            if b > 1 {
                return Err(Error::InvalidArgument("message bits must be 0 or 1".into()));
            }
            m |= (b as u128) << (np + i);
        }
        let word = m | poly_mod(m, self.generator);
        Ok((0..BCH_N).map(|i| ((word >> i) & 1) as u8).collect())
    }

    fn syndromes(&self, word: u128) -> Vec<u8> {
        (1..=2 * self.t)
            .map(|j| {
                let mut s = 0u8;
                let mut w = word;
                while w != 0 {
                    let i = w.trailing_zeros() as usize;
                    s ^= self.gf.pow_alpha(i * j);
                    w &= w - 1;
                }
                s
            })
            .collect()
    }

    fn berlekamp_massey(&self, s: &[u8]) -> Vec<u8> {
        let gf = &self.gf;
        let mut c = vec![1u8];
        let mut b = vec![1u8];
        let mut l = 0usize;
        let mut m = 1usize;
        let mut bd = 1u8;
        for n in 0..s.len() {
            let mut d = s[n];
            for i in 1..=l.min(c.len() - 1) {
                d ^= gf.mul(c[i], s[n - i]);
            }
            if d == 0 {
                m += 1;
                continue;
            }
            let coef = gf.mul(d, gf.inv(bd));
            let prev = c.clone();
            if c.len() < b.len() + m {
                c.resize(b.len() + m, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                c[i + m] ^= gf.mul(coef, bi);
            }
            if 2 * l <= n {
                l = n + 1 - l;
                b = prev;
                bd = d;
                m = 1;
            } else {
                m += 1;
            }
        }
        c.truncate(l + 1);
        c.resize(l + 1, 0);
        c
    }

    /// Corrects up to `t` errors. Returns [`Error::DecodeFailure`] when the
    /// error pattern is detected as uncorrectable.
    pub fn decode(&self, received: &[u8]) -> Result<BchDecoded> {
        if received.len() != BCH_N {
            return Err(Error::InvalidArgument(format!("BCH codeword must be {BCH_N} bits, got {}", received.len())));
        }
        let mut word = received
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &b)| acc | (((b & 1) as u128) << i));
        let s = self.syndromes(word);
        let mut corrected = 0;
        if s.iter().any(|&x| x != 0) {
            let lambda = self.berlekamp_massey(&s);
            let deg = lambda.len() - 1;
            if deg == 0 || deg > self.t || lambda[deg] == 0 {
                return Err(Error::DecodeFailure);
            }
            // Chien search: error at i when Lambda(alpha^-i) = 0
            let mut positions = Vec::with_capacity(deg);
            for i in 0..BCH_N {
                let x = self.gf.pow_alpha(127 - i);
                let mut v = 0u8;
                let mut xp = 1u8;
                for &c in &lambda {
                    v ^= self.gf.mul(c, xp);
                    xp = self.gf.mul(xp, x);
                }
                if v == 0 {
                    positions.push(i);
                }
            }
            if positions.len() != deg {
                return Err(Error::DecodeFailure);
            }
            for &p in &positions {
                word ^= 1u128 << p;
            }
            corrected = deg;
        }
        let np = self.parity_len();
        Ok(BchDecoded {
            message: (np..BCH_N).map(|i| ((word >> i) & 1) as u8).collect(),
            corrected,
        })
    }

    /// Splits `bits` into `k`-bit blocks (zero-padding the last) and encodes each.
    pub fn encode_blocks(&self, bits: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(bits.len().div_ceil(self.k) * BCH_N);
        for chunk in bits.chunks(self.k) {
            let mut m = chunk.to_vec();
            m.resize(self.k, 0);
            out.extend(self.encode(&m)?);
        }
        Ok(out)
    }

    /// Decodes consecutive 127-bit blocks; fails if any block fails.
    /// Returns the concatenated messages and the total corrected count.
    pub fn decode_blocks(&self, coded: &[u8]) -> Result<(Vec<u8>, usize)> {
        if !coded.len().is_multiple_of(BCH_N) {
            return Err(Error::InvalidArgument(format!("coded length {} is not a multiple of {BCH_N}", coded.len())));
        }
        let mut msg = Vec::with_capacity(coded.len() / BCH_N * self.k);
        let mut corrected = 0;
        for block in coded.chunks(BCH_N) {
            let d = self.decode(block)?;
            corrected += d.corrected;
            msg.extend(d.message);
        }
        Ok((msg, corrected))
    }
}

/// Key of a pseudorandom bit permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermKey(pub u64);

fn permutation(len: usize, key: PermKey) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(key.0));
    idx
}

/// `out[i] = bits[perm[i]]`.
pub fn permute<B: Copy>(bits: &[B], key: PermKey) -> Vec<B> {
    permutation(bits.len(), key).into_iter().map(|i| bits[i]).collect()
}

/// Inverse of [`permute`] for the same key and length.
pub fn depermute<B: Copy + Default>(bits: &[B], key: PermKey) -> Vec<B> {
    let mut out = vec![B::default(); bits.len()];
    for (i, p) in permutation(bits.len(), key).into_iter().enumerate() {
        out[p] = bits[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    // bitwise GF(2^7) multiply, independent of the log tables
    fn gf_mul_slow(mut a: u8, mut b: u8) -> u8 {
        let mut r = 0u16;
        let mut aa = a as u16;
        while b != 0 {
            if b & 1 == 1 {
                r ^= aa;
            }
            aa <<= 1;
            if aa & 0x80 != 0 {
                aa ^= 0x89;
            }
            b >>= 1;
        }
        a = r as u8;
        a
    }

    fn alpha_pow_slow(e: usize) -> u8 {
        (0..e % 127).fold(1u8, |acc, _| gf_mul_slow(acc, 2))
    }

    fn eval_binary_poly(p: u128, x: u8) -> u8 {
        let mut acc = 0u8;
        for d in (0..128).rev() {
            acc = gf_mul_slow(acc, x);
            if (p >> d) & 1 == 1 {
                acc ^= 1;
            }
        }
        acc
    }

    #[test]
    fn field_tables_agree_with_bitwise_multiply() {
        let gf = Gf::new();
        for a in 0..128u8 {
            for b in 0..128u8 {
                assert_eq!(gf.mul(a, b), gf_mul_slow(a, b));
            }
            if a != 0 {
                assert_eq!(gf.mul(a, gf.inv(a)), 1);
            }
        }
        // alpha generates the whole multiplicative group
        let mut seen = std::collections::HashSet::new();
        for e in 0..127 {
            seen.insert(alpha_pow_slow(e));
        }
        assert_eq!(seen.len(), 127);
    }

    #[test]
    fn known_parameters() {
        for (k, t) in [(120, 1), (113, 2), (106, 3), (99, 4), (92, 5), (85, 6), (78, 7), (71, 9), (64, 10), (57, 11), (50, 13)] {
            let code = BchCode::new(k).unwrap();
            assert_eq!(code.t(), t, "k = {k}");
            assert_eq!(degree(code.generator()), 127 - k);
        }
        assert_eq!(BchCode::new(120).unwrap().generator(), 0x89);
        assert!(BchCode::new(100).is_err());
        assert!(BchCode::new(0).is_err());
        assert!(BchCode::new(127).is_err());
    }

    #[test]
    fn generator_has_consecutive_roots_and_divides_x127_plus_1() {
        for k in [64, 92] {
            let code = BchCode::new(k).unwrap();
            let g = code.generator();
            for j in 1..=2 * code.t() {
                assert_eq!(eval_binary_poly(g, alpha_pow_slow(j)), 0, "k {k} root {j}");
            }
            let x127_1 = (1u128 << 127) | 1;
            assert_eq!(poly_mod(x127_1, g), 0);
        }
    }

    #[test]
    fn codewords_are_multiples_of_the_generator() {
        let code = BchCode::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m: Vec<u8> = (0..64).map(|_| rng.gen_range(0..2)).collect();
            let c = code.encode(&m).unwrap();
            let word = c.iter().enumerate().fold(0u128, |a, (i, &b)| a | ((b as u128) << i));
            assert_eq!(poly_mod(word, code.generator()), 0);
            assert_eq!(&c[63..], &m[..]);
        }
    }

    fn corrects_random_errors(k: usize, trials: usize, seed: u64) {
        let code = BchCode::new(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let m: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
            let mut c = code.encode(&m).unwrap();
            let e = rng.gen_range(0..=code.t());
            for p in rand::seq::index::sample(&mut rng, BCH_N, e) {
                c[p] ^= 1;
            }
            let d = code.decode(&c).unwrap();
            assert_eq!(d.message, m);
            assert_eq!(d.corrected, e);
        }
    }

    #[test]
    fn corrects_up_to_t_errors_k64() {
        corrects_random_errors(64, 1000, 2);
    }

    #[test]
    fn corrects_up_to_t_errors_k92() {
        corrects_random_errors(92, 1000, 3);
    }

    #[test]
    fn beyond_t_is_mostly_detected() {
        let code = BchCode::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut detected = 0;
        let trials = 500;
        for _ in 0..trials {
            let m: Vec<u8> = (0..64).map(|_| rng.gen_range(0..2)).collect();
            let mut c = code.encode(&m).unwrap();
            for p in rand::seq::index::sample(&mut rng, BCH_N, 15) {
                c[p] ^= 1;
            }
            match code.decode(&c) {
                Err(Error::DecodeFailure) => detected += 1,
                Ok(d) => assert_ne!(d.message, m),
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(detected as f64 / trials as f64 > 0.9, "detected {detected}");
    }

    #[test]
    fn wrong_lengths_rejected() {
        let code = BchCode::new(64).unwrap();
        assert!(code.encode(&[0; 63]).is_err());
        assert!(code.decode(&[0; 126]).is_err());
        assert!(code.decode_blocks(&[0; 200]).is_err());
    }

    #[test]
    fn block_helpers_pad_and_roundtrip() {
        let code = BchCode::new(64).unwrap();
        let bits: Vec<u8> = (0..150).map(|i| (i % 3 == 0) as u8).collect();
        let coded = code.encode_blocks(&bits).unwrap();
        assert_eq!(coded.len(), 3 * 127);
        let (back, corrected) = code.decode_blocks(&coded).unwrap();
        assert_eq!(corrected, 0);
        assert_eq!(&back[..150], &bits[..]);
        assert!(back[150..].iter().all(|&b| b == 0));
    }

    #[test]
    fn keys_give_different_permutations() {
        let bits: Vec<u32> = (0..500).collect();
        assert_ne!(permute(&bits, PermKey(1)), permute(&bits, PermKey(2)));
        assert_eq!(permute(&bits, PermKey(1)), permute(&bits, PermKey(1)));
    }

    proptest! {
        #[test]
        fn encoding_is_linear(a in proptest::collection::vec(0u8..2, 92), b in proptest::collection::vec(0u8..2, 92)) {
            let code = BchCode::new(92).unwrap();
            let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ca = code.encode(&a).unwrap();
            let cb = code.encode(&b).unwrap();
            let cs: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(code.encode(&sum).unwrap(), cs);
        }

        #[test]
        fn permutation_roundtrips(bits in proptest::collection::vec(0u8..2, 0..600), key in any::<u64>()) {
            let p = permute(&bits, PermKey(key));
            let mut sorted_p = p.clone();
            let mut sorted_b = bits.clone();
            sorted_p.sort_unstable();
            sorted_b.sort_unstable();
            prop_assert_eq!(sorted_p, sorted_b);
            prop_assert_eq!(depermute(&p, PermKey(key)), bits);
        }
    }
}
