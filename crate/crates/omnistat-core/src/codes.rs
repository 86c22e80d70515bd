//! Sign matrices `V ∈ {±1/√k}^{n×k}` with `VVᵀ` close to the identity.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Default number of seeds tried before giving up.
pub const DEFAULT_RETRIES: usize = 16;

/// How the signs were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    /// I.i.d. uniform signs, certified by an exact Gram computation.
    Random,
    /// Rows of a Sylvester-Hadamard matrix; pairwise orthogonal.
    Hadamard,
    /// Signs supplied by the caller.
    Explicit,
}

/// A certified code matrix. Signs are stored bit-packed, one row per
/// `words` u64 words; a set bit means `-1/√k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix {
    n: usize,
    k: usize,
    words: usize,
    bits: Vec<u64>,
    mu: f64,
    seed: u64,
    kind: CodeKind,
    offdiag: f64,
}

/// `⌈2(2 ln n + ln 200)/μ²⌉`, at least 1.
pub fn rank_for(n: usize, mu: f64) -> usize {
    let k = (2.0 * (2.0 * (n as f64).ln() + 200f64.ln()) / (mu * mu)).ceil();
    if k.is_finite() && k < usize::MAX as f64 {
        (k as usize).max(1)
    } else {
        usize::MAX
    }
}

pub fn build_code_matrix(n: usize, mu: f64, seed: u64) -> Result<CodeMatrix> {
    build_code_matrix_with(n, mu, seed, DEFAULT_RETRIES)
}

/// Builds and certifies a code matrix.
///
/// When `next_pow2(n)` columns fit inside the rank formula, the first `n` rows
/// of a Sylvester-Hadamard matrix are used; they are exactly orthogonal.
/// Otherwise random signs are drawn and re-drawn with an advanced seed until
/// the Gram certificate holds.
pub fn build_code_matrix_with(n: usize, mu: f64, seed: u64, retries: usize) -> Result<CodeMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("code matrix needs n >= 1".into()));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("mu = {mu} outside (0, 1]")));
    }
    let k_formula = rank_for(n, mu);
    let full = n.next_power_of_two();
    if full <= k_formula {
        let mut v = hadamard_rows(n, full);
        v.mu = mu;
        v.seed = seed;
        v.offdiag = gram_offdiag_max(&v);
        if v.offdiag > mu {
            return Err(Error::ConstructionFailed { attempts: 1, best_offdiag: v.offdiag });
        }
        return Ok(v);
    }
    let mut best = f64::INFINITY;
    for attempt in 0..retries.max(1) {
        let s = seed.wrapping_add(attempt as u64);
        let mut v = random_rows(n, k_formula, s);
        v.mu = mu;
        v.offdiag = gram_offdiag_max(&v);
        if v.offdiag <= mu {
            return Ok(v);
        }
        best = best.min(v.offdiag);
    }
    Err(Error::ConstructionFailed { attempts: retries.max(1), best_offdiag: best })
}

fn hadamard_rows(n: usize, k: usize) -> CodeMatrix {
    let words = k.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    for i in 0..n {
        for j in 0..k {
            if (i & j).count_ones() % 2 == 1 {
                bits[i * words + j / 64] |= 1 << (j % 64);
            }
        }
    }
    CodeMatrix { n, k, words, bits, mu: 0.0, seed: 0, kind: CodeKind::Hadamard, offdiag: 0.0 }
}

fn random_rows(n: usize, k: usize, seed: u64) -> CodeMatrix {
    let words = k.div_ceil(64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![0u64; n * words];
    let tail = tail_mask(k);
    for i in 0..n {
        for w in 0..words {
            let mut x = rng.next_u64();
            if w == words - 1 {
                x &= tail;
            }
            bits[i * words + w] = x;
        }
    }
    CodeMatrix { n, k, words, bits, mu: 0.0, seed, kind: CodeKind::Random, offdiag: 0.0 }
}

fn tail_mask(k: usize) -> u64 {
    match k % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl CodeMatrix {
    /// A matrix from explicit signs (`true` = negative); the off-diagonal
    /// value is computed, not checked against any bound.
    pub fn from_signs(n: usize, k: usize, negative: &[bool]) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("empty code matrix".into()));
        }
        if negative.len() != n * k {
            return Err(Error::ShapeMismatch { expected: n * k, got: negative.len() });
        }
        let words = k.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..k {
                if negative[i * k + j] {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        let mut v = CodeMatrix { n, k, words, bits, mu: 1.0, seed: 0, kind: CodeKind::Explicit, offdiag: 0.0 };
        v.offdiag = gram_offdiag_max(&v);
        v.mu = v.offdiag;
        Ok(v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The bound this matrix was certified against.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// The seed that produced the certified signs.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    /// Measured `max_{i≠j} |(VVᵀ)_{ij}|`.
    pub fn offdiag(&self) -> f64 {
        self.offdiag
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.k as f64).sqrt()
    }

    pub fn is_negative(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.is_negative(i, j) {
            -self.scale()
        } else {
            self.scale()
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// `k (VVᵀ)_{ij}` as an exact integer.
    pub fn dot_int(&self, i: usize, j: usize) -> i64 {
        let diff: u32 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a ^ b).count_ones()).sum();
        self.k as i64 - 2 * diff as i64
    }

    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.dot_int(i, j) as f64 / self.k as f64
    }

    /// Row `i` of `VVᵀ`, computed exactly and divided by `k` once.
    pub fn gram_row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.gram(i, j)).collect()
    }

    /// `V x` for `x ∈ R^k`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale();
        (0..self.n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, &xj) in x.iter().enumerate().take(self.k) {
                    if self.is_negative(i, j) {
                        acc -= xj;
                    } else {
                        acc += xj;
                    }
                }
                acc * s
            })
            .collect()
    }

    /// `Vᵀ w` for `w ∈ R^n`.
    pub fn mul_t(&self, w: &[f64]) -> Vec<f64> {
        let s = self.scale();
        let mut out = vec![0.0; self.k];
        for (i, &wi) in w.iter().enumerate().take(self.n) {
            if wi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                if self.is_negative(i, j) {
                    *o -= wi;
                } else {
                    *o += wi;
                }
            }
        }
        for o in &mut out {
            *o *= s;
        }
        out
    }

    /// Signs as a flat row-major list (`true` = negative).
    pub fn signs(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.n * self.k);
        for i in 0..self.n {
            for j in 0..self.k {
                out.push(self.is_negative(i, j));
            }
        }
        out
    }

    /// Rebuilds a matrix from a dump and re-derives its certificate.
    pub fn restore(n: usize, k: usize, mu: f64, seed: u64, kind: CodeKind, negative: &[bool]) -> Result<Self> {
        let mut v = Self::from_signs(n, k, negative)?;
        if v.offdiag > mu {
            return Err(Error::CorruptBasis(alloc::format!(
                "restored code matrix has off-diagonal {} > {mu}",
                v.offdiag
            )));
        }
        v.mu = mu;
        v.seed = seed;
        v.kind = kind;
        Ok(v)
    }
}

/// `max_{i≠j} |(VVᵀ)_{ij}|` from integer dot products; 0 when `n = 1`.
pub fn gram_offdiag_max(v: &CodeMatrix) -> f64 {
    let mut worst = 0i64;
    for i in 0..v.n {
        for j in i + 1..v.n {
            worst = worst.max(v.dot_int(i, j).abs());
        }
    }
    worst as f64 / v.k as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_is_one() {
        let v = build_code_matrix(1, 0.5, 0).unwrap();
        assert_eq!((v.n(), v.k()), (1, 1));
        assert_eq!(v.entry(0, 0), 1.0);
        assert_eq!(gram_offdiag_max(&v), 0.0);
    }

    #[test]
    fn explicit_examples() {
        let same = CodeMatrix::from_signs(2, 3, &[false, true, false, false, true, false]).unwrap();
        assert_eq!(gram_offdiag_max(&same), 1.0);
        let orth = CodeMatrix::from_signs(2, 2, &[false, false, false, true]).unwrap();
        assert_eq!(gram_offdiag_max(&orth), 0.0);
        let v = build_code_matrix(2, 1.0, 3).unwrap();
        assert!(gram_offdiag_max(&v) <= 1.0);
    }

    #[test]
    fn hadamard_branch_is_orthogonal() {
        let v = build_code_matrix(64, 0.25, 0).unwrap();
        assert_eq!(v.kind(), CodeKind::Hadamard);
        assert_eq!(v.k(), 64);
        assert_eq!(v.offdiag(), 0.0);
        for i in 0..64 {
            assert!((v.gram(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_branch_certifies() {
        let v = build_code_matrix(1024, 0.25, 0).unwrap();
        assert_eq!(v.kind(), CodeKind::Random);
        assert_eq!(v.k(), rank_for(1024, 0.25));
        assert!(v.offdiag() <= 0.25);
        let w = build_code_matrix(1024, 0.25, 0).unwrap();
        assert_eq!(v, w);
    }

    #[test]
    fn products_match_entries() {
        let v = build_code_matrix(8, 0.9, 1).unwrap();
        let x: Vec<f64> = (0..v.k()).map(|j| j as f64 * 0.5 - 1.0).collect();
        let y = v.mul(&x);
        for i in 0..v.n() {
            let direct: f64 = (0..v.k()).map(|j| v.entry(i, j) * x[j]).sum();
            assert!((direct - y[i]).abs() < 1e-12);
        }
        let w: Vec<f64> = (0..v.n()).map(|i| i as f64).collect();
        let z = v.mul_t(&w);
        for j in 0..v.k() {
            let direct: f64 = (0..v.n()).map(|i| v.entry(i, j) * w[i]).sum();
            assert!((direct - z[j]).abs() < 1e-12);
        }
    }
}
