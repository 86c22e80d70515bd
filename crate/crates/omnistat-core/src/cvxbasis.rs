//! The basis `Ŵ(μ, m) ∪ {ReLU_{it}/(m-1)} ∪ {1}` for discrete convex
//! Lipschitz functions, with constructive certificates.
//!
//! Elements are never materialized: an element is a tag and its value at a
//! grid point is computed on demand. Certificates hold sparse coefficient
//! maps and a sup-norm error obtained by evaluating the combination on every
//! grid point.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use crate::codes::{build_code_matrix, CodeMatrix};
use crate::gridfn::{self, convexity_violation, dyadic_decompose, log2_exact, DyadicInterval, GridFunction};
use crate::stats::StatisticsFamily;
use crate::{Error, Result};

/// What a basis element is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Constant,
    /// Column `column` of the level-`level` code matrix, each entry repeated
    /// `2^level` times.
    Code { level: u32, column: usize },
    /// `ReLU_{multiple·t}/(m-1)`.
    Relu { multiple: usize },
}

/// One dyadic level of `Ŵ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub h: u32,
    pub code: CodeMatrix,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    m: usize,
    r: u32,
    mu: f64,
    t: Option<usize>,
    seed: u64,
    levels: Vec<Level>,
    relus: Vec<usize>,
    constant: Option<usize>,
    kinds: Vec<ElementKind>,
}

/// A constructive approximation of one target.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxCertificate {
    pub target: String,
    /// Sup-norm residual over the whole grid, in the target's own units.
    pub sup_error: f64,
    /// Σ |coefficient| over non-constant elements.
    pub lambda: f64,
    /// Element index → coefficient.
    pub coefficients: BTreeMap<usize, f64>,
}

fn level_seed(seed: u64, h: u32) -> u64 {
    seed.wrapping_add(1_000_003u64.wrapping_mul(h as u64))
}

/// `Ŵ(μ, m)`: for each level `h`, the columns of a code matrix with
/// `n = m/2^h` rows, expanded by `2^h`-fold repetition.
pub fn build_what(mu: f64, m: usize, seed: u64) -> Result<Basis> {
    let r = log2_exact(m)?;
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("mu = {mu} outside (0, 1]")));
    }
    let mut levels = Vec::with_capacity(r as usize + 1);
    let mut kinds = Vec::new();
    for h in 0..=r {
        let code = build_code_matrix(m >> h, mu, level_seed(seed, h))?;
        let start = kinds.len();
        kinds.extend((0..code.k()).map(|column| ElementKind::Code { level: h, column }));
        levels.push(Level { h, code, start });
    }
    Ok(Basis { m, r, mu, t: None, seed, levels, relus: Vec::new(), constant: None, kinds })
}

/// Grid size, ReLU spacing and interval accuracy used for target accuracy `delta`.
pub fn cvx_parameters(delta: f64) -> Result<(usize, usize, f64)> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::InvalidParameter(alloc::format!("delta = {delta} outside (0, 1/4]")));
    }
    let inv = (1.0 / delta).ceil();
    if inv > (1u64 << 40) as f64 {
        return Err(Error::InvalidParameter(alloc::format!("delta = {delta} is too small")));
    }
    let m = (inv as usize).next_power_of_two();
    let t = cube_root_ceil(m);
    let r = m.trailing_zeros() as usize;
    let mu = 1.0 / (12.0 * t as f64 * r as f64);
    Ok((m, t, mu))
}

/// Smallest `t` with `t³ ≥ m`.
pub fn cube_root_ceil(m: usize) -> usize {
    let mut t = (m as f64).cbrt().floor() as usize;
    while t * t * t < m {
        t += 1;
    }
    while t > 1 && (t - 1) * (t - 1) * (t - 1) >= m {
        t -= 1;
    }
    t.max(1)
}

pub fn build_cvx_basis(delta: f64, seed: u64) -> Result<Basis> {
    let (m, t, mu) = cvx_parameters(delta)?;
    let mut basis = build_what(mu, m, seed)?;
    basis.t = Some(t);
    for i in 0..m.div_ceil(t) {
        basis.relus.push(basis.kinds.len());
        basis.kinds.push(ElementKind::Relu { multiple: i });
    }
    basis.constant = Some(basis.kinds.len());
    basis.kinds.push(ElementKind::Constant);
    Ok(basis)
}

impl Basis {
    /// Reassembles a basis from its parts, checking the element layout.
    pub fn from_parts(m: usize, mu: f64, t: Option<usize>, seed: u64, codes: Vec<CodeMatrix>) -> Result<Self> {
        let r = log2_exact(m)?;
        if codes.len() != r as usize + 1 {
            return Err(Error::CorruptBasis(alloc::format!("expected {} levels, got {}", r + 1, codes.len())));
        }
        let mut kinds = Vec::new();
        let mut levels = Vec::new();
        for (h, code) in codes.into_iter().enumerate() {
            if code.n() != m >> h {
                return Err(Error::CorruptBasis(alloc::format!("level {h} has {} rows", code.n())));
            }
            let start = kinds.len();
            kinds.extend((0..code.k()).map(|column| ElementKind::Code { level: h as u32, column }));
            levels.push(Level { h: h as u32, code, start });
        }
        let mut basis = Basis { m, r, mu, t, seed, levels, relus: Vec::new(), constant: None, kinds };
        if let Some(t) = t {
            if t == 0 {
                return Err(Error::CorruptBasis("zero ReLU spacing".into()));
            }
            for i in 0..m.div_ceil(t) {
                basis.relus.push(basis.kinds.len());
                basis.kinds.push(ElementKind::Relu { multiple: i });
            }
            basis.constant = Some(basis.kinds.len());
            basis.kinds.push(ElementKind::Constant);
        }
        Ok(basis)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn log2_m(&self) -> u32 {
        self.r
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn t(&self) -> Option<usize> {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn kind(&self, e: usize) -> ElementKind {
        self.kinds[e]
    }

    pub fn constant_index(&self) -> Option<usize> {
        self.constant
    }

    /// Element range holding `Ŵ^{(h)}`.
    pub fn level_range(&self, h: u32) -> Option<Range<usize>> {
        self.levels.get(h as usize).map(|l| l.start..l.start + l.code.k())
    }

    /// Element holding `ReLU_{i·t}/(m-1)`.
    pub fn relu_element(&self, i: usize) -> Option<usize> {
        self.relus.get(i).copied()
    }

    pub fn relu_count(&self) -> usize {
        self.relus.len()
    }

    /// `|elements| / (m^{2/3} log₂³ m)`.
    pub fn size_constant(&self) -> f64 {
        let m = self.m as f64;
        self.len() as f64 / (m.powf(2.0 / 3.0) * (self.r as f64).powi(3))
    }

    pub fn name(&self, e: usize) -> String {
        match self.kinds[e] {
            ElementKind::Constant => "const".into(),
            ElementKind::Code { level, column } => alloc::format!("w{level}_{column}"),
            ElementKind::Relu { multiple } => alloc::format!("relu{}", multiple * self.t.unwrap_or(0)),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        (0..self.len()).find(|&e| self.name(e) == name)
    }

    /// Value of element `e` at grid point `y`.
    pub fn value(&self, e: usize, y: usize) -> f64 {
        match self.kinds[e] {
            ElementKind::Constant => 1.0,
            ElementKind::Code { level, column } => self.levels[level as usize].code.entry(y >> level, column),
            ElementKind::Relu { multiple } => {
                let offset = multiple * self.t.unwrap_or(0);
                y.saturating_sub(offset) as f64 / (self.m - 1).max(1) as f64
            }
        }
    }

    pub fn element(&self, e: usize) -> GridFunction {
        GridFunction::from_fn(self.m, |y| self.value(e, y)).expect("basis values are finite")
    }

    /// Evaluates `Σ_e c_e · element_e` on the whole grid.
    pub fn evaluate(&self, coefficients: &BTreeMap<usize, f64>) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        let mut per_level: Vec<Option<Vec<f64>>> = vec![None; self.levels.len()];
        for (&e, &c) in coefficients {
            match self.kinds[e] {
                ElementKind::Constant => out.iter_mut().for_each(|v| *v += c),
                ElementKind::Code { level, column } => {
                    let k = self.levels[level as usize].code.k();
                    per_level[level as usize].get_or_insert_with(|| vec![0.0; k])[column] += c;
                }
                ElementKind::Relu { multiple } => {
                    let offset = multiple * self.t.unwrap_or(0);
                    let denom = (m - 1).max(1) as f64;
                    for (y, v) in out.iter_mut().enumerate().skip(offset) {
                        *v += c * ((y - offset) as f64 / denom);
                    }
                }
            }
        }
        for (h, coef) in per_level.iter().enumerate() {
            if let Some(coef) = coef {
                let vals = self.levels[h].code.mul(coef);
                for (y, v) in out.iter_mut().enumerate() {
                    *v += vals[y >> h];
                }
            }
        }
        out
    }

    /// Builds a certificate for `target` from a coefficient map.
    pub fn certify(&self, name: impl Into<String>, target: &[f64], coefficients: BTreeMap<usize, f64>) -> Result<ApproxCertificate> {
        if target.len() != self.m {
            return Err(Error::ShapeMismatch { expected: self.m, got: target.len() });
        }
        let approx = self.evaluate(&coefficients);
        let sup_error = approx.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let lambda = coefficients
            .iter()
            .filter(|(&e, _)| self.kinds[e] != ElementKind::Constant)
            .map(|(_, c)| c.abs())
            .sum();
        Ok(ApproxCertificate { target: name.into(), sup_error, lambda, coefficients })
    }

    fn check_interval(&self, iv: DyadicInterval) -> Result<&Level> {
        let level = self
            .levels
            .get(iv.level as usize)
            .ok_or_else(|| Error::CorruptBasis(alloc::format!("level {} missing", iv.level)))?;
        if iv.level > self.r || iv.offset >= self.m >> iv.level {
            return Err(Error::InvalidInterval { a: iv.start(), b: iv.end(), m: self.m });
        }
        Ok(level)
    }
}

/// Interval, ReLU and constant weights waiting to be turned into element
/// coefficients.
#[derive(Debug)]
struct Combination<'a> {
    basis: &'a Basis,
    constant: f64,
    relu: Vec<f64>,
    /// Weight of the suffix interval `[i, m-1]`.
    suffix: Vec<f64>,
    /// Weight of each dyadic interval, per level.
    dyadic: Vec<Vec<f64>>,
}

impl<'a> Combination<'a> {
    fn new(basis: &'a Basis) -> Self {
        Combination {
            basis,
            constant: 0.0,
            relu: vec![0.0; basis.relus.len()],
            suffix: vec![0.0; basis.m],
            dyadic: basis.levels.iter().map(|l| vec![0.0; l.code.n()]).collect(),
        }
    }

    fn add_interval(&mut self, a: usize, b: usize, w: f64) -> Result<()> {
        if b == self.basis.m - 1 {
            self.suffix[a] += w;
            return Ok(());
        }
        for iv in dyadic_decompose(a, b, self.basis.m)? {
            self.dyadic[iv.level as usize][iv.offset] += w;
        }
        Ok(())
    }

    /// `w · ReLU_j` through `ReLU_j = ReLU_{j0} - Σ_{i=j0+1}^{j} I_{i,m-1}`.
    fn add_relu(&mut self, j: usize, w: f64) -> Result<()> {
        let t = self.basis.t.ok_or_else(|| Error::CorruptBasis("basis has no ReLU elements".into()))?;
        if j >= self.basis.m {
            return Err(Error::IndexOutOfRange { index: j, m: self.basis.m });
        }
        let block = j / t;
        if block >= self.relu.len() {
            return Err(Error::CorruptBasis(alloc::format!("ReLU block {block} missing")));
        }
        self.relu[block] += w * (self.basis.m - 1) as f64;
        for i in block * t + 1..=j {
            self.suffix[i] -= w;
        }
        Ok(())
    }

    fn into_coefficients(mut self) -> Result<BTreeMap<usize, f64>> {
        let basis = self.basis;
        let m = basis.m;
        for i in 0..m {
            let w = self.suffix[i];
            if w != 0.0 {
                for iv in dyadic_decompose(i, m - 1, m)? {
                    self.dyadic[iv.level as usize][iv.offset] += w;
                }
            }
        }
        let mut out = BTreeMap::new();
        if self.constant != 0.0 {
            let e = basis.constant.ok_or_else(|| Error::CorruptBasis("basis has no constant element".into()))?;
            out.insert(e, self.constant);
        }
        for (i, &c) in self.relu.iter().enumerate() {
            if c != 0.0 {
                out.insert(basis.relus[i], c);
            }
        }
        for (h, w) in self.dyadic.iter().enumerate() {
            if w.iter().all(|&x| x == 0.0) {
                continue;
            }
            let level = &basis.levels[h];
            for (col, c) in level.code.mul_t(w).into_iter().enumerate() {
                if c != 0.0 {
                    out.insert(level.start + col, c);
                }
            }
        }
        Ok(out)
    }
}

/// Row `offset` of the level-`h` code matrix as coefficients.
pub fn approximate_dyadic_interval(basis: &Basis, iv: DyadicInterval) -> Result<ApproxCertificate> {
    let level = basis.check_interval(iv)?;
    let mut coefficients = BTreeMap::new();
    for col in 0..level.code.k() {
        coefficients.insert(level.start + col, level.code.entry(iv.offset, col));
    }
    let target = gridfn::interval_indicator(iv.start(), iv.end(), basis.m)?;
    basis.certify(alloc::format!("I[{},{}]", iv.start(), iv.end()), target.values(), coefficients)
}

/// Sum of the dyadic certificates over the canonical cover of `[a, b]`.
pub fn approximate_interval(basis: &Basis, a: usize, b: usize) -> Result<ApproxCertificate> {
    let target = gridfn::interval_indicator(a, b, basis.m)?;
    let mut comb = Combination::new(basis);
    comb.add_interval(a, b, 1.0)?;
    basis.certify(alloc::format!("I[{a},{b}]"), target.values(), comb.into_coefficients()?)
}

pub fn approximate_relu(basis: &Basis, j: usize) -> Result<ApproxCertificate> {
    if j >= basis.m {
        return Err(Error::IndexOutOfRange { index: j, m: basis.m });
    }
    let mut comb = Combination::new(basis);
    comb.add_relu(j, 1.0)?;
    let target = gridfn::relu(j, basis.m)?;
    basis.certify(alloc::format!("relu{j}"), target.values(), comb.into_coefficients()?)
}

/// Approximates `f ∈ 𝕃_cvx` through its discrete Taylor expansion.
pub fn approximate_convex(basis: &Basis, f: &GridFunction, tol: f64) -> Result<ApproxCertificate> {
    approximate_convex_named(basis, f, tol, "convex")
}

pub fn approximate_convex_named(basis: &Basis, f: &GridFunction, tol: f64, name: &str) -> Result<ApproxCertificate> {
    if f.m() != basis.m {
        return Err(Error::ShapeMismatch { expected: basis.m, got: f.m() });
    }
    if let Some(reason) = convexity_violation(f, tol) {
        return Err(Error::Precondition(reason));
    }
    let mut comb = Combination::new(basis);
    if basis.m < 3 {
        comb.constant = f.at(0);
        if basis.m == 2 {
            comb.add_relu(0, f.at(1) - f.at(0))?;
        }
    } else {
        let taylor = gridfn::taylor_expand(f)?;
        comb.constant = taylor.c0;
        comb.add_relu(0, taylor.c1)?;
        for (i, &c) in taylor.c2.iter().enumerate() {
            if c != 0.0 {
                comb.add_relu(i + 1, c)?;
            }
        }
    }
    basis.certify(name, f.values(), comb.into_coefficients()?)
}

/// Certified error of `approximate_relu(basis, j)` for every `j`, computed
/// from exact Gram rows without forming coefficient vectors.
pub fn relu_error_profile(basis: &Basis) -> Result<Vec<f64>> {
    let t = basis.t.ok_or_else(|| Error::CorruptBasis("basis has no ReLU elements".into()))?;
    let m = basis.m;
    let denom = (m - 1).max(1) as f64;
    let mut errors = vec![0.0; m];
    let mut acc = vec![0.0; m];
    let mut suffix = vec![0.0; m];
    for block in 0..m.div_ceil(t) {
        let j0 = block * t;
        let base: Vec<f64> = (0..m)
            .map(|y| {
                let relu = y.saturating_sub(j0) as f64;
                (relu / denom) * denom - relu
            })
            .collect();
        acc.iter_mut().for_each(|v| *v = 0.0);
        errors[j0] = base.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for j in j0 + 1..(j0 + t).min(m) {
            suffix.iter_mut().for_each(|v| *v = 0.0);
            for iv in dyadic_decompose(j, m - 1, m)? {
                let level = basis.check_interval(iv)?;
                let row = level.code.gram_row(iv.offset);
                for (y, v) in suffix.iter_mut().enumerate() {
                    let b = y >> iv.level;
                    *v += row[b] - if b == iv.offset { 1.0 } else { 0.0 };
                }
            }
            let mut worst = 0.0f64;
            for y in 0..m {
                acc[y] += suffix[y];
                worst = worst.max((base[y] - acc[y]).abs());
            }
            errors[j] = worst;
        }
    }
    Ok(errors)
}

/// The basis lifted to `[0, 1]`: `s_e(y) = element_e(min(⌊y m⌋, m-1))` for
/// every non-constant element.
#[derive(Debug, Clone)]
pub struct BasisStatistics {
    basis: alloc::sync::Arc<Basis>,
    name: String,
}

pub fn lift_to_unit_interval(basis: alloc::sync::Arc<Basis>, delta: f64) -> BasisStatistics {
    BasisStatistics { name: alloc::format!("cvx(delta={delta}, m={})", basis.m), basis }
}

/// Coefficients of a lifted approximation of `g` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedApprox {
    pub r0: f64,
    pub r: Vec<f64>,
    /// Grid-scale certificate error of the discretized target.
    pub grid_error: f64,
}

impl BasisStatistics {
    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn grid_index(&self, y: f64) -> usize {
        let m = self.basis.m;
        let idx = (y * m as f64).floor();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(m - 1)
        }
    }

    /// Approximates a convex 1-Lipschitz `g` on `[0, 1]`; the lifted error
    /// is at most `(1 + grid_error)/m`.
    pub fn approximate(&self, g: impl Fn(f64) -> f64, tol: f64) -> Result<LiftedApprox> {
        let basis = &*self.basis;
        let m = basis.m as f64;
        let f = GridFunction::from_fn(basis.m, |i| m * g(i as f64 / m))?;
        let cert = approximate_convex(basis, &f, tol)?;
        let constant = basis.constant.ok_or_else(|| Error::CorruptBasis("basis has no constant element".into()))?;
        let mut r = vec![0.0; basis.len() - 1];
        let mut r0 = 0.0;
        for (&e, &c) in &cert.coefficients {
            if e == constant {
                r0 = c / m;
            } else {
                r[e] = c / m;
            }
        }
        Ok(LiftedApprox { r0, r, grid_error: cert.sup_error })
    }
}

impl StatisticsFamily for BasisStatistics {
    fn name(&self) -> &str {
        &self.name
    }

    fn d(&self) -> usize {
        self.basis.len() - 1
    }

    fn eval_into(&self, y: f64, out: &mut [f64]) {
        let idx = self.grid_index(y);
        for (e, o) in out.iter_mut().enumerate() {
            *o = self.basis.value(e, idx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_for_one_eighth() {
        let (m, t, mu) = cvx_parameters(0.125).unwrap();
        assert_eq!((m, t), (8, 2));
        assert!((mu - 1.0 / 72.0).abs() < 1e-15);
    }

    #[test]
    fn cube_roots() {
        assert_eq!(cube_root_ceil(8), 2);
        assert_eq!(cube_root_ceil(9), 3);
        assert_eq!(cube_root_ceil(4096), 16);
        assert_eq!(cube_root_ceil(1024), 11);
    }

    #[test]
    fn tiny_what_basis() {
        let b = build_what(1.0, 2, 0).unwrap();
        assert_eq!(b.levels().len(), 2);
        for h in 0..=1 {
            for a in 0..(2 >> h) {
                let c = approximate_dyadic_interval(&b, DyadicInterval { level: h, offset: a }).unwrap();
                assert!(c.sup_error <= 1.0);
            }
        }
    }

    #[test]
    fn relu_on_multiple_is_exact() {
        let b = build_cvx_basis(1.0 / 64.0, 0).unwrap();
        let t = b.t().unwrap();
        let c = approximate_relu(&b, 2 * t).unwrap();
        assert!(c.sup_error < 1e-12);
        assert_eq!(c.coefficients.len(), 1);
    }

    #[test]
    fn constant_target_uses_constant_only() {
        let b = build_cvx_basis(1.0 / 64.0, 0).unwrap();
        let f = GridFunction::from_fn(64, |_| 2.5).unwrap();
        let c = approximate_convex(&b, &f, 0.0).unwrap();
        assert_eq!(c.sup_error, 0.0);
        assert_eq!(c.coefficients.keys().copied().collect::<Vec<_>>(), vec![b.constant_index().unwrap()]);
    }

    #[test]
    fn non_convex_is_rejected() {
        let b = build_cvx_basis(1.0 / 16.0, 0).unwrap();
        let f = GridFunction::from_fn(16, |y| -((y as f64) - 8.0).abs()).unwrap();
        assert!(matches!(approximate_convex(&b, &f, 1e-9), Err(Error::Precondition(_))));
    }
}
