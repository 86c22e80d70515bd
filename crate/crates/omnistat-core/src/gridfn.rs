//! Real functions on the grid `{0, .., m-1}`.

use alloc::vec::Vec;

use crate::{Error, Result};

/// A real-valued function on `{0, .., m-1}`.
///
/// Difference operators shrink the domain, so `m` need not be a power of two
/// here. Routines that rely on the dyadic structure check it themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DomainTooSmall { needed: 1, got: 0 });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { values })
    }

    pub fn from_fn(m: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..m).map(f).collect())
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(alloc::vec![0.0; m])
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, y: usize) -> f64 {
        self.values[y]
    }

    /// Sup-norm distance to another function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.m() != other.m() {
            return Err(Error::ShapeMismatch { expected: self.m(), got: other.m() });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.m() != other.m() {
            return Err(Error::ShapeMismatch { expected: self.m(), got: other.m() });
        }
        GridFunction::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }
}

pub fn is_power_of_two(m: usize) -> bool {
    m >= 2 && m.is_power_of_two()
}

pub fn log2_exact(m: usize) -> Result<u32> {
    if !is_power_of_two(m) {
        return Err(Error::NotPowerOfTwo(m));
    }
    Ok(m.trailing_zeros())
}

/// First difference, `Δf(y) = f(y+1) - f(y)`, on `{0, .., m-2}`.
pub fn delta(f: &GridFunction) -> Result<GridFunction> {
    if f.m() < 2 {
        return Err(Error::DomainTooSmall { needed: 2, got: f.m() });
    }
    GridFunction::new(f.values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Second difference `f(y+2) + f(y) - 2f(y+1)` on `{0, .., m-3}`.
pub fn delta2(f: &GridFunction) -> Result<GridFunction> {
    if f.m() < 3 {
        return Err(Error::DomainTooSmall { needed: 3, got: f.m() });
    }
    delta(&delta(f)?)
}

/// Membership in the discrete convex 1-Lipschitz class, up to `tol`.
pub fn is_discrete_convex_lipschitz(f: &GridFunction, tol: f64) -> bool {
    convexity_violation(f, tol).is_none()
}

/// The first violated constraint of the convex 1-Lipschitz class, if any.
pub fn convexity_violation(f: &GridFunction, tol: f64) -> Option<alloc::string::String> {
    let v = &f.values;
    for j in 0..v.len().saturating_sub(1) {
        let slope = v[j + 1] - v[j];
        if slope.abs() > 1.0 + tol {
            return Some(alloc::format!("|Δf({j})| = {} > 1", slope.abs()));
        }
    }
    for i in 0..v.len().saturating_sub(2) {
        let curv = v[i + 2] + v[i] - 2.0 * v[i + 1];
        if curv < -tol {
            return Some(alloc::format!("Δ²f({i}) = {curv} < 0"));
        }
    }
    None
}

/// `ReLU_i(y) = max(y - i, 0)`.
pub fn relu(i: usize, m: usize) -> Result<GridFunction> {
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, m });
    }
    GridFunction::from_fn(m, |y| y.saturating_sub(i) as f64)
}

/// Indicator of `[a, b]`.
pub fn interval_indicator(a: usize, b: usize, m: usize) -> Result<GridFunction> {
    if a > b || b >= m {
        return Err(Error::InvalidInterval { a, b, m });
    }
    GridFunction::from_fn(m, |y| if (a..=b).contains(&y) { 1.0 } else { 0.0 })
}

/// Coefficients of the discrete Taylor expansion
/// `f(y) = c0 + c1 y + Σ_{i=0}^{m-3} c2[i] ReLU_{i+1}(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    pub c0: f64,
    pub c1: f64,
    pub c2: Vec<f64>,
}

pub fn taylor_expand(f: &GridFunction) -> Result<Taylor> {
    if f.m() < 3 {
        return Err(Error::DomainTooSmall { needed: 3, got: f.m() });
    }
    Ok(Taylor { c0: f.at(0), c1: f.at(1) - f.at(0), c2: delta2(f)?.into_values() })
}

pub fn reconstruct_from_taylor(c0: f64, c1: f64, c2: &[f64], m: usize) -> Result<GridFunction> {
    if m < 3 {
        return Err(Error::DomainTooSmall { needed: 3, got: m });
    }
    if c2.len() != m - 2 {
        return Err(Error::ShapeMismatch { expected: m - 2, got: c2.len() });
    }
    // Running slope: Δf(y) = c1 + Σ_{i < y} c2[i].
    let mut values = Vec::with_capacity(m);
    let mut value = c0;
    let mut slope = c1;
    values.push(value);
    for y in 1..m {
        value += slope;
        values.push(value);
        if y - 1 < c2.len() {
            slope += c2[y - 1];
        }
    }
    GridFunction::new(values)
}

/// The aligned block `[a 2^h, (a+1) 2^h - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicInterval {
    pub level: u32,
    pub offset: usize,
}

impl DyadicInterval {
    pub fn start(&self) -> usize {
        self.offset << self.level
    }

    pub fn end(&self) -> usize {
        ((self.offset + 1) << self.level) - 1
    }

    pub fn len(&self) -> usize {
        1 << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Greedy cover of `[a, b]` by the largest aligned blocks, left to right.
pub fn dyadic_decompose(a: usize, b: usize, m: usize) -> Result<Vec<DyadicInterval>> {
    let r = log2_exact(m)?;
    if a > b || b >= m {
        return Err(Error::InvalidInterval { a, b, m });
    }
    let mut out = Vec::new();
    let mut pos = a;
    while pos <= b {
        let align = if pos == 0 { r } else { pos.trailing_zeros().min(r) };
        let mut level = align;
        while pos + (1 << level) - 1 > b {
            level -= 1;
        }
        out.push(DyadicInterval { level, offset: pos >> level });
        pos += 1 << level;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gf(v: &[f64]) -> GridFunction {
        GridFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn differences() {
        assert_eq!(delta(&gf(&[0., 1., 4., 9.])).unwrap().values(), &[1., 3., 5.]);
        assert_eq!(delta(&gf(&[2., 2., 2.])).unwrap().values(), &[0., 0.]);
        assert_eq!(delta(&gf(&[0., 0., 0., 1.])).unwrap().values(), &[0., 0., 1.]);
        assert_eq!(delta2(&gf(&[0., 1., 4., 9., 16.])).unwrap().values(), &[2., 2., 2.]);
        assert_eq!(delta2(&gf(&[3., 5., 7., 9.])).unwrap().values(), &[0., 0.]);
        assert_eq!(delta2(&relu(2, 5).unwrap()).unwrap().values(), &[0., 1., 0.]);
        assert!(matches!(delta(&gf(&[1.])), Err(Error::DomainTooSmall { .. })));
        assert!(matches!(delta2(&gf(&[1., 2.])), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn convex_lipschitz_membership() {
        let m = 16;
        let f = GridFunction::from_fn(m, |y| (y as f64 - 8.0).abs()).unwrap();
        assert!(is_discrete_convex_lipschitz(&f, 0.0));
        assert!(!is_discrete_convex_lipschitz(&gf(&[0., 1., 0.]), 0.0));
        assert!(!is_discrete_convex_lipschitz(&gf(&[0., 2., 4.]), 0.0));
    }

    #[test]
    fn relu_and_intervals() {
        assert_eq!(relu(0, 4).unwrap().values(), &[0., 1., 2., 3.]);
        assert_eq!(relu(2, 4).unwrap().values(), &[0., 0., 0., 1.]);
        assert_eq!(relu(3, 4).unwrap().values(), &[0., 0., 0., 0.]);
        assert!(relu(4, 4).is_err());
        assert_eq!(interval_indicator(0, 7, 8).unwrap().values(), &[1.0; 8]);
        assert_eq!(interval_indicator(1, 2, 4).unwrap().values(), &[0., 1., 1., 0.]);
        assert!(matches!(interval_indicator(2, 1, 4), Err(Error::InvalidInterval { .. })));
        for a in 0..7 {
            let d = relu(a, 8).unwrap().sub(&relu(a + 1, 8).unwrap()).unwrap();
            assert_eq!(d, interval_indicator(a + 1, 7, 8).unwrap());
        }
    }

    #[test]
    fn taylor_examples() {
        let t = taylor_expand(&gf(&[0., 1., 4., 9., 16.])).unwrap();
        assert_eq!((t.c0, t.c1, t.c2.clone()), (0.0, 1.0, vec![2., 2., 2.]));
        let t = taylor_expand(&GridFunction::from_fn(6, |y| 3.0 + 2.0 * y as f64).unwrap()).unwrap();
        assert_eq!((t.c0, t.c1), (3.0, 2.0));
        assert!(t.c2.iter().all(|&c| c == 0.0));
        let t = taylor_expand(&relu(2, 5).unwrap()).unwrap();
        assert_eq!((t.c0, t.c1, t.c2), (0.0, 0.0, vec![0., 1., 0.]));
        let f = reconstruct_from_taylor(0.0, 1.0, &[2., 2., 2.], 5).unwrap();
        assert_eq!(f.values(), &[0., 1., 4., 9., 16.]);
        let f = reconstruct_from_taylor(1.5, 0.0, &[0.0; 4], 6).unwrap();
        assert_eq!(f.values(), &[1.5; 6]);
        assert!(matches!(
            reconstruct_from_taylor(0.0, 0.0, &[0.0; 2], 5),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn dyadic_examples() {
        let full = dyadic_decompose(0, 7, 8).unwrap();
        assert_eq!(full, vec![DyadicInterval { level: 3, offset: 0 }]);
        let p = dyadic_decompose(3, 6, 8).unwrap();
        let ranges: Vec<_> = p.iter().map(|iv| (iv.start(), iv.end())).collect();
        assert_eq!(ranges, vec![(3, 3), (4, 5), (6, 6)]);
        assert_eq!(dyadic_decompose(1, 6, 8).unwrap().len(), 4);
        assert!(dyadic_decompose(0, 2, 6).is_err());
    }
}
