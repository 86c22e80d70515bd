//! Finite domains, label distributions, predictor tables and sample access.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::stats::StatisticsFamily;
use crate::{Error, Result};

/// A dense row-major `rows × cols` table; predictors are tables with one
/// row per domain point and one column per statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { expected: rows * cols, got: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Table { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Table { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch { expected: cols, got: bad.len() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[f64]) {
        for (r, &v) in values.iter().enumerate().take(self.rows) {
            self.set(r, c, v);
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// A distribution on a finite domain `{0, .., n-1}` with finitely supported
/// label distributions on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    weights: Vec<f64>,
    labels: Vec<Vec<(f64, f64)>>,
}

impl FiniteDistribution {
    /// `weights[x]` is the marginal mass of `x`; `labels[x]` lists
    /// `(y, P(y | x))`. Both are normalized to sum to one.
    pub fn new(weights: Vec<f64>, labels: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty domain".into()));
        }
        if weights.len() != labels.len() {
            return Err(Error::ShapeMismatch { expected: weights.len(), got: labels.len() });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(total > 0.0) {
            return Err(Error::InvalidParameter("marginal weights must be non-negative with positive sum".into()));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        let mut normalized = Vec::with_capacity(labels.len());
        for (x, hist) in labels.into_iter().enumerate() {
            let mass: f64 = hist.iter().map(|(_, p)| p).sum();
            if hist.is_empty() || !(mass > 0.0) || hist.iter().any(|(y, p)| !(*p >= 0.0) || !(0.0..=1.0).contains(y)) {
                return Err(Error::InvalidParameter(alloc::format!("bad label distribution at point {x}")));
            }
            normalized.push(hist.into_iter().map(|(y, p)| (y, p / mass)).collect());
        }
        Ok(FiniteDistribution { weights, labels: normalized })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self, x: usize) -> &[(f64, f64)] {
        &self.labels[x]
    }

    /// `E[f(y) | x]`.
    pub fn cond_expect(&self, x: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.labels[x].iter().map(|&(y, p)| p * f(y)).sum()
    }

    /// `E[s(y) | x]` for every point: the true statistic predictor `p*`.
    pub fn cond_stats(&self, family: &dyn StatisticsFamily) -> Table {
        let d = family.d();
        let mut out = Table::zeros(self.n(), d);
        let mut buf = vec![0.0; d];
        for x in 0..self.n() {
            let row = out.row_mut(x);
            for &(y, p) in &self.labels[x] {
                family.eval_into(y, &mut buf);
                for (o, s) in row.iter_mut().zip(&buf) {
                    *o += p * s;
                }
            }
        }
        out
    }

    pub fn exact(&self, family: &dyn StatisticsFamily) -> ExactData {
        ExactData { weights: self.weights.clone(), cond: self.cond_stats(family) }
    }

    /// A seeded i.i.d. sampler of `(x, s(y))`.
    pub fn sampler<'a>(&'a self, family: &'a dyn StatisticsFamily, seed: u64) -> FiniteSampler<'a> {
        let cdf_x = cumulative(self.weights.iter().copied());
        let cdf_y = self.labels.iter().map(|h| cumulative(h.iter().map(|(_, p)| *p))).collect();
        FiniteSampler { dist: self, family, rng: ChaCha8Rng::seed_from_u64(seed), cdf_x, cdf_y }
    }
}

fn cumulative(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    p.map(|v| {
        acc += v;
        acc
    })
    .collect()
}

/// The exact statistic view of a finite distribution: marginal weights and
/// `p*(x) = E[s(y) | x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactData {
    pub weights: Vec<f64>,
    pub cond: Table,
}

impl ExactData {
    pub fn new(weights: Vec<f64>, cond: Table) -> Result<Self> {
        if weights.len() != cond.rows() {
            return Err(Error::ShapeMismatch { expected: cond.rows(), got: weights.len() });
        }
        Ok(ExactData { weights, cond })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn d(&self) -> usize {
        self.cond.cols()
    }

    /// `ℓ2(p*, p)² = E[‖p*(x) - p(x)‖²]`.
    pub fn potential(&self, p: &Table) -> f64 {
        (0..self.n())
            .map(|x| self.weights[x] * self.cond.row(x).iter().zip(p.row(x)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    }

    /// The single-coordinate potential `E[(p*_i(x) - q(x))²]`.
    pub fn potential_dim(&self, i: usize, q: &[f64]) -> f64 {
        (0..self.n()).map(|x| self.weights[x] * (self.cond.get(x, i) - q[x]) * (self.cond.get(x, i) - q[x])).sum()
    }
}

/// One weighted observation `(x, s(y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: usize,
    pub weight: f64,
    pub stats: Vec<f64>,
}

/// Sample access to a distribution over `(x, s(y))`.
pub trait SampleSource {
    fn d(&self) -> usize;
    /// True when `draw` returns the whole population with exact weights.
    fn exhaustive(&self) -> bool;
    fn draw(&mut self, n: usize) -> Vec<Sample>;
}

/// Exhaustive access: one sample per point with its marginal weight and
/// its exact conditional statistic mean, in domain order.
impl SampleSource for ExactData {
    fn d(&self) -> usize {
        self.cond.cols()
    }

    fn exhaustive(&self) -> bool {
        true
    }

    fn draw(&mut self, _n: usize) -> Vec<Sample> {
        (0..self.n())
            .map(|x| Sample { x, weight: self.weights[x], stats: self.cond.row(x).to_vec() })
            .collect()
    }
}

/// Exhaustive access through a shared reference.
#[derive(Debug, Clone, Copy)]
pub struct Exhaustive<'a>(pub &'a ExactData);

impl SampleSource for Exhaustive<'_> {
    fn d(&self) -> usize {
        self.0.d()
    }

    fn exhaustive(&self) -> bool {
        true
    }

    fn draw(&mut self, _n: usize) -> Vec<Sample> {
        (0..self.0.n())
            .map(|x| Sample { x, weight: self.0.weights[x], stats: self.0.cond.row(x).to_vec() })
            .collect()
    }
}

/// `SampleSource` drawing i.i.d. points and labels from a finite distribution.
#[derive(Debug)]
pub struct FiniteSampler<'a> {
    dist: &'a FiniteDistribution,
    family: &'a dyn StatisticsFamily,
    rng: ChaCha8Rng,
    cdf_x: Vec<f64>,
    cdf_y: Vec<Vec<f64>>,
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap_or(&1.0);
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}

impl FiniteSampler<'_> {
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// One `(x, y)` draw.
    pub fn draw_xy(&mut self) -> (usize, f64) {
        let u = self.uniform();
        let x = pick(&self.cdf_x, u);
        let v = self.uniform();
        let j = pick(&self.cdf_y[x], v);
        (x, self.dist.labels[x][j].0)
    }
}

impl SampleSource for FiniteSampler<'_> {
    fn d(&self) -> usize {
        self.family.d()
    }

    fn exhaustive(&self) -> bool {
        false
    }

    fn draw(&mut self, n: usize) -> Vec<Sample> {
        (0..n)
            .map(|_| {
                let (x, y) = self.draw_xy();
                Sample { x, weight: 1.0, stats: self.family.eval(y) }
            })
            .collect()
    }
}

/// A total-order key for a float that identifies `-0.0` with `0.0`.
pub fn ordered_key(v: f64) -> i64 {
    let b = (v + 0.0).to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

/// Level sets of a predictor: point lists keyed by the exact prediction
/// vector, in increasing key order.
pub fn level_sets(p: &Table) -> BTreeMap<Vec<i64>, Vec<usize>> {
    let mut out: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for x in 0..p.rows() {
        out.entry(p.row(x).iter().map(|&v| ordered_key(v)).collect()).or_default().push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::MomentFamily;

    #[test]
    fn cond_stats_and_potential() {
        let dist = FiniteDistribution::new(vec![1.0, 3.0], vec![vec![(0.0, 1.0), (1.0, 1.0)], vec![(0.2, 1.0)]]).unwrap();
        assert_eq!(dist.weights(), &[0.25, 0.75]);
        let ex = dist.exact(&MomentFamily::new(2));
        assert_eq!(ex.cond.row(0), &[0.5, 0.5]);
        assert!((ex.cond.get(1, 1) - 0.04).abs() < 1e-15);
        assert_eq!(ex.potential(&ex.cond.clone()), 0.0);
    }

    #[test]
    fn sampler_is_seeded() {
        let dist = FiniteDistribution::new(vec![1.0, 1.0], vec![vec![(0.0, 1.0), (1.0, 1.0)], vec![(0.5, 1.0)]]).unwrap();
        let fam = MomentFamily::new(1);
        let a = dist.sampler(&fam, 7).draw(50);
        let b = dist.sampler(&fam, 7).draw(50);
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.x < 2 && (s.x == 0 || s.stats == vec![0.5])));
    }

    #[test]
    fn ordered_keys_follow_numeric_order() {
        let vals = [-1.0, -0.25, -0.0, 0.0, 1e-300, 0.5, 1.0];
        for w in vals.windows(2) {
            assert!(ordered_key(w[0]) <= ordered_key(w[1]));
        }
        assert_eq!(ordered_key(-0.0), ordered_key(0.0));
    }
}
