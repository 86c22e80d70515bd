//! δ-binning, expected calibration error, recalibration and the simulation
//! distribution `D̃`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dist::{level_sets, ordered_key, ExactData, FiniteDistribution, Sample, SampleSource, Table};
use crate::{Error, Result};

/// `j` with `jδ ≤ v < (j+1)δ`, clamped to `[-⌈1/δ⌉, ⌈1/δ⌉ - 1]`.
pub fn bin_coord(v: f64, delta: f64) -> i64 {
    let kmax = (1.0 / delta).ceil() as i64;
    let mut j = (v / delta).floor() as i64;
    if j as f64 * delta > v {
        j -= 1;
    } else if (j + 1) as f64 * delta <= v {
        j += 1;
    }
    j.clamp(-kmax, kmax - 1)
}

pub fn bin_key(v: &[f64], delta: f64) -> Vec<i64> {
    v.iter().map(|&x| bin_coord(x, delta)).collect()
}

/// The bin's lower corner `jδ`.
pub fn corner(key: &[i64], delta: f64) -> Vec<f64> {
    key.iter().map(|&j| j as f64 * delta).collect()
}

/// `p^δ(x)`: every coordinate floored to its bin corner.
pub fn discretize(v: &[f64], delta: f64) -> Vec<f64> {
    v.iter().map(|&x| bin_coord(x, delta) as f64 * delta).collect()
}

pub fn discretize_predictor(p: &Table, delta: f64) -> Result<Table> {
    check_delta(delta)?;
    let mut out = p.clone();
    for x in 0..p.rows() {
        for (o, &v) in out.row_mut(x).iter_mut().zip(p.row(x)) {
            *o = bin_coord(v, delta) as f64 * delta;
        }
    }
    Ok(out)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("delta = {delta} outside (0, 1]")));
    }
    Ok(())
}

/// Per-bin accumulator: a commutative monoid under `merge`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAcc {
    pub count: usize,
    pub weight: f64,
    pub sum: Vec<f64>,
    /// The prediction all members of the group share.
    pub center: Vec<f64>,
}

impl BinAcc {
    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.weight).collect()
    }

    /// `‖s̄ - center‖∞`.
    pub fn gap(&self) -> f64 {
        self.sum.iter().zip(&self.center).map(|(s, c)| (s / self.weight - c).abs()).fold(0.0, f64::max)
    }
}

/// Grouped statistic sums keyed by an ordered group label.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub bins: BTreeMap<Vec<i64>, BinAcc>,
    pub total_count: usize,
    pub total_weight: f64,
}

impl BinStats {
    fn empty() -> Self {
        BinStats { bins: BTreeMap::new(), total_count: 0, total_weight: 0.0 }
    }

    fn add(&mut self, key: Vec<i64>, center: impl FnOnce() -> Vec<f64>, weight: f64, stats: &[f64]) {
        let acc = self.bins.entry(key).or_insert_with(|| BinAcc {
            count: 0,
            weight: 0.0,
            sum: vec![0.0; stats.len()],
            center: center(),
        });
        acc.count += 1;
        acc.weight += weight;
        for (s, v) in acc.sum.iter_mut().zip(stats) {
            *s += weight * v;
        }
        self.total_count += 1;
        self.total_weight += weight;
    }

    /// Samples binned by `p^δ(x)`.
    pub fn fold(p: &Table, delta: f64, samples: &[Sample]) -> Result<Self> {
        check_delta(delta)?;
        let mut out = Self::empty();
        for s in samples {
            if s.x >= p.rows() {
                return Err(Error::IndexOutOfRange { index: s.x, m: p.rows() });
            }
            if s.stats.len() != p.cols() {
                return Err(Error::ShapeMismatch { expected: p.cols(), got: s.stats.len() });
            }
            let key = bin_key(p.row(s.x), delta);
            let center = corner(&key, delta);
            out.add(key, || center, s.weight, &s.stats);
        }
        Ok(out)
    }

    /// Population grouped by the exact level sets of `p`.
    pub fn level_sets(p: &Table, data: &ExactData) -> Result<Self> {
        if p.rows() != data.n() || p.cols() != data.d() {
            return Err(Error::ShapeMismatch { expected: data.n() * data.d(), got: p.rows() * p.cols() });
        }
        let mut out = Self::empty();
        for x in 0..p.rows() {
            let row = p.row(x);
            let key = row.iter().map(|&v| ordered_key(v)).collect();
            out.add(key, || row.to_vec(), data.weights[x], data.cond.row(x));
        }
        Ok(out)
    }

    pub fn merge(&mut self, other: BinStats) {
        for (key, acc) in other.bins {
            match self.bins.get_mut(&key) {
                Some(mine) => {
                    mine.count += acc.count;
                    mine.weight += acc.weight;
                    for (a, b) in mine.sum.iter_mut().zip(&acc.sum) {
                        *a += b;
                    }
                }
                None => {
                    self.bins.insert(key, acc);
                }
            }
        }
        self.total_count += other.total_count;
        self.total_weight += other.total_weight;
    }

    /// `Σ_j (w_j / W) ‖s̄_j - center_j‖∞`, summed in key order.
    pub fn ece(&self) -> f64 {
        if self.total_weight <= 0.0 {
            return 0.0;
        }
        self.bins.values().map(|acc| acc.weight / self.total_weight * acc.gap()).sum()
    }
}

/// Sample-size configuration for the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EceConfig {
    pub c_est: f64,
    pub n_override: Option<usize>,
    /// Median of this many independent estimates.
    pub repeats: usize,
    /// Largest default sample size accepted without an override.
    pub sample_budget: f64,
}

impl Default for EceConfig {
    fn default() -> Self {
        EceConfig { c_est: 0.02, n_override: None, repeats: 1, sample_budget: 1e8 }
    }
}

/// `c_est · d · ln²(d/δ) / (δ^d μ³)`.
pub fn default_sample_size(d: usize, delta: f64, mu: f64, c_est: f64) -> f64 {
    let d = d.max(1) as f64;
    let ln = (d / delta).ln().max(1.0);
    c_est * d * ln * ln / (delta.powf(d) * mu.powi(3))
}

fn sample_count(d: usize, delta: f64, mu: f64, cfg: &EceConfig) -> Result<usize> {
    if let Some(n) = cfg.n_override {
        return Ok(n.max(1));
    }
    let n = default_sample_size(d, delta, mu, cfg.c_est).ceil();
    if !(n <= cfg.sample_budget) {
        return Err(Error::SampleBudget { needed: n, budget: cfg.sample_budget });
    }
    Ok((n as usize).max(1))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Estimate of `ECE_S(p^δ)` within `μ` (with the configured confidence).
///
/// An exhaustive source is folded once and yields the exact value.
pub fn est_ece(p: &Table, delta: f64, mu: f64, source: &mut dyn SampleSource, cfg: &EceConfig) -> Result<f64> {
    check_delta(delta)?;
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("mu = {mu} outside (0, 1]")));
    }
    if source.exhaustive() {
        return Ok(BinStats::fold(p, delta, &source.draw(0))?.ece());
    }
    let n = sample_count(p.cols(), delta, mu, cfg)?;
    let estimates = (0..cfg.repeats.max(1))
        .map(|_| Ok(BinStats::fold(p, delta, &source.draw(n))?.ece()))
        .collect::<Result<Vec<_>>>()?;
    Ok(median(estimates))
}

/// `p̂`: bin means of `p^δ`, with unseen bins mapped to their corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Recalibration {
    pub delta: f64,
    pub table: BTreeMap<Vec<i64>, Vec<f64>>,
}

impl Recalibration {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let key = bin_key(v, self.delta);
        match self.table.get(&key) {
            Some(mean) => mean.clone(),
            None => corner(&key, self.delta),
        }
    }

    pub fn apply_table(&self, p: &Table) -> Table {
        let mut out = p.clone();
        for x in 0..p.rows() {
            let v = self.apply(p.row(x));
            out.row_mut(x).copy_from_slice(&v);
        }
        out
    }
}

pub fn recal(p: &Table, delta: f64, source: &mut dyn SampleSource, cfg: &EceConfig) -> Result<Recalibration> {
    check_delta(delta)?;
    let samples = if source.exhaustive() {
        source.draw(0)
    } else {
        source.draw(sample_count(p.cols(), delta, delta, cfg)?)
    };
    let stats = BinStats::fold(p, delta, &samples)?;
    let table = stats
        .bins
        .into_iter()
        .map(|(k, acc)| {
            let mean = acc.mean().into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            (k, mean)
        })
        .collect();
    Ok(Recalibration { delta, table })
}

/// `E[‖E[s(y) | p(x)] - p(x)‖∞]` by exact enumeration of level sets.
pub fn exact_ece(p: &Table, data: &ExactData) -> Result<f64> {
    Ok(BinStats::level_sets(p, data)?.ece())
}

/// `E[s(y) | p(x)]` for every point.
pub fn level_set_means(p: &Table, data: &ExactData) -> Result<Table> {
    let stats = BinStats::level_sets(p, data)?;
    let mut out = Table::zeros(p.rows(), data.d());
    for x in 0..p.rows() {
        let key: Vec<i64> = p.row(x).iter().map(|&v| ordered_key(v)).collect();
        let acc = &stats.bins[&key];
        out.row_mut(x).copy_from_slice(&acc.mean());
    }
    Ok(out)
}

/// `D̃`: each point's labels are redrawn from the mass-weighted mixture of
/// `y | x'` over the points `x'` in the same level set of `p`.
pub fn simulate_dtilde(p: &Table, dist: &FiniteDistribution) -> Result<FiniteDistribution> {
    if p.rows() != dist.n() {
        return Err(Error::ShapeMismatch { expected: dist.n(), got: p.rows() });
    }
    let w = dist.weights();
    let mut labels = vec![Vec::new(); dist.n()];
    for members in level_sets(p).into_values() {
        let mass: f64 = members.iter().map(|&x| w[x]).sum();
        let mut mix: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for &x in &members {
            let share = if mass > 0.0 { w[x] / mass } else { 1.0 / members.len() as f64 };
            for &(y, q) in dist.labels(x) {
                mix.entry(ordered_key(y)).or_insert((y, 0.0)).1 += share * q;
            }
        }
        let hist: Vec<(f64, f64)> = mix.into_values().collect();
        for &x in &members {
            labels[x] = hist.clone();
        }
    }
    FiniteDistribution::new(w.to_vec(), labels)
}
