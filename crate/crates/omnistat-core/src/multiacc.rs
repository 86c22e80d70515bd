//! Test classes, weak agnostic learners, the MA boosting loop and
//! multiaccuracy measurement.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dist::{ExactData, SampleSource, Table};
use crate::stats::UniformApproximation;
use crate::{Error, Result};

/// Where a test class came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Raw,
    /// `{±r_i^ℓ ∘ c}` for statistic `dim`, divided by the class's `kappa`.
    Composed { dim: usize },
}

/// A finite class of tests `b: X → [-1, 1]` on a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TestClass {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
    kappa: f64,
    provenance: Provenance,
}

impl TestClass {
    /// A class of raw tests; every value must lie in `[-1, 1]` up to `1e-9`.
    pub fn new(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let tc = TestClass { names, values, kappa: 1.0, provenance: Provenance::Raw };
        tc.check()?;
        Ok(tc)
    }

    /// Tests scaled by `κ = max(1, sup |b|)`; `κ` is recorded.
    pub fn normalized(names: Vec<String>, raw: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        let sup = raw.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        let kappa = sup.max(1.0);
        let values = raw.into_iter().map(|b| b.into_iter().map(|v| v / kappa).collect()).collect();
        let tc = TestClass { names, values, kappa, provenance };
        tc.check()?;
        Ok(tc)
    }

    fn check(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter("empty test class".into()));
        }
        if self.names.len() != self.values.len() {
            return Err(Error::ShapeMismatch { expected: self.values.len(), got: self.names.len() });
        }
        let n = self.values[0].len();
        for (j, b) in self.values.iter().enumerate() {
            if b.len() != n {
                return Err(Error::ShapeMismatch { expected: n, got: b.len() });
            }
            if let Some(v) = b.iter().find(|v| !v.is_finite() || v.abs() > 1.0 + 1e-9) {
                return Err(Error::Precondition(alloc::format!("test {} takes value {v}", self.names[j])));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of domain points.
    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn name(&self, b: usize) -> &str {
        &self.names[b]
    }

    pub fn values(&self, b: usize) -> &[f64] {
        &self.values[b]
    }

    pub fn value(&self, b: usize, x: usize) -> f64 {
        self.values[b][x]
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// `C_i = {±r_i^ℓ ∘ c / κ_i}` over every approximation and hypothesis.
///
/// Each entry of `parts` pairs an approximation with hypotheses given as an
/// action index per domain point.
pub fn compose_tests(dim: usize, parts: &[(&UniformApproximation, &[Vec<usize>])], hypothesis_names: &[String]) -> Result<TestClass> {
    let mut names = Vec::new();
    let mut raw = Vec::new();
    for (ua, hyps) in parts {
        if dim == 0 || dim > ua.d {
            return Err(Error::IndexOutOfRange { index: dim, m: ua.d + 1 });
        }
        let col = ua.column(dim);
        for (h, c) in hyps.iter().enumerate() {
            let values = c
                .iter()
                .map(|&a| col.get(a).copied().ok_or(Error::UnknownAction(a)))
                .collect::<Result<Vec<f64>>>()?;
            let hname = hypothesis_names.get(h).cloned().unwrap_or_else(|| alloc::format!("c{h}"));
            names.push(alloc::format!("+r{dim}[{}]({hname})", ua.loss_id));
            names.push(alloc::format!("-r{dim}[{}]({hname})", ua.loss_id));
            let negated = values.iter().map(|v| -v).collect();
            raw.push(values);
            raw.push(negated);
        }
    }
    TestClass::normalized(names, raw, Provenance::Composed { dim })
}

/// `(ρ, σ)` thresholds and the sample-size constant `c` of the exhaustive
/// learner, in the units of the test class it is used with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLearnerSpec {
    pub rho: f64,
    pub sigma: f64,
    pub sample_constant: f64,
}

impl WeakLearnerSpec {
    pub fn new(rho: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= rho) {
            return Err(Error::InvalidParameter(alloc::format!("need 0 < sigma <= rho, got rho = {rho}, sigma = {sigma}")));
        }
        Ok(WeakLearnerSpec { rho, sigma, sample_constant: 2.0 })
    }

    /// The same thresholds for tests divided by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Self {
        WeakLearnerSpec { rho: self.rho / kappa, sigma: self.sigma / kappa, sample_constant: self.sample_constant }
    }

    /// `⌈c ln(2|B|/0.01) / (ρ - σ)²⌉`.
    pub fn sample_size(&self, tests: usize) -> Result<usize> {
        let gap = self.rho - self.sigma;
        if !(gap > 0.0) {
            return Err(Error::DegenerateMargin(self.rho));
        }
        Ok((self.sample_constant * (2.0 * tests as f64 / 0.01).ln() / (gap * gap)).ceil() as usize)
    }
}

/// How the residual `f = ½(E[s_i(y) | x] - q(x))` is accessed.
pub enum Residual<'a> {
    /// Marginal weights and `E[s_i(y) | x]`: correlations are exact.
    Exact { weights: &'a [f64], target: &'a [f64] },
    /// Draws `(x, s(y))` and labels `z = ½(s_i(y) - q(x))`.
    Sampled { source: &'a mut dyn SampleSource, dim: usize },
}

impl core::fmt::Debug for Residual<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Residual::Exact { weights, .. } => write!(f, "Residual::Exact({} points)", weights.len()),
            Residual::Sampled { dim, .. } => write!(f, "Residual::Sampled(dim {dim})"),
        }
    }
}

/// `E[b(x) f(x)]` for every test.
pub fn correlations(tc: &TestClass, residual: &mut Residual<'_>, q: &[f64], samples: usize) -> Result<Vec<f64>> {
    if q.len() != tc.n() {
        return Err(Error::ShapeMismatch { expected: tc.n(), got: q.len() });
    }
    match residual {
        Residual::Exact { weights, target } => {
            let f: Vec<f64> = (0..q.len()).map(|x| weights[x] * 0.5 * (target[x] - q[x])).collect();
            Ok((0..tc.len()).map(|b| tc.values(b).iter().zip(&f).map(|(bv, fv)| bv * fv).sum()).collect())
        }
        Residual::Sampled { source, dim } => {
            let draws = source.draw(samples);
            let total: f64 = draws.iter().map(|s| s.weight).sum();
            if !(total > 0.0) {
                return Err(Error::InvalidParameter("sample source returned no mass".into()));
            }
            let mut out = vec![0.0; tc.len()];
            for s in &draws {
                let z = 0.5 * (s.stats[*dim] - q[s.x]) * s.weight / total;
                for (b, o) in out.iter_mut().enumerate() {
                    *o += tc.value(b, s.x) * z;
                }
            }
            Ok(out)
        }
    }
}

/// A weak agnostic learner: one call returns a test or `None` for `⊥`.
pub trait WeakLearner {
    fn spec(&self) -> &WeakLearnerSpec;
    fn learn(&mut self, tc: &TestClass, residual: &mut Residual<'_>, q: &[f64]) -> Result<Option<usize>>;
}

/// Scans the whole class and returns the first maximizer when its
/// correlation reaches `(ρ + σ)/2`.
pub fn exhaustive_weak_learner(tc: &TestClass, spec: &WeakLearnerSpec, residual: &mut Residual<'_>, q: &[f64]) -> Result<Option<usize>> {
    let samples = spec.sample_size(tc.len())?;
    let corr = correlations(tc, residual, q, samples)?;
    let mut best = 0;
    for (b, &c) in corr.iter().enumerate() {
        if c > corr[best] {
            best = b;
        }
    }
    Ok(if corr[best] >= (spec.rho + spec.sigma) / 2.0 { Some(best) } else { None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveLearner {
    pub spec: WeakLearnerSpec,
    pub calls: usize,
}

impl ExhaustiveLearner {
    pub fn new(spec: WeakLearnerSpec) -> Self {
        ExhaustiveLearner { spec, calls: 0 }
    }
}

impl WeakLearner for ExhaustiveLearner {
    fn spec(&self) -> &WeakLearnerSpec {
        &self.spec
    }

    fn learn(&mut self, tc: &TestClass, residual: &mut Residual<'_>, q: &[f64]) -> Result<Option<usize>> {
        self.calls += 1;
        exhaustive_weak_learner(tc, &self.spec, residual, q)
    }
}

/// One update batch: test `test` applied `count` times in a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRun {
    pub test: usize,
    pub count: u32,
}

/// Result of one MA run.
#[derive(Debug, Clone, PartialEq)]
pub struct MaRun {
    pub q: Vec<f64>,
    pub steps: Vec<StepRun>,
    /// Number of updates `T`.
    pub t: usize,
    /// Weak-learner calls, the final `⊥` included.
    pub wl_calls: usize,
    /// `σ` used for the updates.
    pub sigma: f64,
    /// Exact `ℓ2(q*, q_t)²` after every update, starting with `q_0`; empty
    /// without an oracle.
    pub potentials: Vec<f64>,
}

/// `Π(q + σ b)`, one coordinate.
#[inline]
pub fn ma_update(q: f64, sigma: f64, b: f64) -> f64 {
    (q + sigma * b).clamp(-1.0, 1.0)
}

/// Default cap `⌈16/σ²⌉`.
pub fn default_cap(sigma: f64) -> usize {
    (16.0 / (sigma * sigma)).ceil() as usize
}

/// The MA loop: `q ← Π(q + σ b)` until the learner returns `⊥`.
pub fn ma_loop(
    q0: &[f64],
    tc: &TestClass,
    wl: &mut dyn WeakLearner,
    alpha: f64,
    residual: &mut Residual<'_>,
    oracle: Option<&[f64]>,
    weights: Option<&[f64]>,
    cap: Option<usize>,
) -> Result<MaRun> {
    let spec = *wl.spec();
    if spec.rho > alpha * (1.0 + 1e-12) {
        return Err(Error::Precondition(alloc::format!("rho = {} exceeds alpha = {alpha}", spec.rho)));
    }
    if q0.len() != tc.n() {
        return Err(Error::ShapeMismatch { expected: tc.n(), got: q0.len() });
    }
    let cap = cap.unwrap_or_else(|| default_cap(spec.sigma));
    let potential = |q: &[f64]| -> Option<f64> {
        let (target, w) = (oracle?, weights?);
        Some(q.iter().zip(target).zip(w).map(|((a, b), w)| w * (b - a) * (b - a)).sum())
    };
    let mut q: Vec<f64> = q0.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    let mut run = MaRun { q: Vec::new(), steps: Vec::new(), t: 0, wl_calls: 0, sigma: spec.sigma, potentials: Vec::new() };
    if let Some(p) = potential(&q) {
        run.potentials.push(p);
    }
    loop {
        run.wl_calls += 1;
        let Some(b) = wl.learn(tc, residual, &q)? else { break };
        if run.t >= cap {
            let from = run.potentials.len().saturating_sub(16);
            return Err(Error::IterationCap { cap, trace: run.potentials[from..].to_vec() });
        }
        for (x, v) in q.iter_mut().enumerate() {
            *v = ma_update(*v, spec.sigma, tc.value(b, x));
        }
        run.t += 1;
        match run.steps.last_mut() {
            Some(last) if last.test == b => last.count += 1,
            _ => run.steps.push(StepRun { test: b, count: 1 }),
        }
        if let Some(p) = potential(&q) {
            run.potentials.push(p);
        }
    }
    run.q = q;
    Ok(run)
}

/// Replays MA runs on one coordinate value: `test(b)` is `b(x)`.
pub fn replay_steps(q: f64, sigma: f64, steps: &[StepRun], test: impl Fn(usize) -> f64) -> f64 {
    let mut v = q.clamp(-1.0, 1.0);
    for s in steps {
        let b = test(s.test);
        for _ in 0..s.count {
            v = ma_update(v, sigma, b);
        }
    }
    v
}

/// `max_{i, b} |E[(s_i(y) - p_i(x)) b(x)]|` with one class for every
/// coordinate, in the class's own units.
pub fn measure_multiaccuracy(p: &Table, data: &ExactData, tc: &TestClass) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..p.cols() {
        worst = worst.max(multiaccuracy_dim(p, data, tc, i)?);
    }
    Ok(worst)
}

/// `max_b |E[(s_i(y) - p_i(x)) b(x)]|` for one coordinate.
pub fn multiaccuracy_dim(p: &Table, data: &ExactData, tc: &TestClass, i: usize) -> Result<f64> {
    if p.rows() != tc.n() || data.n() != tc.n() {
        return Err(Error::ShapeMismatch { expected: tc.n(), got: p.rows() });
    }
    if i >= p.cols() || i >= data.d() {
        return Err(Error::IndexOutOfRange { index: i, m: p.cols() });
    }
    let resid: Vec<f64> = (0..p.rows()).map(|x| data.weights[x] * (data.cond.get(x, i) - p.get(x, i))).collect();
    Ok((0..tc.len())
        .map(|b| tc.values(b).iter().zip(&resid).map(|(bv, r)| bv * r).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

/// Per-coordinate multiaccuracy against `classes[i]`, in raw (unnormalized)
/// units: the normalized value times `κ_i`.
pub fn multiaccuracy_per_dim(p: &Table, data: &ExactData, classes: &[TestClass]) -> Result<Vec<f64>> {
    if classes.len() != p.cols() {
        return Err(Error::ShapeMismatch { expected: p.cols(), got: classes.len() });
    }
    classes.iter().enumerate().map(|(i, tc)| Ok(multiaccuracy_dim(p, data, tc, i)? * tc.kappa())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_class(n: usize) -> TestClass {
        TestClass::new(vec!["one".into()], vec![vec![1.0; n]]).unwrap()
    }

    #[test]
    fn zero_residual_returns_bottom() {
        let tc = constant_class(4);
        let w = [0.25; 4];
        let target = [0.3; 4];
        let spec = WeakLearnerSpec::new(0.3, 0.1).unwrap();
        let mut r = Residual::Exact { weights: &w, target: &target };
        assert_eq!(exhaustive_weak_learner(&tc, &spec, &mut r, &target).unwrap(), None);
    }

    #[test]
    fn constant_test_is_found() {
        let tc = constant_class(2);
        let w = [0.5, 0.5];
        let target = [1.2, 1.2];
        let spec = WeakLearnerSpec::new(0.3, 0.1).unwrap();
        let mut r = Residual::Exact { weights: &w, target: &target };
        assert_eq!(exhaustive_weak_learner(&tc, &spec, &mut r, &[0.0, 0.0]).unwrap(), Some(0));
        let degenerate = WeakLearnerSpec::new(0.2, 0.2).unwrap();
        assert!(matches!(exhaustive_weak_learner(&tc, &degenerate, &mut r, &[0.0, 0.0]), Err(Error::DegenerateMargin(_))));
    }

    #[test]
    fn ma_moves_mean_toward_target() {
        let tc = TestClass::new(vec!["+1".into(), "-1".into()], vec![vec![1.0; 3], vec![-1.0; 3]]).unwrap();
        let w = [1.0 / 3.0; 3];
        let target = [0.6; 3];
        let mut wl = ExhaustiveLearner::new(WeakLearnerSpec::new(0.1, 0.05).unwrap());
        let mut r = Residual::Exact { weights: &w, target: &target };
        let run = ma_loop(&[0.0; 3], &tc, &mut wl, 0.15, &mut r, Some(&target), Some(&w), None).unwrap();
        assert!(run.t > 0);
        assert_eq!(run.wl_calls, run.t + 1);
        let drop = run.potentials[0] - run.potentials[run.t];
        assert!(drop >= run.t as f64 * 0.05 * 0.05);
        assert!(run.potentials.windows(2).all(|p| p[1] <= p[0]));
        let data = ExactData::new(w.to_vec(), Table::new(3, 1, target.to_vec()).unwrap()).unwrap();
        let q = Table::new(3, 1, run.q.clone()).unwrap();
        assert!(measure_multiaccuracy(&q, &data, &tc).unwrap() <= 0.15);
        let replayed = replay_steps(0.0, run.sigma, &run.steps, |b| tc.value(b, 0));
        assert_eq!(replayed.to_bits(), run.q[0].to_bits());
    }

    #[test]
    fn exact_predictor_needs_no_updates() {
        let tc = constant_class(2);
        let w = [0.5, 0.5];
        let target = [0.1, -0.4];
        let mut wl = ExhaustiveLearner::new(WeakLearnerSpec::new(0.1, 0.05).unwrap());
        let mut r = Residual::Exact { weights: &w, target: &target };
        let run = ma_loop(&target, &tc, &mut wl, 0.1, &mut r, None, None, None).unwrap();
        assert_eq!((run.t, run.wl_calls), (0, 1));
        assert_eq!(run.q, target.to_vec());
    }

    #[test]
    fn offset_predictor_multiaccuracy() {
        let tc = constant_class(2);
        let data = ExactData::new(vec![0.5, 0.5], Table::new(2, 1, vec![0.1, 0.3]).unwrap()).unwrap();
        let p = Table::new(2, 1, vec![0.3, 0.5]).unwrap();
        assert!((measure_multiaccuracy(&p, &data, &tc).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(measure_multiaccuracy(&data.cond, &data, &tc).unwrap(), 0.0);
    }
}
