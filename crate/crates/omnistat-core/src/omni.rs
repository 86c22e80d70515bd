//! The learnOmni loop, the trained model and the omniprediction checks.

use alloc::string::String;
use alloc::vec::Vec;

use crate::calibrate::{discretize, discretize_predictor, est_ece, exact_ece, recal, simulate_dtilde, EceConfig, Recalibration};
use crate::dist::{ExactData, Exhaustive, FiniteDistribution, SampleSource, Table};
use crate::losses::Loss;
use crate::multiacc::{default_cap, ma_loop, replay_steps, ExhaustiveLearner, Residual, StepRun, TestClass, WeakLearnerSpec};
use crate::stats::{choose_action, eval_lhat, StatisticsFamily, UniformApproximation};
use crate::{Error, Result};

/// Parameters of one training run. `lambda` is the coefficient mass
/// `Σ_{i≥1} |r_i|` the calibration target is derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epsilon: f64,
    pub d: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_bin: f64,
    /// Raw-unit weak-learner thresholds; per-dimension values never exceed these.
    pub rho: f64,
    pub sigma: f64,
    pub sample_constant: f64,
    pub ece: EceConfig,
    pub max_loops: usize,
    /// MA iteration cap per run; `None` means `⌈16/σ²⌉`.
    pub ma_cap: Option<usize>,
}

impl TrainConfig {
    /// `α = ε/6d`, `β = ε/6λ`, `δ = β²/32`, `ρ = min(ε/12λ, 2(α - δ)/3)`, `σ = ρ/2`.
    pub fn new(epsilon: f64, d: usize, lambda: f64) -> Result<Self> {
        if !(epsilon > 0.0) || d == 0 || !(lambda > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("epsilon = {epsilon}, d = {d}, lambda = {lambda}")));
        }
        let alpha = epsilon / (6.0 * d as f64);
        let beta = epsilon / (6.0 * lambda);
        let delta_bin = beta * beta / 32.0;
        let rho = (epsilon / (12.0 * lambda)).min(2.0 * (alpha - delta_bin) / 3.0);
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter("alpha <= delta_bin".into()));
        }
        Ok(TrainConfig {
            epsilon,
            d,
            lambda,
            alpha,
            beta,
            delta_bin,
            rho,
            sigma: rho / 2.0,
            sample_constant: 2.0,
            ece: EceConfig::default(),
            max_loops: 10_000,
            ma_cap: None,
        })
    }

    /// Normalized `(ρ_i, σ_i, α_i)` for a class with factor `κ`: thresholds
    /// are capped so that `ρ_i + σ_i ≤ α - κδ` in raw units.
    pub fn dimension_spec(&self, kappa: f64) -> Result<(WeakLearnerSpec, f64)> {
        let room = self.alpha - kappa * self.delta_bin;
        if !(room > 0.0) {
            return Err(Error::Precondition(alloc::format!("alpha = {} leaves no room for kappa = {kappa}", self.alpha)));
        }
        let rho = self.rho.min(2.0 * room / 3.0);
        let sigma = self.sigma.min(rho / 2.0);
        let mut spec = WeakLearnerSpec::new(rho, sigma)?.scaled(kappa);
        spec.sample_constant = self.sample_constant;
        Ok((spec, room / kappa))
    }
}

/// Data access for training.
pub enum DataAccess<'a> {
    /// Exact expectations on a finite domain.
    Exact(&'a ExactData),
    /// Sample access; `oracle` adds exact diagnostics when available.
    Sampled { source: &'a mut dyn SampleSource, oracle: Option<&'a ExactData> },
}

impl core::fmt::Debug for DataAccess<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DataAccess::Exact(e) => write!(f, "DataAccess::Exact({} points)", e.n()),
            DataAccess::Sampled { oracle, .. } => write!(f, "DataAccess::Sampled(oracle: {})", oracle.is_some()),
        }
    }
}

/// One replayable transformation of the predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum ProgramStep {
    Ma { dim: usize, sigma: f64, steps: Vec<StepRun> },
    Recal(Recalibration),
    Discretize { delta: f64 },
}

/// The sequence of updates that maps `p0(x)` to the model's prediction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub steps: Vec<ProgramStep>,
}

impl Program {
    /// Applies the program to one starting prediction; `test(dim, b)` is the
    /// normalized test `b` of class `dim` at the point in question.
    pub fn replay(&self, p0: &[f64], test: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut v: Vec<f64> = p0.to_vec();
        for step in &self.steps {
            match step {
                ProgramStep::Ma { dim, sigma, steps } => {
                    v[*dim] = replay_steps(v[*dim], *sigma, steps, |b| test(*dim, b));
                }
                ProgramStep::Recal(rc) => v = rc.apply(&v),
                ProgramStep::Discretize { delta } => v = discretize(&v, *delta),
            }
        }
        v
    }
}

/// Summary of one MA run inside a training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MaSummary {
    pub dim: usize,
    pub updates: usize,
    pub wl_calls: usize,
    pub sigma: f64,
    pub potential_start: Option<f64>,
    pub potential_end: Option<f64>,
    /// Whether every update lowered the exact potential (or kept it equal).
    pub monotone: Option<bool>,
}

/// One iteration of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopRecord {
    pub index: usize,
    pub ma: Vec<MaSummary>,
    pub est_ece: f64,
    pub recalibrated: bool,
    /// Exact `ℓ2(p*, ·)²` of `q_{t-1}`, `p_t` and `q_t`.
    pub potential_start: Option<f64>,
    pub potential_after_ma: Option<f64>,
    pub potential_end: Option<f64>,
    /// Exact `ECE_S(p_t^δ)`.
    pub exact_ece_discretized: Option<f64>,
}

impl LoopRecord {
    pub fn wl_calls(&self) -> usize {
        self.ma.iter().map(|m| m.wl_calls).sum()
    }

    pub fn updates(&self) -> usize {
        self.ma.iter().map(|m| m.updates).sum()
    }
}

/// A trained statistic predictor on a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OmniModel {
    pub family: String,
    pub d: usize,
    pub q: Table,
    pub program: Program,
    pub log: Vec<LoopRecord>,
    pub config: TrainConfig,
    /// The per-dimension `σ_i` (normalized) the MA runs used.
    pub sigmas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub initial_potential: Option<f64>,
}

impl OmniModel {
    pub fn loops(&self) -> usize {
        self.log.len()
    }

    pub fn wl_calls(&self) -> usize {
        self.log.iter().map(|l| l.wl_calls()).sum()
    }

    pub fn prediction(&self, x: usize) -> &[f64] {
        self.q.row(x)
    }

    /// `1 + 8 ℓ2(p*, p0)²/β²`.
    pub fn loop_bound(&self) -> Option<f64> {
        self.initial_potential.map(|p| 1.0 + 8.0 * p / (self.config.beta * self.config.beta))
    }

    /// `Σ_i 1/σ_i² + T`.
    pub fn wl_call_bound(&self) -> f64 {
        self.sigmas.iter().map(|s| 1.0 / (s * s)).sum::<f64>() + self.loops() as f64
    }
}

/// Alternates per-dimension MA and recalibration until the estimated ECE
/// of `p_t` is at most `3β/4`, then returns `p_t^δ`.
pub fn learn_omni(family: &dyn StatisticsFamily, p0: &Table, cfg: &TrainConfig, classes: &[TestClass], access: DataAccess<'_>) -> Result<OmniModel> {
    let d = family.d();
    if d != cfg.d || p0.cols() != d {
        return Err(Error::FamilyMismatch(alloc::format!("family has d = {d}, config {}, p0 {}", cfg.d, p0.cols())));
    }
    if classes.len() != d {
        return Err(Error::ShapeMismatch { expected: d, got: classes.len() });
    }
    let n = p0.rows();
    if classes.iter().any(|c| c.n() != n) {
        return Err(Error::ShapeMismatch { expected: n, got: classes.iter().map(|c| c.n()).find(|&m| m != n).unwrap_or(0) });
    }
    let mut specs = Vec::with_capacity(d);
    for tc in classes {
        specs.push(cfg.dimension_spec(tc.kappa())?);
    }
    let (mut sampled, oracle): (Option<&mut dyn SampleSource>, Option<&ExactData>) = match access {
        DataAccess::Exact(e) => (None, Some(e)),
        DataAccess::Sampled { source, oracle } => (Some(source), oracle),
    };
    if let Some(o) = oracle {
        if o.n() != n || o.d() != d {
            return Err(Error::ShapeMismatch { expected: n * d, got: o.n() * o.d() });
        }
    }
    let targets: Option<Vec<Vec<f64>>> = oracle.map(|o| (0..d).map(|i| o.cond.column(i)).collect());

    let mut q = p0.clone();
    for x in 0..n {
        for v in q.row_mut(x) {
            *v = v.clamp(-1.0, 1.0);
        }
    }
    let initial_potential = oracle.map(|o| o.potential(&q));
    let mut program = Program::default();
    let mut log = Vec::new();
    loop {
        let index = log.len() + 1;
        if index > cfg.max_loops {
            let trace = log.iter().filter_map(|l: &LoopRecord| l.potential_end).collect();
            return Err(Error::IterationCap { cap: cfg.max_loops, trace });
        }
        let potential_start = oracle.map(|o| o.potential(&q));
        let mut p = q.clone();
        let mut ma = Vec::with_capacity(d);
        for (i, tc) in classes.iter().enumerate() {
            let (spec, alpha_i) = specs[i];
            let mut wl = ExhaustiveLearner::new(spec);
            let column = p.column(i);
            let run = {
                let mut residual = match (&mut sampled, oracle) {
                    (Some(src), _) => Residual::Sampled { source: &mut **src, dim: i },
                    (None, Some(o)) => Residual::Exact { weights: &o.weights, target: &targets.as_ref().unwrap()[i] },
                    (None, None) => unreachable!(),
                };
                let tgt = targets.as_ref().map(|t| t[i].as_slice());
                let w = oracle.map(|o| o.weights.as_slice());
                ma_loop(&column, tc, &mut wl, alpha_i, &mut residual, tgt, w, Some(cfg.ma_cap.unwrap_or_else(|| default_cap(spec.sigma))))?
            };
            p.set_column(i, &run.q);
            ma.push(MaSummary {
                dim: i,
                updates: run.t,
                wl_calls: run.wl_calls,
                sigma: run.sigma,
                potential_start: run.potentials.first().copied(),
                potential_end: run.potentials.last().copied(),
                monotone: oracle.map(|_| run.potentials.windows(2).all(|w| w[1] <= w[0] + 1e-15)),
            });
            if run.t > 0 {
                program.steps.push(ProgramStep::Ma { dim: i, sigma: run.sigma, steps: run.steps });
            }
        }
        let potential_after_ma = oracle.map(|o| o.potential(&p));
        let exact_ece_discretized = match oracle {
            Some(o) => Some(exact_ece(&discretize_predictor(&p, cfg.delta_bin)?, o)?),
            None => None,
        };
        let est = {
            let mut exhaustive;
            let source: &mut dyn SampleSource = match (&mut sampled, oracle) {
                (Some(src), _) => &mut **src,
                (None, Some(o)) => {
                    exhaustive = Exhaustive(o);
                    &mut exhaustive
                }
                (None, None) => unreachable!(),
            };
            est_ece(&p, cfg.delta_bin, cfg.beta / 4.0, source, &cfg.ece)?
        };
        let recalibrated = est > 3.0 * cfg.beta / 4.0;
        if recalibrated {
            let rc = {
                let mut exhaustive;
                let source: &mut dyn SampleSource = match (&mut sampled, oracle) {
                    (Some(src), _) => &mut **src,
                    (None, Some(o)) => {
                        exhaustive = Exhaustive(o);
                        &mut exhaustive
                    }
                    (None, None) => unreachable!(),
                };
                recal(&p, cfg.delta_bin, source, &cfg.ece)?
            };
            q = rc.apply_table(&p);
            program.steps.push(ProgramStep::Recal(rc));
        } else {
            q = discretize_predictor(&p, cfg.delta_bin)?;
            program.steps.push(ProgramStep::Discretize { delta: cfg.delta_bin });
        }
        log.push(LoopRecord {
            index,
            ma,
            est_ece: est,
            recalibrated,
            potential_start,
            potential_after_ma,
            potential_end: oracle.map(|o| o.potential(&q)),
            exact_ece_discretized,
        });
        if !recalibrated {
            break;
        }
    }
    Ok(OmniModel {
        family: family.name().into(),
        d,
        q,
        program,
        log,
        config: cfg.clone(),
        sigmas: specs.iter().map(|(s, _)| s.sigma).collect(),
        kappas: classes.iter().map(|c| c.kappa()).collect(),
        initial_potential,
    })
}

/// `k_ℓ̂(q(x))`.
pub fn omnipredict(model: &OmniModel, ua: &UniformApproximation, x: usize) -> Result<usize> {
    if ua.family != model.family || ua.d != model.d {
        return Err(Error::FamilyMismatch(alloc::format!("model over {}, approximation over {}", model.family, ua.family)));
    }
    if x >= model.q.rows() {
        return Err(Error::IndexOutOfRange { index: x, m: model.q.rows() });
    }
    Ok(choose_action(ua, model.q.row(x)))
}

/// `E[ℓ(y, t_a) | x]` for every point and action.
pub fn conditional_losses(loss: &Loss, ua: &UniformApproximation, dist: &FiniteDistribution) -> Vec<Vec<f64>> {
    (0..dist.n())
        .map(|x| ua.actions.iter().map(|t| dist.cond_expect(x, |y| loss.eval(y, t))).collect())
        .collect()
}

/// `E[ℓ(y, t_{a(x)})]` for an action rule.
pub fn expected_loss_of(rule: &[usize], cond: &[Vec<f64>], weights: &[f64]) -> f64 {
    rule.iter().enumerate().map(|(x, &a)| weights[x] * cond[x][a]).sum()
}

/// Regret of the omnipredictor against the best hypothesis for one loss.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow {
    pub loss_id: String,
    pub omni_loss: f64,
    pub best_loss: f64,
    pub best_hypothesis: usize,
    pub regret: f64,
}

/// Exact regret of `k_ℓ̂ ∘ q` against `min_c E[ℓ(y, c(x))]`; hypotheses are
/// action indices into `ua`'s action space.
pub fn evaluate_omni(q: &Table, loss: &Loss, ua: &UniformApproximation, hypotheses: &[Vec<usize>], dist: &FiniteDistribution) -> Result<RegretRow> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidParameter("empty hypothesis class".into()));
    }
    if q.rows() != dist.n() {
        return Err(Error::ShapeMismatch { expected: dist.n(), got: q.rows() });
    }
    let cond = conditional_losses(loss, ua, dist);
    let rule: Vec<usize> = (0..q.rows()).map(|x| choose_action(ua, q.row(x))).collect();
    let omni_loss = expected_loss_of(&rule, &cond, dist.weights());
    let mut best_loss = f64::INFINITY;
    let mut best_hypothesis = 0;
    for (h, c) in hypotheses.iter().enumerate() {
        if c.len() != dist.n() {
            return Err(Error::ShapeMismatch { expected: dist.n(), got: c.len() });
        }
        if let Some(&a) = c.iter().find(|&&a| a >= ua.actions.len()) {
            return Err(Error::UnknownAction(a));
        }
        let v = expected_loss_of(c, &cond, dist.weights());
        if v < best_loss {
            best_loss = v;
            best_hypothesis = h;
        }
    }
    Ok(RegretRow { loss_id: loss.id().into(), omni_loss, best_loss, best_hypothesis, regret: omni_loss - best_loss })
}

/// Exact checks of the three indistinguishability statements for one loss.
#[derive(Debug, Clone, PartialEq)]
pub struct IndistinguishabilityReport {
    pub loss_id: String,
    /// `|E_{D*}[ℓ̂(s(y*), k(q))] - E_{D̃}[ℓ̂(s(ỹ), k(q))]|`.
    pub identity_gap: f64,
    /// `max_b |E_{D̃}[ℓ̂(s(ỹ), b)] - E[ℓ̂(q, b)]|` over `b ∈ C ∪ {k ∘ q}`.
    pub simulation_gap: f64,
    /// `max_c |E_{D̃}[ℓ̂(s(ỹ), c)] - E_{D*}[ℓ̂(s(y*), c)]|`.
    pub cma_gap: f64,
    pub alpha_exact: f64,
    pub beta_exact: f64,
    pub lambda: f64,
    pub d: usize,
    pub delta_approx: f64,
    pub scale: f64,
}

impl IndistinguishabilityReport {
    pub fn simulation_bound(&self) -> f64 {
        self.lambda * self.beta_exact
    }

    pub fn cma_bound(&self) -> f64 {
        self.d as f64 * self.alpha_exact + self.lambda * self.beta_exact
    }

    /// `3(dα + λβ + δ)` in the loss's own units.
    pub fn regret_bound(&self) -> f64 {
        3.0 * (self.d as f64 * self.alpha_exact + self.lambda * self.beta_exact + self.delta_approx) * self.scale
    }
}

fn lhat_mean(ua: &UniformApproximation, stats: &Table, rule: &[usize], weights: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (x, &a) in rule.iter().enumerate() {
        acc += weights[x] * eval_lhat(ua, stats.row(x), a)?;
    }
    Ok(acc)
}

/// `max_{i ≥ 1, c} |E[r_i(c(x)) (s*_i(x) - q_i(x))]|`.
pub fn exact_alpha(q: &Table, ua: &UniformApproximation, hypotheses: &[Vec<usize>], data: &ExactData) -> Result<f64> {
    let mut worst = 0.0f64;
    for c in hypotheses {
        for i in 1..=ua.d {
            let mut acc = 0.0;
            for (x, &a) in c.iter().enumerate() {
                acc += data.weights[x] * ua.r(a)?[i] * (data.cond.get(x, i - 1) - q.get(x, i - 1));
            }
            worst = worst.max(acc.abs());
        }
    }
    Ok(worst)
}

pub fn indistinguishability_check(
    q: &Table,
    ua: &UniformApproximation,
    family: &dyn StatisticsFamily,
    hypotheses: &[Vec<usize>],
    dist: &FiniteDistribution,
) -> Result<IndistinguishabilityReport> {
    if family.d() != ua.d || q.cols() != ua.d {
        return Err(Error::FamilyMismatch(alloc::format!("{} vs {}", family.name(), ua.family)));
    }
    let data = dist.exact(family);
    let tilde = simulate_dtilde(q, dist)?.exact(family);
    let w = dist.weights();
    let k: Vec<usize> = (0..q.rows()).map(|x| choose_action(ua, q.row(x))).collect();
    let identity_gap = (lhat_mean(ua, &data.cond, &k, w)? - lhat_mean(ua, &tilde.cond, &k, w)?).abs();
    let mut simulation_gap = 0.0f64;
    let mut cma_gap = 0.0f64;
    for (idx, b) in hypotheses.iter().chain(core::iter::once(&k)).enumerate() {
        let on_tilde = lhat_mean(ua, &tilde.cond, b, w)?;
        simulation_gap = simulation_gap.max((on_tilde - lhat_mean(ua, q, b, w)?).abs());
        if idx < hypotheses.len() {
            cma_gap = cma_gap.max((on_tilde - lhat_mean(ua, &data.cond, b, w)?).abs());
        }
    }
    Ok(IndistinguishabilityReport {
        loss_id: ua.loss_id.clone(),
        identity_gap,
        simulation_gap,
        cma_gap,
        alpha_exact: exact_alpha(q, ua, hypotheses, &data)?,
        beta_exact: exact_ece(q, &data)?,
        lambda: ua.lambda_tail,
        d: ua.d,
        delta_approx: ua.delta,
        scale: ua.scale,
    })
}

/// `|E[(s - p)b] - E[(s - p^δ)b]| ≤ δ` for tests bounded by 1,
/// returned as the largest per-test change in correlation.
pub fn discretization_shift(p: &Table, delta: f64, data: &ExactData, tc: &TestClass, dim: usize) -> Result<f64> {
    let pd = discretize_predictor(p, delta)?;
    let mut worst = 0.0f64;
    for b in 0..tc.len() {
        let mut acc = 0.0;
        for x in 0..p.rows() {
            acc += data.weights[x] * tc.value(b, x) * (p.get(x, dim) - pd.get(x, dim));
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::losses::lp_monomial_family;
    use crate::stats::{ActionSpace, MomentFamily};

    fn tiny() -> (FiniteDistribution, MomentFamily) {
        let dist = FiniteDistribution::new(
            vec![1.0; 4],
            vec![vec![(0.0, 1.0), (1.0, 1.0)], vec![(0.2, 1.0)], vec![(0.9, 1.0)], vec![(0.4, 1.0), (0.6, 1.0)]],
        )
        .unwrap();
        (dist, MomentFamily::new(1))
    }

    #[test]
    fn exact_start_stops_immediately() {
        let (dist, fam) = tiny();
        let data = dist.exact(&fam);
        let tc = TestClass::new(vec!["+1".into(), "-1".into()], vec![vec![1.0; 4], vec![-1.0; 4]]).unwrap();
        let cfg = TrainConfig::new(0.3, 1, 1.0).unwrap();
        let model = learn_omni(&fam, &data.cond, &cfg, &[tc], DataAccess::Exact(&data)).unwrap();
        assert_eq!(model.loops(), 1);
        assert_eq!(model.log[0].updates(), 0);
    }

    #[test]
    fn trained_model_is_calibrated_and_replays() {
        let (dist, fam) = tiny();
        let data = dist.exact(&fam);
        let values: Vec<Vec<f64>> = vec![vec![1.0; 4], vec![1.0, 1.0, -1.0, -1.0]];
        let mut raw = values.clone();
        raw.extend(values.iter().map(|b| b.iter().map(|v| -v).collect::<Vec<_>>()));
        let names = (0..4).map(|i| alloc::format!("b{i}")).collect();
        let tc = TestClass::new(names, raw).unwrap();
        let cfg = TrainConfig::new(0.3, 1, 1.0).unwrap();
        let model = learn_omni(&fam, &Table::zeros(4, 1), &cfg, &[tc.clone()], DataAccess::Exact(&data)).unwrap();
        assert!(exact_ece(&model.q, &data).unwrap() <= cfg.beta);
        assert!(model.loops() as f64 <= model.loop_bound().unwrap());
        for x in 0..4 {
            let v = model.program.replay(&[0.0], |_, b| tc.value(b, x));
            assert_eq!(v, model.q.row(x).to_vec());
        }
    }

    #[test]
    fn omnipredict_rejects_other_families() {
        let (dist, fam) = tiny();
        let data = dist.exact(&fam);
        let tc = TestClass::new(vec!["+1".into()], vec![vec![1.0; 4]]).unwrap();
        let cfg = TrainConfig::new(0.3, 1, 1.0).unwrap();
        let model = learn_omni(&fam, &data.cond, &cfg, &[tc], DataAccess::Exact(&data)).unwrap();
        let actions = ActionSpace::scalar_grid(0.0, 1.0, 11).unwrap();
        let ua = lp_monomial_family(2, &actions).unwrap();
        assert!(matches!(omnipredict(&model, &ua, 0), Err(Error::FamilyMismatch(_))));
        let single = ActionSpace::new(vec![vec![0.5]]).unwrap();
        let ua1 = crate::stats::boolean_approximation(&crate::losses::lp_loss(2).unwrap(), &single).unwrap();
        assert_eq!(omnipredict(&model, &ua1, 2).unwrap(), 0);
    }

    #[test]
    fn identity_gap_vanishes() {
        let (dist, _) = tiny();
        let fam = MomentFamily::new(2);
        let actions = ActionSpace::scalar_grid(0.0, 1.0, 11).unwrap();
        let ua = lp_monomial_family(2, &actions).unwrap();
        let q = Table::new(4, 2, vec![0.5, 0.3, 0.5, 0.3, 0.7, 0.5, 0.1, 0.0]).unwrap();
        let hyps = vec![vec![0; 4], vec![3, 3, 9, 5]];
        let rep = indistinguishability_check(&q, &ua, &fam, &hyps, &dist).unwrap();
        assert!(rep.identity_gap <= 1e-12);
        assert!(rep.simulation_gap <= rep.simulation_bound() + 1e-12);
        assert!(rep.cma_gap <= rep.cma_bound() + 1e-12);
    }
}
