//! Experiment presets: build the family and tests, train, evaluate, check
//! the guarantees and write reports.

use std::path::Path;
use std::sync::Arc;

use omnistat_core::calibrate::{default_sample_size, exact_ece};
use omnistat_core::dist::{ExactData, Table};
use omnistat_core::losses::{Loss, AUDIT_POINTS};
use omnistat_core::multiacc::{compose_tests, multiaccuracy_per_dim, TestClass};
use omnistat_core::omni::{evaluate_omni, indistinguishability_check, learn_omni, DataAccess, IndistinguishabilityReport, OmniModel, RegretRow, TrainConfig};
use omnistat_core::stats::{unit_grid, verify_uniform_approx, ActionSpace, StatisticsFamily, UniformApproximation};

use crate::config::{ExperimentConfig, Mode};
use crate::families::{Family, FamilySpec, LossSpec};
use crate::formats::{create_dir, write_csv, write_log, write_model, write_text};
use crate::hypotheses::{standard_class, HypothesisClass};
use crate::svg::{Chart, Series};
use crate::synth::{grid_domain, SyntheticDistribution};
use crate::{Error, Result};

/// One loss with its approximation and the audited residual.
#[derive(Debug, Clone)]
pub struct LossEntry {
    pub spec: LossSpec,
    pub loss: Loss,
    pub ua: UniformApproximation,
    /// `verify_uniform_approx` residual on the audit grid, in `ℓ/scale` units.
    pub audited_delta: f64,
    pub audited_lambda: f64,
}

/// The certified `(d, λ, δ)` triple used for training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub d: usize,
    /// `max Σ_{i≥1} |r_i|` over losses and actions.
    pub lambda: f64,
    /// `max Σ_{i≥0} |r_i|`.
    pub lambda_full: f64,
    pub delta: f64,
}

/// Everything a training run needs.
#[derive(Debug)]
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub synth: SyntheticDistribution,
    pub family: Family,
    pub stats: Arc<dyn StatisticsFamily>,
    pub actions: ActionSpace,
    pub losses: Vec<LossEntry>,
    pub hypotheses: HypothesisClass,
    pub classes: Vec<TestClass>,
    pub data: ExactData,
    pub train: TrainConfig,
    pub certified: Certified,
}

fn audit_grid(family: &Family) -> Vec<f64> {
    match family {
        Family::Cvx(c) => c.audit_grid(),
        Family::Moments(_) => unit_grid(AUDIT_POINTS + 1),
    }
}

pub fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let synth = grid_domain(cfg.domain.side, cfg.domain.y_points, cfg.domain.seed)?;
    let family = cfg.family.build()?;
    let stats = family.statistics();
    let actions = cfg.actions.build()?;
    let grid = audit_grid(&family);
    let mut losses = Vec::with_capacity(cfg.losses.len());
    for spec in &cfg.losses {
        let (loss, ua) = family.approximation(spec, &actions)?;
        let (audited_delta, audited_lambda) = verify_uniform_approx(&ua, &loss, &*stats, &grid)?;
        if audited_delta > ua.delta + 1e-9 || audited_lambda > ua.lambda * (1.0 + 1e-12) {
            return Err(Error::Violation(format!(
                "{spec}: audited residual {audited_delta} / lambda {audited_lambda} exceed certified {} / {}",
                ua.delta, ua.lambda
            )));
        }
        losses.push(LossEntry { spec: spec.clone(), loss, ua, audited_delta, audited_lambda });
    }
    let hypotheses = standard_class(&synth.features, &actions, cfg.hypotheses)?;
    let d = stats.d();
    let parts: Vec<(&UniformApproximation, &[Vec<usize>])> = losses.iter().map(|l| (&l.ua, hypotheses.rules.as_slice())).collect();
    let classes = (1..=d).map(|i| compose_tests(i, &parts, &hypotheses.names)).collect::<omnistat_core::Result<Vec<_>>>()?;
    let data = synth.dist.exact(&*stats);
    let certified = Certified {
        d,
        lambda: losses.iter().map(|l| l.ua.lambda_tail).fold(0.0, f64::max),
        lambda_full: losses.iter().map(|l| l.ua.lambda).fold(0.0, f64::max),
        delta: losses.iter().map(|l| l.ua.delta).fold(0.0, f64::max),
    };
    let mut train = TrainConfig::new(cfg.epsilon, d, certified.lambda.max(f64::MIN_POSITIVE))?;
    train.ece = cfg.sampling.ece();
    train.sample_constant = cfg.sampling.wl_sample_constant;
    Ok(Setup { cfg: cfg.clone(), synth, family, stats, actions, losses, hypotheses, classes, data, train, certified })
}

/// `3(dα + λβ + δ)` with the configured `α`, `β`.
pub fn theorem_epsilon(s: &Setup) -> f64 {
    3.0 * (s.certified.d as f64 * s.train.alpha + s.certified.lambda * s.train.beta + s.certified.delta)
}

pub fn train(s: &Setup) -> Result<OmniModel> {
    let p0 = Table::zeros(s.data.n(), s.certified.d);
    let model = match s.cfg.mode {
        Mode::Exact => learn_omni(&*s.stats, &p0, &s.train, &s.classes, DataAccess::Exact(&s.data))?,
        Mode::Sampled => {
            let ece = &s.train.ece;
            if ece.n_override.is_none() {
                let needed = default_sample_size(s.certified.d, s.train.delta_bin, s.train.beta / 4.0, ece.c_est).ceil();
                if !(needed <= ece.sample_budget) {
                    return Err(omnistat_core::Error::SampleBudget { needed, budget: ece.sample_budget }.into());
                }
            }
            let mut source = s.synth.dist.sampler(&*s.stats, s.cfg.sampling.seed);
            learn_omni(&*s.stats, &p0, &s.train, &s.classes, DataAccess::Sampled { source: &mut source, oracle: Some(&s.data) })?
        }
    };
    Ok(model)
}

/// A recalibration event and the progress inequality it should satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct RecalEvent {
    pub index: usize,
    /// `ℓ2(p*, p_t)² - ℓ2(p*, q_t)²`.
    pub drop: f64,
    /// `ECE(p_t^δ)² - 4δ`.
    pub required: f64,
}

/// Per-MA-run potential check.
#[derive(Debug, Clone, PartialEq)]
pub struct MaCheck {
    pub index: usize,
    pub dim: usize,
    pub updates: usize,
    pub drop: f64,
    /// `T σ²`.
    pub required: f64,
    pub monotone: bool,
}

/// Exact evaluation of a trained model.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub regrets: Vec<RegretRow>,
    pub checks: Vec<IndistinguishabilityReport>,
    pub exact_ece: f64,
    /// Raw multiaccuracy per coordinate.
    pub ma: Vec<f64>,
    pub recal: Vec<RecalEvent>,
    pub ma_runs: Vec<MaCheck>,
}

impl Evaluation {
    pub fn max_ma(&self) -> f64 {
        self.ma.iter().copied().fold(0.0, f64::max)
    }
}

pub fn evaluate(s: &Setup, model: &OmniModel) -> Result<Evaluation> {
    let mut regrets = Vec::with_capacity(s.losses.len());
    let mut checks = Vec::with_capacity(s.losses.len());
    for l in &s.losses {
        regrets.push(evaluate_omni(&model.q, &l.loss, &l.ua, &s.hypotheses.rules, &s.synth.dist)?);
        checks.push(indistinguishability_check(&model.q, &l.ua, &*s.stats, &s.hypotheses.rules, &s.synth.dist)?);
    }
    let recal = model
        .log
        .iter()
        .filter(|l| l.recalibrated)
        .filter_map(|l| {
            let (after, end, ece) = (l.potential_after_ma?, l.potential_end?, l.exact_ece_discretized?);
            Some(RecalEvent { index: l.index, drop: after - end, required: ece * ece - 4.0 * s.train.delta_bin })
        })
        .collect();
    let ma_runs = model
        .log
        .iter()
        .flat_map(|l| {
            l.ma.iter().filter_map(move |m| {
                let (a, b) = (m.potential_start?, m.potential_end?);
                Some(MaCheck {
                    index: l.index,
                    dim: m.dim,
                    updates: m.updates,
                    drop: a - b,
                    required: m.updates as f64 * m.sigma * m.sigma,
                    monotone: m.monotone.unwrap_or(true),
                })
            })
        })
        .collect();
    Ok(Evaluation {
        regrets,
        checks,
        exact_ece: exact_ece(&model.q, &s.data)?,
        ma: multiaccuracy_per_dim(&model.q, &s.data, &s.classes)?,
        recal,
        ma_runs,
    })
}

/// Slack for comparisons of exactly computed quantities.
pub const TOL: f64 = 1e-9;

/// Every guarantee that fails for this run, as a readable line.
pub fn violations(s: &Setup, model: &OmniModel, ev: &Evaluation) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(bound) = model.loop_bound() {
        if model.loops() as f64 > bound {
            out.push(format!("loop count {} > bound {bound}", model.loops()));
        }
    }
    let wl_bound = model.wl_call_bound();
    if model.wl_calls() as f64 > wl_bound {
        out.push(format!("weak-learner calls {} > bound {wl_bound}", model.wl_calls()));
    }
    if ev.exact_ece > s.train.beta + TOL {
        out.push(format!("exact ECE {} > beta {}", ev.exact_ece, s.train.beta));
    }
    if ev.max_ma() > s.train.alpha + TOL {
        out.push(format!("exact multiaccuracy {} > alpha {}", ev.max_ma(), s.train.alpha));
    }
    for (r, c) in ev.regrets.iter().zip(&ev.checks) {
        if r.regret > c.regret_bound() + TOL {
            out.push(format!("{}: regret {} > 3(d alpha + lambda beta + delta) = {}", r.loss_id, r.regret, c.regret_bound()));
        }
        if c.identity_gap > TOL {
            out.push(format!("{}: identity gap {}", c.loss_id, c.identity_gap));
        }
        if c.simulation_gap > c.simulation_bound() + TOL {
            out.push(format!("{}: simulation gap {} > {}", c.loss_id, c.simulation_gap, c.simulation_bound()));
        }
        if c.cma_gap > c.cma_bound() + TOL {
            out.push(format!("{}: cma gap {} > {}", c.loss_id, c.cma_gap, c.cma_bound()));
        }
    }
    for e in &ev.recal {
        if e.drop < e.required - TOL {
            out.push(format!("loop {}: recalibration drop {} < {}", e.index, e.drop, e.required));
        }
    }
    for m in &ev.ma_runs {
        if m.drop < m.required - TOL || !m.monotone {
            out.push(format!("loop {} dim {}: MA drop {} < T sigma^2 = {} (monotone {})", m.index, m.dim, m.drop, m.required, m.monotone));
        }
    }
    out
}

/// A finished run.
#[derive(Debug)]
pub struct Run {
    pub setup: Setup,
    pub model: OmniModel,
    pub eval: Evaluation,
    pub violations: Vec<String>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Run> {
    let setup = setup(cfg)?;
    let model = train(&setup)?;
    let eval = evaluate(&setup, &model)?;
    let violations = violations(&setup, &model, &eval);
    Ok(Run { setup, model, eval, violations })
}

fn family_label(spec: &FamilySpec) -> String {
    match spec {
        FamilySpec::Moments { degree } => format!("moments({degree})"),
        FamilySpec::Cvx { delta, seed } => format!("cvx(delta={delta}, seed={seed})"),
    }
}

/// Writes the report directory: config echo, summary, regret table, training
/// log, MA runs, the model and the plots.
pub fn write_report(dir: &Path, r: &Run) -> Result<()> {
    create_dir(dir)?;
    let s = &r.setup;
    write_text(&dir.join("config.toml"), &s.cfg.to_toml()?)?;
    let summary = [
        ("preset", s.cfg.preset.name().to_string()),
        ("family", family_label(&s.cfg.family)),
        ("n", s.data.n().to_string()),
        ("hypotheses", s.hypotheses.len().to_string()),
        ("epsilon", s.cfg.epsilon.to_string()),
        ("certified_d", s.certified.d.to_string()),
        ("certified_lambda", s.certified.lambda.to_string()),
        ("certified_lambda_full", s.certified.lambda_full.to_string()),
        ("certified_delta", s.certified.delta.to_string()),
        ("alpha", s.train.alpha.to_string()),
        ("beta", s.train.beta.to_string()),
        ("delta_bin", s.train.delta_bin.to_string()),
        ("rho", s.train.rho.to_string()),
        ("sigma", s.train.sigma.to_string()),
        ("epsilon_theorem", theorem_epsilon(s).to_string()),
        ("loops", r.model.loops().to_string()),
        ("loop_bound", r.model.loop_bound().map(|b| b.to_string()).unwrap_or_default()),
        ("wl_calls", r.model.wl_calls().to_string()),
        ("wl_call_bound", r.model.wl_call_bound().to_string()),
        ("exact_ece", r.eval.exact_ece.to_string()),
        ("exact_ma", r.eval.max_ma().to_string()),
        ("violations", r.violations.len().to_string()),
    ];
    write_csv(&dir.join("summary.csv"), &["key", "value"], summary.iter().map(|(k, v)| [k.to_string(), v.clone()]))?;
    write_csv(
        &dir.join("regret.csv"),
        &[
            "loss", "omni_loss", "best_loss", "best_hypothesis", "regret", "regret_bound", "epsilon", "exceeds_epsilon", "identity_gap", "simulation_gap",
            "simulation_bound", "cma_gap", "cma_bound", "alpha_exact", "beta_exact", "lambda", "delta_approx", "scale",
        ],
        r.eval.regrets.iter().zip(&r.eval.checks).map(|(g, c)| {
            [
                g.loss_id.clone(),
                g.omni_loss.to_string(),
                g.best_loss.to_string(),
                s.hypotheses.names[g.best_hypothesis].clone(),
                g.regret.to_string(),
                c.regret_bound().to_string(),
                s.cfg.epsilon.to_string(),
                (g.regret > s.cfg.epsilon).to_string(),
                c.identity_gap.to_string(),
                c.simulation_gap.to_string(),
                c.simulation_bound().to_string(),
                c.cma_gap.to_string(),
                c.cma_bound().to_string(),
                c.alpha_exact.to_string(),
                c.beta_exact.to_string(),
                c.lambda.to_string(),
                c.delta_approx.to_string(),
                c.scale.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join("losses.csv"),
        &["loss", "lambda", "lambda_tail", "delta", "audited_delta", "audited_lambda", "scale"],
        s.losses.iter().map(|l| {
            [
                l.spec.to_string(),
                l.ua.lambda.to_string(),
                l.ua.lambda_tail.to_string(),
                l.ua.delta.to_string(),
                l.audited_delta.to_string(),
                l.audited_lambda.to_string(),
                l.ua.scale.to_string(),
            ]
        }),
    )?;
    write_log(&dir.join("training_log.csv"), &r.model)?;
    write_csv(
        &dir.join("ma_runs.csv"),
        &["loop", "dim", "updates", "potential_drop", "t_sigma_sq", "monotone"],
        r.eval.ma_runs.iter().map(|m| [m.index.to_string(), (m.dim + 1).to_string(), m.updates.to_string(), m.drop.to_string(), m.required.to_string(), m.monotone.to_string()]),
    )?;
    write_csv(
        &dir.join("recalibration.csv"),
        &["loop", "potential_drop", "ece_sq_minus_4delta"],
        r.eval.recal.iter().map(|e| [e.index.to_string(), e.drop.to_string(), e.required.to_string()]),
    )?;
    write_csv(&dir.join("violations.csv"), &["violation"], r.violations.iter().map(|v| [v.clone()]))?;
    write_model(&dir.join("model"), &r.model, &s.cfg.family, &s.cfg.actions)?;

    let mut regret_chart = Chart::new("Regret per loss", "loss index", "regret");
    regret_chart.add(Series::points("regret", r.eval.regrets.iter().enumerate().map(|(i, g)| (i as f64, g.regret)).collect()));
    regret_chart.add(Series::points("3(d alpha + lambda beta + delta)", r.eval.checks.iter().enumerate().map(|(i, c)| (i as f64, c.regret_bound())).collect()));
    regret_chart.add(Series::line("epsilon", vec![(0.0, s.cfg.epsilon), ((s.losses.len().max(2) - 1) as f64, s.cfg.epsilon)]));
    write_text(&dir.join("regret.svg"), &regret_chart.render())?;

    let mut potential = Chart::new("Potential trace", "loop", "l2(p*, q)^2");
    let mut trace = Vec::new();
    if let Some(p0) = r.model.initial_potential {
        trace.push((0.0, p0));
    }
    trace.extend(r.model.log.iter().filter_map(|l| Some((l.index as f64, l.potential_end?))));
    potential.add(Series::line("end of loop", trace));
    write_text(&dir.join("potential.svg"), &potential.render())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;

    #[test]
    fn glm_setup_composes_signed_tests() {
        let s = setup(&ExperimentConfig::preset(Preset::Glm)).unwrap();
        assert_eq!(s.certified.d, 1);
        assert_eq!(s.classes[0].len(), 2 * 16 * 3);
        assert!(s.certified.delta == 0.0);
        assert!(theorem_epsilon(&s) <= s.cfg.epsilon + 1e-12);
    }
}
