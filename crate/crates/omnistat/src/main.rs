use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use omnistat::config::{ExperimentConfig, Preset};
use omnistat::experiment::{run, setup, write_report};
use omnistat::families::LossSpec;
use omnistat::formats::{join, read_basis, read_certificates, read_csv, read_model, parse_usize, write_basis, write_certificates, ModelDir};
use omnistat::sweep::{sweep_basis, write_sweep};
use omnistat::{Error, Result};
use omnistat_core::calibrate::BinStats;
use omnistat_core::cvxbasis::{approximate_relu, build_cvx_basis};
use omnistat_core::dist::{Exhaustive, SampleSource};
use omnistat_core::losses::chebyshev_monomial;
use omnistat_core::omni::{evaluate_omni, indistinguishability_check};
use omnistat_core::stats::choose_action;

/// Convex-function bases, sufficient-statistic loss families and
/// calibrated-multiaccuracy training on synthetic finite domains.
#[derive(Parser, Debug)]
#[command(name = "omnistat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or re-verify a convex basis dump.
    Basis {
        #[command(subcommand)]
        action: BasisCommand,
    },
    /// Basis size and certified errors across grid sizes.
    SweepBasis {
        /// Comma-separated grid sizes (powers of two).
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random convex targets certified per grid size.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chebyshev truncation of x^n: degree, coefficients and grid error.
    Cheb {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
    },
    /// Train a model from a config file or a built-in preset and write a report.
    Train {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// glm, moments or cvx.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Exit with status 4 when any guarantee check fails.
        #[arg(long)]
        acceptance: bool,
    },
    /// Exact regret table of a saved model under a config's distribution.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Post-process a saved model's predictions into actions for one loss.
    Act {
        #[arg(long)]
        model: PathBuf,
        /// l1, l<p>, newsvendor:<c> or glm:<link>.
        #[arg(long)]
        loss: String,
        /// CSV whose first column holds domain point indices.
        #[arg(long)]
        x: PathBuf,
    },
    /// Calibration diagnostics of a saved model.
    Calibrate {
        #[command(subcommand)]
        action: CalibrateCommand,
    },
}

#[derive(Subcommand, Debug)]
enum BasisCommand {
    /// Build the basis for accuracy `delta` and certify every ReLU.
    Build {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-read a dump and recompute every certificate.
    Certify {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum CalibrateCommand {
    /// Per-bin CSV: bin, count, mean_stats, corner, linf_gap.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Bin width; the model's delta_bin when absent.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Certificate agreement required by `basis certify`.
const CERTIFY_TOL: f64 = 1e-9;

fn emit(out: Option<&Path>, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    match out {
        Some(path) => omnistat::formats::write_csv(path, header, rows),
        None => {
            let stdout = io::stdout();
            let mut w = csv::Writer::from_writer(stdout.lock());
            let fail = |e: csv::Error| Error::format("<stdout>", e.to_string());
            w.write_record(header).map_err(fail)?;
            for r in rows {
                w.write_record(&r).map_err(fail)?;
            }
            w.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn basis_build(delta: f64, seed: u64, out: &Path) -> Result<()> {
    let basis = build_cvx_basis(delta, seed)?;
    write_basis(out, &basis)?;
    let certs = (0..basis.m()).map(|j| approximate_relu(&basis, j)).collect::<omnistat_core::Result<Vec<_>>>()?;
    write_certificates(&out.join("certificates.csv"), &certs)?;
    let worst = certs.iter().map(|c| c.sup_error).fold(0.0, f64::max);
    println!("m={} size={} t={:?} mu={} max_relu_error={worst:e}", basis.m(), basis.len(), basis.t(), basis.mu());
    Ok(())
}

fn basis_certify(dir: &Path) -> Result<()> {
    let basis = read_basis(dir)?;
    let path = dir.join("certificates.csv");
    let certs = read_certificates(&path)?;
    let mut worst = 0.0f64;
    for (target, sup_error, lambda) in &certs {
        let j: usize = target
            .strip_prefix("relu")
            .and_then(|j| j.parse().ok())
            .ok_or_else(|| Error::format(&path, format!("unknown target {target:?}")))?;
        let fresh = approximate_relu(&basis, j)?;
        let gap = (fresh.sup_error - sup_error).abs().max((fresh.lambda - lambda).abs());
        if gap > CERTIFY_TOL {
            return Err(Error::Violation(format!("{target}: recorded ({sup_error}, {lambda}) but recomputed ({}, {})", fresh.sup_error, fresh.lambda)));
        }
        worst = worst.max(fresh.sup_error);
    }
    println!("certified {} targets; max sup_error {worst:e}", certs.len());
    Ok(())
}

fn cheb(n: u32, eps: f64) -> Result<()> {
    let c = chebyshev_monomial(n, eps)?;
    println!("d,{}", c.d);
    println!("grid_error,{:e}", c.grid_error);
    println!("tail,{:e}", c.tail);
    println!("j,numerator,coefficient");
    for (j, (a, f)) in c.numerators.iter().zip(&c.coeffs).enumerate() {
        println!("{j},{a},{f}");
    }
    Ok(())
}

fn train(config: Option<&Path>, preset: Option<&str>, out: &Path, acceptance: bool) -> Result<()> {
    let cfg = match (config, preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(p)) => ExperimentConfig::preset(Preset::parse(p)?),
        (None, None) => return Err(Error::Config("pass --config or --preset".into())),
    };
    let r = run(&cfg)?;
    write_report(out, &r)?;
    println!(
        "preset={} d={} loops={} wl_calls={} exact_ece={:e} max_ma={:e} report={}",
        cfg.preset.name(),
        r.setup.certified.d,
        r.model.loops(),
        r.model.wl_calls(),
        r.eval.exact_ece,
        r.eval.max_ma(),
        out.display()
    );
    for row in &r.eval.regrets {
        println!("{}: regret {:.6}", row.loss_id, row.regret);
    }
    for v in &r.violations {
        eprintln!("violation: {v}");
    }
    if acceptance && !r.violations.is_empty() {
        return Err(Error::Violation(format!("{} guarantee checks failed", r.violations.len())));
    }
    Ok(())
}

fn load_matching(model: &Path, config: &Path) -> Result<(ModelDir, omnistat::experiment::Setup)> {
    let m = read_model(model)?;
    let cfg = ExperimentConfig::load(config)?;
    if cfg.family != m.doc.family || cfg.actions != m.doc.actions {
        return Err(Error::Config(format!("{} was trained with a different family or action grid", model.display())));
    }
    let s = setup(&cfg)?;
    if s.data.n() != m.doc.n {
        return Err(Error::Config(format!("model covers {} points, config domain has {}", m.doc.n, s.data.n())));
    }
    Ok((m, s))
}

fn eval(model: &Path, config: &Path, out: Option<&Path>) -> Result<()> {
    let (m, s) = load_matching(model, config)?;
    let mut rows = Vec::new();
    for l in &s.losses {
        let r = evaluate_omni(&m.q, &l.loss, &l.ua, &s.hypotheses.rules, &s.synth.dist)?;
        let c = indistinguishability_check(&m.q, &l.ua, &*s.stats, &s.hypotheses.rules, &s.synth.dist)?;
        rows.push(vec![
            r.loss_id.clone(),
            r.omni_loss.to_string(),
            r.best_loss.to_string(),
            s.hypotheses.names[r.best_hypothesis].clone(),
            r.regret.to_string(),
            c.regret_bound().to_string(),
            c.identity_gap.to_string(),
            c.simulation_gap.to_string(),
            c.cma_gap.to_string(),
        ]);
    }
    emit(
        out,
        &["loss", "omni_loss", "best_loss", "best_hypothesis", "regret", "regret_bound", "identity_gap", "simulation_gap", "cma_gap"],
        rows,
    )
}

fn act(model: &Path, loss: &str, x: &Path) -> Result<()> {
    let m = read_model(model)?;
    let spec: LossSpec = loss.parse()?;
    let family = m.doc.family.build()?;
    let actions = m.doc.actions.build()?;
    let (_, ua) = family.approximation(&spec, &actions)?;
    let (_, records) = read_csv(x)?;
    let mut rows = Vec::with_capacity(records.len());
    for rec in &records {
        let cell = rec.first().ok_or_else(|| Error::format(x, "empty row"))?;
        let point = parse_usize(x, cell)?;
        if point >= m.q.rows() {
            return Err(Error::format(x, format!("point {point} outside the model's {} points", m.q.rows())));
        }
        let a = choose_action(&ua, m.q.row(point));
        rows.push(vec![point.to_string(), a.to_string(), join(ua.actions.get(a).unwrap_or(&[]))]);
    }
    emit(None, &["x", "action_index", "action"], rows)
}

fn calibrate_report(model: &Path, config: &Path, delta: Option<f64>, out: Option<&Path>) -> Result<()> {
    let (m, s) = load_matching(model, config)?;
    let delta = delta.unwrap_or(m.doc.delta_bin);
    let mut source = Exhaustive(&s.data);
    let stats = BinStats::fold(&m.q, delta, &source.draw(0))?;
    let rows = stats
        .bins
        .iter()
        .map(|(key, acc)| {
            vec![
                key.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
                acc.count.to_string(),
                join(&acc.mean()),
                join(&acc.center),
                acc.gap().to_string(),
            ]
        })
        .collect();
    emit(out, &["bin", "count", "mean_stats", "corner", "linf_gap"], rows)?;
    eprintln!("ece={} over {} bins at delta={delta}", stats.ece(), stats.bins.len());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Basis { action: BasisCommand::Build { delta, seed, out } } => basis_build(delta, seed, &out),
        Command::Basis { action: BasisCommand::Certify { dir } } => basis_certify(&dir),
        Command::SweepBasis { m, seed, trials, out } => {
            let (rows, seconds) = sweep_basis(&m, seed, trials)?;
            write_sweep(&out, &rows, &seconds)?;
            for (r, s) in rows.iter().zip(&seconds) {
                println!("m={} size={} size/m={:.4} max_relu_error={:e} max_convex_error={:e} {s:.2}s", r.m, r.size, r.size_ratio(), r.max_relu_error, r.max_convex_error);
            }
            Ok(())
        }
        Command::Cheb { n, eps } => cheb(n, eps),
        Command::Train { config, preset, out, acceptance } => train(config.as_deref(), preset.as_deref(), &out, acceptance),
        Command::Eval { model, config, out } => eval(&model, &config, out.as_deref()),
        Command::Act { model, loss, x } => act(&model, &loss, &x),
        Command::Calibrate { action: CalibrateCommand::Report { model, config, delta, out } } => calibrate_report(&model, &config, delta, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
