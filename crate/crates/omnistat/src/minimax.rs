//! Minimax (sup-norm optimal) fits over a span, by linear programming, and
//! the convex versus Lipschitz separation probe built on them.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use omnistat_core::cvxbasis::Basis;
use omnistat_core::gridfn::{relu, GridFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::synth::{random_convex, random_lipschitz};
use crate::{Error, Result};

/// Solver tolerance on the returned sup error.
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxFit {
    /// One coefficient per column.
    pub coefficients: Vec<f64>,
    /// `max_y |Σ c_j col_j(y) - target(y)|`, recomputed from the coefficients.
    pub sup_error: f64,
    /// The optimal value reported by the solver.
    pub objective: f64,
}

/// `min_c max_y |Σ_j c_j col_j(y) - target(y)|` over free coefficients.
pub fn minimax_columns(columns: &[Vec<f64>], target: &[f64]) -> Result<MinimaxFit> {
    if let Some(bad) = columns.iter().find(|c| c.len() != target.len()) {
        return Err(Error::Config(format!("column of length {} against target of length {}", bad.len(), target.len())));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = columns.iter().map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let z = lp.add_var(1.0, (0.0, f64::INFINITY));
    for (y, &b) in target.iter().enumerate() {
        let mut upper = LinearExpr::empty();
        let mut lower = LinearExpr::empty();
        for (v, col) in vars.iter().zip(columns) {
            if col[y] != 0.0 {
                upper.add(*v, col[y]);
                lower.add(*v, col[y]);
            }
        }
        upper.add(z, -1.0);
        lower.add(z, 1.0);
        lp.add_constraint(upper, ComparisonOp::Le, b);
        lp.add_constraint(lower, ComparisonOp::Ge, b);
    }
    let solution = lp.solve().map_err(|e| Error::Solver(format!("minimax LP failed: {e}")))?;
    let coefficients: Vec<f64> = vars.iter().map(|v| *solution.var_value(*v)).collect();
    let sup_error = target
        .iter()
        .enumerate()
        .map(|(y, &b)| (columns.iter().zip(&coefficients).map(|(col, c)| c * col[y]).sum::<f64>() - b).abs())
        .fold(0.0, f64::max);
    let objective = solution.objective();
    if sup_error > objective + TOLERANCE * (1.0 + objective.abs()) {
        return Err(Error::Solver(format!("minimax LP residual {sup_error} exceeds its objective {objective}")));
    }
    Ok(MinimaxFit { coefficients, sup_error, objective })
}

/// The minimax fit of `target` over `basis ∪ {1}`. Coefficients are per
/// basis element, followed by one for the constant when the basis lacks it.
pub fn minimax_fit(basis: &Basis, target: &GridFunction) -> Result<MinimaxFit> {
    if target.m() != basis.m() {
        return Err(Error::Config(format!("target on {} points, basis on {}", target.m(), basis.m())));
    }
    let mut columns: Vec<Vec<f64>> = (0..basis.len()).map(|e| basis.element(e).into_values()).collect();
    if basis.constant_index().is_none() {
        columns.push(vec![1.0; basis.m()]);
    }
    minimax_columns(&columns, target.values())
}

/// Budget used by the probe: about `m^{2/3}` elements.
pub fn probe_budget(m: usize) -> usize {
    ((m as f64).powf(2.0 / 3.0).ceil() as usize).clamp(2, m)
}

/// The constant plus `budget - 1` evenly spaced ReLUs, scaled into `[0, 1]`.
pub fn probe_columns(m: usize, budget: usize) -> Result<Vec<Vec<f64>>> {
    let scale = (m.max(2) - 1) as f64;
    let mut cols = vec![vec![1.0; m]];
    let knots = budget.saturating_sub(1).max(1);
    for k in 0..knots {
        let i = k * m / knots;
        cols.push(relu(i, m)?.values().iter().map(|v| v / scale).collect());
    }
    Ok(cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationProbe {
    pub m: usize,
    pub budget: usize,
    pub convex_errors: Vec<f64>,
    pub lipschitz_errors: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl SeparationProbe {
    pub fn convex_mean(&self) -> f64 {
        mean(&self.convex_errors)
    }

    pub fn lipschitz_mean(&self) -> f64 {
        mean(&self.lipschitz_errors)
    }

    /// Mean Lipschitz error over mean convex error.
    pub fn ratio(&self) -> f64 {
        self.lipschitz_mean() / self.convex_mean().max(f64::MIN_POSITIVE)
    }
}

/// Minimax errors of `trials` random convex and random Lipschitz targets
/// against the same `probe_budget(m)` columns.
pub fn separation_probe(m: usize, trials: usize, seed: u64) -> Result<SeparationProbe> {
    let budget = probe_budget(m);
    let cols = probe_columns(m, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut convex_errors = Vec::with_capacity(trials);
    let mut lipschitz_errors = Vec::with_capacity(trials);
    for _ in 0..trials {
        let f = random_convex(m, &mut rng)?;
        convex_errors.push(minimax_columns(&cols, f.values())?.sup_error);
        let g = random_lipschitz(m, &mut rng)?;
        lipschitz_errors.push(minimax_columns(&cols, g.values())?.sup_error);
    }
    Ok(SeparationProbe { m, budget, convex_errors, lipschitz_errors })
}
