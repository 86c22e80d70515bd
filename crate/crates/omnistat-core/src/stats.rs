//! Statistics families, uniform approximations and optimal actions.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;


use crate::losses::Loss;
use crate::{Error, Result};

/// `d` bounded statistics `s_1, .., s_d` on `[0, 1]`; `s_0 = 1` is implicit.
pub trait StatisticsFamily: core::fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn d(&self) -> usize;
    /// Writes `(s_1(y), .., s_d(y))` into `out`.
    fn eval_into(&self, y: f64, out: &mut [f64]);

    fn eval(&self, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        self.eval_into(y, &mut out);
        out
    }
}

/// `s_i(y) = y^i` for `i = 1..=degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentFamily {
    degree: usize,
    name: String,
}

impl MomentFamily {
    pub fn new(degree: usize) -> Self {
        MomentFamily { degree, name: alloc::format!("moments({degree})") }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
}

impl StatisticsFamily for MomentFamily {
    fn name(&self) -> &str {
        &self.name
    }

    fn d(&self) -> usize {
        self.degree
    }

    fn eval_into(&self, y: f64, out: &mut [f64]) {
        let mut p = 1.0;
        for o in out.iter_mut().take(self.degree) {
            p *= y;
            *o = p;
        }
    }
}

/// `n` evenly spaced points of `[0, 1]`, endpoints included.
pub fn unit_grid(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Largest `|s_i(y)|` over a `points`-point grid of `[0, 1]`; errors if some
/// statistic leaves `[-1, 1]` by more than `1e-9`.
pub fn audit_statistics(family: &dyn StatisticsFamily, points: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut buf = vec![0.0; family.d()];
    for y in unit_grid(points) {
        family.eval_into(y, &mut buf);
        for (i, v) in buf.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 + 1e-9 {
                return Err(Error::Precondition(alloc::format!("statistic {} = {v} at y = {y}", i + 1)));
            }
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// A finite, ordered list of actions; each action is a real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    actions: Vec<Vec<f64>>,
}

impl ActionSpace {
    pub fn new(actions: Vec<Vec<f64>>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidParameter("empty action space".into()));
        }
        let dim = actions[0].len();
        if actions.iter().any(|a| a.len() != dim) {
            return Err(Error::InvalidParameter("actions of mixed dimension".into()));
        }
        Ok(ActionSpace { actions })
    }

    /// `count` scalar actions evenly spaced on `[lo, hi]`.
    pub fn scalar_grid(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 || !(lo <= hi) {
            return Err(Error::InvalidParameter(alloc::format!("bad action grid [{lo}, {hi}] x {count}")));
        }
        if count == 1 {
            return Self::new(vec![vec![lo]]);
        }
        Self::new((0..count).map(|i| vec![lo + (hi - lo) * i as f64 / (count - 1) as f64]).collect())
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.actions[0].len()
    }

    pub fn get(&self, a: usize) -> Option<&[f64]> {
        self.actions.get(a).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.actions.iter().map(|v| v.as_slice())
    }

    /// Index of the action closest to `t` in sup norm (first on ties).
    pub fn nearest(&self, t: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, a) in self.iter().enumerate() {
            let d = a.iter().zip(t).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// A `(d, λ, δ)` uniform approximation of one loss over a finite action space.
///
/// Row `a` of the table holds `(r_0(t_a), .., r_d(t_a))`. The table
/// approximates `ℓ/scale`; `scale = 1` except for losses admitted after
/// rescaling their Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformApproximation {
    pub family: String,
    pub d: usize,
    pub loss_id: String,
    pub actions: ActionSpace,
    table: Vec<f64>,
    /// `max_t Σ_{i≥0} |r_i(t)|`.
    pub lambda: f64,
    /// `max_t Σ_{i≥1} |r_i(t)|`.
    pub lambda_tail: f64,
    pub delta: f64,
    pub scale: f64,
}

impl UniformApproximation {
    pub fn from_table(
        family: &dyn StatisticsFamily,
        loss_id: impl Into<String>,
        actions: ActionSpace,
        rows: Vec<Vec<f64>>,
        delta: f64,
        scale: f64,
    ) -> Result<Self> {
        let d = family.d();
        if rows.len() != actions.len() {
            return Err(Error::ShapeMismatch { expected: actions.len(), got: rows.len() });
        }
        let mut table = Vec::with_capacity(rows.len() * (d + 1));
        let mut lambda = 0.0f64;
        let mut lambda_tail = 0.0f64;
        for row in rows {
            if row.len() != d + 1 {
                return Err(Error::ShapeMismatch { expected: d + 1, got: row.len() });
            }
            let tail: f64 = row[1..].iter().map(|r| r.abs()).sum();
            lambda = lambda.max(row[0].abs() + tail);
            lambda_tail = lambda_tail.max(tail);
            table.extend(row);
        }
        Ok(UniformApproximation {
            family: family.name().into(),
            d,
            loss_id: loss_id.into(),
            actions,
            table,
            lambda,
            lambda_tail,
            delta,
            scale,
        })
    }

    /// `(r_0(t_a), .., r_d(t_a))`.
    pub fn r(&self, a: usize) -> Result<&[f64]> {
        if a >= self.actions.len() {
            return Err(Error::UnknownAction(a));
        }
        Ok(&self.table[a * (self.d + 1)..(a + 1) * (self.d + 1)])
    }

    /// The coefficient function `t ↦ r_i(t)` as a column over actions.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.actions.len()).map(|a| self.table[a * (self.d + 1) + i]).collect()
    }
}

/// `ℓ̂(v, t) = r_0(t) + Σ_i r_i(t) v_i`.
pub fn eval_lhat(ua: &UniformApproximation, v: &[f64], a: usize) -> Result<f64> {
    if v.len() != ua.d {
        return Err(Error::ShapeMismatch { expected: ua.d, got: v.len() });
    }
    let r = ua.r(a)?;
    Ok(r[0] + r[1..].iter().zip(v).map(|(ri, vi)| ri * vi).sum::<f64>())
}

/// `k_ℓ̂(v)`: the first action minimizing `ℓ̂(v, ·)`.
pub fn choose_action(ua: &UniformApproximation, v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for a in 0..ua.actions.len() {
        let val = eval_lhat(ua, v, a).unwrap_or(f64::INFINITY);
        if val < best_val {
            best = a;
            best_val = val;
        }
    }
    best
}

/// Sup residual of the approximation over `y_grid` × actions, and the
/// largest `Σ_{i≥0} |r_i(t)|`.
pub fn verify_uniform_approx(
    ua: &UniformApproximation,
    loss: &Loss,
    family: &dyn StatisticsFamily,
    y_grid: &[f64],
) -> Result<(f64, f64)> {
    if family.d() != ua.d {
        return Err(Error::FamilyMismatch(alloc::format!("{} has d = {}, approximation has {}", family.name(), family.d(), ua.d)));
    }
    if y_grid.is_empty() {
        return Err(Error::InvalidParameter("empty audit grid".into()));
    }
    let stats: Vec<Vec<f64>> = y_grid.iter().map(|&y| family.eval(y)).collect();
    let mut max_error = 0.0f64;
    let mut max_lambda = 0.0f64;
    for (a, t) in ua.actions.iter().enumerate() {
        let r = ua.r(a)?;
        max_lambda = max_lambda.max(r.iter().map(|x| x.abs()).sum());
        for (y, s) in y_grid.iter().zip(&stats) {
            let approx = eval_lhat(ua, s, a)?;
            max_error = max_error.max((approx - loss.eval(*y, t) / ua.scale).abs());
        }
    }
    Ok((max_error, max_lambda))
}

/// `S = {y}` for labels in `{0, 1}`.
pub fn boolean_family() -> MomentFamily {
    MomentFamily::new(1)
}

/// `r_0(t) = ℓ(0, t)`, `r_1(t) = ℓ(1, t) - ℓ(0, t)`; exact on `{0, 1}`.
pub fn boolean_approximation(loss: &Loss, actions: &ActionSpace) -> Result<UniformApproximation> {
    let rows = actions
        .iter()
        .map(|t| {
            let l0 = loss.eval(0.0, t);
            vec![l0, loss.eval(1.0, t) - l0]
        })
        .collect();
    UniformApproximation::from_table(&boolean_family(), loss.id(), actions.clone(), rows, 0.0, 1.0)
}

/// Weighted mean of `ℓ(y_j, t)`.
pub fn expected_loss(samples: &[(f64, f64)], loss: &Loss, t: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(y, w) in samples {
        if !(w >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("negative weight {w}")));
        }
        num += w * loss.eval(y, t);
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::InvalidParameter("weights sum to zero".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses;

    #[test]
    fn lhat_examples() {
        let actions = ActionSpace::new(vec![vec![0.5]]).unwrap();
        let ua = UniformApproximation::from_table(&MomentFamily::new(2), "l2", actions, vec![vec![0.25, -1.0, 1.0]], 0.0, 1.0)
            .unwrap();
        assert!((eval_lhat(&ua, &[0.5, 0.3], 0).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(eval_lhat(&ua, &[0.0, 0.0], 0).unwrap(), 0.25);
        assert_eq!(eval_lhat(&ua, &[0.0, 0.0], 1), Err(Error::UnknownAction(1)));
        assert_eq!(choose_action(&ua, &[0.9, 0.1]), 0);
    }

    #[test]
    fn squared_loss_picks_nearest_grid_point() {
        let actions = ActionSpace::scalar_grid(0.0, 1.0, 11).unwrap();
        let ua = losses::lp_monomial_family(2, &actions).unwrap();
        let a = choose_action(&ua, &[0.62, 0.5]);
        assert!((actions.get(a).unwrap()[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn boolean_coefficients() {
        let actions = ActionSpace::new(vec![vec![0.3]]).unwrap();
        let ua = boolean_approximation(&losses::lp_loss(2).unwrap(), &actions).unwrap();
        let r = ua.r(0).unwrap();
        assert!((r[0] - 0.09).abs() < 1e-15 && (r[1] - 0.4).abs() < 1e-15);
        let (err, _) = verify_uniform_approx(&ua, &losses::lp_loss(2).unwrap(), &boolean_family(), &[0.0, 1.0]).unwrap();
        assert!(err <= 1e-15);
    }

    #[test]
    fn expected_loss_examples() {
        let l2 = losses::lp_loss(2).unwrap();
        assert_eq!(expected_loss(&[(0.2, 1.0)], &l2, &[0.5]).unwrap(), 0.09);
        assert_eq!(expected_loss(&[(0.0, 1.0), (1.0, 1.0)], &l2, &[0.5]).unwrap(), 0.25);
        assert!(expected_loss(&[], &l2, &[0.5]).is_err());
    }
}
