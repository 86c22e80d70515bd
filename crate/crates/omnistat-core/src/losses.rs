//! Loss functions and the builders that turn them into uniform
//! approximations over a statistics family.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cvxbasis::{build_cvx_basis, lift_to_unit_interval, Basis, BasisStatistics};
use crate::stats::{unit_grid, ActionSpace, MomentFamily, StatisticsFamily, UniformApproximation};
use crate::{Error, Result};

/// Points in the default audit grid of `[0, 1]` or `[-1, 1]`.
pub const AUDIT_POINTS: usize = 10_000;

/// The convex function `g` of a GLM loss, applied coordinate-wise and summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlmLink {
    /// `t²/2`.
    Quadratic,
    /// `ln(1 + eᵗ) - ln 2`.
    Softplus,
    /// `t⁴/4`.
    Quartic,
}

impl GlmLink {
    pub fn name(&self) -> &'static str {
        match self {
            GlmLink::Quadratic => "quadratic",
            GlmLink::Softplus => "softplus",
            GlmLink::Quartic => "quartic",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "quadratic" => Some(GlmLink::Quadratic),
            "softplus" => Some(GlmLink::Softplus),
            "quartic" => Some(GlmLink::Quartic),
            _ => None,
        }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        t.iter()
            .map(|&x| match self {
                GlmLink::Quadratic => x * x / 2.0,
                GlmLink::Softplus => softplus(x) - core::f64::consts::LN_2,
                GlmLink::Quartic => x.powi(4) / 4.0,
            })
            .sum()
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// An evaluator supplied by the caller: `(y, t) ↦ ℓ(y, t)`.
pub type LossFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum LossKind {
    /// `c·t - min(t, y)`.
    Newsvendor { c: f64 },
    /// `(y - t)^p`, `p` even.
    Lp { p: u32 },
    /// `|y - t|`.
    Absolute,
    /// `g(t) - ⟨s(y), t⟩`.
    Glm { link: GlmLink, family: Arc<dyn StatisticsFamily> },
    Custom(LossFn),
}

impl core::fmt::Debug for LossKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LossKind::Newsvendor { c } => write!(f, "Newsvendor {{ c: {c} }}"),
            LossKind::Lp { p } => write!(f, "Lp {{ p: {p} }}"),
            LossKind::Absolute => write!(f, "Absolute"),
            LossKind::Glm { link, family } => write!(f, "Glm {{ link: {link:?}, family: {} }}", family.name()),
            LossKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `ℓ(y, t)` with a declared bound `C`.
#[derive(Debug, Clone)]
pub struct Loss {
    id: String,
    kind: LossKind,
    bound: f64,
}

impl Loss {
    pub fn custom(id: impl Into<String>, bound: f64, f: LossFn) -> Self {
        Loss { id: id.into(), kind: LossKind::Custom(f), bound }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, y: f64, t: &[f64]) -> f64 {
        match &self.kind {
            LossKind::Newsvendor { c } => c * t[0] - t[0].min(y),
            LossKind::Lp { p } => (y - t[0]).powi(*p as i32),
            LossKind::Absolute => (y - t[0]).abs(),
            LossKind::Glm { link, family } => {
                let s = family.eval(y);
                link.eval(t) - s.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
            }
            LossKind::Custom(f) => f(y, t),
        }
    }

    /// Largest `|ℓ(y, t)|` over `y_grid` × actions; errors if it is not
    /// finite or exceeds the declared bound by more than `1e-9`.
    pub fn audit(&self, actions: &ActionSpace, y_grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for t in actions.iter() {
            for &y in y_grid {
                let v = self.eval(y, t);
                if !v.is_finite() || v.abs() > self.bound + 1e-9 {
                    return Err(Error::Precondition(alloc::format!(
                        "loss {} = {v} at y = {y} exceeds its bound {}",
                        self.id,
                        self.bound
                    )));
                }
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }
}

pub fn newsvendor(c: f64) -> Result<Loss> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(alloc::format!("newsvendor cost {c} outside [0, 1]")));
    }
    Ok(Loss { id: alloc::format!("newsvendor({c})"), kind: LossKind::Newsvendor { c }, bound: 1.0 })
}

pub fn absolute() -> Loss {
    Loss { id: "l1".into(), kind: LossKind::Absolute, bound: 1.0 }
}

/// `(y - t)^p` for even `p`.
pub fn lp_loss(p: u32) -> Result<Loss> {
    if p == 0 || p % 2 == 1 {
        return Err(Error::Unsupported(alloc::format!("l_p loss needs an even p, got {p}")));
    }
    Ok(Loss { id: alloc::format!("l{p}"), kind: LossKind::Lp { p }, bound: 1.0 })
}

pub fn glm_loss(link: GlmLink, family: Arc<dyn StatisticsFamily>) -> Loss {
    let bound = 1.0 + family.d() as f64;
    Loss { id: alloc::format!("glm({})", link.name()), kind: LossKind::Glm { link, family }, bound }
}

/// Binomial coefficient as an exact integer; `None` on overflow.
pub fn binomial(n: u32, k: u32) -> Option<i128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as i128)? / (i + 1) as i128;
    }
    Some(acc)
}

/// Integer coefficients `c_{i,e}` with `(y - t)^p = Σ_i y^i Σ_e c_{i,e} t^e`:
/// only `e = p - i` is non-zero, `c = binom(p, i)(-1)^{p-i}`.
pub fn lp_integer_coefficients(p: u32) -> Result<Vec<i128>> {
    (0..=p)
        .map(|i| {
            let b = binomial(p, i).ok_or(Error::DegreeTooLarge { degree: p as usize })?;
            Ok(if (p - i) % 2 == 1 { -b } else { b })
        })
        .collect()
}

/// Largest `|Σ_i c_i a^i b^{p-i} - (a - b)^p|` over `a, b ∈ {0, .., n}`, in
/// exact integer arithmetic: the residual of the `l_p` expansion on the
/// grid `y = a/n`, `t = b/n`, scaled by `n^p`.
pub fn lp_integer_residual(p: u32, n: u32) -> Result<i128> {
    let ints = lp_integer_coefficients(p)?;
    let overflow = Error::DegreeTooLarge { degree: p as usize };
    let mut worst: i128 = 0;
    for a in 0..=n as i128 {
        for b in 0..=n as i128 {
            let mut sum: i128 = 0;
            for (i, &c) in ints.iter().enumerate() {
                let term = a
                    .checked_pow(i as u32)
                    .and_then(|x| x.checked_mul(b.checked_pow(p - i as u32)?))
                    .and_then(|x| x.checked_mul(c))
                    .ok_or(overflow.clone())?;
                sum = sum.checked_add(term).ok_or(overflow.clone())?;
            }
            let direct = (a - b).checked_pow(p).ok_or(overflow.clone())?;
            worst = worst.max((sum - direct).abs());
        }
    }
    Ok(worst)
}

fn check_lp(p: u32) -> Result<()> {
    if p % 2 == 1 {
        return Err(Error::Unsupported(alloc::format!("odd p = {p}")));
    }
    if !(2..=16).contains(&p) {
        return Err(Error::InvalidParameter(alloc::format!("p = {p} outside 2..=16")));
    }
    Ok(())
}

fn scalar_actions(actions: &ActionSpace) -> Result<()> {
    if actions.dim() != 1 {
        return Err(Error::ShapeMismatch { expected: 1, got: actions.dim() });
    }
    if actions.iter().any(|t| !(0.0..=1.0).contains(&t[0])) {
        return Err(Error::InvalidParameter("l_p actions must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Exact expansion `(y - t)^p = Σ_i binom(p, i)(-t)^{p-i} y^i` over the
/// moment statistics `{y, .., y^p}`.
pub fn lp_monomial_family(p: u32, actions: &ActionSpace) -> Result<UniformApproximation> {
    lp_monomial_in(p, p as usize, actions)
}

/// The same expansion inside a larger moment family `{y, .., y^degree}`.
pub fn lp_monomial_in(p: u32, degree: usize, actions: &ActionSpace) -> Result<UniformApproximation> {
    check_lp(p)?;
    scalar_actions(actions)?;
    if degree < p as usize {
        return Err(Error::FamilyMismatch(alloc::format!("moments({degree}) cannot represent l{p}")));
    }
    let ints = lp_integer_coefficients(p)?;
    let rows = actions
        .iter()
        .map(|t| {
            let mut row = vec![0.0; degree + 1];
            for i in 0..=p as usize {
                row[i] = ints[i] as f64 * t[0].powi((p as usize - i) as i32);
            }
            row
        })
        .collect();
    UniformApproximation::from_table(&MomentFamily::new(degree), lp_loss(p)?.id(), actions.clone(), rows, 0.0, 1.0)
}

/// Chebyshev truncation `q` of `x^n` on `[-1, 1]`.
///
/// `x^n = 2^{1-n} Σ_{j ≡ n (2)} binom(n, (n-j)/2) T_j(x)` with the `T_0` term
/// halved; `q` keeps the terms with `j ≤ d`. Coefficients are held exactly as
/// numerators over `2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevApprox {
    pub n: u32,
    pub eps: f64,
    pub d: usize,
    /// `A_j` with `a_j = A_j / 2^n`, for `j = 0..=d`.
    pub numerators: Vec<i128>,
    /// `a_j` as floats.
    pub coeffs: Vec<f64>,
    /// `Σ_{j > d} a_j`, the exact sup error, attained at `x = ±1`.
    pub tail: f64,
    /// Measured sup error over the audit grid of `[-1, 1]`.
    pub grid_error: f64,
}

/// `⌈√(n ln(1/eps))⌉`.
pub fn chebyshev_degree(n: u32, eps: f64) -> usize {
    (n as f64 * (1.0 / eps).ln()).sqrt().ceil() as usize
}

fn cheb_numerator(n: u32, j: u32) -> Result<i128> {
    if j > n || (n - j) % 2 == 1 {
        return Ok(0);
    }
    let b = binomial(n, (n - j) / 2).ok_or(Error::DegreeTooLarge { degree: n as usize })?;
    if j == 0 {
        Ok(b)
    } else {
        b.checked_mul(2).ok_or(Error::DegreeTooLarge { degree: n as usize })
    }
}

pub fn chebyshev_monomial(n: u32, eps: f64) -> Result<ChebyshevApprox> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("eps = {eps} outside (0, 1)")));
    }
    if n > 120 {
        return Err(Error::DegreeTooLarge { degree: n as usize });
    }
    let d = chebyshev_degree(n, eps);
    let denom = 2f64.powi(n as i32);
    let numerators = (0..=d as u32).map(|j| cheb_numerator(n, j)).collect::<Result<Vec<_>>>()?;
    let coeffs: Vec<f64> = numerators.iter().map(|&a| a as f64 / denom).collect();
    let mut dropped: i128 = 0;
    for j in d as u32 + 1..=n {
        dropped = dropped.checked_add(cheb_numerator(n, j)?).ok_or(Error::DegreeTooLarge { degree: n as usize })?;
    }
    let tail = dropped as f64 / denom;
    let mut out = ChebyshevApprox { n, eps, d, numerators, coeffs, tail, grid_error: 0.0 };
    out.grid_error = (0..AUDIT_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (AUDIT_POINTS - 1) as f64)
        .map(|x| (out.eval(x) - x.powi(n as i32)).abs())
        .fold(0.0, f64::max);
    Ok(out)
}

impl ChebyshevApprox {
    /// Clenshaw evaluation of `Σ_j a_j T_j(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &a in self.coeffs.iter().skip(1).rev() {
            let b0 = a + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + x * b1 - b2
    }

    /// Numerators `B_k` of the monomial form `q(x) = 2^{-n} Σ_k B_k x^k`.
    pub fn monomial_numerators(&self) -> Result<Vec<i128>> {
        let overflow = Error::DegreeTooLarge { degree: self.d };
        let mut out = vec![0i128; self.d + 1];
        let mut prev: Vec<i128> = vec![1];
        let mut cur: Vec<i128> = vec![0, 1];
        for (j, &a) in self.numerators.iter().enumerate() {
            let tj: &[i128] = if j == 0 { &prev } else { &cur };
            for (k, &c) in tj.iter().enumerate() {
                let term = a.checked_mul(c).ok_or(overflow.clone())?;
                out[k] = out[k].checked_add(term).ok_or(overflow.clone())?;
            }
            if j >= 1 {
                let mut next = vec![0i128; cur.len() + 1];
                for (k, &c) in cur.iter().enumerate() {
                    next[k + 1] = c.checked_mul(2).ok_or(overflow.clone())?;
                }
                for (k, &c) in prev.iter().enumerate() {
                    next[k] = next[k].checked_sub(c).ok_or(overflow.clone())?;
                }
                prev = core::mem::replace(&mut cur, next);
            }
        }
        Ok(out)
    }
}

/// Statistic `i`'s integer coefficient polynomial in `t` for the Chebyshev
/// surrogate of `(y - t)^p`: `2^p r_i(t) = Σ_e P_{i,e} t^e`.
pub fn lp_cheb_integer_coefficients(cheb: &ChebyshevApprox) -> Result<Vec<Vec<i128>>> {
    let b = cheb.monomial_numerators()?;
    let overflow = Error::DegreeTooLarge { degree: cheb.d };
    let top = b.iter().rposition(|&x| x != 0).unwrap_or(0);
    let mut out = Vec::with_capacity(top + 1);
    for i in 0..=top {
        let mut poly = Vec::with_capacity(top - i + 1);
        for e in 0..=top - i {
            let binom = binomial((i + e) as u32, i as u32).ok_or(overflow.clone())?;
            let mut v = b[i + e].checked_mul(binom).ok_or(overflow.clone())?;
            if e % 2 == 1 {
                v = -v;
            }
            poly.push(v);
        }
        out.push(poly);
    }
    Ok(out)
}

/// `ℓ_p` through the degree-`d` Chebyshev surrogate of `x^p` at `x = y - t`.
///
/// The statistics are the moments `{y, .., y^k}` with `k ≤ min(d, p)` the
/// surrogate's degree. The stored `delta` is the larger of the exact
/// truncation tail and the floating residual on the audit grid.
pub fn lp_cheb_family(p: u32, delta: f64, actions: &ActionSpace) -> Result<UniformApproximation> {
    check_lp(p)?;
    scalar_actions(actions)?;
    let cheb = chebyshev_monomial(p, delta)?;
    let polys = lp_cheb_integer_coefficients(&cheb)?;
    let k = polys.len() - 1;
    let denom = 2f64.powi(p as i32);
    let rows: Vec<Vec<f64>> = actions
        .iter()
        .map(|t| {
            let mut row = vec![0.0; k.max(1) + 1];
            for (i, poly) in polys.iter().enumerate() {
                let mut acc = 0.0;
                for &c in poly.iter().rev() {
                    acc = acc * t[0] + c as f64 / denom;
                }
                row[i] = acc;
            }
            row
        })
        .collect();
    let family = MomentFamily::new(k.max(1));
    let loss = lp_loss(p)?;
    let mut ua = UniformApproximation::from_table(&family, loss.id(), actions.clone(), rows, cheb.tail, 1.0)?;
    let (audit, _) = crate::stats::verify_uniform_approx(&ua, &loss, &family, &unit_grid(1001))?;
    ua.delta = cheb.tail.max(audit);
    Ok(ua)
}

/// `d³ 2^{4d}`.
pub fn lp_cheb_lambda_bound(d: usize) -> f64 {
    (d as f64).powi(3) * 2f64.powi(4 * d as i32)
}

/// `r_0(t) = g(t)`, `r_i(t) = -t_i`: exact for the GLM loss of `family`.
pub fn glm_family(link: GlmLink, family: &dyn StatisticsFamily, actions: &ActionSpace) -> Result<UniformApproximation> {
    if actions.dim() != family.d() {
        return Err(Error::ShapeMismatch { expected: family.d(), got: actions.dim() });
    }
    let mut rows = Vec::with_capacity(actions.len());
    for (a, t) in actions.iter().enumerate() {
        if t.iter().any(|x| !(-1.0..=1.0).contains(x)) {
            return Err(Error::Precondition(alloc::format!("action {a} leaves [-1, 1]^d")));
        }
        let g = link.eval(t);
        if !(g.abs() <= 1.0 + 1e-12) {
            return Err(Error::Precondition(alloc::format!("|g(t)| = {} > 1 at action {a}", g.abs())));
        }
        let mut row = Vec::with_capacity(t.len() + 1);
        row.push(g);
        row.extend(t.iter().map(|x| -x));
        rows.push(row);
    }
    UniformApproximation::from_table(family, alloc::format!("glm({})", link.name()), actions.clone(), rows, 0.0, 1.0)
}

/// The lifted convex basis at accuracy `delta`, built at `2δ/3` so the
/// lifted error `(1 + 1/2)/m` lands at `delta`.
#[derive(Debug, Clone)]
pub struct CvxFamily {
    pub delta: f64,
    basis: Arc<Basis>,
    stats: Arc<BasisStatistics>,
}

pub fn cvx_family(delta: f64, seed: u64) -> Result<CvxFamily> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::InvalidParameter(alloc::format!("delta = {delta} outside (0, 1/4]")));
    }
    let basis = Arc::new(build_cvx_basis(2.0 * delta / 3.0, seed)?);
    let stats = Arc::new(lift_to_unit_interval(basis.clone(), delta));
    Ok(CvxFamily { delta, basis, stats })
}

impl CvxFamily {
    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn statistics(&self) -> Arc<BasisStatistics> {
        self.stats.clone()
    }

    /// Points where the residual of a lifted approximation is audited: a
    /// uniform grid plus both ends of every grid cell.
    pub fn audit_grid(&self) -> Vec<f64> {
        let m = self.basis.m();
        let mut ys = unit_grid(AUDIT_POINTS + 1);
        for i in 0..m {
            ys.push(i as f64 / m as f64);
            ys.push(((i + 1) as f64 / m as f64 - 1e-12).max(0.0));
        }
        ys.push(1.0);
        ys
    }

    /// Largest secant slope of `ℓ(·, t)` over the cells `[i/m, (i+1)/m]`,
    /// over all actions, floored at 1.
    pub fn lipschitz_scale(&self, loss: &Loss, actions: &ActionSpace) -> f64 {
        let m = self.basis.m();
        let mut l = 1.0f64;
        for t in actions.iter() {
            for i in 0..m {
                let a = loss.eval(i as f64 / m as f64, t);
                let b = loss.eval((i + 1) as f64 / m as f64, t);
                l = l.max(m as f64 * (b - a).abs());
            }
        }
        l
    }

    /// Per-action coefficients for `ℓ/L` and the audited residual.
    pub fn approximation(&self, loss: &Loss, actions: &ActionSpace) -> Result<UniformApproximation> {
        let m = self.basis.m();
        let scale = self.lipschitz_scale(loss, actions);
        let tol = 1e-9 * m as f64;
        let mut rows = Vec::with_capacity(actions.len());
        for (a, t) in actions.iter().enumerate() {
            let lifted = self
                .stats
                .approximate(|y| loss.eval(y, t) / scale, tol)
                .map_err(|e| match e {
                    Error::Precondition(reason) => Error::IneligibleLoss { loss: loss.id().into(), action: a, reason },
                    other => other,
                })?;
            let mut row = Vec::with_capacity(lifted.r.len() + 1);
            row.push(lifted.r0);
            row.extend(lifted.r);
            rows.push(row);
        }
        let mut ua = UniformApproximation::from_table(&*self.stats, loss.id(), actions.clone(), rows, self.delta, scale)?;
        let (audit, _) = crate::stats::verify_uniform_approx(&ua, loss, &*self.stats, &self.audit_grid())?;
        ua.delta = audit;
        Ok(ua)
    }
}
