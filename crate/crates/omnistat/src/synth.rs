//! Synthetic nature distributions on finite domains, the fixture with a
//! closed-form calibration error, and random grid-function generators.

use omnistat_core::dist::{FiniteDistribution, Table};
use omnistat_core::gridfn::GridFunction;
use omnistat_core::stats::unit_grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

/// A finite domain of feature vectors with histogram label laws.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDistribution {
    pub features: Vec<[f64; 2]>,
    pub dist: FiniteDistribution,
    pub y_grid: Vec<f64>,
    pub seed: u64,
}

impl SyntheticDistribution {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    /// `E[y | x]` for every point.
    pub fn label_means(&self) -> Vec<f64> {
        (0..self.n()).map(|x| self.dist.cond_expect(x, |y| y)).collect()
    }
}

/// Histogram weights on `y_grid` for a law with mean near `mean` and
/// concentration `kappa`: `w(y) ∝ (y + h)^{κμ} (1 - y + h)^{κ(1-μ)}`.
fn beta_like(y_grid: &[f64], mean: f64, kappa: f64) -> Vec<(f64, f64)> {
    let h = 0.05;
    let logs: Vec<f64> = y_grid
        .iter()
        .map(|&y| kappa * (mean * (y + h).ln() + (1.0 - mean) * (1.0 - y + h).ln()))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    y_grid.iter().zip(&logs).map(|(&y, &l)| (y, (l - top).exp())).collect()
}

/// `side × side` feature grid on `[0, 1]²` with labels on a `y_points`
/// grid of `[0, 1]`. The label mean is a smooth non-linear function of the
/// features plus seeded jitter; marginal weights are seeded and non-uniform.
pub fn grid_domain(side: usize, y_points: usize, seed: u64) -> Result<SyntheticDistribution> {
    if side < 2 || y_points < 2 {
        return Err(crate::Error::Config(format!("domain needs side >= 2 and y_points >= 2, got {side} and {y_points}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_grid = unit_grid(y_points);
    let mut features = Vec::with_capacity(side * side);
    let mut weights = Vec::with_capacity(side * side);
    let mut labels = Vec::with_capacity(side * side);
    for u in 0..side {
        for v in 0..side {
            let f = [u as f64 / (side - 1) as f64, v as f64 / (side - 1) as f64];
            let jitter: f64 = rng.random_range(-0.08..0.08);
            let score = 0.55 * f[0] + 0.35 * f[1] * f[1] - 0.25 * (f[0] - f[1]).abs() + jitter;
            let mean = (0.15 + 0.8 * score).clamp(0.05, 0.95);
            let kappa: f64 = rng.random_range(3.0..12.0);
            features.push(f);
            weights.push(rng.random_range(0.5..1.5));
            labels.push(beta_like(&y_grid, mean, kappa));
        }
    }
    let dist = FiniteDistribution::new(weights, labels)?;
    Ok(SyntheticDistribution { features, dist, y_grid, seed })
}

/// Four equally likely points with labels on `{0, 1/2, 1}` and a predictor
/// on the corners of the `1/4`-grid. With `s(y) = (y, y²)` every point's
/// gap `‖E[s(y)|x] - p(x)‖∞` is exactly `1/5`, so `ECE(p) = 0.2`.
pub fn ece_fixture() -> Result<(FiniteDistribution, Table)> {
    let hist = |p0: f64, p_half: f64, p1: f64| vec![(0.0, p0), (0.5, p_half), (1.0, p1)];
    let labels = vec![hist(0.2, 0.2, 0.6), hist(0.5, 0.4, 0.1), hist(0.35, 0.4, 0.25), hist(0.0, 0.1, 0.9)];
    let dist = FiniteDistribution::new(vec![1.0; 4], labels)?;
    let p = Table::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.25], vec![0.25, 0.25], vec![0.75, 0.75]])?;
    Ok((dist, p))
}

/// `ECE` of [`ece_fixture`] in closed form.
pub const ECE_FIXTURE_VALUE: f64 = 0.2;

/// A discrete convex 1-Lipschitz function on `{0, .., m-1}`: sorted slopes
/// in `[-1, 1]`, with either dense or sparse kinks.
pub fn random_convex(m: usize, rng: &mut impl Rng) -> Result<GridFunction> {
    let mut slopes: Vec<f64> = if rng.random_bool(0.5) {
        (0..m.saturating_sub(1)).map(|_| rng.random_range(-1.0..=1.0)).collect()
    } else {
        let kinks: Vec<f64> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(-1.0..=1.0)).collect();
        (0..m.saturating_sub(1)).map(|_| kinks[rng.random_range(0..kinks.len())]).collect()
    };
    slopes.sort_by(f64::total_cmp);
    let start: f64 = rng.random_range(-(m as f64)..=m as f64);
    let mut values = Vec::with_capacity(m);
    let mut v = start;
    values.push(v);
    for s in slopes {
        v += s;
        values.push(v);
    }
    Ok(GridFunction::new(values)?)
}

/// A 1-Lipschitz random walk with independent `±1` steps.
pub fn random_lipschitz(m: usize, rng: &mut impl Rng) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(m);
    let mut v = 0.0;
    values.push(v);
    for _ in 1..m {
        v += if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        values.push(v);
    }
    Ok(GridFunction::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use omnistat_core::calibrate::exact_ece;
    use omnistat_core::gridfn::is_discrete_convex_lipschitz;
    use omnistat_core::stats::MomentFamily;

    #[test]
    fn grid_domain_is_normalized_and_seeded() {
        let a = grid_domain(8, 11, 3).unwrap();
        assert_eq!(a.n(), 64);
        assert!((a.dist.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(a, grid_domain(8, 11, 3).unwrap());
        assert_ne!(a.label_means(), grid_domain(8, 11, 4).unwrap().label_means());
    }

    #[test]
    fn ece_fixture_has_closed_form_value() {
        let (dist, p) = ece_fixture().unwrap();
        let data = dist.exact(&MomentFamily::new(2));
        let e = exact_ece(&p, &data).unwrap();
        assert!((e - ECE_FIXTURE_VALUE).abs() < 1e-12, "{e}");
    }

    #[test]
    fn generators_respect_their_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert!(is_discrete_convex_lipschitz(&random_convex(64, &mut rng).unwrap(), 1e-12));
            let f = random_lipschitz(64, &mut rng).unwrap();
            assert!(f.values().windows(2).all(|w| (w[1] - w[0]).abs() <= 1.0));
        }
    }
}
