//! Basis-size sweep over grid sizes, with the indicator baseline.

use std::path::Path;
use std::time::Instant;

use omnistat_core::cvxbasis::{approximate_convex, build_cvx_basis, relu_error_profile, Basis};
use omnistat_core::gridfn::delta;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formats::{create_dir, write_csv, write_text};
use crate::svg::{Chart, Series};
use crate::synth::random_convex;
use crate::Result;

/// Convexity tolerance used when certifying random convex targets.
const CONVEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub size: usize,
    pub max_relu_error: f64,
    pub max_convex_error: f64,
    /// Largest `|c1| + Σ|c2(i)|` over the certified convex targets.
    pub max_convex_coefficients: f64,
    /// Size of the indicator baseline: one statistic per bin.
    pub indicator_size: usize,
    /// Piecewise-constant error of the indicator baseline, in bins.
    pub indicator_error: f64,
    pub convex_trials: usize,
}

impl SweepRow {
    pub fn size_ratio(&self) -> f64 {
        self.size as f64 / self.m as f64
    }

    /// `4 m^{2/3} log₂³ m`.
    pub fn size_bound(&self) -> f64 {
        let m = self.m as f64;
        4.0 * m.powf(2.0 / 3.0) * m.log2().powi(3)
    }
}

/// The basis for grid size `m` (a power of two).
pub fn basis_for(m: usize, seed: u64) -> Result<Basis> {
    Ok(build_cvx_basis(1.0 / m as f64, seed)?)
}

/// Builds and certifies the basis for one grid size. The seed drives both
/// the code matrices and the random convex targets.
pub fn sweep_one(m: usize, seed: u64, convex_trials: usize) -> Result<SweepRow> {
    let basis = basis_for(m, seed)?;
    let max_relu_error = relu_error_profile(&basis)?.into_iter().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let mut max_convex_error = 0.0f64;
    let mut max_convex_coefficients = 0.0f64;
    let mut indicator_error = 0.0f64;
    for _ in 0..convex_trials {
        let f = random_convex(m, &mut rng)?;
        let cert = approximate_convex(&basis, &f, CONVEX_TOL)?;
        max_convex_error = max_convex_error.max(cert.sup_error);
        max_convex_coefficients = max_convex_coefficients.max(convex_coefficient_mass(&f)?);
        indicator_error = indicator_error.max(delta(&f)?.values().iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    Ok(SweepRow {
        m,
        size: basis.len(),
        max_relu_error,
        max_convex_error,
        max_convex_coefficients,
        indicator_size: m,
        indicator_error,
        convex_trials,
    })
}

/// `|c1| + Σ|c2(i)|` of the discrete Taylor expansion.
fn convex_coefficient_mass(f: &omnistat_core::gridfn::GridFunction) -> Result<f64> {
    let t = omnistat_core::gridfn::taylor_expand(f)?;
    Ok(t.c1.abs() + t.c2.iter().map(|c| c.abs()).sum::<f64>())
}

/// One row per `m`, plus wall seconds per row.
pub fn sweep_basis(ms: &[usize], seed: u64, convex_trials: usize) -> Result<(Vec<SweepRow>, Vec<f64>)> {
    let mut rows = Vec::with_capacity(ms.len());
    let mut seconds = Vec::with_capacity(ms.len());
    for &m in ms {
        let start = Instant::now();
        rows.push(sweep_one(m, seed, convex_trials)?);
        seconds.push(start.elapsed().as_secs_f64());
    }
    Ok((rows, seconds))
}

pub const SWEEP_HEADER: [&str; 9] = [
    "m",
    "size",
    "size_over_m",
    "size_bound",
    "max_relu_error",
    "max_convex_error",
    "max_convex_coefficients",
    "indicator_size",
    "indicator_error",
];

/// Writes `basis_size.csv`, `basis_size.svg` and, separately so the CSV
/// stays reproducible, `timing.csv`.
pub fn write_sweep(dir: &Path, rows: &[SweepRow], seconds: &[f64]) -> Result<()> {
    create_dir(dir)?;
    write_csv(
        &dir.join("basis_size.csv"),
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.m.to_string(),
                r.size.to_string(),
                format!("{:.6}", r.size_ratio()),
                format!("{:.1}", r.size_bound()),
                format!("{:.12}", r.max_relu_error),
                format!("{:.12}", r.max_convex_error),
                format!("{:.12}", r.max_convex_coefficients),
                r.indicator_size.to_string(),
                format!("{:.12}", r.indicator_error),
            ]
        }),
    )?;
    write_csv(&dir.join("timing.csv"), &["m", "seconds"], rows.iter().zip(seconds).map(|(r, s)| vec![r.m.to_string(), format!("{s:.3}")]))?;
    let mut chart = Chart::new("Basis size against grid size", "m", "size / m");
    chart.log_x = true;
    chart.add(Series::line("convex basis", rows.iter().map(|r| (r.m as f64, r.size_ratio())).collect()));
    chart.add(Series::line("indicator baseline", rows.iter().map(|r| (r.m as f64, 1.0)).collect()));
    write_text(&dir.join("basis_size.svg"), &chart.render())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_meets_the_bounds() {
        let (rows, seconds) = sweep_basis(&[16, 64], 0, 10).unwrap();
        assert_eq!(seconds.len(), 2);
        for r in &rows {
            assert!(r.max_relu_error <= 1.0 / 6.0 + 1e-6, "{r:?}");
            assert!(r.max_convex_error <= 0.5 + 1e-6, "{r:?}");
            assert!(r.max_convex_coefficients <= 3.0 + 1e-9, "{r:?}");
            assert!(r.indicator_error <= 1.0 + 1e-12);
            assert!((r.size as f64) <= r.size_bound());
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        assert_eq!(sweep_one(32, 3, 5).unwrap(), sweep_one(32, 3, 5).unwrap());
    }
}
