//! Kernel ratio estimator of the seasonal coefficient functions.
//!
//! For season `s` the observations `j in I_{n,s} = {s, s+T, ..., s+(n-1)T}`
//! are localised around `u` by `K((j/nT - u)/b)`:
//!
//! ```text
//! N_s(u) = 1/(n b) sum_j K(.) X_j X_{j-1}
//! D_s(u) = 1/(n b) sum_j K(.) X_{j-1}^2
//! a_s(u) = N_s(u) / D_s(u)
//! ```
//!
//! Only indices inside [`effective_window`] are visited.
//!
//! Standard errors use the local variance of the regressor `X_{j-1}`, i.e.
//! season `s - 1`, written in the estimated coefficients:
//! `sigma^2 / gamma_{s-1}(u) = (1 - prod_{j<T} a_{s-1-j}^2) / (1 + sum_{i<T-1} prod_{j<=i} a_{s-1-j}^2)`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::kernels::{effective_window, KernelModel};
use crate::process::{CoefficientFamily, MomentProfile, NoiseModel, Trajectory};

/// `D` below `DEGENERACY_RATIO * mean(X^2)` is treated as an empty window.
pub const DEGENERACY_RATIO: f64 = 1e-12;

/// Cap on `prod a^2` in the studentisation.
pub const PRODUCT_CLAMP: f64 = 1.0 - 1e-6;

/// The 99-point evaluation grid `0.01, 0.02, ..., 0.99`.
pub fn default_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub a_hat: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Per-season regression pairs, laid out for repeated kernel sums.
#[derive(Debug, Clone)]
pub(crate) struct SeasonView {
    season: usize,
    period: usize,
    n: usize,
    /// `X_j X_{j-1}` for `j = s + kT`.
    cross: Vec<f64>,
    /// `X_{j-1}^2`.
    lagged_sq: Vec<f64>,
}

impl SeasonView {
    pub(crate) fn new(traj: &Trajectory, season: usize) -> Self {
        let period = traj.period();
        let n = traj.n();
        let mut cross = Vec::with_capacity(n);
        let mut lagged_sq = Vec::with_capacity(n);
        for k in 0..n {
            let j = season + k * period;
            let (x, prev) = (traj.x(j), traj.x(j - 1));
            cross.push(x * prev);
            lagged_sq.push(prev * prev);
        }
        Self {
            season,
            period,
            n,
            cross,
            lagged_sq,
        }
    }

    /// Unnormalised kernel sums `(sum K X_j X_{j-1}, sum K X_{j-1}^2)` around
    /// `u`, optionally leaving out the `k`-th pair.
    pub(crate) fn raw_sums(&self, u: f64, bandwidth: f64, kernel: &KernelModel, exclude: Option<usize>) -> (f64, f64) {
        let total = (self.n * self.period) as f64;
        let period = self.period as f64;
        let season = self.season as f64;
        let w = effective_window(kernel, self.n as f64, bandwidth);
        let lo = (((u - w) * total - season) / period).ceil().max(0.0);
        let hi = (((u + w) * total - season) / period).floor();
        if hi < lo {
            return (0.0, 0.0);
        }
        let lo = lo as usize;
        let hi = (hi as usize).min(self.n - 1);
        let inv_b = 1.0 / bandwidth;
        let (mut num, mut den) = (0.0, 0.0);
        for k in lo..=hi {
            if exclude == Some(k) {
                continue;
            }
            let x = (season + k as f64 * period) / total;
            let kv = kernel.evaluate((x - u) * inv_b);
            num += kv * self.cross[k];
            den += kv * self.lagged_sq[k];
        }
        (num, den)
    }
}

fn degeneracy_threshold(traj: &Trajectory) -> f64 {
    DEGENERACY_RATIO * traj.second_moment()
}

fn cell(
    view: &SeasonView,
    u: f64,
    bandwidth: f64,
    kernel: &KernelModel,
    threshold: f64,
) -> std::result::Result<Estimate, f64> {
    let (num, den) = view.raw_sums(u, bandwidth, kernel, None);
    let norm = 1.0 / (view.n as f64 * bandwidth);
    let (numerator, denominator) = (num * norm, den * norm);
    if !(denominator > threshold) {
        return Err(denominator);
    }
    Ok(Estimate {
        a_hat: numerator / denominator,
        numerator,
        denominator,
    })
}

fn check_inputs(traj: &Trajectory, s: usize, u: f64, bandwidth: f64) -> Result<()> {
    if s == 0 || s > traj.period() {
        return Err(invalid(format!("season {s} outside 1..={}", traj.period())));
    }
    check_point(u)?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if traj.len() < 2 {
        return Err(invalid("trajectory needs at least 2 observations"));
    }
    Ok(())
}

fn check_point(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(invalid(format!("evaluation point {u} is outside (0, 1)")));
    }
    Ok(())
}

/// `a_s(u)` with its numerator and denominator.
pub fn estimate(traj: &Trajectory, s: usize, u: f64, bandwidth: f64, kernel: &KernelModel) -> Result<Estimate> {
    check_inputs(traj, s, u, bandwidth)?;
    let view = SeasonView::new(traj, s);
    cell(&view, u, bandwidth, kernel, degeneracy_threshold(traj)).map_err(|denominator| Error::DegenerateDenominator {
        season: s,
        u,
        denominator,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellInference {
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// The coefficient product hit [`PRODUCT_CLAMP`].
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inference {
    pub level: f64,
    /// `[season - 1][grid index]`; `None` where any needed estimate is missing.
    pub cells: Vec<Vec<Option<CellInference>>>,
}

/// Estimates over seasons `1..=T` and a grid of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateGrid {
    pub period: usize,
    pub n: usize,
    pub grid: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: KernelModel,
    /// `[season - 1][grid index]`; `None` marks a degenerate cell.
    pub cells: Vec<Vec<Option<Estimate>>>,
    pub inference: Option<Inference>,
}

impl EstimateGrid {
    pub fn a_hat(&self, s: usize, i: usize) -> Option<f64> {
        self.cells[s - 1][i].map(|e| e.a_hat)
    }

    pub fn inference_at(&self, s: usize, i: usize) -> Option<CellInference> {
        self.inference.as_ref().and_then(|inf| inf.cells[s - 1][i])
    }

    pub fn stderr(&self, s: usize, i: usize) -> Option<f64> {
        self.inference_at(s, i).map(|c| c.stderr)
    }

    pub fn degenerate_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_none()).count()
    }

    pub fn total_cells(&self) -> usize {
        self.period * self.grid.len()
    }
}

/// Estimates on every `(s, u_i)`; degenerate cells are recorded as missing.
pub fn estimate_grid(traj: &Trajectory, grid: &[f64], bandwidth: f64, kernel: &KernelModel) -> Result<EstimateGrid> {
    if grid.is_empty() {
        return Err(invalid("empty evaluation grid"));
    }
    for &u in grid {
        check_point(u)?;
    }
    check_inputs(traj, 1, grid[0], bandwidth)?;
    let threshold = degeneracy_threshold(traj);
    let cells: Vec<Vec<Option<Estimate>>> = (1..=traj.period())
        .into_par_iter()
        .map(|s| {
            let view = SeasonView::new(traj, s);
            grid.iter()
                .map(|&u| cell(&view, u, bandwidth, kernel, threshold).ok())
                .collect()
        })
        .collect();
    let out = EstimateGrid {
        period: traj.period(),
        n: traj.n(),
        grid: grid.to_vec(),
        bandwidth,
        kernel: *kernel,
        cells,
        inference: None,
    };
    if out.degenerate_cells() == out.total_cells() {
        return Err(Error::AllCellsDegenerate {
            cells: out.total_cells(),
        });
    }
    Ok(out)
}

/// `sigma^2 / gamma_{s-1}` from the coefficient values of all seasons at one
/// point (`a_at[k]` holds season `k + 1`). Returns the ratio and whether the
/// full-period product had to be clamped.
pub fn plug_in_variance_ratio(a_at: &[f64], s: usize) -> (f64, bool) {
    let period = a_at.len() as i64;
    let sq = |k: i64| a_at[(k - 1).rem_euclid(period) as usize].powi(2);
    let regressor = s as i64 - 1;
    let mut partial = 1.0;
    let mut sum = 1.0;
    for j in 0..period - 1 {
        partial *= sq(regressor - j);
        sum += partial;
    }
    let mut full = partial * sq(regressor - (period - 1));
    let clamped = full > PRODUCT_CLAMP;
    if clamped {
        full = PRODUCT_CLAMP;
    }
    ((1.0 - full) / sum, clamped)
}

/// Asymptotic standard deviation of `a_s(u)`:
/// `sqrt(int K^2 * ratio / (n b))`.
pub fn asymptotic_stderr(ratio: f64, n: usize, bandwidth: f64, kernel: &KernelModel) -> f64 {
    (kernel.l2_norm_sq * ratio / (n as f64 * bandwidth)).sqrt()
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Two-sided normal quantile `z_{(1+level)/2}`.
pub fn normal_quantile(level: f64) -> f64 {
    standard_normal().inverse_cdf(0.5 * (1.0 + level))
}

/// Fills standard errors and `level` confidence intervals.
pub fn asymptotic_ci(mut est: EstimateGrid, level: f64) -> Result<EstimateGrid> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let z = normal_quantile(level);
    let cells = (0..est.grid.len())
        .map(|i| {
            let column: Option<Vec<f64>> = (1..=est.period).map(|s| est.a_hat(s, i)).collect::<Option<Vec<_>>>();
            (1..=est.period)
                .map(|s| {
                    let column = column.as_ref()?;
                    let (ratio, clamped) = plug_in_variance_ratio(column, s);
                    let stderr = asymptotic_stderr(ratio, est.n, est.bandwidth, &est.kernel);
                    let a = column[s - 1];
                    Some(CellInference {
                        stderr,
                        ci_lo: a - z * stderr,
                        ci_hi: a + z * stderr,
                        clamped,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    // transpose [i][s] -> [s][i]
    let cells = (0..est.period)
        .map(|s| cells.iter().map(|col| col[s]).collect())
        .collect();
    est.inference = Some(Inference { level, cells });
    Ok(est)
}

/// Limit mean of `sqrt(n b_n) (a_s(u) - a_s(u))` when `b_n = c n^{-1/5}`:
///
/// ```text
/// mu(u) = c^{5/2} / g(u) * (a''(u) g(u) / 2 + a'(u) g'(u)) * int z^2 K
/// ```
///
/// with `g` the local variance of the regressor `X_{j-1}`. `g'` uses a
/// central difference with step `1e-5`.
pub fn bias_mu(
    coeffs: &CoefficientFamily,
    noise: &NoiseModel,
    s: usize,
    u: f64,
    c: f64,
    kernel: &KernelModel,
) -> Result<f64> {
    if s == 0 || s > coeffs.period() {
        return Err(invalid(format!("season {s} outside 1..={}", coeffs.period())));
    }
    check_point(u)?;
    const H: f64 = 1e-5;
    let (d1, d2) = coeffs.function(s as i64).derivatives(u)?;
    let moments = MomentProfile::new(coeffs, noise);
    let regressor = s as i64 - 1;
    let g = moments.gamma2(regressor, u);
    let dg = (moments.gamma2(regressor, u + H) - moments.gamma2(regressor, u - H)) / (2.0 * H);
    Ok(c.powf(2.5) / g * (0.5 * d2 * g + d1 * dg) * kernel.second_moment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub season: usize,
    pub u: f64,
    pub a_hat: f64,
    pub statistic: f64,
    pub null_value: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
    pub clamped: bool,
}

/// Wald-type test of `H0: a_s(u) = c_a` with a standard normal reference.
pub fn test_statistic(
    traj: &Trajectory,
    s: usize,
    u: f64,
    c_a: f64,
    bandwidth: f64,
    kernel: &KernelModel,
) -> Result<TestResult> {
    check_inputs(traj, s, u, bandwidth)?;
    let a_at = (1..=traj.period())
        .map(|k| estimate(traj, k, u, bandwidth, kernel).map(|e| e.a_hat))
        .collect::<Result<Vec<_>>>()?;
    let (ratio, clamped) = plug_in_variance_ratio(&a_at, s);
    let stderr = asymptotic_stderr(ratio, traj.n(), bandwidth, kernel);
    let a_hat = a_at[s - 1];
    let statistic = (a_hat - c_a) / stderr;
    let p_value = (2.0 * (1.0 - standard_normal().cdf(statistic.abs()))).clamp(0.0, 1.0);
    Ok(TestResult {
        season: s,
        u,
        a_hat,
        statistic,
        null_value: c_a,
        p_value,
        reject_at_5pct: p_value < 0.05,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{simulate, CoefficientFn, Origin};

    fn ar(a: &[f64], var: f64, n: usize, seed: u64) -> Trajectory {
        let c = CoefficientFamily::constant(a).unwrap();
        simulate(&c, &NoiseModel::gaussian(var).unwrap(), n, seed).unwrap()
    }

    /// Direct sum over every index of the season, no windowing.
    fn brute_force(traj: &Trajectory, s: usize, u: f64, b: f64, k: &KernelModel) -> (f64, f64) {
        let total = traj.len() as f64;
        let (mut num, mut den) = (0.0, 0.0);
        let mut j = s;
        while j <= traj.len() {
            let kv = k.evaluate((j as f64 / total - u) / b);
            num += kv * traj.x(j) * traj.x(j - 1);
            den += kv * traj.x(j - 1).powi(2);
            j += traj.period();
        }
        let norm = 1.0 / (traj.n() as f64 * b);
        (num * norm, den * norm)
    }

    #[test]
    fn zero_trajectory_is_degenerate() {
        let traj = Trajectory::new(vec![0.0; 20], 2, Origin::Ingested).unwrap();
        let err = estimate(&traj, 1, 0.5, 0.2, &KernelModel::epanechnikov()).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }));
        assert!(matches!(
            estimate_grid(&traj, &[0.3, 0.5], 0.2, &KernelModel::gaussian()),
            Err(Error::AllCellsDegenerate { cells: 4 })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let traj = ar(&[0.5, 0.2], 1.0, 50, 1);
        let k = KernelModel::epanechnikov();
        assert!(estimate(&traj, 0, 0.5, 0.1, &k).is_err());
        assert!(estimate(&traj, 3, 0.5, 0.1, &k).is_err());
        assert!(estimate(&traj, 1, 0.0, 0.1, &k).is_err());
        assert!(estimate(&traj, 1, 1.0, 0.1, &k).is_err());
        assert!(estimate(&traj, 1, 0.5, 0.0, &k).is_err());
        assert!(estimate_grid(&traj, &[0.5, 1.2], 0.1, &k).is_err());
    }

    #[test]
    fn windowed_sums_match_brute_force() {
        let traj = ar(&[0.6, -0.3, 0.1], 2.0, 300, 7);
        for k in [KernelModel::epanechnikov(), KernelModel::gaussian()] {
            for s in 1..=3 {
                for &u in &[0.01, 0.3, 0.77, 0.99] {
                    let e = estimate(&traj, s, u, 0.08, &k).unwrap();
                    let (num, den) = brute_force(&traj, s, u, 0.08, &k);
                    assert!((e.numerator - num).abs() <= 1e-6 * num.abs().max(1e-3));
                    assert!((e.denominator - den).abs() <= 1e-6 * den);
                }
            }
        }
    }

    #[test]
    fn ratio_identity_and_scale_equivariance() {
        let traj = ar(&[0.4, 0.7], 1.0, 400, 2);
        let k = KernelModel::epanechnikov();
        let g = estimate_grid(&traj, &default_grid(), 0.1, &k).unwrap();
        for row in &g.cells {
            for e in row.iter().flatten() {
                let lhs = e.a_hat * e.denominator;
                assert!((lhs - e.numerator).abs() <= 8.0 * f64::EPSILON * e.numerator.abs());
            }
        }
        let scaled = traj.scaled(-3.7);
        for &u in &[0.2, 0.5, 0.9] {
            let a = estimate(&traj, 2, u, 0.1, &k).unwrap().a_hat;
            let b = estimate(&scaled, 2, u, 0.1, &k).unwrap().a_hat;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_grid_matches_scalar() {
        let traj = ar(&[0.3], 1.0, 500, 4);
        let k = KernelModel::gaussian();
        let g = estimate_grid(&traj, &[0.5], 0.1, &k).unwrap();
        assert_eq!(g.cells[0][0], Some(estimate(&traj, 1, 0.5, 0.1, &k).unwrap()));
        assert_eq!(default_grid().len(), 99);
        assert_eq!(default_grid()[0], 0.01);
        assert_eq!(default_grid()[98], 0.99);
    }

    #[test]
    fn stderr_for_zero_coefficient() {
        let traj = ar(&[0.0], 1.0, 100, 1);
        let mut g = estimate_grid(&traj, &[0.5], 0.2, &KernelModel::epanechnikov()).unwrap();
        for row in g.cells.iter_mut() {
            for cell in row.iter_mut() {
                cell.as_mut().unwrap().a_hat = 0.0;
            }
        }
        let g = asymptotic_ci(g, 0.95).unwrap();
        let se = g.stderr(1, 0).unwrap();
        assert!((se - (0.6_f64 / (100.0 * 0.2)).sqrt()).abs() < 1e-15);
        let inf = g.inference_at(1, 0).unwrap();
        assert!((inf.ci_hi - 1.959_963_985 * se).abs() < 1e-8);
    }

    #[test]
    fn stderr_scales_with_n_b() {
        let k = KernelModel::epanechnikov();
        let s1 = asymptotic_stderr(0.75, 1000, 0.1, &k).powi(2);
        let s2 = asymptotic_stderr(0.75, 2000, 0.1, &k).powi(2);
        assert!((s1 / s2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plug_in_ratio_matches_gamma2_of_previous_season() {
        let a = [0.5, -0.8, 0.3];
        let coeffs = CoefficientFamily::constant(&a).unwrap();
        let noise = NoiseModel::gaussian(2.5).unwrap();
        let m = MomentProfile::new(&coeffs, &noise);
        for s in 1..=3 {
            let (ratio, clamped) = plug_in_variance_ratio(&a, s);
            assert!(!clamped);
            let expected = noise.variance() / m.gamma2(s as i64 - 1, 0.5);
            assert!((ratio - expected).abs() < 1e-14);
        }
        let (ratio, clamped) = plug_in_variance_ratio(&[1.2], 1);
        assert!(clamped);
        assert!((ratio - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn test_statistic_at_estimate_is_zero() {
        let traj = ar(&[0.5], 1.0, 400, 9);
        let k = KernelModel::epanechnikov();
        let a = estimate(&traj, 1, 0.5, 0.15, &k).unwrap().a_hat;
        let r = test_statistic(&traj, 1, 0.5, a, 0.15, &k).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject_at_5pct);
    }

    #[test]
    fn bias_terms() {
        let k = KernelModel::epanechnikov();
        let noise = NoiseModel::gaussian(4.0).unwrap();
        let flat = CoefficientFamily::constant(&[0.4]).unwrap();
        assert_eq!(bias_mu(&flat, &noise, 1, 0.5, 1.0, &k).unwrap(), 0.0);

        // T = 1: g = s2/(1-a^2), g'/g = 2 a a'/(1-a^2)
        let coeffs = CoefficientFamily::new(vec![CoefficientFn::closed(|u| 0.9 * (3.0 * u).cos())], 2.0).unwrap();
        let u: f64 = 0.5;
        let a = 0.9 * (3.0 * u).cos();
        let d1 = -2.7 * (3.0 * u).sin();
        let d2 = -8.1 * (3.0 * u).cos();
        let expected = (0.5 * d2 + d1 * 2.0 * a * d1 / (1.0 - a * a)) * 0.2;
        let mu = bias_mu(&coeffs, &noise, 1, u, 1.0, &k).unwrap();
        assert!((mu - expected).abs() < 1e-5, "{mu} vs {expected}");
        let mu2 = bias_mu(&coeffs, &noise, 1, u, 2.0, &k).unwrap();
        assert!((mu2 / mu - 2f64.powf(2.5)).abs() < 1e-9);

        let path = CoefficientFamily::new(vec![CoefficientFn::interpolated(vec![0.0, 0.5]).unwrap()], 1.0).unwrap();
        assert!(matches!(
            bias_mu(&path, &noise, 1, 0.5, 1.0, &k),
            Err(Error::DerivativeUnavailable(_))
        ));
    }
}
