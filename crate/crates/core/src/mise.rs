//! Bandwidth scan over `b_n = n^-lambda` against a known truth, and the
//! replicated Monte-Carlo study built on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimator::{default_grid, SeasonView};
use crate::kernels::KernelModel;
use crate::process::{simulate, CoefficientFamily, NoiseModel, Trajectory};
use crate::rng::derive_seed;

/// `0.10, 0.11, ..., 0.80`.
pub fn default_lambda_grid() -> Vec<f64> {
    (10..=80).map(|k| k as f64 / 100.0).collect()
}

/// Mean squared difference between estimates and truth over a grid.
pub fn integrated_squared_error(estimates: &[f64], truth: &[f64]) -> f64 {
    debug_assert_eq!(estimates.len(), truth.len());
    estimates.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum::<f64>() / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiseScan {
    pub lambda_grid: Vec<f64>,
    /// `sqrt(MISE_s(lambda))`, indexed `[lambda][season - 1]`.
    pub root_mise: Vec<Vec<f64>>,
    /// `sum_s sqrt(MISE_s(lambda))`.
    pub objective: Vec<f64>,
    pub best_index: usize,
    pub lambda_hat: f64,
    /// Degenerate cells per lambda (penalised with the squared truth).
    pub degenerate: Vec<usize>,
    pub replication: Option<u64>,
}

impl MiseScan {
    /// `sum_s sqrt(MISE_s(lambda_hat))`.
    pub fn min_objective(&self) -> f64 {
        self.objective[self.best_index]
    }
}

pub fn mise_scan(
    traj: &Trajectory,
    truth: &CoefficientFamily,
    grid_u: &[f64],
    lambda_grid: &[f64],
    kernel: &KernelModel,
) -> Result<MiseScan> {
    if truth.period() != traj.period() {
        return Err(invalid(format!(
            "truth has period {} but trajectory has period {}",
            truth.period(),
            traj.period()
        )));
    }
    if grid_u.is_empty() || lambda_grid.is_empty() {
        return Err(invalid("empty u grid or lambda grid"));
    }
    if grid_u.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
        return Err(invalid("u grid must lie strictly inside (0, 1)"));
    }
    let period = traj.period();
    let n = traj.n() as f64;
    let threshold = crate::estimator::DEGENERACY_RATIO * traj.second_moment();
    let views: Vec<SeasonView> = (1..=period).map(|s| SeasonView::new(traj, s)).collect();
    let truth_values: Vec<Vec<f64>> = (1..=period)
        .map(|s| grid_u.iter().map(|&u| truth.a(s as i64, u)).collect())
        .collect();

    let cells = period * grid_u.len();
    let mut root_mise = Vec::with_capacity(lambda_grid.len());
    let mut objective = Vec::with_capacity(lambda_grid.len());
    let mut degenerate = Vec::with_capacity(lambda_grid.len());
    let mut estimates = vec![0.0; grid_u.len()];
    for &lambda in lambda_grid {
        let b = n.powf(-lambda);
        let norm = 1.0 / (n * b);
        let mut dropped = 0;
        let mut per_season = Vec::with_capacity(period);
        for (view, truth_s) in views.iter().zip(&truth_values) {
            for (est, &u) in estimates.iter_mut().zip(grid_u) {
                let (num, den) = view.raw_sums(u, b, kernel, None);
                *est = if den * norm > threshold {
                    num / den
                } else {
                    // a zero estimate costs the squared truth
                    dropped += 1;
                    0.0
                };
            }
            per_season.push(integrated_squared_error(&estimates, truth_s).sqrt());
        }
        objective.push(per_season.iter().sum());
        root_mise.push(per_season);
        degenerate.push(dropped);
    }
    if degenerate.iter().all(|&d| 2 * d > cells) {
        return Err(Error::AllCellsDegenerate { cells });
    }
    let best_index = objective
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < objective[best] { i } else { best });
    Ok(MiseScan {
        lambda_grid: lambda_grid.to_vec(),
        root_mise,
        objective,
        best_index,
        lambda_hat: lambda_grid[best_index],
        degenerate,
        replication: None,
    })
}

/// One Monte-Carlo study: `replications` independent trajectories, each
/// scanned over the lambda grid.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub coeffs: CoefficientFamily,
    pub coefficient_id: String,
    pub noise: NoiseModel,
    pub kernel: KernelModel,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub grid_u: Vec<f64>,
    pub lambda_grid: Vec<f64>,
}

impl McConfig {
    pub fn new(
        coeffs: CoefficientFamily,
        coefficient_id: impl Into<String>,
        noise: NoiseModel,
        kernel: KernelModel,
        n: usize,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            coeffs,
            coefficient_id: coefficient_id.into(),
            noise,
            kernel,
            n,
            replications,
            master_seed,
            grid_u: default_grid(),
            lambda_grid: default_lambda_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub n: usize,
    pub period: usize,
    pub coefficient_id: String,
    pub noise_id: String,
    pub kernel_id: String,
    pub replications: usize,
    pub master_seed: u64,
    pub dropped: usize,
    pub lambda_bar: f64,
    pub lambda_bar_se: f64,
    /// Mean over replications of `sum_s sqrt(MISE_s(lambda_hat_j))`.
    pub mean_root_mise: f64,
    pub mean_root_mise_se: f64,
    /// `lambda_hat_j` in replication order (dropped replications omitted).
    pub lambda_hats: Vec<f64>,
    pub root_mises: Vec<f64>,
}

impl McReport {
    /// Counts of `lambda_hat` per lambda-grid value.
    pub fn lambda_histogram(&self, lambda_grid: &[f64]) -> Vec<(f64, usize)> {
        lambda_grid
            .iter()
            .map(|&l| (l, self.lambda_hats.iter().filter(|&&h| (h - l).abs() < 1e-12).count()))
            .collect()
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// One replication of the study, seeded with `derive_seed(master, r)`.
pub fn replicate(config: &McConfig, r: u64) -> Result<MiseScan> {
    let traj = simulate(
        &config.coeffs,
        &config.noise,
        config.n,
        derive_seed(config.master_seed, r),
    )?;
    let mut scan = mise_scan(
        &traj,
        &config.coeffs,
        &config.grid_u,
        &config.lambda_grid,
        &config.kernel,
    )?;
    scan.replication = Some(r);
    Ok(scan)
}

/// Runs the study on the current rayon pool. Replications are reduced in
/// index order, so the report does not depend on the number of workers.
pub fn monte_carlo(config: &McConfig) -> Result<McReport> {
    if config.replications == 0 {
        return Err(invalid("need at least one replication"));
    }
    if config.n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let outcomes: Vec<Result<MiseScan>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| replicate(config, r))
        .collect();
    let mut lambda_hats = Vec::with_capacity(outcomes.len());
    let mut root_mises = Vec::with_capacity(outcomes.len());
    let mut dropped = 0;
    for outcome in outcomes {
        match outcome {
            Ok(scan) => {
                lambda_hats.push(scan.lambda_hat);
                root_mises.push(scan.min_objective());
            }
            Err(Error::AllCellsDegenerate { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if lambda_hats.is_empty() {
        return Err(Error::AllCellsDegenerate {
            cells: config.replications,
        });
    }
    let (lambda_bar, lambda_bar_se) = mean_and_se(&lambda_hats);
    let (mean_root_mise, mean_root_mise_se) = mean_and_se(&root_mises);
    Ok(McReport {
        n: config.n,
        period: config.coeffs.period(),
        coefficient_id: config.coefficient_id.clone(),
        noise_id: config.noise.label(),
        kernel_id: config.kernel.name.to_string(),
        replications: config.replications,
        master_seed: config.master_seed,
        dropped,
        lambda_bar,
        lambda_bar_se,
        mean_root_mise,
        mean_root_mise_se,
        lambda_hats,
        root_mises,
    })
}

/// [`monte_carlo`] on a dedicated pool with `threads` workers.
pub fn monte_carlo_with_threads(config: &McConfig, threads: usize) -> Result<McReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| monte_carlo(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::estimate_grid;
    use crate::process::Origin;

    #[test]
    fn grids() {
        let l = default_lambda_grid();
        assert_eq!(l.len(), 71);
        assert_eq!((l[0], l[70]), (0.1, 0.8));
    }

    #[test]
    fn pure_noise_mise_is_mean_squared_estimate() {
        let truth = CoefficientFamily::constant(&[0.0]).unwrap();
        let noise = NoiseModel::gaussian(1.0).unwrap();
        let traj = simulate(&truth, &noise, 300, 5).unwrap();
        let grid = default_grid();
        let k = KernelModel::epanechnikov();
        let scan = mise_scan(&traj, &truth, &grid, &[0.3, 0.5], &k).unwrap();
        for (li, &lambda) in [0.3, 0.5].iter().enumerate() {
            let b = 300f64.powf(-lambda);
            let g = estimate_grid(&traj, &grid, b, &k).unwrap();
            let msq = g.cells[0].iter().map(|c| c.unwrap().a_hat.powi(2)).sum::<f64>() / 99.0;
            assert!((scan.root_mise[li][0] - msq.sqrt()).abs() < 1e-12);
        }
        assert!(scan.objective.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn zero_error_oracle() {
        let t = [0.1, -0.4, 0.9];
        assert_eq!(integrated_squared_error(&t, &t), 0.0);
        assert!((integrated_squared_error(&[0.0, 0.0], &[1.0, 3.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn argmin_ties_go_to_smallest_lambda() {
        // identically zero data: every cell degenerate -> penalty is the
        // (zero) truth, objective ties at 0 everywhere
        let truth = CoefficientFamily::constant(&[0.0]).unwrap();
        let mut values = vec![0.0; 200];
        values[100] = 1.0;
        let traj = Trajectory::new(values, 1, Origin::Ingested).unwrap();
        let scan = mise_scan(&traj, &truth, &[0.5], &[0.2, 0.3, 0.4], &KernelModel::epanechnikov()).unwrap();
        assert_eq!(scan.best_index, 0);
        assert_eq!(scan.lambda_hat, 0.2);
    }

    #[test]
    fn mostly_degenerate_scan_fails() {
        let truth = CoefficientFamily::constant(&[0.5]).unwrap();
        let traj = Trajectory::new(vec![0.0; 100], 1, Origin::Ingested).unwrap();
        assert!(mise_scan(&traj, &truth, &[0.5], &[0.2], &KernelModel::epanechnikov()).is_err());
    }

    #[test]
    fn single_replication_report() {
        let coeffs = CoefficientFamily::constant(&[0.5, -0.3]).unwrap();
        let cfg = McConfig::new(
            coeffs,
            "frozen",
            NoiseModel::gaussian(1.0).unwrap(),
            KernelModel::epanechnikov(),
            100,
            1,
            77,
        );
        let report = monte_carlo(&cfg).unwrap();
        let scan = replicate(&cfg, 0).unwrap();
        assert_eq!(report.lambda_bar, scan.lambda_hat);
        assert_eq!(report.mean_root_mise, scan.min_objective());
        assert_eq!(report.lambda_bar_se, 0.0);
        let hist = report.lambda_histogram(&cfg.lambda_grid);
        assert_eq!(hist.iter().map(|h| h.1).sum::<usize>(), 1);
    }
}
