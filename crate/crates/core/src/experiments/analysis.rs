//! Per-season coefficient profiles for an observed (preprocessed) series.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::estimator::{asymptotic_ci, estimate_grid};
use crate::kernels::KernelModel;
use crate::mise::default_lambda_grid;
use crate::period::{cv_criterion, CvStyle};
use crate::process::Trajectory;

/// `n^{-1/5}`.
pub fn default_bandwidth(n: usize) -> f64 {
    (n as f64).powf(-0.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub s: usize,
    pub u: f64,
    pub a_hat: Option<f64>,
    pub stderr: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

/// `a_s(u)` with `level` intervals for `s = 1..=period` and each `u`.
///
/// The trailing `len mod period` observations are dropped; missing cells
/// (empty kernel windows) come back as `None`.
pub fn analyze(
    residual: &[f64],
    period: usize,
    u_list: &[f64],
    kernel: &KernelModel,
    bandwidth: Option<f64>,
    level: f64,
) -> Result<Vec<ProfileRow>> {
    let traj = Trajectory::from_series(residual.to_vec(), period)?;
    let b = bandwidth.unwrap_or_else(|| default_bandwidth(traj.n()));
    let grid = asymptotic_ci(estimate_grid(&traj, u_list, b, kernel)?, level)?;
    let mut rows = Vec::with_capacity(period * u_list.len());
    for s in 1..=period {
        for (i, &u) in u_list.iter().enumerate() {
            let inf = grid.inference_at(s, i);
            rows.push(ProfileRow {
                s,
                u,
                a_hat: grid.a_hat(s, i),
                stderr: inf.map(|c| c.stderr),
                ci_lo: inf.map(|c| c.ci_lo),
                ci_hi: inf.map(|c| c.ci_hi),
            });
        }
    }
    Ok(rows)
}

/// Truth-free bandwidth choice for a series with known period: the
/// `b = n^-lambda` minimising the leave-one-out prediction error over the
/// lambda grid. Returns `(lambda, b)`.
pub fn select_bandwidth_cv(traj: &Trajectory, kernel: &KernelModel) -> Result<(f64, f64)> {
    let n = traj.n() as f64;
    if traj.n() < 2 {
        return Err(invalid("need at least two periods of data"));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for lambda in default_lambda_grid() {
        let b = n.powf(-lambda);
        let (cv, _) = cv_criterion(traj.values(), traj.period(), kernel, b, CvStyle::Loo)?;
        if best.is_none_or(|(_, _, v)| cv < v) {
            best = Some((lambda, b, cv));
        }
    }
    let (lambda, b, _) = best.expect("non-empty lambda grid");
    Ok((lambda, b))
}
