//! Exact fractional Brownian motion on a uniform grid of `[0, 1]`.
//!
//! Fractional Gaussian noise is drawn by circulant embedding of its
//! autocovariance `g(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2` and then
//! cumulatively summed. If the embedding has negative eigenvalues the noise is
//! drawn from a Cholesky factor of the Toeplitz covariance instead.

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Synthesis {
    CirculantEmbedding,
    Cholesky,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FbmSample {
    /// `B_H(k / m)` for `k = 0..=m`.
    pub values: Vec<f64>,
    pub method: Synthesis,
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

fn check(hurst: f64, grid_size: usize) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(invalid(format!("Hurst exponent must lie in (0, 1), got {hurst}")));
    }
    if grid_size < 2 {
        return Err(invalid("fBm grid needs at least 2 steps"));
    }
    Ok(())
}

/// Eigenvalues of the minimal circulant embedding (length `2m`).
fn embedding_eigenvalues(hurst: f64, m: usize) -> Vec<f64> {
    let len = 2 * m;
    let mut row: Vec<Complex<f64>> = (0..len)
        .map(|k| {
            let lag = if k <= m { k } else { len - k };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut row);
    row.into_iter().map(|c| c.re).collect()
}

fn circulant_fgn(eigen: &[f64], m: usize, rng: &mut Rng) -> Vec<f64> {
    let len = eigen.len();
    let mut w: Vec<Complex<f64>> = eigen
        .iter()
        .map(|&lam| {
            let scale = (lam.max(0.0) / len as f64).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(scale * re, scale * im)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut w);
    w[..m].iter().map(|c| c.re).collect()
}

/// Unit-step fGn of length `m` via a Cholesky factor; `O(m^3)`.
pub fn cholesky_fgn(hurst: f64, m: usize, rng: &mut Rng) -> Vec<f64> {
    let cov = |i: usize, j: usize| fgn_autocovariance(hurst, i.abs_diff(j));
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut sum = cov(i, j);
            for k in 0..j {
                sum -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = if i == j {
                sum.max(0.0).sqrt()
            } else {
                sum / l[j * m + j]
            };
        }
    }
    let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    (0..m).map(|i| (0..=i).map(|k| l[i * m + k] * z[k]).sum()).collect()
}

/// fBm with Hurst exponent `hurst` at `k / grid_size`, `k = 0..=grid_size`.
pub fn synthesize_fbm(hurst: f64, grid_size: usize, seed: u64) -> Result<FbmSample> {
    check(hurst, grid_size)?;
    let mut rng = rng_from_seed(seed);
    let eigen = embedding_eigenvalues(hurst, grid_size);
    let max = eigen.iter().cloned().fold(0.0, f64::max);
    let (noise, method) = if eigen.iter().all(|&l| l >= -1e-10 * max) {
        (
            circulant_fgn(&eigen, grid_size, &mut rng),
            Synthesis::CirculantEmbedding,
        )
    } else {
        (cholesky_fgn(hurst, grid_size, &mut rng), Synthesis::Cholesky)
    };
    let step = (grid_size as f64).powf(-hurst);
    let mut values = Vec::with_capacity(grid_size + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for z in noise {
        acc += z * step;
        values.push(acc);
    }
    Ok(FbmSample { values, method })
}

pub fn fbm_path(hurst: f64, grid_size: usize, seed: u64) -> Result<Vec<f64>> {
    synthesize_fbm(hurst, grid_size, seed).map(|s| s.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag1_autocorrelation(x: &[f64]) -> f64 {
        let m = x.len() as f64;
        let mean = x.iter().sum::<f64>() / m;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let cov = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>();
        cov / var
    }

    fn increments(path: &[f64]) -> Vec<f64> {
        path.windows(2).map(|w| w[1] - w[0]).collect()
    }

    #[test]
    fn starts_at_zero_and_has_requested_length() {
        let p = fbm_path(0.3, 64, 1).unwrap();
        assert_eq!(p.len(), 65);
        assert_eq!(p[0], 0.0);
        assert!(fbm_path(1.0, 64, 1).is_err());
        assert!(fbm_path(0.0, 64, 1).is_err());
        assert!(fbm_path(0.5, 1, 1).is_err());
    }

    #[test]
    fn embedding_is_nonnegative_for_common_exponents() {
        for h in [0.1, 0.3, 0.5, 0.7, 0.8, 0.95] {
            let s = synthesize_fbm(h, 1 << 10, 3).unwrap();
            assert_eq!(s.method, Synthesis::CirculantEmbedding);
        }
    }

    #[test]
    fn increment_correlation() {
        let m = 1 << 14;
        let white = increments(&fbm_path(0.5, m, 11).unwrap());
        assert!(lag1_autocorrelation(&white).abs() < 0.05);
        let persistent = increments(&fbm_path(0.8, m, 12).unwrap());
        let target = 2f64.powf(0.6) - 1.0;
        assert!((lag1_autocorrelation(&persistent) - target).abs() < 0.05);
    }

    #[test]
    fn cholesky_matches_autocovariance() {
        let (h, m, reps) = (0.8, 6, 20_000);
        let mut rng = rng_from_seed(5);
        let mut acc = vec![0.0; m];
        for _ in 0..reps {
            let z = cholesky_fgn(h, m, &mut rng);
            for (a, zl) in acc.iter_mut().zip(&z) {
                *a += z[0] * zl;
            }
        }
        for (lag, a) in acc.iter().enumerate() {
            let emp = a / reps as f64;
            assert!((emp - fgn_autocovariance(h, lag)).abs() < 0.05, "lag {lag}: {emp}");
        }
    }
}
