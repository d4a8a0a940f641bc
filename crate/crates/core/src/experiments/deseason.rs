//! Additive trend + seasonal removal.
//!
//! The trend is a centred moving average (default width `2 * period + 1`);
//! near the ends the window shrinks symmetrically to what is available, so
//! linear trends are reproduced everywhere. Seasonal effects are the
//! per-phase means of the detrended values over the interior (where the full
//! window fits); their average is moved into the trend so that the seasonal
//! component sums to zero over one period.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub period: usize,
    pub trend_window: usize,
    pub trend: Vec<f64>,
    /// One value per phase `0..period`; phase of index `i` is `i % period`.
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    /// Indices where the full moving-average window is available.
    pub interior: std::ops::Range<usize>,
}

fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let len = values.len();
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..len)
        .map(|i| {
            let r = half.min(i).min(len - 1 - i);
            // direct sum keeps interior values exact for short windows
            if r <= 64 {
                values[i - r..=i + r].iter().sum::<f64>() / (2 * r + 1) as f64
            } else {
                (prefix[i + r + 1] - prefix[i - r]) / (2 * r + 1) as f64
            }
        })
        .collect()
}

pub fn deseasonalize(values: &[f64], period: usize, trend_window: Option<usize>) -> Result<Decomposition> {
    let len = values.len();
    if period == 0 {
        return Err(invalid("period must be positive"));
    }
    if 3 * period > len {
        return Err(invalid(format!(
            "period {period} is longer than a third of the series ({len} values)"
        )));
    }
    let window = trend_window.unwrap_or(2 * period + 1);
    if window.is_multiple_of(2) || window > len {
        return Err(invalid(format!(
            "trend window must be odd and at most {len}, got {window}"
        )));
    }
    let half = window / 2;
    let ma = moving_average(values, half);
    let detrended: Vec<f64> = values.iter().zip(&ma).map(|(x, m)| x - m).collect();

    let interior = half..len - half;
    let phase_means = |range: std::ops::Range<usize>| {
        let mut sums = vec![0.0; period];
        let mut counts = vec![0usize; period];
        for i in range {
            sums[i % period] += detrended[i];
            counts[i % period] += 1;
        }
        if counts.contains(&0) {
            None
        } else {
            Some(sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect::<Vec<_>>())
        }
    };
    let means = phase_means(interior.clone())
        .or_else(|| phase_means(0..len))
        .expect("every phase occurs at least three times");
    let level = means.iter().sum::<f64>() / period as f64;
    let seasonal: Vec<f64> = means.iter().map(|m| m - level).collect();
    let trend: Vec<f64> = ma.iter().map(|m| m + level).collect();
    let residual = (0..len).map(|i| values[i] - trend[i] - seasonal[i % period]).collect();
    Ok(Decomposition {
        period,
        trend_window: window,
        trend,
        seasonal,
        residual,
        interior,
    })
}
