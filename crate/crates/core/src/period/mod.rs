//! Period selection by cross-validation, plus the random-path test
//! functions used in the simulation studies.

pub mod fbm;
pub mod test_functions;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use fbm::{fbm_path, synthesize_fbm, FbmSample, Synthesis};
pub use test_functions::{make_test_function, TestFunctionKind};

use crate::error::{invalid, Error, Result};
use crate::estimator::{SeasonView, DEGENERACY_RATIO};
use crate::kernels::KernelModel;
use crate::process::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CvStyle {
    /// Predictions reuse the full-sample fit.
    Full,
    /// Observation `j` is left out of its own prediction.
    Loo,
}

impl FromStr for CvStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "in-sample" => Ok(CvStyle::Full),
            "loo" | "leave-one-out" => Ok(CvStyle::Loo),
            other => Err(invalid(format!("unknown cv style `{other}`"))),
        }
    }
}

impl fmt::Display for CvStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvStyle::Full => "full",
            CvStyle::Loo => "loo",
        })
    }
}

/// Bandwidth shared by every candidate period; `N` is the full series length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CvBandwidth {
    /// `b = N^-exponent`.
    PowerLaw(f64),
    Fixed(f64),
}

impl Default for CvBandwidth {
    fn default() -> Self {
        CvBandwidth::PowerLaw(1.0 / 3.0)
    }
}

impl CvBandwidth {
    pub fn bandwidth(&self, len: usize) -> f64 {
        match *self {
            CvBandwidth::PowerLaw(e) => (len as f64).powf(-e),
            CvBandwidth::Fixed(b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodScan {
    pub t_max: usize,
    /// `CV(tau)` for `tau = 1..=t_max`.
    pub cv: Vec<f64>,
    pub t_hat: usize,
    /// Terms predicted as zero because their fit was degenerate, per `tau`.
    pub fallbacks: Vec<usize>,
    pub style: CvStyle,
}

/// Prediction-error criterion for candidate period `tau`:
/// `sum_{j=2}^{N} (X_j - a_j^{(tau)}(j/N) X_{j-1})^2`.
pub fn cv_criterion(
    series: &[f64],
    tau: usize,
    kernel: &KernelModel,
    bandwidth: f64,
    style: CvStyle,
) -> Result<(f64, usize)> {
    let len = series.len();
    if tau == 0 || len / tau < 2 {
        return Err(invalid(format!("series of length {len} too short for period {tau}")));
    }
    let n = len / tau;
    let fit = Trajectory::from_series(series.to_vec(), tau)?;
    let views: Vec<SeasonView> = (1..=tau).map(|s| SeasonView::new(&fit, s)).collect();
    let threshold = DEGENERACY_RATIO * fit.second_moment() * n as f64 * bandwidth;
    let mut cv = 0.0;
    let mut fallbacks = 0;
    for j in 2..=len {
        let s = (j - 1) % tau + 1;
        let exclude = match style {
            CvStyle::Loo if j <= n * tau => Some((j - s) / tau),
            _ => None,
        };
        let u = j as f64 / len as f64;
        let (num, den) = views[s - 1].raw_sums(u, bandwidth, kernel, exclude);
        let a = if den > threshold {
            num / den
        } else {
            fallbacks += 1;
            0.0
        };
        cv += (series[j - 1] - a * series[j - 2]).powi(2);
    }
    Ok((cv, fallbacks))
}

/// Scans `tau = 1..=t_max`; the estimate is the smallest minimiser.
pub fn cv_period(
    series: &[f64],
    t_max: usize,
    kernel: &KernelModel,
    bandwidth: CvBandwidth,
    style: CvStyle,
) -> Result<PeriodScan> {
    if t_max == 0 {
        return Err(invalid("t_max must be at least 1"));
    }
    if series.len() < 10 * t_max {
        return Err(invalid(format!(
            "series of length {} is shorter than 10 * t_max = {}",
            series.len(),
            10 * t_max
        )));
    }
    let mut cv = Vec::with_capacity(t_max);
    let mut fallbacks = Vec::with_capacity(t_max);
    for tau in 1..=t_max {
        let (value, dropped) = cv_criterion(series, tau, kernel, bandwidth.bandwidth(series.len()), style)?;
        cv.push(value);
        fallbacks.push(dropped);
    }
    let best = cv
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v < cv[b] { i } else { b });
    Ok(PeriodScan {
        t_max,
        cv,
        t_hat: best + 1,
        fallbacks,
        style,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{simulate, CoefficientFamily, NoiseModel};

    #[test]
    fn t_max_one_is_trivial() {
        let c = CoefficientFamily::constant(&[0.4]).unwrap();
        let x = simulate(&c, &NoiseModel::gaussian(1.0).unwrap(), 100, 1).unwrap();
        let scan = cv_period(
            x.values(),
            1,
            &KernelModel::epanechnikov(),
            CvBandwidth::default(),
            CvStyle::Loo,
        )
        .unwrap();
        assert_eq!(scan.t_hat, 1);
        assert_eq!(scan.cv.len(), 1);
        assert!(scan.cv[0] >= 0.0);
    }

    #[test]
    fn rejects_short_series() {
        let k = KernelModel::epanechnikov();
        assert!(cv_period(&[1.0; 50], 6, &k, CvBandwidth::default(), CvStyle::Loo).is_err());
        assert!(cv_period(&[1.0; 50], 0, &k, CvBandwidth::default(), CvStyle::Loo).is_err());
    }

    #[test]
    fn leave_one_out_never_beats_in_sample_by_construction_on_average() {
        // LOO residuals are larger than in-sample residuals for the same fit
        let c = CoefficientFamily::constant(&[0.6, -0.6]).unwrap();
        let x = simulate(&c, &NoiseModel::gaussian(1.0).unwrap(), 500, 3).unwrap();
        let k = KernelModel::epanechnikov();
        let (loo, _) = cv_criterion(x.values(), 2, &k, 0.1, CvStyle::Loo).unwrap();
        let (full, _) = cv_criterion(x.values(), 2, &k, 0.1, CvStyle::Full).unwrap();
        assert!(loo > full);
    }

    #[test]
    fn detects_alternating_period() {
        let c = CoefficientFamily::constant(&[0.8, -0.8]).unwrap();
        let x = simulate(&c, &NoiseModel::gaussian(1.0).unwrap(), 1000, 8).unwrap();
        let scan = cv_period(
            x.values(),
            4,
            &KernelModel::epanechnikov(),
            CvBandwidth::default(),
            CvStyle::Loo,
        )
        .unwrap();
        assert_eq!(scan.t_hat, 2);
        assert!(scan.cv[0] > scan.cv[1] && scan.cv[2] > scan.cv[1]);
    }

    #[test]
    fn style_and_bandwidth_rules() {
        assert_eq!("loo".parse::<CvStyle>().unwrap(), CvStyle::Loo);
        assert_eq!("full".parse::<CvStyle>().unwrap(), CvStyle::Full);
        assert!("x".parse::<CvStyle>().is_err());
        assert!((CvBandwidth::default().bandwidth(1000) - 0.1).abs() < 1e-12);
        assert_eq!(CvBandwidth::Fixed(0.2).bandwidth(2000), 0.2);
    }
}
