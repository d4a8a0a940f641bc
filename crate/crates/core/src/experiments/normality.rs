use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JarqueBeraResult {
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Jarque-Bera normality test, `JB = m/6 (S^2 + (K - 3)^2 / 4)` against
/// chi-squared with 2 degrees of freedom.
pub fn jarque_bera(values: &[f64]) -> Result<JarqueBeraResult> {
    let m = values.len();
    if m < 8 {
        return Err(invalid(format!("Jarque-Bera needs at least 8 values, got {m}")));
    }
    let mf = m as f64;
    let mean = values.iter().sum::<f64>() / mf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= mf;
    m3 /= mf;
    m4 /= mf;
    if !(m2 > f64::EPSILON * mean.abs().max(1.0).powi(2)) {
        return Err(Error::ZeroVariance);
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let statistic = mf / 6.0 * (skewness.powi(2) + 0.25 * (kurtosis - 3.0).powi(2));
    let p_value = ChiSquared::new(2.0).expect("valid dof").sf(statistic);
    Ok(JarqueBeraResult {
        statistic,
        p_value,
        sample_size: m,
        skewness,
        kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_point_sample_closed_form() {
        let x: Vec<f64> = (0..600).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = jarque_bera(&x).unwrap();
        assert!((r.statistic - 100.0).abs() < 1e-9);
        assert!((r.p_value - (-50.0f64).exp()).abs() < 1e-25);
    }

    #[test]
    fn preconditions() {
        assert!(jarque_bera(&[1.0; 7]).is_err());
        assert!(matches!(jarque_bera(&[2.5; 20]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn skewed_input_is_rejected() {
        let mut rng = rng_from_seed(1);
        let x: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .map(|z: f64| z.exp())
            .collect();
        assert!(jarque_bera(&x).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chi_square_two_tail_is_exponential() {
        let mut rng = rng_from_seed(2);
        let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = jarque_bera(&x).unwrap();
        assert!((r.p_value - (-r.statistic / 2.0).exp()).abs() < 1e-12);
    }
}
