//! Smoothing kernels.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Epanechnikov,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    /// `K(x) = 0` for `|x| > B`.
    Compact(f64),
    /// `exp(beta |x|) K(x) -> 0` for the stated `beta`.
    ExponentialTail(f64),
}

/// A symmetric, integrable kernel and the constants the theory uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub name: KernelName,
    pub support: Support,
    /// Order `r` of the moment condition satisfied.
    pub moment_order: f64,
    /// `int K^2`.
    pub l2_norm_sq: f64,
    /// `int z^2 K(z) dz`.
    pub second_moment: f64,
}

impl KernelModel {
    pub fn epanechnikov() -> Self {
        Self {
            name: KernelName::Epanechnikov,
            support: Support::Compact(1.0),
            moment_order: 2.0,
            l2_norm_sq: 0.6,
            second_moment: 0.2,
        }
    }

    pub fn gaussian() -> Self {
        Self {
            name: KernelName::Gaussian,
            // any beta works; 1/4 is recorded as a representative value
            support: Support::ExponentialTail(0.25),
            moment_order: 2.0,
            l2_norm_sq: 1.0 / (2.0 * PI.sqrt()),
            second_moment: 1.0,
        }
    }

    pub fn from_name(name: KernelName) -> Self {
        match name {
            KernelName::Epanechnikov => Self::epanechnikov(),
            KernelName::Gaussian => Self::gaussian(),
        }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        match self.name {
            KernelName::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
            KernelName::Gaussian => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
        }
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelName::Epanechnikov => "epanechnikov",
            KernelName::Gaussian => "gaussian",
        })
    }
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" | "ke" => Ok(KernelName::Epanechnikov),
            "gaussian" | "normal" | "kg" => Ok(KernelName::Gaussian),
            other => Err(invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

impl FromStr for KernelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<KernelName>().map(Self::from_name)
    }
}

/// Half-width (in rescaled time) outside which kernel weights are dropped:
/// `B b_n` for compact kernels, `log(n) b_n` for exponential tails.
pub fn effective_window(kernel: &KernelModel, n: f64, bandwidth: f64) -> f64 {
    match kernel.support {
        Support::Compact(b) => b * bandwidth,
        Support::ExponentialTail(_) => n.max(std::f64::consts::E).ln() * bandwidth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [a, b] with `m` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut acc = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn integrate(k: &KernelModel, g: impl Fn(f64) -> f64) -> f64 {
        match k.support {
            Support::Compact(b) => simpson(|x| g(x) * k.evaluate(x), -b, b, 20_000),
            Support::ExponentialTail(_) => simpson(|x| g(x) * k.evaluate(x), -14.0, 14.0, 40_000),
        }
    }

    #[test]
    fn quadrature_checks() {
        for k in [KernelModel::epanechnikov(), KernelModel::gaussian()] {
            assert!((integrate(&k, |_| 1.0) - 1.0).abs() < 1e-8, "{:?}", k.name);
            assert!(integrate(&k, |x| x).abs() < 1e-8);
            let l2 = integrate(&k, |x| k.evaluate(x));
            assert!((l2 - k.l2_norm_sq).abs() < 1e-8, "{:?} {l2}", k.name);
            let m2 = integrate(&k, |x| x * x);
            assert!((m2 - k.second_moment).abs() < 1e-8);
            let r = k.moment_order;
            assert!(integrate(&k, |x| x.abs().powf(r) + 1.0).is_finite());
        }
    }

    #[test]
    fn point_values() {
        let e = KernelModel::epanechnikov();
        assert_eq!(e.evaluate(0.0), 0.75);
        assert_eq!(e.evaluate(1.5), 0.0);
        assert_eq!(e.evaluate(-1.5), 0.0);
        assert_eq!(e.l2_norm_sq, 0.6);
        let g = KernelModel::gaussian();
        assert!((g.evaluate(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(g.evaluate(-2.0), g.evaluate(2.0));
        assert!((g.l2_norm_sq - 0.282_094_791_8).abs() < 1e-10);
        for x in [0.1, 0.37, 0.99, 2.5] {
            assert_eq!(e.evaluate(-x), e.evaluate(x));
            assert_eq!(g.evaluate(-x), g.evaluate(x));
        }
    }

    #[test]
    fn windows() {
        let e = KernelModel::epanechnikov();
        let g = KernelModel::gaussian();
        assert_eq!(effective_window(&e, 1000.0, 0.1), 0.1);
        assert!((effective_window(&g, 10f64.exp(), 0.1) - 1.0).abs() < 1e-12);
        assert!((effective_window(&g, 100.0, 0.05) - 0.230_258_509_3).abs() < 1e-9);
    }

    #[test]
    fn gaussian_tail_outside_window_is_small() {
        // weight beyond log(n) b on a fine lattice, relative to the total
        let g = KernelModel::gaussian();
        for n in [100usize, 1000, 10_000] {
            let b = (n as f64).powf(-0.2);
            let w = effective_window(&g, n as f64, b);
            let (mut inside, mut outside) = (0.0, 0.0);
            for k in 0..n {
                let x = (k as f64 + 0.5) / n as f64 - 0.5;
                let kv = g.evaluate(x / b);
                if x.abs() <= w {
                    inside += kv;
                } else {
                    outside += kv;
                }
            }
            assert!(outside <= 1e-3 * (inside + outside), "n={n}");
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("Gaussian".parse::<KernelName>().unwrap(), KernelName::Gaussian);
        assert_eq!(
            "epanechnikov".parse::<KernelModel>().unwrap(),
            KernelModel::epanechnikov()
        );
        assert!("triweight".parse::<KernelName>().is_err());
    }
}
