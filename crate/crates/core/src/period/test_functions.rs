//! Seasonal test coefficients of prescribed regularity,
//! `a_s(u) = 0.9 cos(2 pi s / T) f(u)` with `f` one of:
//!
//! - `CosineC2`: `cos(3u)`, regularity 2;
//! - `WienerIntegral`: `I(u) / sup abs(I)` with `I(u) = int_0^u W`, regularity 1.5;
//! - `FbmPath(H)`: `B_H(u) / sup abs(B_H)`, regularity `H`;
//! - `WienerPath`: `W(u) / sup abs(W)`, regularity 0.5.
//!
//! Random paths are drawn once per seed on a `2^14`-step grid and shared by
//! all seasons.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::fbm::fbm_path;
use crate::error::{invalid, Error, Result};
use crate::process::{CoefficientFamily, CoefficientFn};

pub const AMPLITUDE: f64 = 0.9;
pub const PATH_GRID: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestFunctionKind {
    CosineC2,
    WienerIntegral,
    FbmPath { hurst: f64 },
    WienerPath,
}

impl TestFunctionKind {
    pub fn regularity(&self) -> f64 {
        match *self {
            TestFunctionKind::CosineC2 => 2.0,
            TestFunctionKind::WienerIntegral => 1.5,
            TestFunctionKind::FbmPath { hurst } => hurst,
            TestFunctionKind::WienerPath => 0.5,
        }
    }

    /// The four families of the reference study.
    pub fn builtin() -> [TestFunctionKind; 4] {
        [
            TestFunctionKind::CosineC2,
            TestFunctionKind::WienerIntegral,
            TestFunctionKind::FbmPath { hurst: 0.8 },
            TestFunctionKind::WienerPath,
        ]
    }
}

impl fmt::Display for TestFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunctionKind::CosineC2 => f.write_str("cosine"),
            TestFunctionKind::WienerIntegral => f.write_str("wiener-integral"),
            TestFunctionKind::FbmPath { hurst } => write!(f, "fbm:{hurst}"),
            TestFunctionKind::WienerPath => f.write_str("wiener"),
        }
    }
}

impl FromStr for TestFunctionKind {
    type Err = Error;

    /// `cosine`, `wiener-integral`, `fbm:<H>` (or `fbm` for H = 0.8), `wiener`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "cosine" | "a2" => Ok(TestFunctionKind::CosineC2),
            "wiener-integral" | "a1.5" => Ok(TestFunctionKind::WienerIntegral),
            "wiener" | "a0.5" => Ok(TestFunctionKind::WienerPath),
            "fbm" | "a0.8" => Ok(TestFunctionKind::FbmPath { hurst: 0.8 }),
            other => match other.strip_prefix("fbm:") {
                Some(h) => h
                    .parse()
                    .map(|hurst| TestFunctionKind::FbmPath { hurst })
                    .map_err(|_| invalid(format!("bad Hurst exponent in `{other}`"))),
                None => Err(invalid(format!("unknown test function `{other}`"))),
            },
        }
    }
}

/// `cos(2 pi s / T)`: for `T = 2` the seasons alternate in sign.
pub fn season_modulation(s: usize, period: usize) -> f64 {
    (2.0 * std::f64::consts::PI * s as f64 / period as f64).cos()
}

fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Path shape `f` on the `PATH_GRID + 1` nodes, before season modulation.
fn path_shape(kind: TestFunctionKind, seed: u64) -> Result<Vec<f64>> {
    match kind {
        TestFunctionKind::CosineC2 => unreachable!("closed form"),
        TestFunctionKind::WienerPath => {
            let w = fbm_path(0.5, PATH_GRID, seed)?;
            let sup = sup_abs(&w);
            Ok(w.iter().map(|v| v / sup).collect())
        }
        TestFunctionKind::WienerIntegral => {
            let w = fbm_path(0.5, PATH_GRID, seed)?;
            let dt = 1.0 / PATH_GRID as f64;
            let mut integral = Vec::with_capacity(w.len());
            let mut acc = 0.0;
            integral.push(0.0);
            for pair in w.windows(2) {
                acc += 0.5 * (pair[0] + pair[1]) * dt;
                integral.push(acc);
            }
            let sup = sup_abs(&integral);
            Ok(integral.iter().map(|v| v / sup).collect())
        }
        TestFunctionKind::FbmPath { hurst } => {
            let b = fbm_path(hurst, PATH_GRID, seed)?;
            let sup = sup_abs(&b);
            Ok(b.iter().map(|v| v / sup).collect())
        }
    }
}

pub fn make_test_function(kind: TestFunctionKind, period: usize, seed: u64) -> Result<CoefficientFamily> {
    if period == 0 {
        return Err(invalid("period must be at least 1"));
    }
    if let TestFunctionKind::FbmPath { hurst } = kind {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(invalid(format!("Hurst exponent must lie in (0, 1), got {hurst}")));
        }
    }
    let funcs = match kind {
        TestFunctionKind::CosineC2 => (1..=period)
            .map(|s| {
                let amp = AMPLITUDE * season_modulation(s, period);
                CoefficientFn::closed(move |u| amp * (3.0 * u).cos())
            })
            .collect(),
        _ => {
            let shape = path_shape(kind, seed)?;
            (1..=period)
                .map(|s| {
                    let amp = AMPLITUDE * season_modulation(s, period);
                    CoefficientFn::interpolated(shape.iter().map(|v| amp * v).collect())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    CoefficientFamily::new(funcs, kind.regularity())
}
