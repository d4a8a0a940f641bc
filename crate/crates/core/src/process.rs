//! The periodic tvAR(1) model: coefficient families, innovation laws,
//! trajectory simulation and closed-form local moments.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Number of sample points used to check `sup |a_s| < 1` at construction.
pub const CONTRACTIVITY_GRID: usize = 10_000;

/// One coefficient function `a_s : [0, 1] -> R`.
#[derive(Clone)]
pub enum CoefficientFn {
    Constant(f64),
    /// Closed-form callable; differentiable by central differences.
    Closed(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Values on a uniform grid of `[0, 1]` (first value at 0, last at 1),
    /// linearly interpolated. Arguments are clamped to `[0, 1]`.
    Interpolated(Arc<[f64]>),
}

impl CoefficientFn {
    pub fn closed(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientFn::Closed(Arc::new(f))
    }

    pub fn interpolated(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("interpolated coefficient needs at least 2 grid values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("interpolated coefficient has non-finite values"));
        }
        Ok(CoefficientFn::Interpolated(values.into()))
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            CoefficientFn::Constant(c) => *c,
            CoefficientFn::Closed(f) => f(v),
            CoefficientFn::Interpolated(values) => {
                let last = values.len() - 1;
                let pos = v.clamp(0.0, 1.0) * last as f64;
                let i = (pos.floor() as usize).min(last - 1);
                let frac = pos - i as f64;
                values[i] + frac * (values[i + 1] - values[i])
            }
        }
    }

    /// Whether derivatives can be taken (piecewise-linear interpolants cannot).
    pub fn is_smooth(&self) -> bool {
        !matches!(self, CoefficientFn::Interpolated(_))
    }

    /// Central-difference first and second derivatives at `v`.
    pub fn derivatives(&self, v: f64) -> Result<(f64, f64)> {
        const H: f64 = 1e-4;
        match self {
            CoefficientFn::Constant(_) => Ok((0.0, 0.0)),
            CoefficientFn::Closed(f) => {
                let (fm, f0, fp) = (f(v - H), f(v), f(v + H));
                Ok(((fp - fm) / (2.0 * H), (fp - 2.0 * f0 + fm) / (H * H)))
            }
            CoefficientFn::Interpolated(_) => Err(Error::DerivativeUnavailable(
                "coefficient is a piecewise-linear interpolant".into(),
            )),
        }
    }
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientFn::Constant(c) => write!(f, "Constant({c})"),
            CoefficientFn::Closed(_) => f.write_str("Closed(..)"),
            CoefficientFn::Interpolated(v) => write!(f, "Interpolated({} points)", v.len()),
        }
    }
}

/// The `T` periodic coefficient functions `a_1, ..., a_T`.
#[derive(Debug, Clone)]
pub struct CoefficientFamily {
    funcs: Vec<CoefficientFn>,
    alpha: f64,
    rho: f64,
}

impl CoefficientFamily {
    /// Builds a family from one function per season. `rho` is the declared
    /// Hölder regularity; it is recorded, not verified.
    pub fn new(funcs: Vec<CoefficientFn>, rho: f64) -> Result<Self> {
        if funcs.is_empty() {
            return Err(invalid("period must be at least 1"));
        }
        if !(rho > 0.0) {
            return Err(invalid(format!("regularity must be positive, got {rho}")));
        }
        let mut alpha = 0.0_f64;
        for (idx, f) in funcs.iter().enumerate() {
            let sup = (0..CONTRACTIVITY_GRID)
                .map(|k| f.eval(k as f64 / (CONTRACTIVITY_GRID - 1) as f64).abs())
                .fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) });
            if !(sup < 1.0) {
                return Err(Error::Contractivity { season: idx + 1, sup });
            }
            alpha = alpha.max(sup);
        }
        Ok(Self { funcs, alpha, rho })
    }

    /// Frozen (time-constant) coefficients, one per season.
    pub fn constant(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&c| CoefficientFn::Constant(c)).collect(), 2.0)
    }

    pub fn period(&self) -> usize {
        self.funcs.len()
    }

    /// Sampled `sup_{s, v} |a_s(v)|`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Zero-based storage index of season `s`, with `a_{s+T} = a_s`, `a_0 = a_T`.
    #[inline]
    pub fn season_slot(&self, s: i64) -> usize {
        (s - 1).rem_euclid(self.funcs.len() as i64) as usize
    }

    pub fn function(&self, s: i64) -> &CoefficientFn {
        &self.funcs[self.season_slot(s)]
    }

    /// `a_s(v)` for any integer season index.
    #[inline]
    pub fn a(&self, s: i64, v: f64) -> f64 {
        self.funcs[self.season_slot(s)].eval(v)
    }
}

/// Law of the i.i.d. innovations.
///
/// `StudentT` is used unscaled, so its variance is `dof / (dof - 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { variance: f64 },
    StudentT { dof: f64 },
}

impl NoiseModel {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(invalid(format!("gaussian variance must be positive, got {variance}")));
        }
        Ok(NoiseModel::Gaussian { variance })
    }

    pub fn student_t(dof: f64) -> Result<Self> {
        if !(dof > 2.0 && dof.is_finite()) {
            return Err(invalid(format!(
                "student-t needs dof > 2 for finite variance, got {dof}"
            )));
        }
        Ok(NoiseModel::StudentT { dof })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => variance,
            NoiseModel::StudentT { dof } => dof / (dof - 2.0),
        }
    }

    /// `E xi^4`, or `None` when infinite.
    pub fn fourth_moment(&self) -> Option<f64> {
        match *self {
            NoiseModel::Gaussian { variance } => Some(3.0 * variance * variance),
            NoiseModel::StudentT { dof } if dof > 4.0 => Some(3.0 * dof * dof / ((dof - 2.0) * (dof - 4.0))),
            NoiseModel::StudentT { .. } => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn sampler(&self) -> NoiseSampler {
        match *self {
            NoiseModel::Gaussian { variance } => {
                NoiseSampler::Gaussian(Normal::new(0.0, variance.sqrt()).expect("validated"))
            }
            NoiseModel::StudentT { dof } => NoiseSampler::StudentT(StudentT::new(dof).expect("validated")),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Gaussian { variance } => write!(f, "gaussian:{variance}"),
            NoiseModel::StudentT { dof } => write!(f, "student:{dof}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// Accepts `gaussian:<variance>` (alias `normal`) and `student:<dof>` (alias `t`).
    fn from_str(s: &str) -> Result<Self> {
        let (law, param) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("noise `{s}`: expected <law>:<parameter>")))?;
        let value: f64 = param
            .trim()
            .parse()
            .map_err(|_| invalid(format!("noise `{s}`: bad parameter")))?;
        match law.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => NoiseModel::gaussian(value),
            "student" | "t" => NoiseModel::student_t(value),
            other => Err(invalid(format!("unknown noise law `{other}`"))),
        }
    }
}

pub enum NoiseSampler {
    Gaussian(Normal<f64>),
    StudentT(StudentT<f64>),
}

impl NoiseSampler {
    #[inline]
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            NoiseSampler::Gaussian(d) => d.sample(rng),
            NoiseSampler::StudentT(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Simulated { seed: u64 },
    Ingested,
}

/// An observed or simulated path `X_1, ..., X_{nT}`; `X_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: Vec<f64>,
    n: usize,
    period: usize,
    origin: Origin,
}

impl Trajectory {
    pub fn new(values: Vec<f64>, period: usize, origin: Origin) -> Result<Self> {
        if period == 0 {
            return Err(invalid("period must be at least 1"));
        }
        if values.is_empty() || !values.len().is_multiple_of(period) {
            return Err(invalid(format!(
                "trajectory length {} is not a positive multiple of the period {period}",
                values.len()
            )));
        }
        let n = values.len() / period;
        Ok(Self {
            values,
            n,
            period,
            origin,
        })
    }

    /// Wraps an ingested series, dropping the trailing `N mod T` observations.
    pub fn from_series(mut values: Vec<f64>, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(invalid("period must be at least 1"));
        }
        let n = values.len() / period;
        if n == 0 {
            return Err(invalid(format!(
                "series of length {} is shorter than one period ({period})",
                values.len()
            )));
        }
        values.truncate(n * period);
        Self::new(values, period, Origin::Ingested)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn seed(&self) -> Option<u64> {
        match self.origin {
            Origin::Simulated { seed } => Some(seed),
            Origin::Ingested => None,
        }
    }

    /// `X_t` for `0 <= t <= nT`, with `X_0 = 0`.
    #[inline]
    pub fn x(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.values[t - 1]
        }
    }

    /// Mean of `X_t^2` over the observed path.
    pub fn second_moment(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>() / self.values.len() as f64
    }

    /// Same values multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x * k).collect(),
            ..self.clone()
        }
    }
}

/// Draws `X_1..X_{nT}` from `X_t = a_{t mod T}(t/nT) X_{t-1} + xi_t`, `X_0 = 0`.
///
/// Innovations are drawn in time order from a ChaCha8 stream seeded with `seed`.
pub fn simulate(coeffs: &CoefficientFamily, noise: &NoiseModel, n: usize, seed: u64) -> Result<Trajectory> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let period = coeffs.period();
    let total = n * period;
    let denom = total as f64;
    let sampler = noise.sampler();
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(total);
    let mut prev = 0.0;
    for t in 1..=total {
        let a = coeffs.funcs[(t - 1) % period].eval(t as f64 / denom);
        prev = a * prev + sampler.sample(&mut rng);
        values.push(prev);
    }
    Trajectory::new(values, period, Origin::Simulated { seed })
}

/// Closed-form local moments of the process at season `s` and rescaled time `v`.
#[derive(Debug, Clone, Copy)]
pub struct MomentProfile<'a> {
    coeffs: &'a CoefficientFamily,
    noise: &'a NoiseModel,
}

impl<'a> MomentProfile<'a> {
    pub fn new(coeffs: &'a CoefficientFamily, noise: &'a NoiseModel) -> Self {
        Self { coeffs, noise }
    }

    /// `beta_{s,i}(v) = prod_{j=0}^{i} a_{s-j}(v)^2`.
    pub fn beta(&self, s: i64, i: usize, v: f64) -> f64 {
        (0..=i as i64).map(|j| self.coeffs.a(s - j, v).powi(2)).product()
    }

    /// `delta_{s,i}(v) = prod_{j=0}^{i} a_{s-j}(v)^4`.
    pub fn delta(&self, s: i64, i: usize, v: f64) -> f64 {
        (0..=i as i64).map(|j| self.coeffs.a(s - j, v).powi(4)).product()
    }

    /// Local variance `gamma^(2)_s(v)`.
    pub fn gamma2(&self, s: i64, v: f64) -> f64 {
        let period = self.coeffs.period();
        let mut partial = 1.0;
        let mut sum = 1.0;
        for j in 0..period - 1 {
            partial *= self.coeffs.a(s - j as i64, v).powi(2);
            sum += partial;
        }
        let full = partial * self.coeffs.a(s - (period as i64 - 1), v).powi(2);
        self.noise.variance() * sum / (1.0 - full)
    }

    /// `sigma^2 / gamma^(2)_s(v)` written in the coefficients only.
    pub fn variance_ratio(&self, s: i64, v: f64) -> f64 {
        self.noise.variance() / self.gamma2(s, v)
    }

    /// Local fourth moment `gamma^(4)_s(v)`, for symmetric innovations with
    /// finite `mu_4`.
    ///
    /// Fixed point of `w_t = a_t^4 w_{t-1} + c_t` with
    /// `c_t = mu_4 + 6 sigma^2 gamma^(2)_t - 6 sigma^4`. The forcing `c_t` is
    /// season dependent, so it is carried inside the geometric sum.
    pub fn gamma4(&self, s: i64, v: f64) -> Result<f64> {
        let mu4 = self
            .noise
            .fourth_moment()
            .ok_or_else(|| Error::FourthMomentUnavailable(self.noise.label()))?;
        let sigma2 = self.noise.variance();
        let forcing = |k: i64| mu4 + 6.0 * sigma2 * self.gamma2(k, v) - 6.0 * sigma2 * sigma2;
        let period = self.coeffs.period() as i64;
        let mut weight = 1.0;
        let mut sum = 0.0;
        for i in 0..period {
            sum += weight * forcing(s - i);
            weight *= self.coeffs.a(s - i, v).powi(4);
        }
        Ok(sum / (1.0 - weight))
    }
}

fn check_season(coeffs: &CoefficientFamily, s: usize) -> Result<()> {
    if s == 0 || s > coeffs.period() {
        return Err(invalid(format!("season {s} outside 1..={}", coeffs.period())));
    }
    Ok(())
}

pub fn theoretical_gamma2(coeffs: &CoefficientFamily, noise: &NoiseModel, s: usize, v: f64) -> Result<f64> {
    check_season(coeffs, s)?;
    Ok(MomentProfile::new(coeffs, noise).gamma2(s as i64, v))
}

pub fn theoretical_gamma4(coeffs: &CoefficientFamily, noise: &NoiseModel, s: usize, v: f64) -> Result<f64> {
    check_season(coeffs, s)?;
    MomentProfile::new(coeffs, noise).gamma4(s as i64, v)
}

/// `alpha^{2 (t - t')}`: the factor bounding `|Cov(X_t^2, X_{t'}^2)| / gamma^(4)`.
pub fn covariance_decay_bound(coeffs: &CoefficientFamily, t: usize, tprime: usize) -> Result<f64> {
    if t <= tprime {
        return Err(invalid(format!("need t > t', got t = {t}, t' = {tprime}")));
    }
    Ok(coeffs.alpha().powi(2 * (t - tprime) as i32))
}
