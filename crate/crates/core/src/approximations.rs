//! Tail approximations for P(X̄/V̄ₙ ≥ b) and the Student t bridge.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::montecarlo::{self, McConfig, McEstimate};
use crate::saddlepoint::{self, SaddleSolution};
use crate::special::{normal_pdf, normal_sf};
use crate::tilted_cgf::QuadratureConfig;

/// Smallest |b| handled by the saddlepoint formula.
pub const MIN_ABS_B: f64 = 0.01;
/// Largest |b| handled by the saddlepoint formula.
pub const MAX_ABS_B: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Saddlepoint,
    Normal,
    Edgeworth,
    LargeDeviation,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Saddlepoint => "saddlepoint",
            Method::Normal => "normal",
            Method::Edgeworth => "edgeworth",
            Method::LargeDeviation => "large_deviation",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "saddle" | "saddlepoint" => Method::Saddlepoint,
            "normal" | "na" => Method::Normal,
            "edgeworth" => Method::Edgeworth,
            "ld" | "large_deviation" => Method::LargeDeviation,
            "mc" | "monte_carlo" => Method::MonteCarlo,
            other => return Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// b = 0 was answered with 1/2.
    SmallBFallback,
    /// The raw formula left [0, 1].
    Clamped,
    /// No feasible saddlepoint: the tail is zero.
    InfeasibleZero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub method: Method,
    pub b: f64,
    pub n: usize,
    pub warnings: Vec<Warning>,
    pub diagnostics: Option<SaddleSolution>,
    pub monte_carlo: Option<McEstimate>,
}

impl TailEstimate {
    fn new(probability: f64, method: Method, b: f64, n: usize) -> Self {
        let mut e = TailEstimate {
            probability,
            method,
            b,
            n,
            warnings: Vec::new(),
            diagnostics: None,
            monte_carlo: None,
        };
        e.clamp();
        e
    }

    fn clamp(&mut self) {
        if !(0.0..=1.0).contains(&self.probability) {
            self.probability = self.probability.clamp(0.0, 1.0);
            if !self.warnings.contains(&Warning::Clamped) {
                self.warnings.push(Warning::Clamped);
            }
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sample size n must be at least 2, got {n}")));
    }
    Ok(())
}

/// Lugannani–Rice form with the O(1/n) correction dropped.
pub fn saddle_upper_tail(dist: &DistributionModel, n: usize, b: f64, cfg: &QuadratureConfig) -> Result<TailEstimate> {
    check_n(n)?;
    if b == 0.0 {
        let mut e = TailEstimate::new(0.5, Method::Saddlepoint, b, n);
        e.warnings.push(Warning::SmallBFallback);
        return Ok(e);
    }
    if !(b.abs() >= MIN_ABS_B && b.abs() <= MAX_ABS_B) {
        return Err(Error::DomainUnsupported(b));
    }
    if b < 0.0 {
        let mut e = saddle_upper_tail(&dist.reflected(), n, -b, cfg)?;
        e.probability = 1.0 - e.probability;
        e.b = b;
        return Ok(e);
    }
    let sol = match saddlepoint::solve(dist, b, cfg) {
        Ok(s) => s,
        Err(Error::InfeasibleEverywhere(_)) => {
            let mut e = TailEstimate::new(0.0, Method::Saddlepoint, b, n);
            e.warnings.push(Warning::InfeasibleZero);
            return Ok(e);
        }
        Err(e) => return Err(e),
    };
    let rn = (n as f64).sqrt();
    let z = rn * sol.w;
    let p = normal_sf(z) - normal_pdf(z) / rn * (1.0 / sol.w - 1.0 / sol.v);
    let mut e = TailEstimate::new(p, Method::Saddlepoint, b, n);
    e.diagnostics = Some(sol);
    Ok(e)
}

/// 1 - Φ(√n b).
pub fn normal_tail(n: usize, b: f64) -> Result<TailEstimate> {
    check_n(n)?;
    Ok(TailEstimate::new(normal_sf((n as f64).sqrt() * b), Method::Normal, b, n))
}

/// One-term Edgeworth: 1 - Φ(z) - φ(z) κ₃ (2z² + 1) / (6√n), z = √n b.
pub fn edgeworth_tail(dist: &DistributionModel, n: usize, b: f64) -> Result<TailEstimate> {
    check_n(n)?;
    let m = dist.moments();
    let (Some(_), Some(k3)) = (m.variance, m.skewness) else {
        return Err(Error::MomentUndefined(dist.name().to_string()));
    };
    let rn = (n as f64).sqrt();
    let z = rn * b;
    let p = normal_sf(z) - normal_pdf(z) * k3 * (2.0 * z * z + 1.0) / (6.0 * rn);
    Ok(TailEstimate::new(p, Method::Edgeworth, b, n))
}

/// exp(-n Λ(a₀, b)).
pub fn large_deviation_tail(dist: &DistributionModel, n: usize, b: f64, cfg: &QuadratureConfig) -> Result<TailEstimate> {
    check_n(n)?;
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidArgument(format!("large deviation tail needs 0 < b < 1, got {b}")));
    }
    match saddlepoint::solve(dist, b, cfg) {
        Ok(sol) => {
            let mut e = TailEstimate::new((-(n as f64) * sol.lambda).exp(), Method::LargeDeviation, b, n);
            e.diagnostics = Some(sol);
            Ok(e)
        }
        Err(Error::InfeasibleEverywhere(_)) => {
            let mut e = TailEstimate::new(0.0, Method::LargeDeviation, b, n);
            e.warnings.push(Warning::InfeasibleZero);
            Ok(e)
        }
        Err(e) => Err(e),
    }
}

/// Threshold on X̄/V̄ₙ equivalent to Tₙ ≥ t.
pub fn b_of_t(t: f64, n: usize) -> f64 {
    t / (n as f64 + t * t - 1.0).sqrt()
}

/// Inverse of [`b_of_t`].
pub fn t_of_b(b: f64, n: usize) -> Result<f64> {
    if !(b.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("t_of_b needs |b| < 1, got {b}")));
    }
    Ok(b * ((n as f64 - 1.0) / (1.0 - b * b)).sqrt())
}

/// Settings for [`upper_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailOptions {
    pub quadrature: QuadratureConfig,
    pub monte_carlo: McConfig,
}

/// P(X̄/V̄ₙ ≥ b) by the chosen method.
pub fn upper_tail(dist: &DistributionModel, n: usize, b: f64, method: Method, opts: &TailOptions) -> Result<TailEstimate> {
    // |X̄/V̄ₙ| ≤ 1 always
    if !(b.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!("b must lie in [-1, 1], got {b}")));
    }
    match method {
        Method::Saddlepoint => saddle_upper_tail(dist, n, b, &opts.quadrature),
        Method::Normal => normal_tail(n, b),
        Method::Edgeworth => edgeworth_tail(dist, n, b),
        Method::LargeDeviation => large_deviation_tail(dist, n, b, &opts.quadrature),
        Method::MonteCarlo => {
            let mc = montecarlo::estimate_tail(dist, n, b, &opts.monte_carlo)?;
            let mut e = TailEstimate::new(mc.p_hat, Method::MonteCarlo, b, n);
            e.monte_carlo = Some(mc);
            Ok(e)
        }
    }
}

/// P(Tₙ ≥ t) through the threshold b = t / √(n + t² - 1).
pub fn student_t_upper_tail(dist: &DistributionModel, n: usize, t: f64, method: Method, opts: &TailOptions) -> Result<TailEstimate> {
    check_n(n)?;
    upper_tail(dist, n, b_of_t(t, n), method, opts)
}
