//! Nested solve of the saddlepoint system for P(X̄/V̄ₙ ≥ b).
//!
//! For fixed `a > 0` the inner problem maximizes the concave map
//! `t ↦ g(t, a; b)` over `t < 0`. The outer problem minimizes
//! `Λ(a) = g(t̃(a), a; b)` over feasible `a`. By the envelope theorem
//! `dΛ/da = (2t̃/b²)(K_s - a)`, so the outer minimizer is the root of
//! `K_s(ŝ, t̃(a)) - a`, where `K_s` is the tilted mean already produced by the
//! inner solve.

use serde::Serialize;

use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::roots;
use crate::tilted_cgf::{tilted_moments, QuadratureConfig, TiltPoint};

/// Roots of `x² - 2ax/b² + a²/b²`, where that quadratic is negative in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityWindow {
    pub a1: f64,
    pub a2: f64,
}

pub fn feasibility_window(a: f64, b: f64) -> FeasibilityWindow {
    let b2 = b * b;
    let root = (1.0 - b2).sqrt();
    // a(1 - root)/b² written without cancellation
    let lo = a / (1.0 + root);
    let hi = a * (1.0 + root) / b2;
    FeasibilityWindow {
        a1: lo.min(hi),
        a2: lo.max(hi),
    }
}

/// Whether the window for `(a, b)` meets the support of `dist`.
pub fn is_feasible(dist: &DistributionModel, a: f64, b: f64) -> bool {
    let w = feasibility_window(a, b);
    dist.support().meets_open(w.a1, w.a2)
}

/// Outcome of the inner maximization over `t < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerMax {
    Attained {
        t_tilde: f64,
        g: f64,
        /// Tilted mean of X at the maximizer, i.e. K_s(ŝ, t̃).
        tilted_mean: f64,
        residual: f64,
        iterations: usize,
    },
    /// The window misses the support and g grows without bound as t → -∞.
    Unbounded,
}

/// Outer search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Scan range for `a`, in multiples of the distribution's scale.
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_points: usize,
    pub quadrature: QuadratureConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            scan_lo: 1e-3,
            scan_hi: 1e3,
            scan_points: 49,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Inner tolerance on |∂g/∂t|, relative to `1 + a²/b²`.
pub const INNER_TOL: f64 = 1e-10;
/// Outer tolerance on |K_s - a|, relative to `1 + a`.
pub const OUTER_TOL: f64 = 1e-11;

const MAX_TILT: f64 = 1e12;
const MIN_TILT: f64 = 1e-30;

#[derive(Debug, Clone, Copy)]
struct InnerEval {
    g_dt: f64,
    g: f64,
    mean: f64,
}

fn inner_eval(dist: &DistributionModel, t: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<InnerEval> {
    let b2 = b * b;
    let m = tilted_moments(dist, TiltPoint::new(-2.0 * a * t / b2, t), 2, cfg)?;
    Ok(InnerEval {
        g_dt: -a * a / b2 - m.quadratic_mean(-2.0 * a / b2),
        g: -t * a * a / b2 - m.log_mgf,
        mean: m.mean,
    })
}

/// Maximizes `t ↦ g(t, a; b)` over `t < 0`.
pub fn inner_max_t(dist: &DistributionModel, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<InnerMax> {
    inner_solve(dist, a, b, cfg, None)
}

fn inner_solve(dist: &DistributionModel, a: f64, b: f64, cfg: &QuadratureConfig, start: Option<f64>) -> Result<InnerMax> {
    check_ab(a, b)?;
    if !is_feasible(dist, a, b) {
        return Ok(InnerMax::Unbounded);
    }
    let scale = 1.0 + a * a / (b * b);
    let ftol = INNER_TOL * scale;
    let mut evals = 0usize;
    // Work in u = ln(-t): ∂g/∂t is increasing in u.
    let mut phi = |u: f64| -> Result<f64> {
        evals += 1;
        Ok(inner_eval(dist, -u.exp(), a, b, cfg)?.g_dt)
    };
    let u0 = match start {
        Some(t) if t < 0.0 => (-t).ln(),
        _ => (1.0 / (1.0 + a * a / b.powi(4))).ln(),
    };
    let step = 4f64.ln();
    let (mut lo, mut hi) = (u0, u0);
    let f0 = phi(u0)?;
    let (mut flo, mut fhi) = (f0, f0);
    if f0 < 0.0 {
        while fhi < 0.0 {
            lo = hi;
            flo = fhi;
            hi += step;
            if hi > MAX_TILT.ln() {
                return Err(Error::NoConvergence("inner bracket: tilt exceeded 1e12"));
            }
            fhi = phi(hi)?;
        }
    } else {
        while flo > 0.0 {
            hi = lo;
            fhi = flo;
            lo -= step;
            if lo < MIN_TILT.ln() {
                return Err(Error::NonNegativeTilt { a, b });
            }
            flo = phi(lo)?;
        }
    }
    let root = roots::brent(&mut phi, lo, hi, flo, fhi, 1e-15, ftol, 200)?;
    let t_tilde = -root.x.exp();
    let e = inner_eval(dist, t_tilde, a, b, cfg)?;
    Ok(InnerMax::Attained {
        t_tilde,
        g: e.g,
        tilted_mean: e.mean,
        residual: e.g_dt.abs() / scale,
        iterations: evals + 1,
    })
}

/// Minimizer of `a ↦ sup_t g(t, a; b)` before the Hessian is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterMin {
    pub b: f64,
    pub a0: f64,
    pub t_hat: f64,
    pub s_hat: f64,
    pub lambda: f64,
    pub residual_t: f64,
    pub residual_a: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct ScanPoint {
    a: f64,
    t: f64,
    psi: f64,
}

pub fn outer_min_a(dist: &DistributionModel, b: f64, opts: &SolveOptions) -> Result<OuterMin> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidArgument(format!("b must lie in (0, 1), got {b}")));
    }
    if !(opts.scan_lo > 0.0 && opts.scan_hi > opts.scan_lo && opts.scan_points >= 3) {
        return Err(Error::InvalidArgument("bad outer scan range".into()));
    }
    let cfg = &opts.quadrature;
    let scale = dist.scale();
    let (llo, lhi) = ((opts.scan_lo * scale).ln(), (opts.scan_hi * scale).ln());
    let mut inner_iterations = 0;
    let mut outer_iterations = 0;

    let mut scan: Vec<Option<ScanPoint>> = Vec::with_capacity(opts.scan_points);
    let mut last_t = None;
    for i in 0..opts.scan_points {
        let a = (llo + (lhi - llo) * i as f64 / (opts.scan_points - 1) as f64).exp();
        outer_iterations += 1;
        match inner_solve(dist, a, b, cfg, last_t)? {
            InnerMax::Attained {
                t_tilde,
                tilted_mean,
                iterations,
                ..
            } => {
                inner_iterations += iterations;
                last_t = Some(t_tilde);
                scan.push(Some(ScanPoint {
                    a,
                    t: t_tilde,
                    psi: (tilted_mean - a) / (1.0 + a),
                }));
            }
            InnerMax::Unbounded => {
                last_t = None;
                scan.push(None);
            }
        }
    }
    if scan.iter().all(Option::is_none) {
        return Err(Error::InfeasibleEverywhere(b));
    }

    // Λ decreases while K_s > a and increases once K_s < a.
    let mut best: Option<OuterMin> = None;
    for w in scan.windows(2) {
        let (Some(p), Some(q)) = (w[0], w[1]) else { continue };
        if !(p.psi > 0.0 && q.psi <= 0.0) {
            continue;
        }
        let mut warm = p.t;
        let mut f = |la: f64| -> Result<f64> {
            let a = la.exp();
            outer_iterations += 1;
            match inner_solve(dist, a, b, cfg, Some(warm))? {
                InnerMax::Attained {
                    t_tilde,
                    tilted_mean,
                    iterations,
                    ..
                } => {
                    inner_iterations += iterations;
                    warm = t_tilde;
                    Ok((tilted_mean - a) / (1.0 + a))
                }
                InnerMax::Unbounded => Err(Error::NoConvergence("outer root left the feasible set")),
            }
        };
        let root = roots::brent(&mut f, p.a.ln(), q.a.ln(), p.psi, q.psi, 1e-14, OUTER_TOL, 200)?;
        let a0 = root.x.exp();
        let InnerMax::Attained {
            t_tilde,
            g,
            tilted_mean,
            residual,
            iterations,
        } = inner_solve(dist, a0, b, cfg, Some(warm))?
        else {
            return Err(Error::NoConvergence("outer root left the feasible set"));
        };
        inner_iterations += iterations;
        let cand = OuterMin {
            b,
            a0,
            t_hat: t_tilde,
            s_hat: -2.0 * a0 * t_tilde / (b * b),
            lambda: g,
            residual_t: residual,
            residual_a: (tilted_mean - a0).abs() / (1.0 + a0),
            inner_iterations,
            outer_iterations,
        };
        if best.map_or(true, |bst| cand.lambda < bst.lambda) {
            best = Some(cand);
        }
    }
    best.ok_or(Error::NoConvergence("outer minimum not bracketed by the scan"))
}

/// Curvature quantities at the saddlepoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianQuantities {
    pub delta_det: f64,
    pub lambda_aa: f64,
    pub lambda_b: f64,
}

pub fn hessian_quantities(dist: &DistributionModel, m: &OuterMin, cfg: &QuadratureConfig) -> Result<HessianQuantities> {
    let (a, b, t) = (m.a0, m.b, m.t_hat);
    let b2 = b * b;
    let tm = tilted_moments(dist, TiltPoint::new(m.s_hat, t), 4, cfg)?;
    let det = tm.hessian_det();
    let var = tm.variance();
    // det is a difference of products of size ~var·E(X²)²; anything at
    // rounding level is not a usable curvature.
    if !(det > 1e-12 * var * (tm.central[4].abs() + var * var)) {
        return Err(Error::SingularHessian(det));
    }
    // (1, 2a/b²) Δ⁻¹ (1, 2a/b²)ᵀ = Var(X² - 2aX/b²) / det Δ
    let lambda_aa = 2.0 * t / b2 + tm.quadratic_variance(-2.0 * a / b2) / det;
    if !(lambda_aa > 0.0) {
        return Err(Error::SingularHessian(det));
    }
    Ok(HessianQuantities {
        delta_det: det,
        lambda_aa,
        lambda_b: -2.0 * t * a * a / (b2 * b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub b: f64,
    pub a0: f64,
    pub t_hat: f64,
    pub s_hat: f64,
    pub lambda: f64,
    pub w: f64,
    pub v: f64,
    pub lambda_aa: f64,
    pub lambda_b: f64,
    pub delta_det: f64,
    pub residual_t: f64,
    pub residual_a: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub inner_tol: f64,
    pub outer_tol: f64,
}

pub fn solve(dist: &DistributionModel, b: f64, cfg: &QuadratureConfig) -> Result<SaddleSolution> {
    solve_with(
        dist,
        b,
        &SolveOptions {
            quadrature: *cfg,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with(dist: &DistributionModel, b: f64, opts: &SolveOptions) -> Result<SaddleSolution> {
    opts.quadrature.validate()?;
    let m = outer_min_a(dist, b, opts)?;
    let h = hessian_quantities(dist, &m, &opts.quadrature)?;
    Ok(SaddleSolution {
        b,
        a0: m.a0,
        t_hat: m.t_hat,
        s_hat: m.s_hat,
        lambda: m.lambda,
        w: (2.0 * m.lambda.max(0.0)).sqrt(),
        v: -m.t_hat * h.delta_det.sqrt() * h.lambda_aa.sqrt(),
        lambda_aa: h.lambda_aa,
        lambda_b: h.lambda_b,
        delta_det: h.delta_det,
        residual_t: m.residual_t,
        residual_a: m.residual_a,
        inner_iterations: m.inner_iterations,
        outer_iterations: m.outer_iterations,
        inner_tol: INNER_TOL,
        outer_tol: OUTER_TOL,
    })
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b < 1.0) {
        return Err(Error::InvalidArgument(format!("need a > 0 and 0 < b < 1, got a = {a}, b = {b}")));
    }
    Ok(())
}
