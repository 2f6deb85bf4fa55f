//! Structural checks on the objective and the saddlepoint solution.
//!
//! Each check returns a named pass/fail record; `run_verify` runs them all
//! for one distribution over a grid of thresholds.

use rand::Rng;
use serde::Serialize;

use crate::distributions::{Builtin, DistributionModel};
use crate::error::Result;
use crate::rng;
use crate::saddlepoint::{self, InnerMax, SaddleSolution, SolveOptions};
use crate::tilted_cgf::{cgf, g_dt, g_dtt, g_value, GValue, QuadratureConfig, TiltPoint};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub distribution: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Tolerances used by the suite.
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const RESTART_TOL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const FD_TOL: f64 = 1e-6;
pub const ENVELOPE_TOL: f64 = 1e-4;

fn check(name: &'static str, failures: Vec<String>, ok_detail: String) -> Check {
    Check {
        name,
        passed: failures.is_empty(),
        detail: if failures.is_empty() { ok_detail } else { failures.join("; ") },
    }
}

fn fail_on_err<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, Check> {
    r.map_err(|e| Check {
        name,
        passed: false,
        detail: e.to_string(),
    })
}

pub fn run_verify(dist: &DistributionModel, grid: &[f64], seed: u64, cfg: &QuadratureConfig) -> VerifyReport {
    let mut checks = Vec::new();
    let solutions: Vec<Result<SaddleSolution>> = grid.iter().map(|&b| saddlepoint::solve(dist, b, cfg)).collect();

    checks.push(g_at_origin(dist, seed, cfg));
    checks.push(g_decreasing(dist, grid, cfg));
    checks.push(solve_succeeds(grid, &solutions));
    let solved: Vec<SaddleSolution> = solutions.into_iter().filter_map(|s| s.ok()).collect();
    checks.push(signs(&solved));
    checks.push(curvature(dist, &solved, cfg));
    checks.push(residuals(&solved));
    checks.push(w_increasing(&solved));
    checks.push(restart_uniqueness(dist, grid, cfg));
    checks.push(gaussian_closed_form(cfg));
    checks.push(finite_differences(dist, grid, seed, cfg));
    checks.push(envelope(dist, grid, cfg));
    checks.push(dominance(dist, &solved, seed, cfg));

    VerifyReport {
        distribution: dist.name().to_string(),
        seed,
        checks,
    }
}

fn g_at_origin(dist: &DistributionModel, seed: u64, cfg: &QuadratureConfig) -> Check {
    let mut r = rng::substream(seed, 1);
    let mut failures = Vec::new();
    for _ in 0..20 {
        let a = r.random_range(0.01..10.0);
        let b = r.random_range(0.01..0.99);
        match g_value(dist, 0.0, a, b, cfg) {
            Ok(GValue::Finite(v)) if v == 0.0 => {}
            other => failures.push(format!("g(0, {a:.4}, {b:.4}) = {other:?}")),
        }
    }
    check("g(0,a;b) = 0", failures, "20 random (a, b)".into())
}

/// On (0.9 t̃, 0) the derivative is negative by concavity; beyond 0 the grid
/// follows admissible t until the integral diverges.
fn g_decreasing(dist: &DistributionModel, grid: &[f64], cfg: &QuadratureConfig) -> Check {
    const NAME: &str = "g strictly decreasing in t";
    let mut failures = Vec::new();
    let mut points = 0;
    for &b in grid {
        for a in [0.5 * b, b, 2.0 * b] {
            let t_tilde = match fail_on_err(NAME, saddlepoint::inner_max_t(dist, a, b, cfg)) {
                Ok(InnerMax::Attained { t_tilde, .. }) => t_tilde,
                Ok(InnerMax::Unbounded) => continue,
                Err(c) => return c,
            };
            let mut ts: Vec<f64> = (0..20).map(|k| 0.9 * t_tilde * (1.0 - k as f64 / 20.0)).collect();
            ts.extend((0..10).map(|k| 0.045 * k as f64));
            let mut prev: Option<(f64, f64)> = None;
            for t in ts {
                let g = match fail_on_err(NAME, g_value(dist, t, a, b, cfg)) {
                    Ok(g) => g.value(),
                    Err(c) => return c,
                };
                points += 1;
                if let Some((pt, pg)) = prev {
                    if !(g < pg) {
                        failures.push(format!("b={b}, a={a:.4}: g({t:.4}) = {g} >= g({pt:.4}) = {pg}"));
                    }
                }
                if g == f64::NEG_INFINITY {
                    break;
                }
                prev = Some((t, g));
            }
        }
    }
    check(NAME, failures, format!("{points} grid points"))
}

fn solve_succeeds(grid: &[f64], solutions: &[Result<SaddleSolution>]) -> Check {
    let failures = grid
        .iter()
        .zip(solutions)
        .filter_map(|(b, s)| s.as_ref().err().map(|e| format!("b={b}: {e}")))
        .collect();
    check("saddlepoint solve", failures, format!("{} thresholds", grid.len()))
}

fn signs(sols: &[SaddleSolution]) -> Check {
    let failures = sols
        .iter()
        .filter(|s| !(s.a0 > 0.0 && s.t_hat < 0.0 && s.s_hat > 0.0))
        .map(|s| format!("b={}: a0={}, t={}, s={}", s.b, s.a0, s.t_hat, s.s_hat))
        .collect();
    check("signs a0 > 0, t < 0, s > 0", failures, format!("{} solutions", sols.len()))
}

fn curvature(dist: &DistributionModel, sols: &[SaddleSolution], cfg: &QuadratureConfig) -> Check {
    let mut failures = Vec::new();
    for s in sols {
        if !(s.lambda_aa > 0.0 && s.delta_det > 0.0) {
            failures.push(format!("b={}: lambda_aa={}, det={}", s.b, s.lambda_aa, s.delta_det));
        }
        match g_dtt(dist, s.t_hat, s.a0, s.b, cfg) {
            Ok(v) if v < 0.0 => {}
            other => failures.push(format!("b={}: g_tt = {other:?}", s.b)),
        }
        match cgf(dist, TiltPoint::new(s.s_hat, s.t_hat), cfg) {
            Ok(k) if k.k_ss >= 0.0 && k.k_tt >= 0.0 && k.hessian_det() >= 0.0 => {}
            other => failures.push(format!("b={}: cgf Hessian {other:?}", s.b)),
        }
    }
    check("lambda_aa > 0, det > 0, g_tt < 0", failures, format!("{} solutions", sols.len()))
}

fn residuals(sols: &[SaddleSolution]) -> Check {
    let worst = sols.iter().map(|s| s.residual_t.max(s.residual_a)).fold(0.0, f64::max);
    let failures = sols
        .iter()
        .filter(|s| !(s.residual_t <= RESIDUAL_TOL && s.residual_a <= RESIDUAL_TOL))
        .map(|s| format!("b={}: residual_t={:e}, residual_a={:e}", s.b, s.residual_t, s.residual_a))
        .collect();
    check("saddle residuals <= 1e-9", failures, format!("worst {worst:.2e}"))
}

fn w_increasing(sols: &[SaddleSolution]) -> Check {
    let failures = sols
        .windows(2)
        .filter(|p| !(p[1].w > p[0].w))
        .map(|p| format!("w({}) = {} >= w({}) = {}", p[0].b, p[0].w, p[1].b, p[1].w))
        .collect();
    check("w(b) strictly increasing", failures, format!("{} thresholds", sols.len()))
}

fn restart_uniqueness(dist: &DistributionModel, grid: &[f64], cfg: &QuadratureConfig) -> Check {
    const NAME: &str = "outer restart uniqueness";
    let starts = [(1e-3, 1e3, 49), (1e-2, 1e2, 31), (1e-4, 1e4, 65), (0.05, 20.0, 17), (1e-3, 1e3, 37)];
    let mut picks = vec![grid[0], grid[grid.len() / 2], grid[grid.len() - 1]];
    picks.dedup();
    let mut failures = Vec::new();
    for &b in &picks {
        let mut a0s = Vec::new();
        for &(lo, hi, pts) in &starts {
            let opts = SolveOptions {
                scan_lo: lo,
                scan_hi: hi,
                scan_points: pts,
                quadrature: *cfg,
            };
            match fail_on_err(NAME, saddlepoint::outer_min_a(dist, b, &opts)) {
                Ok(m) => a0s.push(m.a0),
                Err(c) => return c,
            }
        }
        let spread = a0s.iter().map(|a| (a / a0s[0] - 1.0).abs()).fold(0.0, f64::max);
        if spread > RESTART_TOL {
            failures.push(format!("b={b}: a0 spread {spread:e}"));
        }
    }
    check(NAME, failures, format!("5 scan brackets at b in {picks:?}"))
}

fn gaussian_closed_form(cfg: &QuadratureConfig) -> Check {
    let n = DistributionModel::builtin(Builtin::Normal);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..10 {
            let t = -5.0 + 5.4 * i as f64 / 19.0;
            let s = -3.0 + 6.0 * j as f64 / 9.0;
            let exact = n.closed_form_cgf(s, t).expect("inside closed-form domain");
            match cgf(&n, TiltPoint::new(s, t), cfg) {
                Ok(k) => {
                    for (x, y) in [
                        (k.k, exact.k),
                        (k.k_s, exact.k_s),
                        (k.k_t, exact.k_t),
                        (k.k_ss, exact.k_ss),
                        (k.k_st, exact.k_st),
                        (k.k_tt, exact.k_tt),
                    ] {
                        let err = (x - y).abs() / y.abs().max(1.0);
                        worst = worst.max(err);
                        if err > CLOSED_FORM_TOL {
                            failures.push(format!("({s:.3}, {t:.3}): {x} vs {y}"));
                        }
                    }
                }
                Err(e) => failures.push(format!("({s:.3}, {t:.3}): {e}")),
            }
        }
    }
    check("Gaussian closed-form CGF", failures, format!("200 points, worst {worst:.2e}"))
}

fn finite_differences(dist: &DistributionModel, grid: &[f64], seed: u64, cfg: &QuadratureConfig) -> Check {
    const NAME: &str = "g_dt, g_dtt vs finite differences";
    let h = 1e-5;
    let mut r = rng::substream(seed, 2);
    let mut failures = Vec::new();
    for _ in 0..20 {
        let t = -r.random_range(0.05..2.0);
        let a = r.random_range(0.2..2.0);
        let b = grid[r.random_range(0..grid.len())];
        let res = (|| -> Result<(f64, f64, f64, f64)> {
            let g = |t| g_value(dist, t, a, b, cfg).map(GValue::value);
            let gd = |t| g_dt(dist, t, a, b, cfg);
            let fd1 = (g(t + h)? - g(t - h)?) / (2.0 * h);
            let fd2 = (gd(t + h)? - gd(t - h)?) / (2.0 * h);
            Ok((gd(t)?, fd1, g_dtt(dist, t, a, b, cfg)?, fd2))
        })();
        match res {
            Ok((d1, fd1, d2, fd2)) => {
                for (x, y, which) in [(d1, fd1, "g_dt"), (d2, fd2, "g_dtt")] {
                    if (x - y).abs() > FD_TOL.max(FD_TOL * y.abs()) {
                        failures.push(format!("{which} at (t={t:.4}, a={a:.4}, b={b}): {x} vs {y}"));
                    }
                }
            }
            Err(e) => return fail_on_err::<()>(NAME, Err(e)).unwrap_err(),
        }
    }
    check(NAME, failures, "20 random points".into())
}

/// Λ_b against a central difference of b ↦ Λ(a₀(b), b).
fn envelope(dist: &DistributionModel, grid: &[f64], cfg: &QuadratureConfig) -> Check {
    const NAME: &str = "envelope identity for lambda_b";
    let h = 1e-4;
    let mut failures = Vec::new();
    let picks: Vec<f64> = grid.iter().copied().filter(|b| *b - h > 0.0 && *b + h < 1.0).collect();
    for &b in picks.iter().step_by(2.max(picks.len() / 3)) {
        let res = (|| -> Result<(f64, f64)> {
            let s = saddlepoint::solve(dist, b, cfg)?;
            let up = saddlepoint::solve(dist, b + h, cfg)?.lambda;
            let down = saddlepoint::solve(dist, b - h, cfg)?.lambda;
            Ok((s.lambda_b, (up - down) / (2.0 * h)))
        })();
        match res {
            Ok((lb, fd)) if (lb - fd).abs() <= ENVELOPE_TOL => {}
            Ok((lb, fd)) => failures.push(format!("b={b}: lambda_b={lb} vs {fd}")),
            Err(e) => failures.push(format!("b={b}: {e}")),
        }
    }
    check(NAME, failures, "central difference, h = 1e-4".into())
}

fn dominance(dist: &DistributionModel, sols: &[SaddleSolution], seed: u64, cfg: &QuadratureConfig) -> Check {
    let mut r = rng::substream(seed, 3);
    let mut failures = Vec::new();
    for s in sols {
        for _ in 0..10 {
            let t = s.t_hat * r.random_range(0.2..3.0);
            let sv = s.s_hat * r.random_range(-1.0..3.0);
            match crate::tilted_cgf::tilted_moments(dist, TiltPoint::new(sv, t), 0, cfg) {
                Ok(m) => {
                    let i = sv * s.a0 + t * s.a0 * s.a0 / (s.b * s.b) - m.log_mgf;
                    if i > s.lambda + 1e-9 {
                        failures.push(format!("b={}: I({sv:.4}, {t:.4}) = {i} > {}", s.b, s.lambda));
                    }
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
    }
    check("dominance I(s,t) <= lambda", failures, format!("{} random tilts", 10 * sols.len()))
}
