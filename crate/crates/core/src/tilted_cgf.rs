//! The joint cumulant generating function K(s, t) = ln E exp(sX + tX²) and the
//! reduced objective g(t, a; b) = -t a²/b² - K(-2at/b², t).
//!
//! For t < 0 the tilt factor is a Gaussian bump, so every tilted integral is
//! finite whatever the tails of X. All integrals are evaluated as
//! `e^M ∫ h(x) e^{ℓ(x) - M} dx` with `ℓ(x) = sx + tx² + ln f(x)` and `M` the
//! maximum of `ℓ`, which keeps the integrand inside double range for any
//! tilt.

use std::cell::Cell;

use serde::Serialize;

use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Quadrature settings shared by every tilted integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Integrand values below `e^{M - truncation_exponent}` are dropped.
    pub truncation_exponent: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            truncation_exponent: 745.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::InvalidArgument("max_subdivisions must be at least 10".into()));
        }
        if !(self.truncation_exponent > 0.0) {
            return Err(Error::InvalidArgument("truncation_exponent must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Tilt (s, t) applied to (X, X²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltPoint {
    pub s: f64,
    pub t: f64,
}

impl TiltPoint {
    pub fn new(s: f64, t: f64) -> Self {
        TiltPoint { s, t }
    }
}

/// K with its gradient and Hessian at one tilt point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgfValue {
    pub k: f64,
    pub k_s: f64,
    pub k_t: f64,
    pub k_ss: f64,
    pub k_st: f64,
    pub k_tt: f64,
    /// Estimated absolute error of `k`.
    pub quadrature_error: f64,
}

impl CgfValue {
    pub fn hessian_det(&self) -> f64 {
        self.k_ss * self.k_tt - self.k_st * self.k_st
    }
}

/// Moments of X under the tilted law `e^{sx + tx² - K} dF(x)`.
///
/// Central moments are stored about the tilted mean so that variances and
/// the Hessian determinant are formed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedMoments {
    /// K(s, t)
    pub log_mgf: f64,
    /// Tilted mean of X (K_s); NaN when `order` is 0.
    pub mean: f64,
    /// `[1, 0, μ₂, μ₃, μ₄]`, filled up to `order`.
    pub central: [f64; 5],
    pub order: usize,
    /// Relative error estimate of the tilted mass.
    pub rel_error: f64,
}

impl TiltedMoments {
    pub fn variance(&self) -> f64 {
        self.central[2]
    }

    /// E[X² + βX] under the tilt. Needs order ≥ 2.
    pub fn quadratic_mean(&self, beta: f64) -> f64 {
        debug_assert!(self.order >= 2);
        self.mean * self.mean + self.central[2] + beta * self.mean
    }

    /// Var[X² + βX] under the tilt. Needs order 4.
    pub fn quadratic_variance(&self, beta: f64) -> f64 {
        debug_assert!(self.order >= 4);
        let [_, _, m2, m3, m4] = self.central;
        let gamma = 2.0 * self.mean + beta;
        (m4 - m2 * m2) + 2.0 * gamma * m3 + gamma * gamma * m2
    }

    /// det of the covariance matrix of (X, X²): μ₂(μ₄ - μ₂²) - μ₃².
    pub fn hessian_det(&self) -> f64 {
        debug_assert!(self.order >= 4);
        let [_, _, m2, m3, m4] = self.central;
        m2 * (m4 - m2 * m2) - m3 * m3
    }

    pub fn to_cgf_value(&self) -> CgfValue {
        debug_assert!(self.order >= 4);
        let mu = self.mean;
        let [_, _, m2, m3, m4] = self.central;
        CgfValue {
            k: self.log_mgf,
            k_s: mu,
            k_t: mu * mu + m2,
            k_ss: m2,
            k_st: m3 + 2.0 * mu * m2,
            k_tt: (m4 - m2 * m2) + 4.0 * mu * m3 + 4.0 * mu * mu * m2,
            quadrature_error: self.rel_error,
        }
    }
}

/// Tilted log-mass and central moments up to `order` (0, 2 or 4).
pub fn tilted_moments(dist: &DistributionModel, point: TiltPoint, order: usize, cfg: &QuadratureConfig) -> Result<TiltedMoments> {
    let TiltPoint { s, t } = point;
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("tilt point ({s}, {t}) is not finite")));
    }
    if t >= 0.0 && diverges(dist, s, t, order) {
        return Err(Error::DomainDiverges { s, t });
    }
    match order {
        0 => moments_n::<1>(dist, s, t, cfg),
        1 | 2 => moments_n::<3>(dist, s, t, cfg),
        _ => moments_n::<5>(dist, s, t, cfg),
    }
}

/// Log-integrand with the polynomial weight of the highest moment,
/// probed at |x| = 10, 100, 1000 on each unbounded side.
fn diverges(dist: &DistributionModel, s: f64, t: f64, order: usize) -> bool {
    let weight = (order + 1) as f64;
    [1.0, -1.0].iter().any(|&side| {
        let psi = |r: f64| {
            let x = side * r;
            s * x + t * x * x + dist.log_density(x) + weight * r.ln()
        };
        let probes = [psi(10.0), psi(100.0), psi(1000.0)];
        if probes.iter().any(|v| *v == f64::NEG_INFINITY) {
            // bounded on this side
            return false;
        }
        probes[2] >= probes[1] || probes.iter().any(|v| v.is_nan() || *v == f64::INFINITY)
    })
}

fn moments_n<const N: usize>(dist: &DistributionModel, s: f64, t: f64, cfg: &QuadratureConfig) -> Result<TiltedMoments> {
    let ell = |x: f64| s * x + t * x * x + dist.log_density(x);
    let tilt_sd = if t < 0.0 { (-0.5 / t).sqrt() } else { f64::INFINITY };
    let center = if t < 0.0 { -s / (2.0 * t) } else { f64::NAN };

    let (xm, mut log_peak) = locate_peak(dist, &ell, center, tilt_sd);
    if !log_peak.is_finite() {
        return Err(Error::NoConvergence("tilted mode search"));
    }
    let width = peak_width(&ell, xm, log_peak, tilt_sd, dist.scale());

    // For t < 0, ℓ(x) <= t(x - c)² + max_q + max ln f, which bounds the
    // region where the integrand exceeds e^{M - T}.
    let radius = if t < 0.0 {
        let q_max = -s * s / (4.0 * t);
        let room = q_max + dist.log_density_max() - log_peak + cfg.truncation_exponent;
        (room.max(0.0) / -t).sqrt() + 10.0 * tilt_sd
    } else {
        f64::INFINITY
    };

    let mut pieces = Vec::new();
    for iv in dist.support().intervals() {
        let (lo, hi) = if t < 0.0 {
            (iv.lo.max(center - radius), iv.hi.min(center + radius))
        } else {
            (iv.lo, iv.hi)
        };
        if !(lo < hi) {
            continue;
        }
        let mut pts = vec![lo, hi];
        let mut push = |p: f64| {
            if p > lo && p < hi && p.is_finite() {
                pts.push(p);
            }
        };
        push(xm);
        for k in [1.0, 4.0, 16.0, 64.0] {
            push(xm - k * width);
            push(xm + k * width);
        }
        if t < 0.0 {
            for k in [4.0, 16.0] {
                push(center - k * tilt_sd);
                push(center + k * tilt_sd);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pieces.push(pts);
    }
    if pieces.is_empty() {
        return Err(Error::NoConvergence("tilted integration region is empty"));
    }

    // The exponent is formed relative to the peak so that large tilts do not
    // cancel; what remains is the rounding of ln f itself, which sets a floor
    // on the attainable relative accuracy.
    let lnf_m = dist.log_density(xm);
    let mut shift = log_peak - ell(xm);
    let tol = quadrature::Tolerance {
        rel: cfg.rel_tol.max(50.0 * f64::EPSILON * (1.0 + lnf_m.abs())),
        ..cfg.tolerance()
    };
    // Retry with a raised reference level if the mode search undershot.
    for _ in 0..4 {
        let overshoot = Cell::new(0.0f64);
        let integrand = |x: f64| -> [f64; N] {
            let y = x - xm;
            let e = y * (s + t * (x + xm)) + (dist.log_density(x) - lnf_m) - shift;
            if e > overshoot.get() {
                overshoot.set(e);
            }
            let w = e.exp();
            let mut out = [0.0; N];
            let mut p = w;
            for v in out.iter_mut() {
                *v = p;
                p *= y;
            }
            out
        };
        let mut value = [0.0; N];
        let mut error = [0.0; N];
        for pts in &pieces {
            let r = quadrature::integrate(&integrand, pts, tol)?;
            for k in 0..N {
                value[k] += r.value[k];
                error[k] += r.error[k];
            }
        }
        if overshoot.get() > 50.0 {
            log_peak += overshoot.get();
            shift += overshoot.get();
            continue;
        }
        let mass = value[0];
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::QuadratureFailure {
                error: f64::INFINITY,
                subdivisions: 0,
            });
        }
        let raw: [f64; N] = std::array::from_fn(|k| value[k] / mass);
        let mut central = [1.0, 0.0, f64::NAN, f64::NAN, f64::NAN];
        let mut mean = f64::NAN;
        if N >= 3 {
            let r1 = raw[1];
            mean = xm + r1;
            central[2] = raw[2] - r1 * r1;
            if N >= 5 {
                central[3] = raw[3] - 3.0 * r1 * raw[2] + 2.0 * r1 * r1 * r1;
                central[4] = raw[4] - 4.0 * r1 * raw[3] + 6.0 * r1 * r1 * raw[2] - 3.0 * r1.powi(4);
            }
        }
        return Ok(TiltedMoments {
            log_mgf: log_peak + mass.ln(),
            mean,
            central,
            order: N - 1,
            rel_error: error[0] / mass,
        });
    }
    Err(Error::NoConvergence("tilted integrand normalization"))
}

/// Approximate argmax of ℓ over the support: candidate scan, hill climb,
/// golden-section polish.
fn locate_peak<F: Fn(f64) -> f64>(dist: &DistributionModel, ell: &F, center: f64, tilt_sd: f64) -> (f64, f64) {
    let support = dist.support();
    let scale = dist.scale();
    let mut candidates = vec![dist.mode_hint(), 0.0];
    for k in [1.0, 3.0, 10.0, 30.0, 100.0] {
        candidates.push(dist.mode_hint() - k * scale);
        candidates.push(dist.mode_hint() + k * scale);
    }
    if center.is_finite() {
        for k in -8..=8 {
            candidates.push(center + k as f64 * tilt_sd);
        }
    }
    for iv in support.intervals() {
        for e in [iv.lo, iv.hi] {
            if e.is_finite() {
                candidates.push(e);
            }
        }
        if iv.lo.is_finite() && iv.hi.is_finite() {
            candidates.push(0.5 * (iv.lo + iv.hi));
        }
    }
    let clamp = |x: f64| -> f64 {
        if support.contains(x) {
            return x;
        }
        // nearest support point
        let mut best = x;
        let mut dist_best = f64::INFINITY;
        for iv in support.intervals() {
            let y = x.clamp(iv.lo, iv.hi);
            if (y - x).abs() < dist_best && y.is_finite() {
                dist_best = (y - x).abs();
                best = y;
            }
        }
        best
    };

    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for c in candidates {
        let x = clamp(c);
        let v = ell(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut x0, mut f0) = best;
    if !f0.is_finite() {
        return best;
    }

    // hill climb with doubling steps
    let mut h = if tilt_sd.is_finite() { tilt_sd.min(scale) } else { scale };
    h = h.max(1e-12 * (1.0 + x0.abs()));
    for _ in 0..200 {
        let right = ell(x0 + h);
        let left = ell(x0 - h);
        if right > f0 && right >= left {
            x0 += h;
            f0 = right;
            h *= 2.0;
        } else if left > f0 {
            x0 -= h;
            f0 = left;
            h *= 2.0;
        } else {
            break;
        }
    }

    // golden-section polish on [x0 - h, x0 + h]
    let (mut a, mut b) = (x0 - h, x0 + h);
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ell(c), ell(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ell(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ell(d);
        }
        if (b - a).abs() <= 1e-10 * (1.0 + x0.abs()) {
            break;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > f0 {
            x0 = x;
            f0 = v;
        }
    }
    (x0, f0)
}

/// Width of the peak at `xm` from the local curvature of ℓ.
fn peak_width<F: Fn(f64) -> f64>(ell: &F, xm: f64, peak: f64, tilt_sd: f64, scale: f64) -> f64 {
    let fallback = if tilt_sd.is_finite() { tilt_sd } else { scale };
    let h = 1e-3 * fallback;
    let (l, r) = (ell(xm - h), ell(xm + h));
    if l.is_finite() && r.is_finite() {
        let curv = (l - 2.0 * peak + r) / (h * h);
        if curv < 0.0 && curv.is_finite() {
            return (-1.0 / curv).sqrt().min(fallback.max(1e-300));
        }
    }
    fallback
}

/// K and its derivatives at `point`.
pub fn cgf(dist: &DistributionModel, point: TiltPoint, cfg: &QuadratureConfig) -> Result<CgfValue> {
    Ok(tilted_moments(dist, point, 4, cfg)?.to_cgf_value())
}

/// g(t, a; b), with divergence of the tilted integral reported as -∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GValue {
    Finite(f64),
    NegInfinity,
}

impl GValue {
    pub fn value(self) -> f64 {
        match self {
            GValue::Finite(v) => v,
            GValue::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, GValue::Finite(_))
    }
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b > 0.0 && b < 1.0) {
        return Err(Error::InvalidArgument(format!("need finite a and 0 < b < 1, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// g(t, a; b) = -t a²/b² - K(-2at/b², t).
pub fn g_value(dist: &DistributionModel, t: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<GValue> {
    check_ab(a, b)?;
    if t == 0.0 {
        return Ok(GValue::Finite(0.0));
    }
    let b2 = b * b;
    match tilted_moments(dist, TiltPoint::new(-2.0 * a * t / b2, t), 0, cfg) {
        Ok(m) => Ok(GValue::Finite(-t * a * a / b2 - m.log_mgf)),
        Err(Error::DomainDiverges { .. }) => Ok(GValue::NegInfinity),
        Err(e) => Err(e),
    }
}

/// ∂g/∂t = -a²/b² - E_t Z with Z = X² - 2aX/b².
pub fn g_dt(dist: &DistributionModel, t: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_ab(a, b)?;
    let b2 = b * b;
    let m = tilted_moments(dist, TiltPoint::new(-2.0 * a * t / b2, t), 2, cfg)?;
    Ok(-a * a / b2 - m.quadratic_mean(-2.0 * a / b2))
}

/// ∂²g/∂t² = -Var_t Z.
pub fn g_dtt(dist: &DistributionModel, t: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_ab(a, b)?;
    let b2 = b * b;
    let m = tilted_moments(dist, TiltPoint::new(-2.0 * a * t / b2, t), 4, cfg)?;
    Ok(-m.quadratic_variance(-2.0 * a / b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_builtin, Builtin, DistributionModel};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn normal_examples() {
        let n = make_builtin("normal").unwrap();
        let k = cgf(&n, TiltPoint::new(0.0, 0.0), &cfg()).unwrap();
        assert!(k.k.abs() < 1e-12);
        assert!((k.k_ss - 1.0).abs() < 1e-10 && k.k_st.abs() < 1e-10 && (k.k_tt - 2.0).abs() < 1e-10);
        let k = cgf(&n, TiltPoint::new(1.0, 0.0), &cfg()).unwrap();
        assert!((k.k - 0.5).abs() < 1e-11);
        let k = cgf(&n, TiltPoint::new(0.0, -0.5), &cfg()).unwrap();
        assert!((k.k + 0.346_573_6).abs() < 1e-7);
    }

    #[test]
    fn normal_matches_closed_form_on_a_grid() {
        let n = make_builtin("normal").unwrap();
        for i in 0..20 {
            for j in 0..10 {
                let t = -5.0 + 5.4 * i as f64 / 19.0;
                let s = -3.0 + 6.0 * j as f64 / 9.0;
                let num = cgf(&n, TiltPoint::new(s, t), &cfg()).unwrap();
                let exact = n.closed_form_cgf(s, t).unwrap();
                for (x, y, what) in [
                    (num.k, exact.k, "K"),
                    (num.k_s, exact.k_s, "K_s"),
                    (num.k_t, exact.k_t, "K_t"),
                    (num.k_ss, exact.k_ss, "K_ss"),
                    (num.k_st, exact.k_st, "K_st"),
                    (num.k_tt, exact.k_tt, "K_tt"),
                ] {
                    let err = (x - y).abs() / y.abs().max(1.0);
                    assert!(err < 1e-10, "{what} at ({s}, {t}): {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn g_examples() {
        let n = make_builtin("normal").unwrap();
        for b in Builtin::ALL {
            let d = DistributionModel::builtin(b);
            assert_eq!(g_value(&d, 0.0, 1.3, 0.4, &cfg()).unwrap(), GValue::Finite(0.0));
        }
        let g = g_value(&n, -0.5, 1.0, 0.5, &cfg()).unwrap().value();
        assert!((g + 1.653_426_4).abs() < 1e-7, "{g}");
        let c = make_builtin("cauchy").unwrap();
        assert_eq!(g_value(&c, 0.1, 1.0, 0.5, &cfg()).unwrap(), GValue::NegInfinity);
        assert!(matches!(cgf(&c, TiltPoint::new(0.0, 0.1), &cfg()), Err(Error::DomainDiverges { .. })));
    }

    #[test]
    fn g_dt_near_zero_for_normal() {
        let n = make_builtin("normal").unwrap();
        let v = g_dt(&n, -1e-9, 1.0, 0.5, &cfg()).unwrap();
        assert!((v + 5.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn g_derivatives_match_finite_differences() {
        let n = make_builtin("normal").unwrap();
        let h = 1e-5;
        let (t, a, b) = (-0.5, 1.0, 0.5);
        let g = |t| g_value(&n, t, a, b, &cfg()).unwrap().value();
        let fd = (g(t + h) - g(t - h)) / (2.0 * h);
        let d = g_dt(&n, t, a, b, &cfg()).unwrap();
        assert!((fd - d).abs() < 1e-6, "{fd} vs {d}");
        let gd = |t| g_dt(&n, t, a, b, &cfg()).unwrap();
        let fd2 = (gd(t + h) - gd(t - h)) / (2.0 * h);
        let d2 = g_dtt(&n, t, a, b, &cfg()).unwrap();
        assert!((fd2 - d2).abs() < 1e-6 * d2.abs().max(1.0), "{fd2} vs {d2}");
    }

    #[test]
    fn heavy_tails_are_finite_for_negative_t() {
        for name in ["t2", "cauchy", "exp"] {
            let d = make_builtin(name).unwrap();
            for &t in &[-1e-4, -0.01, -1.0, -100.0] {
                let k = cgf(&d, TiltPoint::new(0.7, t), &cfg()).unwrap();
                assert!(k.k.is_finite() && k.k_ss > 0.0 && k.k_tt > 0.0, "{name} t={t}");
                assert!(k.hessian_det() > 0.0, "{name} t={t}");
            }
        }
    }

    #[test]
    fn cauchy_tilted_mass_against_direct_integral() {
        // E exp(-X²) for Cauchy = e·erfc(1)
        let c = make_builtin("cauchy").unwrap();
        let k = tilted_moments(&c, TiltPoint::new(0.0, -1.0), 0, &cfg()).unwrap();
        let exact = (1f64.exp() * libm::erfc(1.0)).ln();
        assert!(rel(k.log_mgf, exact) < 1e-11, "{} vs {exact}", k.log_mgf);
    }

    #[test]
    fn far_tilts_stay_in_range() {
        let n = make_builtin("normal").unwrap();
        // mass centred near x = 400 where f underflows in linear scale
        let k = cgf(&n, TiltPoint::new(400.0, -0.01), &cfg()).unwrap();
        let exact = n.closed_form_cgf(400.0, -0.01).unwrap();
        assert!(rel(k.k, exact.k) < 1e-12);
        assert!(rel(k.k_s, exact.k_s) < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            max_subdivisions: 5,
            ..QuadratureConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
