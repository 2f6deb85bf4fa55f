//! Continuous distributions: densities, supports, quantile samplers and the
//! analytic metadata the approximations consume.
//!
//! Built-ins: `normal`, `centered_exponential` (`exp`), `t2` and `cauchy`.
//! User models come from a density (or log-density) closure, or from a text
//! spec file (see [`DistributionModel::from_spec_text`]).

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::{self, Tolerance};
use crate::rng;
use crate::special::{inverse_normal_cdf, INV_SQRT_2PI};
use crate::tilted_cgf::CgfValue;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type CgfFn = Arc<dyn Fn(f64, f64) -> Option<CgfValue> + Send + Sync>;

/// One connected piece of a support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// Interval closed at every finite endpoint.
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: lo.is_finite(),
            hi_closed: hi.is_finite(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// Support of a distribution as sorted, pairwise disjoint, nonempty intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSpec {
    intervals: Vec<Interval>,
}

impl SupportSpec {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidSupport("no intervals".into()));
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for iv in &intervals {
            if iv.lo.is_nan() || iv.hi.is_nan() || !(iv.lo < iv.hi) {
                return Err(Error::InvalidSupport(format!(
                    "empty or malformed interval [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
        }
        for w in intervals.windows(2) {
            let touching = w[0].hi == w[1].lo && !(w[0].hi_closed && w[1].lo_closed);
            if w[0].hi > w[1].lo || (w[0].hi == w[1].lo && !touching) {
                return Err(Error::InvalidSupport(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(SupportSpec { intervals })
    }

    pub fn real_line() -> Self {
        SupportSpec {
            intervals: vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![Interval::new(lo, hi)])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn lower(&self) -> f64 {
        self.intervals[0].lo
    }

    pub fn upper(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Whether the open interval `(lo, hi)` meets the support in a set of
    /// positive length.
    pub fn meets_open(&self, lo: f64, hi: f64) -> bool {
        self.intervals.iter().any(|iv| lo.max(iv.lo) < hi.min(iv.hi))
    }

    /// Finite endpoints of all intervals, ascending.
    pub fn finite_endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|iv| [iv.lo, iv.hi])
            .filter(|v| v.is_finite())
            .collect()
    }

    fn reflected(&self) -> Self {
        let mut intervals: Vec<Interval> = self
            .intervals
            .iter()
            .map(|iv| Interval {
                lo: -iv.hi,
                hi: -iv.lo,
                lo_closed: iv.hi_closed,
                hi_closed: iv.lo_closed,
            })
            .collect();
        intervals.reverse();
        SupportSpec { intervals }
    }

    fn scaled(&self, c: f64) -> Self {
        SupportSpec {
            intervals: self
                .intervals
                .iter()
                .map(|iv| Interval {
                    lo: c * iv.lo,
                    hi: c * iv.hi,
                    ..*iv
                })
                .collect(),
        }
    }
}

impl fmt::Display for SupportSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(
                f,
                "{}{}, {}{}",
                if iv.lo_closed { '[' } else { '(' },
                iv.lo,
                iv.hi,
                if iv.hi_closed { ']' } else { ')' }
            )?;
        }
        Ok(())
    }
}

/// Analytic moments; `None` marks a moment that does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Moments {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
}

impl Moments {
    pub fn new(mean: Option<f64>, variance: Option<f64>, skewness: Option<f64>) -> Self {
        Moments {
            mean,
            variance,
            skewness,
        }
    }
}

/// The four densities used in the numerical study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Normal,
    CenteredExponential,
    T2,
    Cauchy,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Normal,
        Builtin::CenteredExponential,
        Builtin::T2,
        Builtin::Cauchy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Normal => "normal",
            Builtin::CenteredExponential => "centered_exponential",
            Builtin::T2 => "t2",
            Builtin::Cauchy => "cauchy",
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Builtin::Normal),
            "centered_exponential" | "exp" | "exponential" => Ok(Builtin::CenteredExponential),
            "t2" => Ok(Builtin::T2),
            "cauchy" => Ok(Builtin::Cauchy),
            other => Err(Error::UnknownDistribution(other.to_string())),
        }
    }
}

/// A continuous distribution with everything the tail approximations need.
///
/// Immutable after construction and cheap to clone; all closures are shared.
#[derive(Clone)]
pub struct DistributionModel {
    name: String,
    log_density: ScalarFn,
    support: SupportSpec,
    quantile: Option<ScalarFn>,
    moments: Moments,
    closed_form_cgf: Option<CgfFn>,
    /// Upper bound on ln f over the support.
    log_density_max: f64,
    /// A point of high density, used to seed mode searches.
    mode_hint: f64,
    /// Interquartile range, or 1 when no quantile is known.
    scale: f64,
}

impl fmt::Debug for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionModel")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("moments", &self.moments)
            .field("has_quantile", &self.quantile.is_some())
            .field("has_closed_form_cgf", &self.closed_form_cgf.is_some())
            .finish()
    }
}

/// K(s, t) = s²/(2(1-2t)) - ln(1-2t)/2 and its derivatives, for t < 1/2.
fn gaussian_cgf(s: f64, t: f64) -> Option<CgfValue> {
    if !(t < 0.5) {
        return None;
    }
    let u = 1.0 - 2.0 * t;
    Some(CgfValue {
        k: s * s / (2.0 * u) - 0.5 * u.ln(),
        k_s: s / u,
        k_t: s * s / (u * u) + 1.0 / u,
        k_ss: 1.0 / u,
        k_st: 2.0 * s / (u * u),
        k_tt: 4.0 * s * s / (u * u * u) + 2.0 / (u * u),
        quadrature_error: 0.0,
    })
}

/// Builds one of the built-in models by name.
pub fn make_builtin(name: &str) -> Result<DistributionModel> {
    Ok(DistributionModel::builtin(name.parse()?))
}

impl DistributionModel {
    pub fn builtin(which: Builtin) -> Self {
        let ln_sqrt_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let ln_pi = std::f64::consts::PI.ln();
        let ln_t2 = -1.5 * std::f64::consts::LN_2;
        let (log_density, support, quantile, moments, lmax, mode, scale): (
            ScalarFn,
            SupportSpec,
            ScalarFn,
            Moments,
            f64,
            f64,
            f64,
        ) = match which {
            Builtin::Normal => (
                Arc::new(move |x: f64| -0.5 * x * x - ln_sqrt_2pi),
                SupportSpec::real_line(),
                Arc::new(inverse_normal_cdf),
                Moments::new(Some(0.0), Some(1.0), Some(0.0)),
                -ln_sqrt_2pi,
                0.0,
                2.0 * inverse_normal_cdf(0.75),
            ),
            Builtin::CenteredExponential => (
                Arc::new(|x: f64| if x >= -1.0 { -(x + 1.0) } else { f64::NEG_INFINITY }),
                SupportSpec::interval(-1.0, f64::INFINITY).expect("valid support"),
                Arc::new(|p: f64| -(-p).ln_1p() - 1.0),
                Moments::new(Some(0.0), Some(1.0), Some(2.0)),
                0.0,
                -1.0,
                3f64.ln(),
            ),
            Builtin::T2 => (
                Arc::new(move |x: f64| ln_t2 - 1.5 * (0.5 * x * x).ln_1p()),
                SupportSpec::real_line(),
                Arc::new(|p: f64| (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt()),
                Moments::new(Some(0.0), None, None),
                ln_t2,
                0.0,
                2.0 * 2f64.sqrt() / 3f64.sqrt(),
            ),
            Builtin::Cauchy => (
                Arc::new(move |x: f64| -ln_pi - (x * x).ln_1p()),
                SupportSpec::real_line(),
                Arc::new(|p: f64| (std::f64::consts::PI * (p - 0.5)).tan()),
                Moments::default(),
                -ln_pi,
                0.0,
                2.0,
            ),
        };
        DistributionModel {
            name: which.name().to_string(),
            log_density,
            support,
            quantile: Some(quantile),
            moments,
            closed_form_cgf: match which {
                Builtin::Normal => Some(Arc::new(gaussian_cgf)),
                _ => None,
            },
            log_density_max: lmax,
            mode_hint: mode,
            scale,
        }
    }

    /// A user model from a density closure. The density is assumed
    /// normalized; it is not checked here.
    pub fn from_density<F>(
        name: impl Into<String>,
        density: F,
        support: SupportSpec,
        quantile: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
        moments: Moments,
    ) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_log_density(name, move |x| density(x).max(0.0).ln(), support, quantile, moments)
    }

    /// A user model from a log-density closure.
    pub fn from_log_density<F>(
        name: impl Into<String>,
        log_density: F,
        support: SupportSpec,
        quantile: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
        moments: Moments,
    ) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (mode_hint, log_density_max) = scan_log_density(&log_density, &support);
        let scale = match &quantile {
            Some(q) => {
                let iqr = q(0.75) - q(0.25);
                if iqr.is_finite() && iqr > 0.0 {
                    iqr
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        DistributionModel {
            name: name.into(),
            log_density: Arc::new(log_density),
            support,
            quantile,
            moments,
            closed_form_cgf: None,
            // slack covers peaks the scan may have stepped over
            log_density_max: log_density_max + 50.0,
            mode_hint,
            scale,
        }
    }

    /// Parses a distribution spec:
    ///
    /// ```text
    /// # comment
    /// name: bumps                  (optional)
    /// support: 0 1                 (one line per interval; -inf / inf allowed)
    /// support: 3 4
    /// density: 0.5                 (expression in x)
    /// quantile: ...                (optional, expression in p; enables Monte Carlo)
    /// moments: 0 1 undefined       (optional mean variance skewness)
    /// ```
    ///
    /// The density must integrate to one over the support within 1e-6.
    pub fn from_spec_text(text: &str) -> Result<Self> {
        let mut name = None;
        let mut intervals = Vec::new();
        let mut density = None;
        let mut quantile = None;
        let mut moments = Moments::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                Error::InvalidDistribution(format!("line {}: expected `key: value`", lineno + 1))
            })?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "support" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(Error::InvalidDistribution(format!(
                            "line {}: support needs two endpoints",
                            lineno + 1
                        )));
                    }
                    intervals.push(Interval::new(parse_bound(parts[0])?, parse_bound(parts[1])?));
                }
                "density" => density = Some(Expr::parse(value, "x")?),
                "quantile" => quantile = Some(Expr::parse(value, "p")?),
                "moments" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(Error::InvalidDistribution(format!(
                            "line {}: moments needs mean, variance and skewness",
                            lineno + 1
                        )));
                    }
                    let m: Vec<Option<f64>> = parts.iter().map(|p| parse_moment(p)).collect::<Result<_>>()?;
                    moments = Moments::new(m[0], m[1], m[2]);
                }
                other => {
                    return Err(Error::InvalidDistribution(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        let density = density.ok_or_else(|| Error::InvalidDistribution("missing `density:` line".into()))?;
        let support = if intervals.is_empty() {
            SupportSpec::real_line()
        } else {
            SupportSpec::new(intervals)?
        };
        let quantile: Option<ScalarFn> = quantile.map(|q| Arc::new(move |p: f64| q.eval(p)) as ScalarFn);
        let inside = support.clone();
        let model = Self::from_density(
            name.unwrap_or_else(|| "custom".to_string()),
            move |x| if inside.contains(x) { density.eval(x) } else { 0.0 },
            support,
            quantile,
            moments,
        );
        let mass = model.total_mass()?;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!(
                "density integrates to {mass} over its support, expected 1"
            )));
        }
        Ok(model)
    }

    pub fn from_spec_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidDistribution(format!("{}: {e}", path.display())))?;
        Self::from_spec_text(&text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> &SupportSpec {
        &self.support
    }

    /// f(x); zero off the support.
    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// ln f(x); -∞ off the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            (self.log_density)(x)
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn log_density_max(&self) -> f64 {
        self.log_density_max
    }

    pub fn mode_hint(&self) -> f64 {
        self.mode_hint
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn has_sampler(&self) -> bool {
        self.quantile.is_some()
    }

    /// Inverse CDF at `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("quantile level {p} not in (0, 1)")));
        }
        let q = self
            .quantile
            .as_ref()
            .ok_or_else(|| Error::SamplerUnavailable(self.name.clone()))?;
        Ok(q(p))
    }

    /// Analytic CGF at (s, t) when the model carries one and the point is
    /// inside its validity domain.
    pub fn closed_form_cgf(&self, s: f64, t: f64) -> Option<CgfValue> {
        self.closed_form_cgf.as_ref().and_then(|k| k(s, t))
    }

    pub fn has_closed_form_cgf(&self) -> bool {
        self.closed_form_cgf.is_some()
    }

    /// The law of -X.
    pub fn reflected(&self) -> Self {
        let ld = Arc::clone(&self.log_density);
        let quantile = self.quantile.as_ref().map(|q| {
            let q = Arc::clone(q);
            Arc::new(move |p: f64| -q(1.0 - p)) as ScalarFn
        });
        let cgf = self.closed_form_cgf.as_ref().map(|k| {
            let k = Arc::clone(k);
            Arc::new(move |s: f64, t: f64| {
                k(-s, t).map(|v| CgfValue {
                    k_s: -v.k_s,
                    k_st: -v.k_st,
                    ..v
                })
            }) as CgfFn
        });
        DistributionModel {
            name: format!("-({})", self.name),
            log_density: Arc::new(move |x| ld(-x)),
            support: self.support.reflected(),
            quantile,
            moments: Moments {
                mean: self.moments.mean.map(|m| -m),
                variance: self.moments.variance,
                skewness: self.moments.skewness.map(|s| -s),
            },
            closed_form_cgf: cgf,
            log_density_max: self.log_density_max,
            mode_hint: -self.mode_hint,
            scale: self.scale,
        }
    }

    /// The law of cX for c > 0.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be positive")));
        }
        let ld = Arc::clone(&self.log_density);
        let ln_c = c.ln();
        let quantile = self.quantile.as_ref().map(|q| {
            let q = Arc::clone(q);
            Arc::new(move |p: f64| c * q(p)) as ScalarFn
        });
        let cgf = self.closed_form_cgf.as_ref().map(|k| {
            let k = Arc::clone(k);
            Arc::new(move |s: f64, t: f64| {
                k(c * s, c * c * t).map(|v| CgfValue {
                    k: v.k,
                    k_s: c * v.k_s,
                    k_t: c * c * v.k_t,
                    k_ss: c * c * v.k_ss,
                    k_st: c * c * c * v.k_st,
                    k_tt: c.powi(4) * v.k_tt,
                    quadrature_error: v.quadrature_error,
                })
            }) as CgfFn
        });
        Ok(DistributionModel {
            name: format!("{}*{}", c, self.name),
            log_density: Arc::new(move |x| ld(x / c) - ln_c),
            support: self.support.scaled(c),
            quantile,
            moments: Moments {
                mean: self.moments.mean.map(|m| c * m),
                variance: self.moments.variance.map(|v| c * c * v),
                skewness: self.moments.skewness,
            },
            closed_form_cgf: cgf,
            log_density_max: self.log_density_max - ln_c,
            mode_hint: c * self.mode_hint,
            scale: c * self.scale,
        })
    }

    /// ∫ f over the support by adaptive quadrature.
    pub fn total_mass(&self) -> Result<f64> {
        let mut total = 0.0;
        for iv in self.support.intervals() {
            let mut pts = vec![iv.lo];
            for p in [-10.0, -1.0, 0.0, 1.0, 10.0, self.mode_hint] {
                if p > iv.lo && p < iv.hi {
                    pts.push(p);
                }
            }
            pts.push(iv.hi);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let r = quadrature::integrate(
                |x| [self.density(x)],
                &pts,
                Tolerance {
                    rel: 1e-12,
                    abs: 1e-15,
                    max_subdivisions: 2000,
                },
            )?;
            total += r.value[0];
        }
        Ok(total)
    }
}

/// `count` i.i.d. draws by inverse-CDF sampling from stream 0 of `seed`.
pub fn sample(dist: &DistributionModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let q = dist
        .quantile
        .as_ref()
        .ok_or_else(|| Error::SamplerUnavailable(dist.name.clone()))?;
    let mut r = rng::substream(seed, 0);
    Ok((0..count).map(|_| q(rng::open_unit(&mut r))).collect())
}

/// Draws into `out` from an existing generator.
pub(crate) fn sample_into<R: rand::RngCore>(dist: &DistributionModel, rng: &mut R, out: &mut [f64]) -> Result<()> {
    let q = dist
        .quantile
        .as_ref()
        .ok_or_else(|| Error::SamplerUnavailable(dist.name.clone()))?;
    for v in out.iter_mut() {
        *v = q(rng::open_unit(rng));
    }
    Ok(())
}

fn parse_bound(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::InvalidDistribution(format!("bad support endpoint `{s}`"))),
    }
}

fn parse_moment(s: &str) -> Result<Option<f64>> {
    match s.to_ascii_lowercase().as_str() {
        "undefined" | "-" | "none" | "inf" => Ok(None),
        _ => s
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidDistribution(format!("bad moment `{s}`"))),
    }
}

/// Coarse scan for the maximum of ln f: returns (argmax, max).
fn scan_log_density<F: Fn(f64) -> f64>(ld: &F, support: &SupportSpec) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for iv in support.intervals() {
        let lo = iv.lo.max(-1e3);
        let hi = iv.hi.min(1e3);
        if !(lo < hi) {
            continue;
        }
        let steps = 4000;
        for i in 0..=steps {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            let x = x.clamp(iv.lo, iv.hi);
            if !iv.contains(x) {
                continue;
            }
            let v = ld(x);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    if !best.1.is_finite() {
        best.1 = 0.0;
    }
    best
}

// keeps the normal density constant in one place for tests
#[allow(dead_code)]
pub(crate) const NORMAL_DENSITY_AT_ZERO: f64 = INV_SQRT_2PI;

#[cfg(test)]
mod tests {
    use super::*;

    fn cdf_by_quadrature(d: &DistributionModel, x: f64) -> f64 {
        let lo = d.support().lower();
        let mut pts = vec![lo];
        for p in [-1.0, 0.0, 1.0] {
            if p > lo && p < x {
                pts.push(p);
            }
        }
        pts.push(x);
        quadrature::integrate(
            |y| [d.density(y)],
            &pts,
            Tolerance {
                rel: 1e-13,
                abs: 1e-16,
                max_subdivisions: 4000,
            },
        )
        .unwrap()
        .value[0]
    }

    #[test]
    fn builtin_density_values() {
        assert!((make_builtin("normal").unwrap().density(0.0) - 0.398_942_3).abs() < 1e-7);
        assert!((make_builtin("cauchy").unwrap().density(0.0) - 0.318_309_9).abs() < 1e-7);
        assert_eq!(make_builtin("centered_exponential").unwrap().density(-1.0), 1.0);
        assert!((NORMAL_DENSITY_AT_ZERO - 0.398_942_3).abs() < 1e-7);
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(matches!(make_builtin("gamma"), Err(Error::UnknownDistribution(_))));
    }

    #[test]
    fn density_vanishes_off_support() {
        let d = make_builtin("exp").unwrap();
        assert_eq!(d.density(-1.0001), 0.0);
        assert_eq!(d.log_density(-2.0), f64::NEG_INFINITY);
    }

    #[test]
    fn builtins_integrate_to_one() {
        for b in Builtin::ALL {
            let d = DistributionModel::builtin(b);
            let m = d.total_mass().unwrap();
            assert!((m - 1.0).abs() < 1e-8, "{}: {m}", d.name());
        }
    }

    #[test]
    fn quantile_examples() {
        let c = make_builtin("cauchy").unwrap();
        assert!(c.quantile(0.5).unwrap().abs() < 1e-15);
        assert!((c.quantile(0.75).unwrap() - 1.0).abs() < 1e-15);
        let e = make_builtin("exp").unwrap();
        assert!(e.quantile(1.0 - (-1.0f64).exp()).unwrap().abs() < 1e-15);
        assert!(matches!(e.quantile(0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(e.quantile(1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quantile_cdf_round_trip() {
        for b in Builtin::ALL {
            let d = DistributionModel::builtin(b);
            let mut prev = f64::NEG_INFINITY;
            for i in 1..=100 {
                let p = i as f64 / 101.0;
                let x = d.quantile(p).unwrap();
                assert!(x >= prev, "{} quantile not monotone", d.name());
                prev = x;
                let back = cdf_by_quadrature(&d, x);
                assert!((back - p).abs() < 1e-10, "{} p={p} cdf={back}", d.name());
            }
        }
    }

    #[test]
    fn moments_metadata() {
        let m = make_builtin("normal").unwrap().moments();
        assert_eq!((m.mean, m.variance, m.skewness), (Some(0.0), Some(1.0), Some(0.0)));
        let m = make_builtin("exp").unwrap().moments();
        assert_eq!((m.mean, m.variance, m.skewness), (Some(0.0), Some(1.0), Some(2.0)));
        let m = make_builtin("t2").unwrap().moments();
        assert_eq!((m.mean, m.variance, m.skewness), (Some(0.0), None, None));
        let m = make_builtin("cauchy").unwrap().moments();
        assert_eq!(m.variance, None);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = make_builtin("normal").unwrap();
        assert_eq!(sample(&d, 3, 42).unwrap(), sample(&d, 3, 42).unwrap());
        assert_ne!(sample(&d, 3, 42).unwrap(), sample(&d, 3, 43).unwrap());
        assert!(sample(&d, 0, 1).is_err());
    }

    #[test]
    fn support_validation() {
        assert!(SupportSpec::new(vec![]).is_err());
        assert!(SupportSpec::new(vec![Interval::new(1.0, 1.0)]).is_err());
        assert!(SupportSpec::new(vec![Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)]).is_err());
        let s = SupportSpec::new(vec![Interval::new(3.0, 4.0), Interval::new(0.0, 1.0)]).unwrap();
        assert_eq!(s.intervals()[0].lo, 0.0);
        assert!(s.contains(0.5) && s.contains(3.0) && !s.contains(2.0));
        assert!(s.meets_open(0.9, 2.0));
        assert!(!s.meets_open(1.0, 3.0));
    }

    #[test]
    fn reflection_and_scaling() {
        let e = make_builtin("exp").unwrap();
        let r = e.reflected();
        assert_eq!(r.density(1.0), 1.0);
        assert_eq!(r.density(-1.0), e.density(1.0));
        assert_eq!(r.support().upper(), 1.0);
        assert!((r.quantile(0.3).unwrap() + e.quantile(0.7).unwrap()).abs() < 1e-15);
        assert_eq!(r.moments().skewness, Some(-2.0));

        let n2 = make_builtin("normal").unwrap().scaled(2.0).unwrap();
        assert!((n2.density(0.0) - 0.5 * 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((n2.total_mass().unwrap() - 1.0).abs() < 1e-10);
        let k = n2.closed_form_cgf(0.3, -0.1).unwrap();
        // 2X ~ N(0, 4): K(s, t) = 4s²/(2(1-8t)) - ln(1-8t)/2
        let u = 1.0 - 8.0 * -0.1;
        assert!((k.k - (4.0 * 0.09 / (2.0 * u) - 0.5 * f64::ln(u))).abs() < 1e-15);
    }

    #[test]
    fn spec_text_round_trip() {
        let d = DistributionModel::from_spec_text(
            "# two bumps\nname: bumps\nsupport: 0 1\nsupport: 3 4\ndensity: 0.5\n",
        )
        .unwrap();
        assert_eq!(d.name(), "bumps");
        assert_eq!(d.density(0.5), 0.5);
        assert_eq!(d.density(2.0), 0.0);
        assert!(!d.has_sampler());
        assert!(matches!(d.quantile(0.5), Err(Error::SamplerUnavailable(_))));

        let e = DistributionModel::from_spec_text(
            "support: -1 inf\ndensity: exp(-(x+1))\nquantile: -ln(1-p) - 1\nmoments: 0 1 2\n",
        )
        .unwrap();
        assert!((e.quantile(0.5).unwrap() - (2f64.ln() - 1.0)).abs() < 1e-15);
        assert_eq!(e.moments().skewness, Some(2.0));
    }

    #[test]
    fn spec_text_rejects_unnormalized_density() {
        let r = DistributionModel::from_spec_text("support: 0 1\ndensity: 2\n");
        assert!(matches!(r, Err(Error::InvalidDistribution(_))));
        assert!(DistributionModel::from_spec_text("support: 0 1\n").is_err());
        assert!(DistributionModel::from_spec_text("colour: blue\ndensity: 1\n").is_err());
    }
}
