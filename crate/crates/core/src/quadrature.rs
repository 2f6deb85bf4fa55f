//! Adaptive Gauss–Kronrod (10/21 point) quadrature for vector-valued integrands.
//!
//! All components share the same panels, so a family of tilted moments costs a
//! single pass over the integration region. Infinite endpoints are handled by
//! mapping `[c, ∞)` onto `(0, 1]` with `x = c + (1 - u)/u`.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the abscissae XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

/// Integral estimate for each component of the integrand.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    /// Integral of the absolute value of each component.
    pub abs_value: [f64; N],
    pub error: [f64; N],
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Map {
    Identity,
    /// x = c + (1 - u)/u on u in (0, 1]
    Upper(f64),
    /// x = c - (1 - u)/u on u in (0, 1]
    Lower(f64),
}

impl Map {
    #[inline]
    fn apply(self, u: f64) -> (f64, f64) {
        match self {
            Map::Identity => (u, 1.0),
            Map::Upper(c) => (c + (1.0 - u) / u, 1.0 / (u * u)),
            Map::Lower(c) => (c - (1.0 - u) / u, 1.0 / (u * u)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    map: Map,
    value: [f64; N],
    abs_value: [f64; N],
    error: [f64; N],
}

fn kronrod<const N: usize, F>(f: &F, lo: f64, hi: f64, map: Map) -> Panel<N>
where
    F: Fn(f64) -> [f64; N],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |u: f64| {
        let (x, jac) = map.apply(u);
        let mut y = f(x);
        for v in y.iter_mut() {
            *v *= jac;
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        y
    };

    let fc = eval(center);
    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    let mut resk = [0.0; N];
    let mut resg = [0.0; N];
    let mut resabs = [0.0; N];
    for k in 0..N {
        resk[k] = WGK[10] * fc[k];
        resabs[k] = WGK[10] * fc[k].abs();
    }
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        for k in 0..N {
            resk[k] += WGK[j] * (f1[k] + f2[k]);
            resabs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                resg[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
        fv1[j] = f1;
        fv2[j] = f2;
    }

    let mut value = [0.0; N];
    let mut abs_value = [0.0; N];
    let mut error = [0.0; N];
    let scale = half.abs();
    for k in 0..N {
        let mean = 0.5 * resk[k];
        let mut resasc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv1[j][k] - mean).abs() + (fv2[j][k] - mean).abs());
        }
        let resasc = resasc * scale;
        let resabs_k = resabs[k] * scale;
        let mut err = ((resk[k] - resg[k]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs_k);
        }
        value[k] = resk[k] * half;
        abs_value[k] = resabs_k;
        error[k] = err;
    }
    Panel {
        lo,
        hi,
        map,
        value,
        abs_value,
        error,
    }
}

/// Integrates `f` over the union of the consecutive segments defined by
/// `breakpoints` (sorted ascending; the first and last entries may be
/// infinite).
///
/// Converges when, for every component, the summed error estimate is below
/// `max(tol.abs, tol.rel * ∫|f_k|)`.
pub fn integrate<const N: usize, F>(f: F, breakpoints: &[f64], tol: Tolerance) -> Result<QuadResult<N>>
where
    F: Fn(f64) -> [f64; N],
{
    let mut panels: Vec<Panel<N>> = Vec::new();
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a < b) {
            continue;
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => panels.push(kronrod(&f, a, b, Map::Identity)),
            (true, false) => panels.push(kronrod(&f, 0.0, 1.0, Map::Upper(a))),
            (false, true) => panels.push(kronrod(&f, 0.0, 1.0, Map::Lower(b))),
            (false, false) => {
                panels.push(kronrod(&f, 0.0, 1.0, Map::Lower(0.0)));
                panels.push(kronrod(&f, 0.0, 1.0, Map::Upper(0.0)));
            }
        }
    }

    let mut subdivisions = 0;
    loop {
        let mut value = [0.0; N];
        let mut abs_value = [0.0; N];
        let mut error = [0.0; N];
        for p in &panels {
            for k in 0..N {
                value[k] += p.value[k];
                abs_value[k] += p.abs_value[k];
                error[k] += p.error[k];
            }
        }
        let target: [f64; N] = std::array::from_fn(|k| tol.abs.max(tol.rel * abs_value[k]));
        if (0..N).all(|k| error[k] <= target[k]) {
            return Ok(QuadResult {
                value,
                abs_value,
                error,
                subdivisions,
            });
        }
        if subdivisions >= tol.max_subdivisions {
            let worst = (0..N)
                .map(|k| error[k] / abs_value[k].max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(Error::QuadratureFailure {
                error: worst,
                subdivisions,
            });
        }

        // split the panel contributing most to the worst-converged component
        let priority = |p: &Panel<N>| {
            (0..N)
                .map(|k| p.error[k] / target[k])
                .fold(0.0, f64::max)
        };
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, priority(p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.lo + p.hi);
        if !(p.lo < mid && mid < p.hi) {
            // panel collapsed to machine resolution
            return Err(Error::QuadratureFailure {
                error: (0..N).map(|k| error[k] / target[k]).fold(0.0, f64::max),
                subdivisions,
            });
        }
        panels.push(kronrod(&f, p.lo, mid, p.map));
        panels.push(kronrod(&f, mid, p.hi, p.map));
        subdivisions += 1;
    }
}
