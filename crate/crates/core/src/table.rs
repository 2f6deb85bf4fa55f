//! Comparison tables over a grid of thresholds.

use rayon::prelude::*;
use serde::Serialize;

use crate::approximations::{self, Method, TailOptions};
use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::montecarlo;

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 10] = [
    "b",
    "true_mc",
    "saddle",
    "re_saddle",
    "normal",
    "re_normal",
    "edgeworth",
    "re_edgeworth",
    "ld",
    "re_ld",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub b: f64,
    pub true_mc: Option<f64>,
    pub saddle: Option<f64>,
    pub re_saddle: Option<f64>,
    pub normal: Option<f64>,
    pub re_normal: Option<f64>,
    pub edgeworth: Option<f64>,
    pub re_edgeworth: Option<f64>,
    pub ld: Option<f64>,
    pub re_ld: Option<f64>,
}

impl TableRow {
    pub fn cells(&self) -> [Option<f64>; 10] {
        [
            Some(self.b),
            self.true_mc,
            self.saddle,
            self.re_saddle,
            self.normal,
            self.re_normal,
            self.edgeworth,
            self.re_edgeworth,
            self.ld,
            self.re_ld,
        ]
    }

    pub fn csv_record(&self) -> Vec<String> {
        self.cells().iter().map(|c| c.map(format_sig6).unwrap_or_default()).collect()
    }
}

fn relative_error(approx: Option<f64>, truth: Option<f64>) -> Option<f64> {
    match (approx, truth) {
        (Some(a), Some(t)) if t != 0.0 => Some((a - t).abs() / t),
        _ => None,
    }
}

/// `value` rounded to 6 significant digits, printed without trailing zeros.
pub fn format_sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let rounded: f64 = format!("{value:.5e}").parse().unwrap_or(value);
    let mag = rounded.abs();
    if (1e-4..1e6).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("grid `{spec}` is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0) {
        return Err(bad());
    }
    if start > stop {
        return Err(Error::InvalidArgument(format!("grid `{spec}` is empty")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // round off accumulated binary noise (0.15000000000000002)
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// One row per grid point for the requested methods. Monte Carlo columns
/// share a single set of replicates across the grid.
pub fn build_table(dist: &DistributionModel, n: usize, grid: &[f64], methods: &[Method], opts: &TailOptions) -> Result<Vec<TableRow>> {
    let truth = if methods.contains(&Method::MonteCarlo) {
        Some(montecarlo::estimate_tail_grid(dist, n, grid, &opts.monte_carlo)?)
    } else {
        None
    };
    let want = |m| methods.contains(&m);
    grid.par_iter()
        .enumerate()
        .map(|(i, &b)| {
            let run = |m: Method| -> Result<Option<f64>> {
                if want(m) {
                    Ok(Some(approximations::upper_tail(dist, n, b, m, opts)?.probability))
                } else {
                    Ok(None)
                }
            };
            let true_mc = truth.as_ref().map(|t| t[i].p_hat);
            let saddle = run(Method::Saddlepoint)?;
            let normal = run(Method::Normal)?;
            let edgeworth = run(Method::Edgeworth)?;
            let ld = run(Method::LargeDeviation)?;
            Ok(TableRow {
                b,
                true_mc,
                saddle,
                re_saddle: relative_error(saddle, true_mc),
                normal,
                re_normal: relative_error(normal, true_mc),
                edgeworth,
                re_edgeworth: relative_error(edgeworth, true_mc),
                ld,
                re_ld: relative_error(ld, true_mc),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_builtin;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.153_870_44), "0.15387");
        assert_eq!(format_sig6(0.123_456_789), "0.123457");
        assert_eq!(format_sig6(7.619_853_024e-24), "7.61985e-24");
        assert_eq!(format_sig6(0.05), "0.05");
        assert_eq!(format_sig6(0.0), "0");
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.05:0.95:0.05").unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[2], 0.15);
        assert_eq!(*g.last().unwrap(), 0.95);
        assert_eq!(parse_grid("0.40:0.90:0.05").unwrap().len(), 11);
        assert!(parse_grid("0.9:0.1:0.1").is_err());
        assert!(parse_grid("0.1:0.9").is_err());
        assert!(parse_grid("0.1:0.9:0").is_err());
    }

    #[test]
    fn rows_and_relative_errors() {
        let d = make_builtin("normal").unwrap();
        let mut opts = TailOptions::default();
        opts.monte_carlo.reps = 20_000;
        let rows = build_table(&d, 5, &[0.3, 0.6], &[Method::MonteCarlo, Method::Normal], &opts).unwrap();
        assert_eq!(rows.len(), 2);
        let r = rows[1];
        assert!(r.saddle.is_none() && r.re_saddle.is_none());
        let re = (r.normal.unwrap() - r.true_mc.unwrap()).abs() / r.true_mc.unwrap();
        assert_eq!(r.re_normal, Some(re));
        let rec = r.csv_record();
        assert_eq!(rec.len(), CSV_HEADER.len());
        assert_eq!(rec[2], "");
    }
}
