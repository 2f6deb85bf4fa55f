//! Seeded Monte Carlo estimates of P(X̄/V̄ₙ ≥ b) and P(Tₙ ≥ t).
//!
//! Replicates are split into batches of `batch_size`; batch `k` draws from
//! substream `k` of the seed (see [`crate::rng`]). Batches are reduced by
//! integer counts, so the result does not depend on the number of workers.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{sample_into, DistributionModel};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub reps: u64,
    pub seed: u64,
    pub batch_size: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            reps: 1_000_000,
            seed: 0,
            batch_size: 65_536,
            workers: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("reps and batch_size must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub reps: u64,
    pub seed: u64,
    /// Replicates with a zero denominator; counted as misses.
    pub degenerate: u64,
    pub generator: &'static str,
}

impl McEstimate {
    fn from_counts(hits: u64, degenerate: u64, cfg: &McConfig) -> Self {
        let reps = cfg.reps;
        let p = hits as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        McEstimate {
            p_hat: p,
            std_err: se,
            ci95_low: (p - 1.96 * se).max(0.0),
            ci95_high: (p + 1.96 * se).min(1.0),
            reps,
            seed: cfg.seed,
            degenerate,
            generator: rng::GENERATOR,
        }
    }
}

/// Runs `stat` on every replicate and counts, per threshold, how many
/// statistics reach it. `stat` returns `None` for a degenerate replicate.
fn count_exceedances<S>(dist: &DistributionModel, n: usize, thresholds: &[f64], cfg: &McConfig, stat: S) -> Result<(Vec<u64>, u64)>
where
    S: Fn(&[f64]) -> Option<f64> + Sync,
{
    cfg.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sample size n must be at least 2, got {n}")));
    }
    if !dist.has_sampler() {
        return Err(Error::SamplerUnavailable(dist.name().to_string()));
    }
    let batches = cfg.reps.div_ceil(cfg.batch_size);
    let run_batch = |k: u64| -> Result<(Vec<u64>, u64)> {
        let mut r = rng::substream(cfg.seed, k);
        let count = cfg.batch_size.min(cfg.reps - k * cfg.batch_size);
        let mut buf = vec![0.0; n];
        let mut hits = vec![0u64; thresholds.len()];
        let mut degenerate = 0;
        for _ in 0..count {
            sample_into(dist, &mut r, &mut buf)?;
            match stat(&buf) {
                Some(v) => {
                    for (h, &b) in hits.iter_mut().zip(thresholds) {
                        *h += (v >= b) as u64;
                    }
                }
                None => degenerate += 1,
            }
        }
        Ok((hits, degenerate))
    };
    let reduce = |x: Result<(Vec<u64>, u64)>, y: Result<(Vec<u64>, u64)>| -> Result<(Vec<u64>, u64)> {
        let (mut hx, dx) = x?;
        let (hy, dy) = y?;
        for (a, b) in hx.iter_mut().zip(hy) {
            *a += b;
        }
        Ok((hx, dx + dy))
    };
    let zero = || Ok((vec![0u64; thresholds.len()], 0u64));
    let work = || (0..batches).into_par_iter().map(run_batch).reduce(zero, reduce);
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn self_normalized(xs: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
    if !(sum_sq > 0.0) || !sum_sq.is_finite() {
        return None;
    }
    Some((sum / n) / (sum_sq / n).sqrt())
}

fn student_t(xs: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    if !(ss > 0.0) || !ss.is_finite() {
        return None;
    }
    Some(n.sqrt() * mean / (ss / (n - 1.0)).sqrt())
}

/// P(X̄/V̄ₙ ≥ b) by simulation.
pub fn estimate_tail(dist: &DistributionModel, n: usize, b: f64, cfg: &McConfig) -> Result<McEstimate> {
    Ok(estimate_tail_grid(dist, n, &[b], cfg)?.remove(0))
}

/// P(X̄/V̄ₙ ≥ b) for several thresholds from one set of replicates. Each
/// entry equals what [`estimate_tail`] returns for that threshold.
pub fn estimate_tail_grid(dist: &DistributionModel, n: usize, bs: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let (hits, degenerate) = count_exceedances(dist, n, bs, cfg, self_normalized)?;
    Ok(hits.into_iter().map(|h| McEstimate::from_counts(h, degenerate, cfg)).collect())
}

/// P(Tₙ ≥ t) with Tₙ = √n X̄ / S simulated directly.
pub fn estimate_student_t_tail(dist: &DistributionModel, n: usize, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    let (hits, degenerate) = count_exceedances(dist, n, &[t], cfg, student_t)?;
    Ok(McEstimate::from_counts(hits[0], degenerate, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_builtin, Moments, SupportSpec};

    fn small(seed: u64) -> McConfig {
        McConfig {
            reps: 200_000,
            seed,
            batch_size: 4096,
            workers: None,
        }
    }

    #[test]
    fn identical_across_worker_counts() {
        let d = make_builtin("exp").unwrap();
        let base = estimate_tail(&d, 5, 0.5, &McConfig { workers: Some(1), ..small(3) }).unwrap();
        for w in [4, 16] {
            let e = estimate_tail(&d, 5, 0.5, &McConfig { workers: Some(w), ..small(3) }).unwrap();
            assert_eq!(base, e);
        }
    }

    #[test]
    fn grid_matches_single_threshold() {
        let d = make_builtin("t2").unwrap();
        let grid = estimate_tail_grid(&d, 5, &[0.3, 0.6], &small(5)).unwrap();
        assert_eq!(grid[1], estimate_tail(&d, 5, 0.6, &small(5)).unwrap());
    }

    #[test]
    fn ragged_last_batch() {
        let d = make_builtin("normal").unwrap();
        let cfg = McConfig {
            reps: 10_001,
            batch_size: 1000,
            ..McConfig::default()
        };
        let e = estimate_tail(&d, 3, 0.0, &cfg).unwrap();
        assert_eq!(e.reps, 10_001);
        assert!((e.p_hat - 0.5).abs() < 4.0 * e.std_err + 1e-12);
    }

    #[test]
    fn standard_error_and_interval() {
        let d = make_builtin("normal").unwrap();
        let e = estimate_tail(&d, 5, 0.5, &small(1)).unwrap();
        let se = (e.p_hat * (1.0 - e.p_hat) / e.reps as f64).sqrt();
        assert_eq!(e.std_err, se);
        assert!((e.ci95_low - (e.p_hat - 1.96 * se)).abs() < 1e-15);
        assert_eq!(e.generator, rng::GENERATOR);
    }

    #[test]
    fn coverage_at_one_half() {
        let d = make_builtin("normal").unwrap();
        let mut covered = 0;
        for seed in 0..200 {
            let cfg = McConfig {
                reps: 4000,
                seed,
                batch_size: 4000,
                workers: None,
            };
            let e = estimate_tail(&d, 5, 0.0, &cfg).unwrap();
            covered += (e.ci95_low <= 0.5 && 0.5 <= e.ci95_high) as usize;
        }
        assert!((176..=198).contains(&covered), "{covered}/200");
    }

    #[test]
    fn student_t_exact_quantile() {
        // t_{29, 0.95} = 1.699127
        let d = make_builtin("normal").unwrap();
        let e = estimate_student_t_tail(&d, 30, 1.699_127, &small(9)).unwrap();
        assert!((e.p_hat - 0.05).abs() < 0.002, "{}", e.p_hat);
    }

    #[test]
    fn degenerate_replicates_are_counted() {
        // a point mass at zero through its quantile
        let d = DistributionModel::from_density(
            "zero",
            |_| 1.0,
            SupportSpec::interval(-0.5, 0.5).unwrap(),
            Some(std::sync::Arc::new(|_| 0.0)),
            Moments::default(),
        );
        let e = estimate_tail(&d, 5, -0.5, &McConfig { reps: 100, ..McConfig::default() }).unwrap();
        assert_eq!((e.degenerate, e.p_hat), (100, 0.0));
    }

    #[test]
    fn errors() {
        let d = DistributionModel::from_density("u", |_| 1.0, SupportSpec::interval(0.0, 1.0).unwrap(), None, Moments::default());
        assert!(matches!(estimate_tail(&d, 5, 0.5, &small(0)), Err(Error::SamplerUnavailable(_))));
        let n = make_builtin("normal").unwrap();
        assert!(estimate_tail(&n, 1, 0.5, &small(0)).is_err());
        assert!(estimate_tail(&n, 5, 0.5, &McConfig { reps: 0, ..small(0) }).is_err());
    }
}
