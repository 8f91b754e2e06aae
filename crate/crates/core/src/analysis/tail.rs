//! Empirical survival curves of stopping times and their log-log slopes.

use rand::Rng;
use serde::Serialize;

use crate::analysis::stats::{block_bounds, quantile_sorted, weighted_line_fit};
use crate::analysis::{
    check_censoring, run_replicas, ReportMeta, RunSettings, BOOTSTRAP_BLOCKS, BOOTSTRAP_RESAMPLES,
};
use crate::chain::{ChainSpec, State};
use crate::embedding::{PreparedSolver, SolverKind};
use crate::error::Result;
use crate::local_time::TargetMeasure;
use crate::rng::{Lane, ReplicaStreams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFitOptions {
    /// Smallest grid point used by the fit.
    pub fit_lo: u64,
    /// Largest grid point used by the fit; defaults to a tenth of the cap.
    pub fit_hi: Option<u64>,
    pub points_per_decade: u32,
    pub blocks: usize,
    pub resamples: usize,
    pub level: f64,
}

impl Default for TailFitOptions {
    fn default() -> Self {
        TailFitOptions {
            fit_lo: 100,
            fit_hi: None,
            points_per_decade: 10,
            blocks: BOOTSTRAP_BLOCKS,
            resamples: BOOTSTRAP_RESAMPLES,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub solver: String,
    pub grid: Vec<u64>,
    /// `P(T > n)` at each grid point.
    pub survival: Vec<f64>,
    pub fit_range: (u64, u64),
    pub fit_points: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub censored: u64,
    #[serde(flatten)]
    pub meta: ReportMeta,
}

/// Integer points `1 ≤ n ≤ cap`, roughly geometric with `per_decade` points per decade.
pub fn geometric_grid(cap: u64, per_decade: u32) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut k = 0u32;
    loop {
        let n = 10f64.powf(k as f64 / per_decade.max(1) as f64).round() as u64;
        if n > cap {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        k += 1;
    }
    if grid.last() != Some(&cap) && cap > 0 {
        grid.push(cap);
    }
    grid
}

/// Number of outcomes exceeding each grid point; censored outcomes exceed every point.
fn exceed_counts(sorted: &[u64], grid: &[u64]) -> Vec<u64> {
    grid.iter()
        .map(|&n| (sorted.len() - sorted.partition_point(|&t| t <= n)) as u64)
        .collect()
}

/// Survival curve and weighted log-log fit of `(time, censored)` outcomes.
pub fn survival_fit(
    outcomes: &[(u64, bool)],
    settings: &RunSettings,
    opts: &TailFitOptions,
    solver: &str,
) -> Result<TailEstimate> {
    let total = outcomes.len();
    let censored = outcomes.iter().filter(|(_, c)| *c).count() as u64;
    check_censoring(censored, total as u64)?;
    let key = |&(t, c): &(u64, bool)| if c { u64::MAX } else { t };
    let grid = geometric_grid(settings.cap, opts.points_per_decade);
    let mut all: Vec<u64> = outcomes.iter().map(key).collect();
    all.sort_unstable();
    let survival: Vec<f64> = exceed_counts(&all, &grid)
        .into_iter()
        .map(|c| c as f64 / total as f64)
        .collect();
    debug_assert!(survival.windows(2).all(|w| w[1] <= w[0]));

    let fit_hi = opts.fit_hi.unwrap_or(settings.cap / 10);
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&k| grid[k] >= opts.fit_lo && grid[k] <= fit_hi && survival[k] > 0.0)
        .collect();
    let mut estimate = TailEstimate {
        solver: solver.to_string(),
        grid: grid.clone(),
        survival: survival.clone(),
        fit_range: (opts.fit_lo, fit_hi),
        fit_points: idx.len(),
        slope: None,
        intercept: None,
        slope_ci: None,
        censored,
        meta: settings.meta(),
    };
    if idx.len() < 2 {
        return Ok(estimate);
    }

    let fit_grid: Vec<u64> = idx.iter().map(|&k| grid[k]).collect();
    let bounds = block_bounds(total, opts.blocks);
    let block_counts: Vec<(Vec<u64>, u64)> = bounds
        .iter()
        .map(|&(a, e)| {
            let mut v: Vec<u64> = outcomes[a..e].iter().map(key).collect();
            v.sort_unstable();
            (exceed_counts(&v, &fit_grid), (e - a) as u64)
        })
        .collect();
    let floor = 0.5 / total as f64;
    let mut rng = ReplicaStreams::new(settings.seed, 0).lane(Lane::Bootstrap);
    let resampled: Vec<Vec<f64>> = (0..opts.resamples)
        .map(|_| {
            let mut counts = vec![0u64; fit_grid.len()];
            let mut n = 0u64;
            for _ in 0..block_counts.len() {
                let (c, size) = &block_counts[rng.random_range(0..block_counts.len())];
                counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
                n += size;
            }
            counts
                .iter()
                .map(|&c| (c as f64 / n as f64).max(floor).ln())
                .collect()
        })
        .collect();

    let x: Vec<f64> = fit_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&k| survival[k].ln()).collect();
    let variances: Vec<f64> = (0..fit_grid.len())
        .map(|p| {
            let col: Vec<f64> = resampled.iter().map(|r| r[p]).collect();
            crate::analysis::stats::variance(&col)
        })
        .collect();
    let smallest = variances
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = variances
        .iter()
        .map(|&v| {
            if v > 0.0 {
                1.0 / v
            } else if smallest.is_finite() {
                1.0 / smallest
            } else {
                1.0
            }
        })
        .collect();
    let Some((slope, intercept)) = weighted_line_fit(&x, &y, &weights) else {
        return Ok(estimate);
    };
    let mut slopes: Vec<f64> = resampled
        .iter()
        .filter_map(|ys| weighted_line_fit(&x, ys, &weights).map(|(b, _)| b))
        .collect();
    slopes.sort_by(f64::total_cmp);
    let alpha = (1.0 - opts.level) / 2.0;
    estimate.slope = Some(slope);
    estimate.intercept = Some(intercept);
    estimate.slope_ci = Some((
        quantile_sorted(&slopes, alpha),
        quantile_sorted(&slopes, 1.0 - alpha),
    ));
    Ok(estimate)
}

/// `(time, censored)` of every replica, in replica order.
pub fn sample_times(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    kind: SolverKind,
    settings: &RunSettings,
) -> Result<Vec<(u64, bool)>> {
    let solver = PreparedSolver::new(spec, initial, nu, kind)?;
    run_replicas(settings.replicas, settings.threads, |r| {
        let (res, _) = solver.run_replica(settings.seed, r, settings.cap)?;
        Ok((res.time, res.censored))
    })
}

pub fn estimate_tail(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    kind: SolverKind,
    settings: &RunSettings,
    opts: &TailFitOptions,
) -> Result<TailEstimate> {
    let outcomes = sample_times(spec, initial, nu, kind, settings)?;
    survival_fit(&outcomes, settings, opts, &kind.name())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric_and_capped() {
        let g = geometric_grid(1000, 4);
        assert_eq!(g.first(), Some(&1));
        assert_eq!(g.last(), Some(&1000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&100) && g.contains(&10));
    }

    #[test]
    fn exact_power_law_is_recovered() {
        // P(T > n) = n^{-1/2} on a deterministic quantile sample
        let n = 40_000u64;
        let outcomes: Vec<(u64, bool)> = (1..=n)
            .map(|k| {
                let u = k as f64 / (n + 1) as f64;
                ((1.0 / (u * u)).floor() as u64, false)
            })
            .map(|(t, c)| if t > 100_000 { (100_000, true) } else { (t, c) })
            .collect();
        let settings = RunSettings::new(1, n, 100_000);
        let est = survival_fit(
            &outcomes,
            &settings,
            &TailFitOptions::default(),
            "synthetic",
        )
        .unwrap();
        assert!((est.slope.unwrap() + 0.5).abs() < 0.02, "{:?}", est.slope);
        assert!(est.survival.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn excess_censoring_is_an_error() {
        let outcomes = vec![(10, true), (10, true), (3, false)];
        let settings = RunSettings::new(1, 3, 10);
        assert!(survival_fit(&outcomes, &settings, &TailFitOptions::default(), "x").is_err());
    }
}
