//! Small statistical helpers shared by the estimators.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Upper tail `P(χ²_df ≥ stat)`; `df = 0` yields 1 for a zero statistic and 0 otherwise.
pub fn chi_square_sf(stat: f64, df: u64) -> f64 {
    if stat.is_infinite() {
        return 0.0;
    }
    if df == 0 {
        return if stat > 0.0 { 0.0 } else { 1.0 };
    }
    ChiSquared::new(df as f64)
        .map(|d| d.sf(stat))
        .unwrap_or(f64::NAN)
}

/// Two-sided normal quantile for a central interval of mass `level`.
pub fn normal_quantile(level: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .map(|n| n.inverse_cdf(0.5 + level / 2.0))
        .unwrap_or(f64::NAN)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Empirical quantile with linear interpolation; `xs` must be sorted.
pub fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let h = (xs.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

/// Partition of `n` consecutive replicas into at most `blocks` contiguous blocks.
pub fn block_bounds(n: usize, blocks: usize) -> Vec<(usize, usize)> {
    let blocks = blocks.clamp(1, n.max(1));
    (0..blocks)
        .map(|b| (b * n / blocks, (b + 1) * n / blocks))
        .filter(|(a, e)| e > a)
        .collect()
}

/// Percentile interval of the replica mean under the block bootstrap.
pub fn block_bootstrap_mean_ci<R: Rng + ?Sized>(
    values: &[f64],
    blocks: usize,
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let bounds = block_bounds(values.len(), blocks);
    let sums: Vec<(f64, usize)> = bounds
        .iter()
        .map(|&(a, e)| (values[a..e].iter().sum::<f64>(), e - a))
        .collect();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let (mut s, mut n) = (0.0, 0usize);
            for _ in 0..sums.len() {
                let (bs, bn) = sums[rng.random_range(0..sums.len())];
                s += bs;
                n += bn;
            }
            s / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    (
        quantile_sorted(&means, alpha),
        quantile_sorted(&means, 1.0 - alpha),
    )
}

/// Weighted least squares line `y = a + b x`; returns `(b, a)`.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    if x.len() < 2 || sw <= 0.0 {
        return None;
    }
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, c), b)| b * (a - mx) * (c - my))
        .sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
