//! Goodness-of-fit checks that the path seen from a stopping time is again
//! the stationary two-sided chain with the requested law at time zero.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::stats::chi_square_sf;
use crate::analysis::{check_censoring, run_replicas, ReportMeta, RunSettings};
use crate::chain::{ChainSpec, State, TransitionKernel};
use crate::embedding::{PreparedSolver, SolverKind};
use crate::error::Result;
use crate::local_time::TargetMeasure;

/// Significance level below which a law test fails.
pub const LAW_TEST_LEVEL: f64 = 1e-3;

/// Pearson test of transition counts at one lag against a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagTest {
    /// Positive for `(X_{T+l-1}, X_{T+l})`, negative for `(X_{T+l+1}, X_{T+l})`.
    pub lag: i64,
    pub transitions: u64,
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
    /// Largest `|obs - exp| / sqrt(exp)` over cells.
    pub max_abs_z: f64,
    /// Transitions observed where the kernel puts no mass.
    pub impossible: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalTest {
    pub counts: Vec<(String, u64)>,
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
    /// For Dirac targets: whether every uncensored `X_T` is the target state.
    pub structural: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedLawReport {
    pub solver: String,
    pub lags: usize,
    pub accepted: u64,
    pub censored: u64,
    pub marginal: MarginalTest,
    pub forward: Vec<LagTest>,
    pub backward: Vec<LagTest>,
    pub min_forward_p: f64,
    pub min_backward_p: f64,
    pub level: f64,
    pub marginal_pass: bool,
    pub forward_pass: bool,
    pub backward_pass: bool,
    pub passed: bool,
    #[serde(flatten)]
    pub meta: ReportMeta,
}

type PairCounts = BTreeMap<(State, State), u64>;

/// Pearson statistic of `(from, to)` counts with rows conditioned on `from`.
pub fn transition_test(kernel: &TransitionKernel, counts: &PairCounts, lag: i64) -> LagTest {
    let mut rows: BTreeMap<State, u64> = BTreeMap::new();
    for (&(a, _), &c) in counts {
        *rows.entry(a).or_default() += c;
    }
    let (mut statistic, mut df, mut max_abs_z, mut impossible) = (0.0, 0u64, 0.0f64, 0u64);
    for (&a, &n) in &rows {
        let support = kernel.support(a);
        for &b in &support {
            let p = kernel.prob(a, b).to_f64();
            let expected = n as f64 * p;
            let observed = counts.get(&(a, b)).copied().unwrap_or(0) as f64;
            let z = (observed - expected) / expected.sqrt();
            statistic += z * z;
            max_abs_z = max_abs_z.max(z.abs());
        }
        df += support.len().saturating_sub(1) as u64;
        impossible += counts
            .range((a, State::Finite(0))..)
            .take_while(|((x, _), _)| *x == a)
            .filter(|((_, b), _)| !support.contains(b))
            .map(|(_, c)| *c)
            .sum::<u64>();
    }
    if impossible > 0 {
        statistic = f64::INFINITY;
        max_abs_z = f64::INFINITY;
    }
    LagTest {
        lag,
        transitions: rows.values().sum(),
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        max_abs_z,
        impossible,
    }
}

fn marginal_test(
    spec: &ChainSpec,
    nu: &TargetMeasure,
    hits: &BTreeMap<State, u64>,
) -> MarginalTest {
    let total: u64 = hits.values().sum();
    let mut statistic = 0.0;
    let mut cells = 0u64;
    for (s, w) in nu.support() {
        let expected = total as f64 * w.to_f64();
        let observed = hits.get(&s).copied().unwrap_or(0) as f64;
        if expected > 0.0 {
            statistic += (observed - expected).powi(2) / expected;
            cells += 1;
        }
    }
    if hits.keys().any(|s| !nu.charges(*s)) {
        statistic = f64::INFINITY;
    }
    let df = cells.saturating_sub(1);
    MarginalTest {
        counts: hits.iter().map(|(s, c)| (spec.label(*s), *c)).collect(),
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        structural: nu.dirac_state().map(|d| hits.keys().all(|s| *s == d)),
    }
}

/// Runs `kind` on `settings.replicas` replicas and tests the law of
/// `(X_{T+n})_{|n| ≤ lags}`: the marginal of `X_T` against `ν`, forward
/// pairs against the kernel and backward pairs against the dual kernel.
pub fn verify_shifted_law(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    kind: SolverKind,
    lags: usize,
    settings: &RunSettings,
) -> Result<ShiftedLawReport> {
    let solver = PreparedSolver::new(spec, initial, nu, kind)?;
    let k = lags as i64;
    let windows = run_replicas(settings.replicas, settings.threads, |r| {
        let (res, mut traj) = solver.run_replica(settings.seed, r, settings.cap)?;
        if res.censored {
            return Ok(None);
        }
        let t = res.time as i64;
        traj.ensure(spec, t + k)?;
        traj.ensure(spec, t - k)?;
        traj.window(t - k, t + k).map(Some)
    })?;
    let censored = windows.iter().filter(|w| w.is_none()).count() as u64;
    check_censoring(censored, settings.replicas)?;

    let mut hits: BTreeMap<State, u64> = BTreeMap::new();
    let mut forward = vec![PairCounts::new(); lags];
    let mut backward = vec![PairCounts::new(); lags];
    for w in windows.iter().flatten() {
        *hits.entry(w[lags]).or_default() += 1;
        for l in 1..=lags {
            *forward[l - 1]
                .entry((w[lags + l - 1], w[lags + l]))
                .or_default() += 1;
            *backward[l - 1]
                .entry((w[lags + 1 - l], w[lags - l]))
                .or_default() += 1;
        }
    }
    let marginal = marginal_test(spec, nu, &hits);
    let forward: Vec<LagTest> = forward
        .iter()
        .enumerate()
        .map(|(l, c)| transition_test(spec.forward(), c, l as i64 + 1))
        .collect();
    let backward: Vec<LagTest> = backward
        .iter()
        .enumerate()
        .map(|(l, c)| transition_test(spec.dual(), c, -(l as i64) - 1))
        .collect();
    let min_p = |tests: &[LagTest]| tests.iter().map(|t| t.p_value).fold(1.0, f64::min);
    let (min_forward_p, min_backward_p) = (min_p(&forward), min_p(&backward));
    let marginal_pass = match marginal.structural {
        Some(exact) => exact,
        None => marginal.p_value > LAW_TEST_LEVEL,
    };
    let forward_pass = min_forward_p > LAW_TEST_LEVEL;
    let backward_pass = min_backward_p > LAW_TEST_LEVEL;
    Ok(ShiftedLawReport {
        solver: kind.name(),
        lags,
        accepted: settings.replicas - censored,
        censored,
        marginal,
        forward,
        backward,
        min_forward_p,
        min_backward_p,
        level: LAW_TEST_LEVEL,
        marginal_pass,
        forward_pass,
        backward_pass,
        passed: marginal_pass && forward_pass && backward_pass,
        meta: settings.meta(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Scalar;

    #[test]
    fn perfect_counts_give_zero_statistic() {
        let spec = ChainSpec::coin(Scalar::ratio(1, 2)).unwrap();
        let (t, h) = (State::Finite(0), State::Finite(1));
        let counts: PairCounts = [((t, t), 50), ((t, h), 50), ((h, t), 25), ((h, h), 25)].into();
        let test = transition_test(spec.forward(), &counts, 1);
        assert_eq!(test.statistic, 0.0);
        assert_eq!(test.df, 2);
        assert!((test.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_transition_is_rejected() {
        let spec = ChainSpec::three_state(Scalar::ratio(1, 3)).unwrap();
        let counts: PairCounts = [((State::Finite(0), State::Finite(0)), 1)].into();
        let test = transition_test(spec.forward(), &counts, 1);
        assert_eq!(test.impossible, 1);
        assert_eq!(test.p_value, 0.0);
    }

    #[test]
    fn tstar_on_three_state_chain_passes() {
        let spec = ChainSpec::three_state(Scalar::ratio(1, 3)).unwrap();
        let nu = TargetMeasure::dirac(State::Finite(2));
        let settings = RunSettings::new(5, 4000, 100_000);
        let report = verify_shifted_law(
            &spec,
            State::Finite(0),
            &nu,
            SolverKind::TStar,
            3,
            &settings,
        )
        .unwrap();
        assert_eq!(report.marginal.structural, Some(true));
        assert!(report.passed, "{report:?}");
    }
}
