//! Paired comparison of concave costs of the optimal time and alternative solutions.

use serde::Serialize;

use crate::analysis::stats::{block_bootstrap_mean_ci, mean};
use crate::analysis::verify::{verify_shifted_law, ShiftedLawReport};
use crate::analysis::{
    check_censoring, run_replicas, ReportMeta, RunSettings, BOOTSTRAP_BLOCKS, BOOTSTRAP_RESAMPLES,
};
use crate::chain::{ChainSpec, State};
use crate::embedding::{PreparedSolver, SolverKind};
use crate::error::{Error, Result};
use crate::local_time::TargetMeasure;
use crate::rng::{Lane, ReplicaStreams};
use crate::transport::CostFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareOptions {
    /// Replicas of the shifted-law check run on each alternative; defaults to `min(N, 20000)`.
    pub validation_replicas: Option<u64>,
    pub validation_lags: usize,
    pub blocks: usize,
    pub resamples: usize,
    pub level: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            validation_replicas: None,
            validation_lags: 5,
            blocks: BOOTSTRAP_BLOCKS,
            resamples: BOOTSTRAP_RESAMPLES,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostComparison {
    pub psi: CostFunction,
    pub alternative: String,
    pub mean_tstar: f64,
    pub mean_alternative: f64,
    /// Mean of `ψ(T_alt) - ψ(T*)` over replicas.
    pub mean_difference: f64,
    pub ci: (f64, f64),
    /// The interval does not reach below zero.
    pub consistent: bool,
    /// The interval lies strictly above zero.
    pub strictly_better: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub comparisons: Vec<CostComparison>,
    pub validations: Vec<ShiftedLawReport>,
    pub censored_tstar: u64,
    pub censored_alternatives: Vec<u64>,
    pub all_consistent: bool,
    #[serde(flatten)]
    pub meta: ReportMeta,
}

/// Runs `T*` and every alternative on the same path of each replica and
/// compares the means of `ψ(min(T, cap))`. Alternatives are first checked
/// with [`verify_shifted_law`] and rejected if they fail.
pub fn compare_optimality(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    alternatives: &[SolverKind],
    psis: &[CostFunction],
    settings: &RunSettings,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    if psis.is_empty() {
        return Err(Error::Config(
            "at least one cost function is required".into(),
        ));
    }
    if alternatives.is_empty() {
        return Err(Error::Config(
            "at least one alternative solver is required".into(),
        ));
    }
    let check = RunSettings {
        replicas: opts
            .validation_replicas
            .unwrap_or(settings.replicas.min(20_000)),
        ..*settings
    };
    let mut validations = Vec::new();
    for &alt in alternatives {
        let report = verify_shifted_law(spec, initial, nu, alt, opts.validation_lags, &check)?;
        if !report.passed {
            return Err(Error::InvalidAlternative(alt.name()));
        }
        validations.push(report);
    }

    let tstar = PreparedSolver::new(spec, initial, nu, SolverKind::TStar.route(initial, nu))?;
    let solvers = alternatives
        .iter()
        .map(|&k| PreparedSolver::new(spec, initial, nu, k))
        .collect::<Result<Vec<_>>>()?;
    let runs = run_replicas(settings.replicas, settings.threads, |r| {
        let mut traj = tstar.trajectory(ReplicaStreams::new(settings.seed, r))?;
        let base = tstar.run(&mut traj, settings.cap)?;
        let mut row = vec![(base.time, base.censored)];
        for s in &solvers {
            let res = s.run(&mut traj, settings.cap)?;
            row.push((res.time, res.censored));
        }
        Ok(row)
    })?;
    let censored_in = |k: usize| runs.iter().filter(|row| row[k].1).count() as u64;
    let censored_tstar = censored_in(0);
    check_censoring(censored_tstar, settings.replicas)?;
    let censored_alternatives: Vec<u64> = (1..=solvers.len()).map(censored_in).collect();
    for &c in &censored_alternatives {
        check_censoring(c, settings.replicas)?;
    }

    let mut rng = ReplicaStreams::new(settings.seed, 0).lane(Lane::Bootstrap);
    let mut comparisons = Vec::new();
    for psi in psis {
        let cost = |t: u64| psi.eval_f64(t.min(settings.cap) as f64);
        let base: Vec<f64> = runs.iter().map(|row| cost(row[0].0)).collect();
        for (a, alt) in alternatives.iter().enumerate() {
            let other: Vec<f64> = runs.iter().map(|row| cost(row[a + 1].0)).collect();
            let diff: Vec<f64> = other.iter().zip(&base).map(|(x, y)| x - y).collect();
            let ci =
                block_bootstrap_mean_ci(&diff, opts.blocks, opts.resamples, opts.level, &mut rng);
            comparisons.push(CostComparison {
                psi: *psi,
                alternative: alt.name(),
                mean_tstar: mean(&base),
                mean_alternative: mean(&other),
                mean_difference: mean(&diff),
                ci,
                consistent: ci.1 >= 0.0,
                strictly_better: ci.0 > 0.0,
            });
        }
    }
    Ok(ComparisonReport {
        all_consistent: comparisons.iter().all(|c| c.consistent),
        comparisons,
        validations,
        censored_tstar,
        censored_alternatives,
        meta: settings.meta(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Scalar;

    #[test]
    fn tstar_against_itself_has_zero_difference() {
        let spec = ChainSpec::coin(Scalar::ratio(1, 3)).unwrap();
        let nu = TargetMeasure::dirac(State::Finite(1));
        let settings = RunSettings::new(2, 2000, 10_000);
        let opts = CompareOptions {
            validation_replicas: Some(2000),
            ..Default::default()
        };
        let report = compare_optimality(
            &spec,
            State::Finite(0),
            &nu,
            &[SolverKind::TStar],
            &[CostFunction::Power(0.5)],
            &settings,
            &opts,
        )
        .unwrap();
        let c = &report.comparisons[0];
        assert_eq!(c.mean_difference, 0.0);
        assert!(c.ci.0 <= 0.0 && c.ci.1 >= 0.0 && c.consistent);
    }

    #[test]
    fn invalid_alternative_is_rejected() {
        let spec = ChainSpec::three_state(Scalar::ratio(1, 3)).unwrap();
        let nu = TargetMeasure::dirac(State::Finite(2));
        let settings = RunSettings::new(4, 20_000, 10_000);
        let err = compare_optimality(
            &spec,
            State::Finite(0),
            &nu,
            &[SolverKind::Delayed { steps: 1 }],
            &[CostFunction::Log1p],
            &settings,
            &CompareOptions::default(),
        );
        assert!(matches!(err, Err(Error::InvalidAlternative(_))), "{err:?}");
    }
}
