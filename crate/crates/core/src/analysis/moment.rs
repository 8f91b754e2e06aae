//! Running-mean diagnostics for fractional moments of stopping times.

use serde::{Deserialize, Serialize};

use crate::analysis::green::{green_function, DEFAULT_OPS_BUDGET};
use crate::analysis::tail::sample_times;
use crate::analysis::{check_censoring, ReportMeta, RunSettings};
use crate::chain::{ChainSpec, State};
use crate::embedding::SolverKind;
use crate::error::{Error, Result};
use crate::local_time::TargetMeasure;

/// Growth of the running mean per doubling above which the moment is flagged divergent.
pub const DIVERGENCE_GROWTH: f64 = 0.20;
/// Relative change per doubling within which the moment is flagged finite.
pub const STABILITY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `T^β`.
    Raw,
    /// `a(T)^β` with `a = a_ii` for the initial state `i`.
    Green,
}

impl std::str::FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Functional::Raw),
            "green" => Ok(Functional::Green),
            _ => Err(Error::Config(format!(
                "unknown functional `{s}` (raw, green)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub solver: String,
    pub beta: f64,
    pub functional: Functional,
    /// Sample sizes of the running means: a quarter, half and all replicas.
    pub sample_sizes: Vec<u64>,
    pub running_means: Vec<f64>,
    /// `mean[k+1] / mean[k] - 1` for consecutive sample sizes.
    pub growth: Vec<f64>,
    pub diverging: bool,
    pub finite: bool,
    pub censored: u64,
    /// Censored replicas contributed their capped value, so means are lower bounds.
    pub lower_bound: bool,
    #[serde(flatten)]
    pub meta: ReportMeta,
}

/// Flags and running means of `values` at `n/4`, `n/2` and `n`.
pub fn running_mean_diagnostic(values: &[f64]) -> (Vec<u64>, Vec<f64>, Vec<f64>) {
    let n = values.len();
    let sizes: Vec<u64> = [n / 4, n / 2, n].iter().map(|&k| k as u64).collect();
    let mut prefix = 0.0;
    let mut means = Vec::with_capacity(3);
    let mut next = 0;
    for (k, v) in values.iter().enumerate() {
        prefix += v;
        while next < sizes.len() && sizes[next] == k as u64 + 1 {
            means.push(prefix / (k + 1) as f64);
            next += 1;
        }
    }
    while means.len() < sizes.len() {
        means.push(f64::NAN);
    }
    let growth = means.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    (sizes, means, growth)
}

pub fn estimate_moment(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    kind: SolverKind,
    beta: f64,
    functional: Functional,
    settings: &RunSettings,
) -> Result<MomentEstimate> {
    let mut all = estimate_moments(spec, initial, nu, kind, &[beta], functional, settings)?;
    Ok(all.remove(0))
}

/// One estimate per exponent, all computed from the same replicas.
pub fn estimate_moments(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    kind: SolverKind,
    betas: &[f64],
    functional: Functional,
    settings: &RunSettings,
) -> Result<Vec<MomentEstimate>> {
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(Error::Config(format!(
            "moment exponent {b} must be non-negative"
        )));
    }
    let green = match functional {
        Functional::Green if betas.iter().any(|b| *b > 0.0) => Some(green_function(
            spec,
            initial,
            initial,
            settings.cap,
            false,
            DEFAULT_OPS_BUDGET,
        )?),
        _ => None,
    };
    let outcomes = sample_times(spec, initial, nu, kind, settings)?;
    let censored = outcomes.iter().filter(|(_, c)| *c).count() as u64;
    check_censoring(censored, settings.replicas)?;
    let base: Vec<f64> = outcomes
        .iter()
        .map(|&(t, _)| match &green {
            Some(g) => g
                .value_f64(t.min(settings.cap))
                .expect("green table covers the cap"),
            None => t as f64,
        })
        .collect();
    Ok(betas
        .iter()
        .map(|&beta| {
            let values: Vec<f64> = if beta == 0.0 {
                vec![1.0; base.len()]
            } else {
                base.iter().map(|x| x.powf(beta)).collect()
            };
            let (sample_sizes, running_means, growth) = running_mean_diagnostic(&values);
            let diverging = !growth.is_empty() && growth.iter().all(|g| *g > DIVERGENCE_GROWTH);
            let finite =
                !growth.is_empty() && growth.iter().all(|g| g.abs() <= STABILITY_TOLERANCE);
            MomentEstimate {
                solver: kind.name(),
                beta,
                functional,
                sample_sizes,
                running_means,
                growth,
                diverging,
                finite,
                censored,
                lower_bound: censored > 0,
                meta: settings.meta(),
            }
        })
        .collect())
}
