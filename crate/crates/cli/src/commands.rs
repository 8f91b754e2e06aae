//! Subcommands as pure functions from a validated config to a rendered report.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use skorokhod::analysis::compare::{compare_optimality, CompareOptions};
use skorokhod::analysis::moment::estimate_moments;
use skorokhod::analysis::passage::{block_passage_oracle, first_passage_oracle};
use skorokhod::analysis::tail::{estimate_tail, TailEstimate};
use skorokhod::analysis::verify::verify_shifted_law;
use skorokhod::analysis::{run_replicas, ReportMeta, RunSettings};
use skorokhod::embedding::{check_feasibility, FeasibilityVerdict, PreparedSolver, SolverKind};
use skorokhod::{ChainSpec, Error, Result, State, TargetMeasure};

use crate::config::{ExperimentConfig, Format};
use crate::fixture::load_fixture;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Sample,
    Verify,
    Tail,
    Moment,
    Compare,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Sample => "sample",
            Command::Verify => "verify",
            Command::Tail => "tail",
            Command::Moment => "moment",
            Command::Compare => "compare",
            Command::Oracle => "oracle",
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub cap: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        config.seed = self.seed.or(config.seed);
        config.replicas = self.replicas.unwrap_or(config.replicas);
        config.cap = self.cap.unwrap_or(config.cap);
        config.threads = self.threads.or(config.threads);
        if let Some(dir) = &self.out_dir {
            config.output.dir = Some(dir.clone());
        }
        config.output.format = self.format.unwrap_or(config.output.format);
        if let Some(p) = &self.path {
            config.path = Some(p.clone());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Every enabled check passed.
    Pass,
    /// A domain-level negative: infeasible target or a failed check.
    Negative,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Negative => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Negative
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    /// One human-readable line.
    pub summary: String,
    pub report: String,
    pub format: Format,
}

impl Outcome {
    pub fn file_name(&self, command: Command) -> String {
        let ext = match self.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        format!("{}.{ext}", command.name())
    }
}

struct Instance {
    spec: ChainSpec,
    initial: State,
    nu: TargetMeasure,
    settings: RunSettings,
}

fn instance(config: &ExperimentConfig) -> Result<Instance> {
    let spec = config.chain_spec()?;
    let initial = config.initial_state(&spec)?;
    let nu = config.target_measure(&spec)?;
    let settings =
        RunSettings::new(config.seed(), config.replicas, config.cap).with_threads(config.threads);
    Ok(Instance {
        spec,
        initial,
        nu,
        settings,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn infeasible(verdict: &FeasibilityVerdict, format: Format) -> Outcome {
    Outcome {
        status: Status::Negative,
        summary: format!("infeasible: {:?}", verdict.reason),
        report: match format {
            Format::Json => json(verdict),
            Format::Csv => String::new(),
        },
        format,
    }
}

/// Feasibility gate for solvers without extra randomness.
fn gate(inst: &Instance, kind: SolverKind, format: Format) -> Result<Option<Outcome>> {
    if matches!(kind, SolverKind::TRand) {
        return Ok(None);
    }
    let verdict = check_feasibility(&inst.spec, inst.initial, &inst.nu)?;
    Ok((!verdict.feasible).then(|| infeasible(&verdict, format)))
}

/// Runs `command` on a config after applying overrides and validating it.
pub fn run(
    command: Command,
    mut config: ExperimentConfig,
    overrides: &Overrides,
) -> Result<Outcome> {
    overrides.apply(&mut config);
    config.validate()?;
    let format = config.output.format;
    match command {
        Command::Check => check(&config, format),
        Command::Sample => sample(&config, format),
        Command::Verify => verify(&config, format),
        Command::Tail => tail(&config, format),
        Command::Moment => moment(&config, format),
        Command::Compare => compare(&config, format),
        Command::Oracle => oracle(&config, format),
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    initial: String,
    #[serde(flatten)]
    verdict: &'a FeasibilityVerdict,
}

fn check(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let inst = instance(config)?;
    let verdict = check_feasibility(&inst.spec, inst.initial, &inst.nu)?;
    let report = match format {
        Format::Json => json(&CheckReport {
            initial: inst.spec.label(inst.initial),
            verdict: &verdict,
        }),
        Format::Csv => {
            let mut out = String::from("state,ratio,integer\n");
            for w in &verdict.witness {
                let _ = writeln!(out, "{},{},{}", csv_field(&w.state), w.value, w.integer);
            }
            out
        }
    };
    Ok(Outcome {
        status: Status::from_pass(verdict.feasible),
        summary: if verdict.feasible {
            "feasible".into()
        } else {
            "infeasible".into()
        },
        report,
        format,
    })
}

#[derive(Serialize)]
struct SampleRecord {
    replica: u64,
    #[serde(rename = "T")]
    time: u64,
    #[serde(rename = "X_T")]
    state: Option<String>,
    censored: bool,
}

#[derive(Serialize)]
struct SampleReport {
    solver: String,
    records: Vec<SampleRecord>,
    #[serde(flatten)]
    meta: ReportMeta,
}

fn sample(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let inst = instance(config)?;
    let kind = config.solver_kind()?.route(inst.initial, &inst.nu);
    if let Some(out) = gate(&inst, kind, format)? {
        return Ok(out);
    }
    let solver = PreparedSolver::new(&inst.spec, inst.initial, &inst.nu, kind)?;
    let label = |res: &skorokhod::embedding::StoppingResult, traj: &skorokhod::Trajectory| {
        res.value()
            .and_then(|t| traj.get(t as i64))
            .map(|s| inst.spec.label(s))
    };
    let records = match &config.path {
        Some(path) => {
            let mut traj = load_fixture(&inst.spec, &config.resolve(path))?;
            let res = solver.run(&mut traj, config.cap)?;
            vec![SampleRecord {
                replica: 0,
                time: res.time,
                state: label(&res, &traj),
                censored: res.censored,
            }]
        }
        None => run_replicas(inst.settings.replicas, inst.settings.threads, |r| {
            let (res, traj) = solver.run_replica(inst.settings.seed, r, inst.settings.cap)?;
            Ok(SampleRecord {
                replica: r,
                time: res.time,
                state: label(&res, &traj),
                censored: res.censored,
            })
        })?,
    };
    let censored = records.iter().filter(|r| r.censored).count();
    let summary = format!(
        "{} replicas sampled with {}, {censored} censored",
        records.len(),
        kind.name()
    );
    let report = match format {
        Format::Json => json(&SampleReport {
            solver: kind.name(),
            records,
            meta: inst.settings.meta(),
        }),
        Format::Csv => {
            let mut out = String::from("replica,T,X_T,censored\n");
            for r in &records {
                let state = r.state.as_deref().map(csv_field).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{}", r.replica, r.time, state, r.censored);
            }
            out
        }
    };
    Ok(Outcome {
        status: Status::Pass,
        summary,
        report,
        format,
    })
}

fn verify(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let inst = instance(config)?;
    let kind = config.solver_kind()?.route(inst.initial, &inst.nu);
    if let Some(out) = gate(&inst, kind, format)? {
        return Ok(out);
    }
    let report = verify_shifted_law(
        &inst.spec,
        inst.initial,
        &inst.nu,
        kind,
        config.lags,
        &inst.settings,
    )?;
    let summary = format!(
        "{}: marginal {}, forward min p = {:.3e}, backward min p = {:.3e}",
        if report.passed { "pass" } else { "FAIL" },
        if report.marginal_pass {
            "ok"
        } else {
            "rejected"
        },
        report.min_forward_p,
        report.min_backward_p
    );
    let rendered = match format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut out = String::from("test,lag,statistic,df,p_value\n");
            let m = &report.marginal;
            let _ = writeln!(out, "marginal,0,{},{},{}", m.statistic, m.df, m.p_value);
            for t in report.forward.iter().chain(&report.backward) {
                let name = if t.lag > 0 { "forward" } else { "backward" };
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{}",
                    t.lag, t.statistic, t.df, t.p_value
                );
            }
            out
        }
    };
    Ok(Outcome {
        status: Status::from_pass(report.passed),
        summary,
        report: rendered,
        format,
    })
}

fn render_tail(est: &TailEstimate, format: Format) -> String {
    match format {
        Format::Json => json(est),
        Format::Csv => {
            let mut out = String::from("n,survival\n");
            for (n, s) in est.grid.iter().zip(&est.survival) {
                let _ = writeln!(out, "{n},{s}");
            }
            out
        }
    }
}

fn tail_summary(est: &TailEstimate) -> String {
    match (est.slope, est.slope_ci) {
        (Some(b), Some((lo, hi))) => format!("{}: slope {b:.4} [{lo:.4}, {hi:.4}]", est.solver),
        _ => format!(
            "{}: too few positive survival points to fit a slope",
            est.solver
        ),
    }
}

fn tail(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let inst = instance(config)?;
    let kind = config.solver_kind()?.route(inst.initial, &inst.nu);
    if let Some(out) = gate(&inst, kind, format)? {
        return Ok(out);
    }
    let est = estimate_tail(
        &inst.spec,
        inst.initial,
        &inst.nu,
        kind,
        &inst.settings,
        &config.tail_options(),
    )?;
    Ok(Outcome {
        status: Status::Pass,
        summary: tail_summary(&est),
        report: render_tail(&est, format),
        format,
    })
}

fn moment(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let inst = instance(config)?;
    let kind = config.solver_kind()?.route(inst.initial, &inst.nu);
    if let Some(out) = gate(&inst, kind, format)? {
        return Ok(out);
    }
    let estimates = estimate_moments(
        &inst.spec,
        inst.initial,
        &inst.nu,
        kind,
        &config.betas,
        config.functional,
        &inst.settings,
    )?;
    let summary = estimates
        .iter()
        .map(|e| {
            let flag = if e.diverging {
                "diverging"
            } else if e.finite {
                "finite"
            } else {
                "undecided"
            };
            format!("beta {}: {flag}", e.beta)
        })
        .collect::<Vec<_>>()
        .join(", ");
    let report = match format {
        Format::Json => json(&estimates),
        Format::Csv => {
            let mut out = String::from("beta,functional,sample_size,running_mean\n");
            for e in &estimates {
                for (n, m) in e.sample_sizes.iter().zip(&e.running_means) {
                    let f = serde_json::to_value(e.functional).expect("serializes");
                    let _ = writeln!(out, "{},{},{n},{m}", e.beta, f.as_str().unwrap_or_default());
                }
            }
            out
        }
    };
    Ok(Outcome {
        status: Status::Pass,
        summary,
        report,
        format,
    })
}

fn compare(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    if config.psi.is_empty() {
        return Err(Error::Config("compare needs a non-empty `psi` list".into()));
    }
    let inst = instance(config)?;
    if let Some(out) = gate(&inst, SolverKind::TStar, format)? {
        return Ok(out);
    }
    let opts = CompareOptions {
        validation_replicas: config.validation_replicas,
        validation_lags: config.lags,
        ..Default::default()
    };
    let report = compare_optimality(
        &inst.spec,
        inst.initial,
        &inst.nu,
        &config.alternative_kinds()?,
        &config.cost_functions()?,
        &inst.settings,
        &opts,
    )?;
    let summary = report
        .comparisons
        .iter()
        .map(|c| {
            format!(
                "{} vs {}: [{:.4}, {:.4}]",
                c.psi, c.alternative, c.ci.0, c.ci.1
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let rendered = match format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut out = String::from("psi,alternative,mean_tstar,mean_alternative,mean_difference,ci_lo,ci_hi,consistent\n");
            for c in &report.comparisons {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    c.psi,
                    c.alternative,
                    c.mean_tstar,
                    c.mean_alternative,
                    c.mean_difference,
                    c.ci.0,
                    c.ci.1,
                    c.consistent
                );
            }
            out
        }
    };
    Ok(Outcome {
        status: Status::from_pass(report.all_consistent),
        summary,
        report: rendered,
        format,
    })
}

fn oracle(config: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let settings =
        RunSettings::new(config.seed(), config.replicas, config.cap).with_threads(config.threads);
    let est = match config.increment_law()? {
        Some(law) => first_passage_oracle(&law, &settings, &config.tail_options())?,
        None => {
            let inst = instance(config)?;
            block_passage_oracle(
                &inst.spec,
                inst.initial,
                &inst.nu,
                &settings,
                &config.tail_options(),
            )?
        }
    };
    Ok(Outcome {
        status: Status::Pass,
        summary: tail_summary(&est),
        report: render_tail(&est, format),
        format,
    })
}
