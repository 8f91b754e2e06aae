//! Experiment definitions read from TOML or JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use skorokhod::analysis::moment::Functional;
use skorokhod::analysis::passage::IncrementLaw;
use skorokhod::analysis::tail::TailFitOptions;
use skorokhod::embedding::SolverKind;
use skorokhod::transport::CostFunction;
use skorokhod::{ChainSpec, Error, Result, Scalar, State, TargetMeasure};

pub const MAX_REPLICAS: u64 = 100_000_000;
pub const MAX_LAGS: usize = 100;
pub const MAX_BETA: f64 = 10.0;

/// A chain given inline or by reference to a file holding the same table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainConfig {
    Coin {
        p: Scalar,
    },
    ThreeState {
        p: Scalar,
    },
    Pattern {
        p: Scalar,
    },
    FiniteMatrix {
        labels: Vec<String>,
        rows: Vec<Vec<Scalar>>,
    },
    IidCategorical {
        labels: Vec<String>,
        weights: Vec<Scalar>,
    },
    SrwZ,
    SrwZ2,
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TargetConfig {
    /// `"stationary"`.
    Named(String),
    /// State label to weight.
    Weights(BTreeMap<String, Scalar>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    #[serde(default = "default_fit_lo")]
    pub fit_lo: u64,
    pub fit_hi: Option<u64>,
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: u32,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig {
            fit_lo: default_fit_lo(),
            fit_hi: None,
            points_per_decade: default_points_per_decade(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Increment value to probability. Without it the walk is read from
    /// return blocks of the configured chain.
    pub increments: Option<BTreeMap<String, Scalar>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            format: default_format(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default = "default_cap")]
    pub cap: u64,
    pub threads: Option<usize>,
    pub chain: ChainConfig,
    pub initial: String,
    pub target: TargetConfig,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_functional")]
    pub functional: Functional,
    #[serde(default = "default_psi")]
    pub psi: Vec<String>,
    #[serde(default = "default_alternatives")]
    pub alternatives: Vec<String>,
    /// Replicas of the shifted-law check on each alternative before comparing.
    pub validation_replicas: Option<u64>,
    #[serde(default)]
    pub tail: TailConfig,
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Trajectory fixture for `sample`.
    pub path: Option<PathBuf>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_replicas() -> u64 {
    10_000
}
fn default_cap() -> u64 {
    100_000
}
fn default_solver() -> String {
    "tstar".into()
}
fn default_lags() -> usize {
    5
}
fn default_betas() -> Vec<f64> {
    vec![0.4, 0.5]
}
fn default_functional() -> Functional {
    Functional::Raw
}
fn default_psi() -> Vec<String> {
    vec!["sqrt".into(), "log1p".into(), "capped_linear:100".into()]
}
fn default_alternatives() -> Vec<String> {
    vec!["composite".into(), "mixture".into()]
}
fn default_fit_lo() -> u64 {
    100
}
fn default_points_per_decade() -> u32 {
    10
}
fn default_format() -> Format {
    Format::Json
}

fn parse_document<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

impl ExperimentConfig {
    /// Reads a `.toml` or `.json` file; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: ExperimentConfig = parse_document(path)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Range checks that do not need the chain.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.seed.is_none() {
            return bad("a seed is required".into());
        }
        if self.replicas == 0 || self.replicas > MAX_REPLICAS {
            return bad(format!("replicas must lie in [1, {MAX_REPLICAS}]"));
        }
        if self.cap == 0 {
            return bad("cap must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if self.lags == 0 || self.lags > MAX_LAGS {
            return bad(format!("lags must lie in [1, {MAX_LAGS}]"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(0.0..=MAX_BETA).contains(*b)) {
            return bad(format!("moment exponent {b} outside [0, {MAX_BETA}]"));
        }
        if self.validation_replicas == Some(0) {
            return bad("validation_replicas must be positive".into());
        }
        if self.tail.points_per_decade == 0 {
            return bad("points_per_decade must be positive".into());
        }
        if let Some(hi) = self.tail.fit_hi {
            if hi <= self.tail.fit_lo {
                return bad("tail.fit_hi must exceed tail.fit_lo".into());
            }
        }
        self.solver_kind()?;
        self.alternative_kinds()?;
        self.cost_functions()?;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn chain_spec(&self) -> Result<ChainSpec> {
        build_chain(&self.chain, self, 0)
    }

    pub fn initial_state(&self, spec: &ChainSpec) -> Result<State> {
        spec.parse_state(&self.initial)
    }

    pub fn target_measure(&self, spec: &ChainSpec) -> Result<TargetMeasure> {
        match &self.target {
            TargetConfig::Named(name) if name == "stationary" => TargetMeasure::stationary(spec),
            TargetConfig::Named(name) => Err(Error::Config(format!("unknown target `{name}`"))),
            TargetConfig::Weights(w) => {
                TargetMeasure::from_labels(spec, w.iter().map(|(k, v)| (k.as_str(), v.clone())))
            }
        }
    }

    pub fn solver_kind(&self) -> Result<SolverKind> {
        self.solver.parse()
    }

    pub fn alternative_kinds(&self) -> Result<Vec<SolverKind>> {
        self.alternatives.iter().map(|s| s.parse()).collect()
    }

    pub fn cost_functions(&self) -> Result<Vec<CostFunction>> {
        self.psi.iter().map(|s| s.parse()).collect()
    }

    pub fn tail_options(&self) -> TailFitOptions {
        TailFitOptions {
            fit_lo: self.tail.fit_lo,
            fit_hi: self.tail.fit_hi,
            points_per_decade: self.tail.points_per_decade,
            ..Default::default()
        }
    }

    /// The configured increment law, if any.
    pub fn increment_law(&self) -> Result<Option<IncrementLaw>> {
        let Some(incs) = self.oracle.as_ref().and_then(|o| o.increments.as_ref()) else {
            return Ok(None);
        };
        let weights = incs
            .iter()
            .map(|(k, w)| {
                let k: i64 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("increment `{k}` is not an integer")))?;
                Ok((k, w.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        IncrementLaw::new(weights).map(Some)
    }
}

const MAX_CHAIN_FILE_DEPTH: usize = 8;

fn build_chain(chain: &ChainConfig, config: &ExperimentConfig, depth: usize) -> Result<ChainSpec> {
    match chain {
        ChainConfig::Coin { p } => ChainSpec::coin(p.clone()),
        ChainConfig::ThreeState { p } => ChainSpec::three_state(p.clone()),
        ChainConfig::Pattern { p } => ChainSpec::pattern_chain(p.clone()),
        ChainConfig::FiniteMatrix { labels, rows } => {
            ChainSpec::finite_matrix(labels.clone(), rows.clone())
        }
        ChainConfig::IidCategorical { labels, weights } => {
            ChainSpec::iid_categorical(labels.clone(), weights.clone())
        }
        ChainConfig::SrwZ => Ok(ChainSpec::srw_z()),
        ChainConfig::SrwZ2 => Ok(ChainSpec::srw_z2()),
        ChainConfig::File { path } => {
            if depth >= MAX_CHAIN_FILE_DEPTH {
                return Err(Error::Config(
                    "chain file references nest too deeply".into(),
                ));
            }
            let inner: ChainConfig = parse_document(&config.resolve(path))?;
            build_chain(&inner, config, depth + 1)
        }
    }
}
