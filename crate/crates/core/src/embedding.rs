//! Feasibility of a target and the stopping-time solvers.
//!
//! Every solver scans the path forward from a start site while maintaining
//! the running white-minus-coloured deficit `m_i (L^i - L^ν)`, extending the
//! trajectory on demand. Scans are bounded by an explicit cap; a replica
//! that reaches the cap is reported as censored rather than dropped.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::chain::{ChainSpec, State, Trajectory};
use crate::error::{Error, Result};
use crate::local_time::{ball_ratios, BallConfig, BallCounts, TargetMeasure};
use crate::numeric::Scalar;
use crate::rng::{Lane, ReplicaStreams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum FeasibilityReason {
    AllInteger,
    NonIntegerAt(String),
    TargetChargesStartRequiresDirac,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub state: String,
    /// `m_i ν_j / m_j`.
    pub value: Scalar,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub witness: Vec<Witness>,
    pub reason: FeasibilityReason,
}

/// Decides whether `ν` can be embedded from `X_0 = i` without extra randomness.
///
/// With `ν_i = 0` this is the integrality of every ratio `m_i ν_j / m_j`.
/// When `ν` charges `i` only the Dirac mass `δ_i` is embeddable.
pub fn check_feasibility(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
) -> Result<FeasibilityVerdict> {
    if !spec.contains(initial) {
        return Err(Error::UnknownState(spec.label(initial)));
    }
    if let Some((s, _)) = nu.support().find(|(s, _)| !spec.contains(*s)) {
        return Err(Error::UnknownState(spec.label(s)));
    }
    let witness: Vec<Witness> = ball_ratios(spec, initial, nu)
        .into_iter()
        .map(|(j, value)| Witness {
            state: spec.label(j),
            integer: value.as_integer().is_some(),
            value,
        })
        .collect();
    let (feasible, reason) = if nu.charges(initial) {
        if nu.dirac_state() == Some(initial) {
            (true, FeasibilityReason::AllInteger)
        } else {
            (false, FeasibilityReason::TargetChargesStartRequiresDirac)
        }
    } else {
        match witness.iter().find(|w| !w.integer) {
            Some(w) => (false, FeasibilityReason::NonIntegerAt(w.state.clone())),
            None => (true, FeasibilityReason::AllInteger),
        }
    };
    Ok(FeasibilityVerdict {
        feasible,
        witness,
        reason,
    })
}

/// Which solver produced a stopping time.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverTag {
    TStar,
    TRand(f64),
    TVisit(u64),
    Composite(String),
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverTag::TStar => f.write_str("tstar"),
            SolverTag::TRand(u) => write!(f, "trand(u={u})"),
            SolverTag::TVisit(r) => write!(f, "tvisit(r={r})"),
            SolverTag::Composite(desc) => write!(f, "composite({desc})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingResult {
    pub solver: SolverTag,
    /// The stopping time, or the cap when censored.
    pub time: u64,
    pub censored: bool,
    pub steps_scanned: u64,
    pub seed: Option<u64>,
    pub replica: Option<u64>,
}

impl StoppingResult {
    /// The time when the scan terminated before the cap.
    pub fn value(&self) -> Option<u64> {
        (!self.censored).then_some(self.time)
    }
}

impl Serialize for StoppingResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Record<'a> {
            solver: String,
            #[serde(rename = "T")]
            time: u64,
            censored: bool,
            seed: &'a Option<u64>,
            replica: &'a Option<u64>,
            steps_scanned: u64,
        }
        Record {
            solver: self.solver.to_string(),
            time: self.time,
            censored: self.censored,
            seed: &self.seed,
            replica: &self.replica,
            steps_scanned: self.steps_scanned,
        }
        .serialize(serializer)
    }
}

/// Solver selection for replica runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    /// The non-randomized optimal time.
    TStar,
    /// Uniform-threshold randomized time; the threshold comes from the auxiliary lane.
    TRand,
    /// The `rank`-th return to the initial state, for `ν = δ_i`.
    TVisit { rank: u64 },
    /// First return to the initial state, then the optimal time of the re-rooted path.
    Composite,
    /// Fair coin from the auxiliary lane choosing between `TStar` and `Composite`.
    Mixture,
    /// Not a valid solution: wait `steps` steps, then apply the optimal time
    /// for the state reached, as if it were the initial state.
    Delayed { steps: u64 },
}

impl SolverKind {
    /// Routes `TStar` to `TVisit { rank: 1 }` when the target is `δ_i`.
    pub fn route(self, initial: State, nu: &TargetMeasure) -> SolverKind {
        match self {
            SolverKind::TStar if nu.dirac_state() == Some(initial) => {
                SolverKind::TVisit { rank: 1 }
            }
            other => other,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SolverKind::TStar => "tstar".into(),
            SolverKind::TRand => "trand".into(),
            SolverKind::TVisit { rank } => format!("tvisit:{rank}"),
            SolverKind::Composite => "composite".into(),
            SolverKind::Mixture => "mixture".into(),
            SolverKind::Delayed { steps } => format!("delayed:{steps}"),
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    /// `tstar`, `trand`, `tvisit[:r]`, `composite`, `mixture`, `delayed[:k]`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |default: u64| -> Result<u64> {
            match arg {
                None => Ok(default),
                Some(a) => a
                    .parse()
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::Config(format!("bad solver argument in `{s}`"))),
            }
        };
        let kind = match head {
            "tstar" => SolverKind::TStar,
            "trand" => SolverKind::TRand,
            "tvisit" => SolverKind::TVisit { rank: num(1)? },
            "composite" => SolverKind::Composite,
            "mixture" => SolverKind::Mixture,
            "delayed" => SolverKind::Delayed { steps: num(1)? },
            _ => return Err(Error::Config(format!("unknown solver `{s}`"))),
        };
        if arg.is_some() && !matches!(kind, SolverKind::TVisit { .. } | SolverKind::Delayed { .. })
        {
            return Err(Error::Config(format!("solver `{head}` takes no argument")));
        }
        Ok(kind)
    }
}

/// Per-state deficit weights for the randomized time, scaled to integers when exact.
#[derive(Debug, Clone)]
enum RandWeights {
    /// Deficit times `scale`: white sites add `scale`, a `j`-site subtracts `weight[j]`.
    Exact {
        scale: i128,
        weights: HashMap<State, i128>,
    },
    Float {
        weights: HashMap<State, f64>,
    },
}

impl RandWeights {
    fn new(spec: &ChainSpec, initial: State, nu: &TargetMeasure) -> Result<Self> {
        let ratios = ball_ratios(spec, initial, nu);
        if ratios.iter().all(|(_, r)| r.is_exact()) {
            let scale = ratios.iter().fold(BigInt::one(), |acc, (_, r)| {
                acc.lcm(r.exact().unwrap().denom())
            });
            let too_big = || Error::Config("denominators of m_i ν_j / m_j too large".into());
            let mut weights = HashMap::new();
            for (j, r) in &ratios {
                let r = r.exact().unwrap();
                let w = (r.numer() * (&scale / r.denom()))
                    .to_i128()
                    .ok_or_else(too_big)?;
                weights.insert(*j, w);
            }
            let scale = scale
                .to_i128()
                .filter(|&s| s < 1 << 60)
                .ok_or_else(too_big)?;
            Ok(RandWeights::Exact { scale, weights })
        } else {
            Ok(RandWeights::Float {
                weights: ratios.into_iter().map(|(j, r)| (j, r.to_f64())).collect(),
            })
        }
    }
}

/// A solver with its per-instance tables computed once, shared across replicas.
#[derive(Debug, Clone)]
pub struct PreparedSolver<'a> {
    spec: &'a ChainSpec,
    initial: State,
    target: TargetMeasure,
    kind: SolverKind,
    balls: Option<BallCounts>,
    rand_weights: Option<RandWeights>,
    restart_balls: HashMap<State, BallCounts>,
}

fn infeasible(e: Error) -> Error {
    match e {
        Error::NonIntegerBallCount { state, value } => {
            Error::InfeasibleTarget(format!("m_i ν_j / m_j = {value} at `{state}`"))
        }
        other => other,
    }
}

impl<'a> PreparedSolver<'a> {
    pub fn new(
        spec: &'a ChainSpec,
        initial: State,
        target: &TargetMeasure,
        kind: SolverKind,
    ) -> Result<Self> {
        if !spec.contains(initial) {
            return Err(Error::UnknownState(spec.label(initial)));
        }
        let mut prepared = PreparedSolver {
            spec,
            initial,
            target: target.clone(),
            kind,
            balls: None,
            rand_weights: None,
            restart_balls: HashMap::new(),
        };
        match kind {
            SolverKind::TStar | SolverKind::Composite | SolverKind::Mixture => {
                prepared.balls = Some(BallCounts::new(spec, initial, target).map_err(infeasible)?);
            }
            SolverKind::TRand => {
                if target.charges(initial) {
                    return Err(Error::TargetChargesStart(spec.label(initial)));
                }
                prepared.rand_weights = Some(RandWeights::new(spec, initial, target)?);
            }
            SolverKind::TVisit { rank } => {
                if rank == 0 {
                    return Err(Error::Config("visit rank must be positive".into()));
                }
                if target.dirac_state() != Some(initial) {
                    return Err(Error::InvalidTarget(format!(
                        "the visit-time solver embeds only δ_{}",
                        spec.label(initial)
                    )));
                }
            }
            SolverKind::Delayed { .. } => {
                if let Some(n) = spec.num_states() {
                    for k in 0..n {
                        let s = State::Finite(k);
                        if !target.charges(s) {
                            if let Ok(b) = BallCounts::new(spec, s, target) {
                                prepared.restart_balls.insert(s, b);
                            }
                        }
                    }
                }
            }
        }
        Ok(prepared)
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn spec(&self) -> &'a ChainSpec {
        self.spec
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn target(&self) -> &TargetMeasure {
        &self.target
    }

    /// A fresh trajectory for a replica, rooted at the initial state.
    pub fn trajectory(&self, streams: ReplicaStreams) -> Result<Trajectory> {
        Trajectory::new(self.spec, self.initial, streams)
    }

    /// Runs the solver on `traj`. Randomized solvers draw from the replica's
    /// auxiliary lane, so `traj` must carry random streams for them.
    pub fn run(&self, traj: &mut Trajectory, cap: u64) -> Result<StoppingResult> {
        if traj.origin_state() != self.initial {
            return Err(Error::Config(format!(
                "trajectory starts at `{}`, solver expects `{}`",
                self.spec.label(traj.origin_state()),
                self.spec.label(self.initial)
            )));
        }
        let streams = traj.streams();
        let mut aux = streams.map(|s| s.lane(Lane::Auxiliary));
        let mut result = match self.kind {
            SolverKind::TStar => self.tstar(traj, cap)?,
            SolverKind::TRand => {
                let rng = aux.as_mut().ok_or_else(|| {
                    Error::Config("randomized solver needs a random trajectory".into())
                })?;
                let u = uniform_open(rng);
                self.trand(traj, u, cap)?
            }
            SolverKind::TVisit { rank } => self.tvisit(traj, rank, cap)?,
            SolverKind::Composite => self.composite(traj, cap)?,
            SolverKind::Mixture => {
                let rng = aux.as_mut().ok_or_else(|| {
                    Error::Config("randomized solver needs a random trajectory".into())
                })?;
                let pick_tstar: bool = rng.random();
                let mut r = if pick_tstar {
                    self.tstar(traj, cap)?
                } else {
                    self.composite(traj, cap)?
                };
                r.solver = SolverTag::Composite(format!(
                    "mixture:{}",
                    if pick_tstar {
                        "tstar"
                    } else {
                        "first-return+tstar"
                    }
                ));
                r
            }
            SolverKind::Delayed { steps } => self.delayed(traj, steps, cap)?,
        };
        if let Some(s) = streams {
            result.seed = Some(s.master_seed);
            result.replica = Some(s.replica);
        }
        Ok(result)
    }

    /// Builds the trajectory for `(master_seed, replica)` and runs the solver on it.
    pub fn run_replica(
        &self,
        master_seed: u64,
        replica: u64,
        cap: u64,
    ) -> Result<(StoppingResult, Trajectory)> {
        let mut traj = self.trajectory(ReplicaStreams::new(master_seed, replica))?;
        let result = self.run(&mut traj, cap)?;
        Ok((result, traj))
    }

    fn tstar(&self, traj: &mut Trajectory, cap: u64) -> Result<StoppingResult> {
        let balls = self.balls.as_ref().expect("ball counts prepared");
        let (hit, scanned) = scan_tstar(self.spec, balls, traj, 0, cap)?;
        Ok(finish(
            SolverTag::TStar,
            hit.map(|n| n as u64),
            cap,
            scanned,
        ))
    }

    /// Randomized time with an explicit threshold `u` in (0, 1).
    pub fn trand(&self, traj: &mut Trajectory, u: f64, cap: u64) -> Result<StoppingResult> {
        let weights = match &self.rand_weights {
            Some(w) => w.clone(),
            None => RandWeights::new(self.spec, self.initial, &self.target)?,
        };
        let initial = self.initial;
        let hit = match weights {
            RandWeights::Exact { scale, weights } => {
                let threshold = (u * scale as f64).floor() as i128;
                let dense = dense_table(self.spec, &weights);
                let mut d: i128 = 0;
                scan(self.spec, traj, 0, cap as i64, |s| {
                    d += if s == initial {
                        scale
                    } else {
                        -lookup(&dense, &weights, s)
                    };
                    d <= threshold
                })?
            }
            RandWeights::Float { weights } => {
                let dense = dense_table(self.spec, &weights);
                let mut d = 0.0f64;
                scan(self.spec, traj, 0, cap as i64, |s| {
                    d += if s == initial {
                        1.0
                    } else {
                        -lookup(&dense, &weights, s)
                    };
                    d <= u
                })?
            }
        };
        let (hit, scanned) = hit;
        Ok(finish(
            SolverTag::TRand(u),
            hit.map(|n| n as u64),
            cap,
            scanned,
        ))
    }

    fn tvisit(&self, traj: &mut Trajectory, rank: u64, cap: u64) -> Result<StoppingResult> {
        let (hit, scanned) = scan_visits(self.spec, traj, self.initial, 1, rank, cap as i64)?;
        Ok(finish(
            SolverTag::TVisit(rank),
            hit.map(|n| n as u64),
            cap,
            scanned,
        ))
    }

    fn composite(&self, traj: &mut Trajectory, cap: u64) -> Result<StoppingResult> {
        let tag = SolverTag::Composite("first-return+tstar".into());
        let (first, scanned) = scan_visits(self.spec, traj, self.initial, 1, 1, cap as i64)?;
        let Some(first) = first else {
            return Ok(finish(tag, None, cap, scanned));
        };
        let balls = self.balls.as_ref().expect("ball counts prepared");
        let (hit, more) = scan_tstar(self.spec, balls, traj, first, cap - first as u64)?;
        Ok(finish(
            tag,
            hit.map(|n| (first + n) as u64),
            cap,
            scanned + more,
        ))
    }

    fn delayed(&self, traj: &mut Trajectory, steps: u64, cap: u64) -> Result<StoppingResult> {
        let tag = SolverTag::Composite(format!("wait {steps} then restart"));
        if steps > cap {
            return Ok(finish(tag, None, cap, 0));
        }
        let start = steps as i64;
        traj.ensure(self.spec, start)?;
        let state = traj.get(start).unwrap();
        if self.target.charges(state) {
            if self.target.dirac_state() == Some(state) {
                return Ok(finish(tag, Some(steps), cap, 1));
            }
            return Err(Error::TargetChargesStart(self.spec.label(state)));
        }
        let owned;
        let balls = match self.restart_balls.get(&state) {
            Some(b) => b,
            None => {
                owned = BallCounts::new(self.spec, state, &self.target).map_err(infeasible)?;
                &owned
            }
        };
        let (hit, scanned) = scan_tstar(self.spec, balls, traj, start, cap - steps)?;
        Ok(finish(tag, hit.map(|n| steps + n as u64), cap, scanned))
    }
}

fn finish(solver: SolverTag, hit: Option<u64>, cap: u64, scanned: u64) -> StoppingResult {
    StoppingResult {
        solver,
        time: hit.unwrap_or(cap),
        censored: hit.is_none(),
        steps_scanned: scanned,
        seed: None,
        replica: None,
    }
}

fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn dense_table<T: Copy + Default>(spec: &ChainSpec, weights: &HashMap<State, T>) -> Option<Vec<T>> {
    spec.num_states().map(|n| {
        let mut v = vec![T::default(); n];
        for (s, w) in weights {
            if let State::Finite(k) = s {
                v[*k] = *w;
            }
        }
        v
    })
}

#[inline]
fn lookup<T: Copy + Default>(dense: &Option<Vec<T>>, sparse: &HashMap<State, T>, s: State) -> T {
    match (dense, s) {
        (Some(v), State::Finite(k)) => v[k],
        _ => sparse.get(&s).copied().unwrap_or_default(),
    }
}

const FIRST_CHUNK: i64 = 256;
const MAX_CHUNK: i64 = 1 << 16;

/// Feeds `X_start, X_{start+1}, ...` to `stop` until it returns true or the
/// index passes `start + budget`. Returns the stopping index and the number of
/// sites read.
fn scan<F: FnMut(State) -> bool>(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    start: i64,
    budget: i64,
    mut stop: F,
) -> Result<(Option<i64>, u64)> {
    traj.ensure(spec, start)?;
    let last = start + budget;
    let mut chunk = FIRST_CHUNK;
    let mut n = start;
    loop {
        let hi = traj.hi().min(last);
        while n <= hi {
            if stop(traj.get(n).unwrap()) {
                return Ok((Some(n), (n - start + 1) as u64));
            }
            n += 1;
        }
        if n > last {
            return Ok((None, (n - start) as u64));
        }
        if traj.is_fixed() {
            return Err(Error::PathExhausted(n));
        }
        traj.sample_forward(spec, (traj.hi() + chunk).min(last))?;
        chunk = (chunk * 2).min(MAX_CHUNK);
    }
}

/// First `n ≥ start` at which the deficit accumulated over `[start, n]` is at most zero.
fn scan_tstar(
    spec: &ChainSpec,
    balls: &BallCounts,
    traj: &mut Trajectory,
    start: i64,
    budget: u64,
) -> Result<(Option<i64>, u64)> {
    let mut d: i64 = 0;
    let (hit, scanned) = scan(spec, traj, start, budget as i64, |s| {
        d += balls.increment(s);
        d <= 0
    })?;
    Ok((hit.map(|n| n - start), scanned))
}

/// Index of the `rank`-th visit to `state` among `start, start+1, ...`, relative to 0.
fn scan_visits(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    state: State,
    start: i64,
    rank: u64,
    last: i64,
) -> Result<(Option<i64>, u64)> {
    if start > last {
        return Ok((None, 0));
    }
    let mut seen = 0;
    scan(spec, traj, start, last - start, |s| {
        if s == state {
            seen += 1;
        }
        seen == rank
    })
}

pub fn solve_tstar(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    initial: State,
    nu: &TargetMeasure,
    cap: u64,
) -> Result<StoppingResult> {
    PreparedSolver::new(spec, initial, nu, SolverKind::TStar)?.run(traj, cap)
}

pub fn solve_trand(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    initial: State,
    nu: &TargetMeasure,
    u: f64,
    cap: u64,
) -> Result<StoppingResult> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Config(format!("threshold {u} outside (0, 1)")));
    }
    PreparedSolver::new(spec, initial, nu, SolverKind::TRand)?.trand(traj, u, cap)
}

pub fn solve_tvisit(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    initial: State,
    rank: u64,
    cap: u64,
) -> Result<StoppingResult> {
    let nu = TargetMeasure::dirac(initial);
    PreparedSolver::new(spec, initial, &nu, SolverKind::TVisit { rank })?.run(traj, cap)
}

pub fn solve_composite(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    initial: State,
    nu: &TargetMeasure,
    cap: u64,
) -> Result<StoppingResult> {
    PreparedSolver::new(spec, initial, nu, SolverKind::Composite)?.run(traj, cap)
}

/// The allocation `k ↦ τ(k)` restricted to the white sites of a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AllocationView {
    pub lo: i64,
    pub hi: i64,
    /// White site to its matched coloured site, both inside the window.
    pub matches: BTreeMap<i64, i64>,
    /// White sites whose match lies beyond `hi`.
    pub frontier: Vec<i64>,
}

impl AllocationView {
    pub fn tau(&self, k: i64) -> Option<i64> {
        self.matches.get(&k).copied()
    }

    /// Number of white sites matched to `v`.
    pub fn preimage_len(&self, v: i64) -> usize {
        self.matches.values().filter(|&&t| t == v).count()
    }
}

/// `τ(k)` for every white site of `balls`, by running the deficit scanner from each site.
pub fn scan_allocation(balls: &BallConfig) -> AllocationView {
    let mut matches = BTreeMap::new();
    let mut frontier = Vec::new();
    for (offset, site) in balls.sites.iter().enumerate() {
        if !site.white {
            continue;
        }
        let k = balls.lo + offset as i64;
        let mut d: i64 = 0;
        let mut hit = None;
        for (j, s) in balls.sites[offset..].iter().enumerate() {
            d += if s.white { 1 } else { -(s.coloured as i64) };
            if d <= 0 {
                hit = Some(k + j as i64);
                break;
            }
        }
        match hit {
            Some(t) => {
                matches.insert(k, t);
            }
            None => frontier.push(k),
        }
    }
    AllocationView {
        lo: balls.lo,
        hi: balls.hi,
        matches,
        frontier,
    }
}

pub fn allocation_view(
    spec: &ChainSpec,
    traj: &Trajectory,
    lo: i64,
    hi: i64,
    initial: State,
    nu: &TargetMeasure,
) -> Result<AllocationView> {
    let balls = crate::local_time::balls(spec, traj, lo, hi, initial, nu).map_err(infeasible)?;
    Ok(scan_allocation(&balls))
}
