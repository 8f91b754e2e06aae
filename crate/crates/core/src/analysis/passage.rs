//! First passage of integer random walks below zero.
//!
//! `N = min{n ≥ 1 : S_n ≤ 0}` for `S_0 = 0` and i.i.d. increments. The exact
//! law of `N` on a finite horizon comes from dynamic programming over the
//! surviving positions; the Monte Carlo oracle feeds the tail estimator.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::analysis::tail::{survival_fit, TailEstimate, TailFitOptions};
use crate::analysis::{run_replicas, RunSettings};
use crate::chain::{ChainSpec, State, Trajectory};
use crate::error::{Error, Result};
use crate::local_time::{BallCounts, TargetMeasure};
use crate::numeric::Scalar;
use crate::rng::{Lane, ReplicaStreams};

/// Finitely supported integer increment law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementLaw {
    support: Vec<(i64, Scalar)>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl IncrementLaw {
    pub fn new(weights: impl IntoIterator<Item = (i64, Scalar)>) -> Result<Self> {
        let mut merged: BTreeMap<i64, Scalar> = BTreeMap::new();
        for (k, w) in weights {
            if w.is_negative() {
                return Err(Error::Config(format!(
                    "negative probability at increment {k}"
                )));
            }
            let e = merged.entry(k).or_insert_with(Scalar::zero);
            *e = e.add(&w);
        }
        merged.retain(|_, w| !w.is_zero());
        let total = merged.values().fold(Scalar::zero(), |a, w| a.add(w));
        if !total.approx_eq(&Scalar::one(), 1e-12) {
            return Err(Error::Config(format!(
                "increment law has total mass {total}"
            )));
        }
        let support: Vec<(i64, Scalar)> = merged.into_iter().collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = support
            .iter()
            .map(|(_, w)| {
                acc += w.to_f64();
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(IncrementLaw {
            support,
            cumulative,
        })
    }

    /// Fair `±1` steps.
    pub fn fair_steps() -> Self {
        Self::new([(-1, Scalar::ratio(1, 2)), (1, Scalar::ratio(1, 2))]).unwrap()
    }

    pub fn support(&self) -> &[(i64, Scalar)] {
        &self.support
    }

    pub fn mean(&self) -> Scalar {
        self.support.iter().fold(Scalar::zero(), |a, (k, w)| {
            a.add(&Scalar::from_int(*k).mul(w))
        })
    }

    /// No increment exceeds `+1`.
    pub fn is_skip_free_up(&self) -> bool {
        self.support.iter().all(|(k, _)| *k <= 1)
    }

    fn is_fair_steps(&self) -> bool {
        self.support.len() == 2
            && self.support[0].0 == -1
            && self.support[1].0 == 1
            && self.support[0].1.is_exact()
            && self.support[0].1 == Scalar::ratio(1, 2)
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1);
        self.support[k].0
    }
}

/// `P(N = n)` for `n = 1..=horizon`, exactly when the law is exact.
pub fn first_passage_law(law: &IncrementLaw, horizon: u64) -> Vec<Scalar> {
    if law.support.iter().all(|(_, w)| w.is_exact()) {
        let support: Vec<(i64, BigRational)> = law
            .support
            .iter()
            .map(|(k, w)| (*k, w.exact().unwrap().clone()))
            .collect();
        let mut alive: BTreeMap<i64, BigRational> = BTreeMap::from([(0, BigRational::one())]);
        let mut out = Vec::with_capacity(horizon as usize);
        for _ in 0..horizon {
            let mut next: BTreeMap<i64, BigRational> = BTreeMap::new();
            let mut stopped = BigRational::zero();
            for (s, p) in &alive {
                for (k, w) in &support {
                    let t = s + k;
                    let mass = p * w;
                    if t <= 0 {
                        stopped += mass;
                    } else {
                        *next.entry(t).or_insert_with(BigRational::zero) += mass;
                    }
                }
            }
            out.push(Scalar::Exact(stopped));
            alive = next;
        }
        out
    } else {
        let mut alive: BTreeMap<i64, f64> = BTreeMap::from([(0, 1.0)]);
        let mut out = Vec::with_capacity(horizon as usize);
        for _ in 0..horizon {
            let mut next: BTreeMap<i64, f64> = BTreeMap::new();
            let mut stopped = 0.0;
            for (s, p) in &alive {
                for (k, w) in &law.support {
                    let t = s + k;
                    let mass = p * w.to_f64();
                    if t <= 0 {
                        stopped += mass;
                    } else {
                        *next.entry(t).or_insert(0.0) += mass;
                    }
                }
            }
            out.push(Scalar::Float(stopped));
            alive = next;
        }
        out
    }
}

/// One simulated passage index, `None` when the walk is still positive after `cap` steps.
pub fn simulate_passage<R: Rng + ?Sized>(law: &IncrementLaw, cap: u64, rng: &mut R) -> Option<u64> {
    let mut s: i64 = 0;
    if law.is_fair_steps() {
        let mut n = 0u64;
        while n < cap {
            let mut bits: u64 = rng.random();
            for _ in 0..64 {
                n += 1;
                s += if bits & 1 == 1 { 1 } else { -1 };
                bits >>= 1;
                if s <= 0 {
                    return Some(n);
                }
                if n == cap {
                    return None;
                }
            }
        }
        return None;
    }
    for n in 1..=cap {
        s += law.draw(rng);
        if s <= 0 {
            return Some(n);
        }
    }
    None
}

/// Simulated passage times of `settings.replicas` walks and their tail fit.
pub fn first_passage_oracle(
    law: &IncrementLaw,
    settings: &RunSettings,
    fit: &TailFitOptions,
) -> Result<TailEstimate> {
    let times = run_replicas(settings.replicas, settings.threads, |r| {
        let mut rng = ReplicaStreams::new(settings.seed, r).lane(Lane::Forward);
        Ok(simulate_passage(law, settings.cap, &mut rng))
    })?;
    let outcomes: Vec<(u64, bool)> = times
        .into_iter()
        .map(|t| t.map_or((settings.cap, true), |n| (n, false)))
        .collect();
    survival_fit(&outcomes, settings, fit, "first_passage")
}

/// Passage index of the return-block walk of one replica, or `None` after `max_blocks` blocks.
pub fn simulate_block_passage(
    spec: &ChainSpec,
    counts: &BallCounts,
    traj: &mut Trajectory,
    max_blocks: u64,
) -> Result<Option<u64>> {
    let initial = counts.initial();
    let (mut sum, mut xi, mut blocks) = (0i64, 1i64, 0u64);
    let mut n: i64 = 1;
    loop {
        traj.ensure(spec, n)?;
        let s = traj.get(n).unwrap();
        if s == initial {
            sum += xi;
            blocks += 1;
            if sum <= 0 {
                return Ok(Some(blocks));
            }
            if blocks >= max_blocks {
                return Ok(None);
            }
            xi = 1;
        } else {
            xi -= counts.coloured(s) as i64;
        }
        n += 1;
    }
}

/// Passage times of the return-block walk `ξ_k = 1 - m_i L^ν([T_{k-1}, T_k))`
/// read off simulated paths of the chain, with the cap bounding the block count.
pub fn block_passage_oracle(
    spec: &ChainSpec,
    initial: State,
    nu: &TargetMeasure,
    settings: &RunSettings,
    fit: &TailFitOptions,
) -> Result<TailEstimate> {
    let counts = BallCounts::new(spec, initial, nu)?;
    let times = run_replicas(settings.replicas, settings.threads, |r| {
        let mut traj = Trajectory::new(spec, initial, ReplicaStreams::new(settings.seed, r))?;
        simulate_block_passage(spec, &counts, &mut traj, settings.cap)
    })?;
    let outcomes: Vec<(u64, bool)> = times
        .into_iter()
        .map(|t| t.map_or((settings.cap, true), |n| (n, false)))
        .collect();
    survival_fit(&outcomes, settings, fit, "block_passage")
}

/// Increments `ξ_k = 1 - (coloured balls in [T_{k-1}, T_k))` over the return
/// blocks of `initial` that start in `[0, upto]`, where `T_k` are the visit
/// times of the initial state. Extends the path to the end of the last block.
pub fn return_block_increments(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    counts: &BallCounts,
    upto: i64,
    max_len: i64,
) -> Result<Vec<i64>> {
    let initial = counts.initial();
    let mut blocks = Vec::new();
    let mut n: i64 = 0;
    let mut current: Option<i64> = None;
    loop {
        traj.ensure(spec, n)?;
        let s: State = traj.get(n).unwrap();
        if s == initial {
            if let Some(xi) = current.take() {
                blocks.push(xi);
            }
            if n > upto {
                break;
            }
            current = Some(1);
        } else if let Some(xi) = current.as_mut() {
            *xi -= counts.coloured(s) as i64;
        }
        n += 1;
        if n > max_len {
            return Err(Error::BudgetExceeded(format!(
                "return block beyond {max_len}"
            )));
        }
    }
    Ok(blocks)
}

/// First index `n ≥ 1` with `ξ_1 + ... + ξ_n ≤ 0`.
pub fn passage_index(increments: &[i64]) -> Option<u64> {
    let mut s = 0;
    for (k, xi) in increments.iter().enumerate() {
        s += xi;
        if s <= 0 {
            return Some(k as u64 + 1);
        }
    }
    None
}
