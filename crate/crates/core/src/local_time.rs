//! Normalized visit counts and the white/coloured ball encoding of a window.

use std::collections::{BTreeMap, HashMap};

use num_traits::One;
use serde::Serialize;

use crate::chain::{ChainSpec, State, Trajectory};
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// A probability measure on the state space with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMeasure {
    weights: BTreeMap<State, Scalar>,
}

impl TargetMeasure {
    /// Validates non-negativity and total mass one; zero weights are dropped.
    pub fn new(
        spec: &ChainSpec,
        weights: impl IntoIterator<Item = (State, Scalar)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<State, Scalar> = BTreeMap::new();
        for (s, w) in weights {
            if !spec.contains(s) {
                return Err(Error::UnknownState(spec.label(s)));
            }
            if w.is_negative() || !w.to_f64().is_finite() {
                return Err(Error::InvalidTarget(format!(
                    "weight {w} at `{}`",
                    spec.label(s)
                )));
            }
            let entry = map.entry(s).or_insert_with(Scalar::zero);
            *entry = entry.add(&w);
        }
        map.retain(|_, w| !w.is_zero());
        let total = map.values().fold(Scalar::zero(), |acc, w| acc.add(w));
        let ok = match &total {
            Scalar::Exact(t) => t.is_one(),
            Scalar::Float(t) => (t - 1.0).abs() <= 1e-12,
        };
        if !ok {
            return Err(Error::InvalidTarget(format!(
                "total mass {total}, expected 1"
            )));
        }
        Ok(TargetMeasure { weights: map })
    }

    /// Builds a target from `(label, weight)` pairs.
    pub fn from_labels<'a>(
        spec: &ChainSpec,
        weights: impl IntoIterator<Item = (&'a str, Scalar)>,
    ) -> Result<Self> {
        let parsed = weights
            .into_iter()
            .map(|(l, w)| Ok((spec.parse_state(l)?, w)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(spec, parsed)
    }

    pub fn dirac(state: State) -> Self {
        TargetMeasure {
            weights: BTreeMap::from([(state, Scalar::one())]),
        }
    }

    /// The stationary distribution of a finite chain as a target.
    pub fn stationary(spec: &ChainSpec) -> Result<Self> {
        let m = spec
            .stationary()
            .ok_or_else(|| Error::InvalidTarget("infinite stationary mass".into()))?;
        Self::new(
            spec,
            m.iter()
                .enumerate()
                .map(|(k, w)| (State::Finite(k), w.clone())),
        )
    }

    pub fn weight(&self, s: State) -> Scalar {
        self.weights.get(&s).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn charges(&self, s: State) -> bool {
        self.weights.contains_key(&s)
    }

    pub fn support(&self) -> impl Iterator<Item = (State, &Scalar)> {
        self.weights.iter().map(|(s, w)| (*s, w))
    }

    pub fn dirac_state(&self) -> Option<State> {
        match self.weights.iter().next() {
            Some((s, _)) if self.weights.len() == 1 => Some(*s),
            _ => None,
        }
    }
}

/// Raw visit counts of each state over a union of disjoint windows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalTimeLedger {
    windows: Vec<(i64, i64)>,
    counts: BTreeMap<State, u64>,
}

impl LocalTimeLedger {
    pub fn windows(&self) -> &[(i64, i64)] {
        &self.windows
    }

    pub fn count(&self, s: State) -> u64 {
        self.counts.get(&s).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn visited(&self) -> impl Iterator<Item = (State, u64)> + '_ {
        self.counts.iter().map(|(s, c)| (*s, *c))
    }

    /// `L^j` of the ledger's windows: count divided by `m_j`.
    pub fn local_time(&self, spec: &ChainSpec, j: State) -> Scalar {
        let c = self.count(j);
        if c == 0 {
            return Scalar::zero();
        }
        Scalar::from_int(c as i64).div(&spec.stationary_weight(j))
    }

    /// Ledger of the union; windows must not overlap.
    pub fn merge(&self, other: &LocalTimeLedger) -> Result<LocalTimeLedger> {
        for &(a, b) in &self.windows {
            for &(c, d) in &other.windows {
                if a <= d && c <= b {
                    return Err(Error::Config(format!(
                        "windows [{a}, {b}] and [{c}, {d}] overlap"
                    )));
                }
            }
        }
        let mut merged = self.clone();
        merged.windows.extend_from_slice(&other.windows);
        merged.windows.sort_unstable();
        for (s, c) in &other.counts {
            *merged.counts.entry(*s).or_insert(0) += c;
        }
        Ok(merged)
    }
}

pub fn ledger(traj: &Trajectory, lo: i64, hi: i64) -> Result<LocalTimeLedger> {
    let values = traj.window(lo, hi)?;
    let mut counts = BTreeMap::new();
    for s in values {
        *counts.entry(s).or_insert(0) += 1;
    }
    Ok(LocalTimeLedger {
        windows: vec![(lo, hi)],
        counts,
    })
}

/// `L^ν = Σ_j ν_j L^j` over the ledger's windows.
pub fn weighted_local_time(
    spec: &ChainSpec,
    ledger: &LocalTimeLedger,
    nu: &TargetMeasure,
) -> Scalar {
    nu.support().fold(Scalar::zero(), |acc, (j, w)| {
        acc.add(&w.mul(&ledger.local_time(spec, j)))
    })
}

/// The ratio `m_i ν_j / m_j` for every charged state `j`.
pub fn ball_ratios(spec: &ChainSpec, initial: State, nu: &TargetMeasure) -> Vec<(State, Scalar)> {
    let mi = spec.stationary_weight(initial);
    nu.support()
        .map(|(j, w)| (j, mi.mul(w).div(&spec.stationary_weight(j))))
        .collect()
}

/// Integer coloured-ball counts per state for a feasible instance with `ν_i = 0`.
#[derive(Debug, Clone)]
pub struct BallCounts {
    initial: State,
    table: ColourTable,
    rounded: bool,
}

#[derive(Debug, Clone)]
enum ColourTable {
    Dense(Vec<u64>),
    Sparse(HashMap<State, u64>),
}

impl BallCounts {
    pub fn new(spec: &ChainSpec, initial: State, nu: &TargetMeasure) -> Result<Self> {
        if !spec.contains(initial) {
            return Err(Error::UnknownState(spec.label(initial)));
        }
        if nu.charges(initial) {
            return Err(Error::TargetChargesStart(spec.label(initial)));
        }
        let mut rounded = false;
        let mut entries = Vec::new();
        for (j, ratio) in ball_ratios(spec, initial, nu) {
            let count = ratio.as_integer().filter(|&c| c >= 0).ok_or_else(|| {
                Error::NonIntegerBallCount {
                    state: spec.label(j),
                    value: ratio.to_string(),
                }
            })?;
            if !ratio.is_exact() && ratio.to_f64() != count as f64 {
                rounded = true;
            }
            entries.push((j, count as u64));
        }
        if rounded {
            log::warn!("float ball counts rounded to the nearest integer");
        }
        let table = match spec.num_states() {
            Some(n) => {
                let mut dense = vec![0; n];
                for (j, c) in entries {
                    if let State::Finite(k) = j {
                        dense[k] = c;
                    }
                }
                ColourTable::Dense(dense)
            }
            None => ColourTable::Sparse(entries.into_iter().collect()),
        };
        Ok(BallCounts {
            initial,
            table,
            rounded,
        })
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    /// Whether some count was a float rounded under the integrality tolerance.
    pub fn rounded(&self) -> bool {
        self.rounded
    }

    #[inline]
    pub fn coloured(&self, s: State) -> u64 {
        match (&self.table, s) {
            (ColourTable::Dense(v), State::Finite(k)) => v[k],
            (ColourTable::Sparse(m), _) => m.get(&s).copied().unwrap_or(0),
            _ => 0,
        }
    }

    #[inline]
    pub fn is_white(&self, s: State) -> bool {
        s == self.initial
    }

    /// Change of the white-minus-coloured deficit when the path visits `s`.
    #[inline]
    pub fn increment(&self, s: State) -> i64 {
        if s == self.initial {
            1
        } else {
            -(self.coloured(s) as i64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Site {
    pub white: bool,
    pub coloured: u64,
}

/// Ball configuration of a window `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BallConfig {
    pub lo: i64,
    pub hi: i64,
    pub sites: Vec<Site>,
    /// State label of each site.
    pub colours: Vec<String>,
}

impl BallConfig {
    /// A configuration with no path behind it, for combinatorial tests.
    pub fn from_sites(lo: i64, sites: Vec<Site>) -> Self {
        let hi = lo + sites.len() as i64 - 1;
        let colours = sites
            .iter()
            .map(|s| {
                if s.white {
                    "white".into()
                } else {
                    String::new()
                }
            })
            .collect();
        BallConfig {
            lo,
            hi,
            sites,
            colours,
        }
    }

    pub fn site(&self, k: i64) -> Site {
        self.sites[(k - self.lo) as usize]
    }

    pub fn white_count(&self) -> u64 {
        self.sites.iter().filter(|s| s.white).count() as u64
    }

    pub fn coloured_count(&self) -> u64 {
        self.sites.iter().map(|s| s.coloured).sum()
    }

    /// White minus coloured balls over the whole window.
    pub fn deficit(&self) -> i64 {
        self.white_count() as i64 - self.coloured_count() as i64
    }
}

pub fn balls(
    spec: &ChainSpec,
    traj: &Trajectory,
    lo: i64,
    hi: i64,
    initial: State,
    nu: &TargetMeasure,
) -> Result<BallConfig> {
    let counts = BallCounts::new(spec, initial, nu)?;
    balls_with(spec, &counts, traj, lo, hi)
}

pub fn balls_with(
    spec: &ChainSpec,
    counts: &BallCounts,
    traj: &Trajectory,
    lo: i64,
    hi: i64,
) -> Result<BallConfig> {
    let values = traj.window(lo, hi)?;
    let sites = values
        .iter()
        .map(|&s| Site {
            white: counts.is_white(s),
            coloured: counts.coloured(s),
        })
        .collect();
    let colours = values.iter().map(|&s| spec.label(s)).collect();
    Ok(BallConfig {
        lo,
        hi,
        sites,
        colours,
    })
}

/// `m_i (L^i - L^ν)` over a ledger, the quantity the ball deficit counts.
pub fn scaled_deficit(
    spec: &ChainSpec,
    ledger: &LocalTimeLedger,
    initial: State,
    nu: &TargetMeasure,
) -> Scalar {
    let mi = spec.stationary_weight(initial);
    let li = ledger.local_time(spec, initial);
    mi.mul(&li.sub(&weighted_local_time(spec, ledger, nu)))
}
