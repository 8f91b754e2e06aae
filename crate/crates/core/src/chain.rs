//! Chain specifications, stationary measures, dual kernels and two-sided trajectories.

use std::collections::VecDeque;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Scalar, ROW_SUM_TOL, STATIONARY_TOL};
use crate::rng::{Lane, ReplicaStreams};

/// A point of the state space.
///
/// Finite chains address states by index into the label list; the lattice
/// walks use their coordinates directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Finite(usize),
    Z(i64),
    Z2(i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    FiniteMatrix,
    IidCategorical,
    SrwZ,
    SrwZ2,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChainKind::FiniteMatrix => "finite_matrix",
            ChainKind::IidCategorical => "iid_categorical",
            ChainKind::SrwZ => "srw_z",
            ChainKind::SrwZ2 => "srw_z2",
        };
        f.write_str(s)
    }
}

/// A transition kernel, forward or dual.
#[derive(Debug, Clone)]
pub enum TransitionKernel {
    Matrix {
        rows: Vec<Vec<Scalar>>,
        cumulative: Vec<Vec<f64>>,
    },
    /// Simple symmetric walk on the integers.
    LatticeZ,
    /// Simple symmetric walk on the square lattice.
    LatticeZ2,
}

/// The time-reversed kernel `p*_ij = (m_j / m_i) p_ji`.
pub type DualKernel = TransitionKernel;

const Z2_STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

impl TransitionKernel {
    fn matrix(rows: Vec<Vec<Scalar>>) -> Self {
        let cumulative = rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                let mut cum: Vec<f64> = row
                    .iter()
                    .map(|p| {
                        acc += p.to_f64();
                        acc
                    })
                    .collect();
                // the last positive entry absorbs rounding so draws in [0, 1) always land
                if let Some(last) = row.iter().rposition(|p| p.is_positive()) {
                    for c in cum.iter_mut().skip(last) {
                        *c = 1.0;
                    }
                }
                cum
            })
            .collect();
        TransitionKernel::Matrix { rows, cumulative }
    }

    /// Rows of a matrix kernel; `None` for lattice walks.
    pub fn rows(&self) -> Option<&[Vec<Scalar>]> {
        match self {
            TransitionKernel::Matrix { rows, .. } => Some(rows),
            _ => None,
        }
    }

    pub fn prob(&self, from: State, to: State) -> Scalar {
        match (self, from, to) {
            (TransitionKernel::Matrix { rows, .. }, State::Finite(a), State::Finite(b)) => rows
                .get(a)
                .and_then(|r| r.get(b))
                .cloned()
                .unwrap_or_else(Scalar::zero),
            (TransitionKernel::LatticeZ, State::Z(a), State::Z(b)) => {
                if (a - b).abs() == 1 {
                    Scalar::ratio(1, 2)
                } else {
                    Scalar::zero()
                }
            }
            (TransitionKernel::LatticeZ2, State::Z2(ax, ay), State::Z2(bx, by)) => {
                if (ax - bx).abs() + (ay - by).abs() == 1 {
                    Scalar::ratio(1, 4)
                } else {
                    Scalar::zero()
                }
            }
            _ => Scalar::zero(),
        }
    }

    /// States reachable in one step with positive probability.
    pub fn support(&self, from: State) -> Vec<State> {
        match (self, from) {
            (TransitionKernel::Matrix { rows, .. }, State::Finite(a)) => rows[a]
                .iter()
                .enumerate()
                .filter(|(_, p)| p.is_positive())
                .map(|(b, _)| State::Finite(b))
                .collect(),
            (TransitionKernel::LatticeZ, State::Z(a)) => vec![State::Z(a - 1), State::Z(a + 1)],
            (TransitionKernel::LatticeZ2, State::Z2(x, y)) => Z2_STEPS
                .iter()
                .map(|(dx, dy)| State::Z2(x + dx, y + dy))
                .collect(),
            _ => Vec::new(),
        }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, from: State, rng: &mut R) -> State {
        match (self, from) {
            (TransitionKernel::Matrix { cumulative, .. }, State::Finite(a)) => {
                let u: f64 = rng.random();
                let row = &cumulative[a];
                let k = row.iter().position(|&c| u < c).unwrap_or(row.len() - 1);
                State::Finite(k)
            }
            (TransitionKernel::LatticeZ, State::Z(a)) => {
                if rng.random::<bool>() {
                    State::Z(a + 1)
                } else {
                    State::Z(a - 1)
                }
            }
            (TransitionKernel::LatticeZ2, State::Z2(x, y)) => {
                let (dx, dy) = Z2_STEPS[rng.random_range(0..4)];
                State::Z2(x + dx, y + dy)
            }
            _ => panic!("state {from:?} does not belong to this kernel"),
        }
    }
}

/// A validated chain: kernel, stationary measure and dual kernel.
///
/// Immutable after construction. Finite chains are checked for row
/// stochasticity, irreducibility and stationarity of `m`; the lattice walks
/// carry `m ≡ 1`.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    kind: ChainKind,
    labels: Vec<String>,
    forward: TransitionKernel,
    dual: DualKernel,
    stationary: Vec<Scalar>,
}

impl ChainSpec {
    pub fn finite_matrix(labels: Vec<String>, rows: Vec<Vec<Scalar>>) -> Result<Self> {
        check_labels(&labels, rows.len())?;
        check_rows(&rows)?;
        check_irreducible(&labels, &rows)?;
        let stationary = solve_stationary(&rows)?;
        Self::assemble(ChainKind::FiniteMatrix, labels, rows, stationary)
    }

    /// I.i.d. draws from `weights` viewed as a chain whose rows all equal the weights.
    pub fn iid_categorical(labels: Vec<String>, weights: Vec<Scalar>) -> Result<Self> {
        check_labels(&labels, weights.len())?;
        let rows = vec![weights.clone(); weights.len()];
        check_rows(&rows)?;
        check_irreducible(&labels, &rows)?;
        Self::assemble(ChainKind::IidCategorical, labels, rows, weights)
    }

    pub fn srw_z() -> Self {
        ChainSpec {
            kind: ChainKind::SrwZ,
            labels: Vec::new(),
            forward: TransitionKernel::LatticeZ,
            dual: TransitionKernel::LatticeZ,
            stationary: Vec::new(),
        }
    }

    pub fn srw_z2() -> Self {
        ChainSpec {
            kind: ChainKind::SrwZ2,
            labels: Vec::new(),
            forward: TransitionKernel::LatticeZ2,
            dual: TransitionKernel::LatticeZ2,
            stationary: Vec::new(),
        }
    }

    /// Coin with `P(head) = p`, states `tail`, `head`.
    pub fn coin(p: Scalar) -> Result<Self> {
        let q = Scalar::one().sub(&p);
        Self::iid_categorical(vec!["tail".into(), "head".into()], vec![q, p])
    }

    /// The three-state chain with `p12 = p32 = 1`, `p21 = 1 - p`, `p23 = p`.
    pub fn three_state(p: Scalar) -> Result<Self> {
        let z = Scalar::zero;
        let q = Scalar::one().sub(&p);
        let rows = vec![
            vec![z(), Scalar::one(), z()],
            vec![q, z(), p],
            vec![z(), Scalar::one(), z()],
        ];
        Self::finite_matrix(vec!["1".into(), "2".into(), "3".into()], rows)
    }

    /// Chain of overlapping coin pairs `tail/tail, tail/head, head/tail, head/head`.
    pub fn pattern_chain(p: Scalar) -> Result<Self> {
        let z = Scalar::zero;
        let q = Scalar::one().sub(&p);
        let rows = vec![
            vec![q.clone(), p.clone(), z(), z()],
            vec![z(), z(), q.clone(), p.clone()],
            vec![q.clone(), p.clone(), z(), z()],
            vec![z(), z(), q, p],
        ];
        let labels = ["tail/tail", "tail/head", "head/tail", "head/head"];
        Self::finite_matrix(labels.iter().map(|s| s.to_string()).collect(), rows)
    }

    fn assemble(
        kind: ChainKind,
        labels: Vec<String>,
        rows: Vec<Vec<Scalar>>,
        stationary: Vec<Scalar>,
    ) -> Result<Self> {
        check_stationary(&rows, &stationary)?;
        let dual_rows = dual_rows(&rows, &stationary);
        Ok(ChainSpec {
            kind,
            labels,
            forward: TransitionKernel::matrix(rows),
            dual: TransitionKernel::matrix(dual_rows),
            stationary,
        })
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn is_finite(&self) -> bool {
        matches!(
            self.kind,
            ChainKind::FiniteMatrix | ChainKind::IidCategorical
        )
    }

    pub fn num_states(&self) -> Option<usize> {
        self.is_finite().then_some(self.labels.len())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Whether all transition probabilities and stationary weights are exact rationals.
    pub fn is_exact(&self) -> bool {
        match &self.forward {
            TransitionKernel::Matrix { rows, .. } => {
                rows.iter().flatten().all(Scalar::is_exact)
                    && self.stationary.iter().all(Scalar::is_exact)
            }
            _ => true,
        }
    }

    pub fn forward(&self) -> &TransitionKernel {
        &self.forward
    }

    pub fn dual(&self) -> &DualKernel {
        &self.dual
    }

    /// Normalized stationary probability vector of a finite chain.
    pub fn stationary(&self) -> Option<&[Scalar]> {
        self.is_finite().then_some(&self.stationary[..])
    }

    pub fn stationary_weight(&self, s: State) -> Scalar {
        match (self.kind, s) {
            (ChainKind::SrwZ, State::Z(_)) | (ChainKind::SrwZ2, State::Z2(..)) => Scalar::one(),
            (_, State::Finite(k)) if k < self.stationary.len() => self.stationary[k].clone(),
            _ => Scalar::zero(),
        }
    }

    pub fn contains(&self, s: State) -> bool {
        match (self.kind, s) {
            (ChainKind::SrwZ, State::Z(_)) | (ChainKind::SrwZ2, State::Z2(..)) => true,
            (ChainKind::FiniteMatrix | ChainKind::IidCategorical, State::Finite(k)) => {
                k < self.labels.len()
            }
            _ => false,
        }
    }

    pub fn label(&self, s: State) -> String {
        match s {
            State::Finite(k) => self
                .labels
                .get(k)
                .cloned()
                .unwrap_or_else(|| format!("#{k}")),
            State::Z(a) => a.to_string(),
            State::Z2(x, y) => format!("{x},{y}"),
        }
    }

    pub fn parse_state(&self, label: &str) -> Result<State> {
        let label = label.trim();
        let unknown = || Error::UnknownState(label.to_string());
        match self.kind {
            ChainKind::FiniteMatrix | ChainKind::IidCategorical => self
                .labels
                .iter()
                .position(|l| l == label)
                .map(State::Finite)
                .ok_or_else(unknown),
            ChainKind::SrwZ => label.parse().map(State::Z).map_err(|_| unknown()),
            ChainKind::SrwZ2 => {
                let inner = label.trim_start_matches('(').trim_end_matches(')');
                let (x, y) = inner.split_once(',').ok_or_else(unknown)?;
                let x = x.trim().parse().map_err(|_| unknown())?;
                let y = y.trim().parse().map_err(|_| unknown())?;
                Ok(State::Z2(x, y))
            }
        }
    }

    /// The chain run backwards: a finite chain with the dual kernel and the same `m`.
    pub fn reversed(&self) -> Result<ChainSpec> {
        match &self.dual {
            TransitionKernel::Matrix { rows, .. } => Self::assemble(
                self.kind_of_rows(rows),
                self.labels.clone(),
                rows.clone(),
                self.stationary.clone(),
            ),
            _ => Ok(self.clone()),
        }
    }

    fn kind_of_rows(&self, rows: &[Vec<Scalar>]) -> ChainKind {
        if rows.windows(2).all(|w| w[0] == w[1]) && self.kind == ChainKind::IidCategorical {
            ChainKind::IidCategorical
        } else {
            ChainKind::FiniteMatrix
        }
    }
}

/// Stationary measure of a finite chain, normalized to a probability vector.
pub fn stationary_measure(spec: &ChainSpec) -> Option<&[Scalar]> {
    spec.stationary()
}

pub fn dual_kernel(spec: &ChainSpec) -> &DualKernel {
    spec.dual()
}

fn check_labels(labels: &[String], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("chain has no states".into()));
    }
    if labels.len() != n {
        return Err(Error::Config(format!(
            "{} labels for {} states",
            labels.len(),
            n
        )));
    }
    for (k, l) in labels.iter().enumerate() {
        if labels[..k].contains(l) {
            return Err(Error::Config(format!("duplicate state label `{l}`")));
        }
    }
    Ok(())
}

fn check_rows(rows: &[Vec<Scalar>]) -> Result<()> {
    let n = rows.len();
    for (r, row) in rows.iter().enumerate() {
        let bad = |detail: String| Error::NonStochasticMatrix { row: r, detail };
        if row.len() != n {
            return Err(bad(format!("has {} entries, expected {n}", row.len())));
        }
        if let Some(p) = row
            .iter()
            .find(|p| p.is_negative() || !p.to_f64().is_finite())
        {
            return Err(bad(format!("entry {p} is not a probability")));
        }
        if row.iter().all(Scalar::is_exact) {
            let sum = row
                .iter()
                .fold(BigRational::zero(), |acc, p| acc + p.exact().unwrap());
            if !sum.is_one() {
                return Err(bad(format!("sums to {}", Scalar::Exact(sum))));
            }
        } else {
            let sum: f64 = row.iter().map(Scalar::to_f64).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(bad(format!("sums to {sum}")));
            }
        }
    }
    Ok(())
}

/// Strong connectivity of the positive-transition digraph.
fn check_irreducible(labels: &[String], rows: &[Vec<Scalar>]) -> Result<()> {
    let n = rows.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for b in 0..n {
                let p = if forward { &rows[a][b] } else { &rows[b][a] };
                if p.is_positive() && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen
    };
    for seen in [reach(true), reach(false)] {
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::NotIrreducible(labels[k].clone()));
        }
    }
    Ok(())
}

/// Solves `m P = m`, `Σ m = 1` by Gaussian elimination, exactly when `P` is rational.
fn solve_stationary(rows: &[Vec<Scalar>]) -> Result<Vec<Scalar>> {
    let n = rows.len();
    if rows.iter().flatten().all(Scalar::is_exact) {
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        if j == n - 1 {
                            BigRational::one()
                        } else {
                            let p = rows[i][j].exact().unwrap().clone();
                            if i == j {
                                p - BigRational::one()
                            } else {
                                p
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        let mut b = vec![BigRational::zero(); n];
        b[n - 1] = BigRational::one();
        let m = gauss_exact(&mut a, &mut b)
            .ok_or_else(|| Error::NotStationary("singular stationary system".into()))?;
        Ok(m.into_iter().map(Scalar::Exact).collect())
    } else {
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        if j == n - 1 {
                            1.0
                        } else {
                            rows[i][j].to_f64() - if i == j { 1.0 } else { 0.0 }
                        }
                    })
                    .collect()
            })
            .collect();
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let m = gauss_float(&mut a, &mut b)
            .ok_or_else(|| Error::NotStationary("singular stationary system".into()))?;
        Ok(m.into_iter().map(Scalar::Float).collect())
    }
}

fn gauss_exact(a: &mut [Vec<BigRational>], b: &mut [BigRational]) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for x in a[col][col..].iter_mut() {
            *x = &*x * &inv;
        }
        b[col] = &b[col] * &inv;
        let pivot_row = a[col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= &factor * p;
                }
                let t = &factor * &b[col];
                b[r] -= t;
            }
        }
    }
    Some(b.to_vec())
}

fn gauss_float(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (top, bottom) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (offset, row) in bottom.iter_mut().enumerate() {
            let r = col + 1 + offset;
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn check_stationary(rows: &[Vec<Scalar>], m: &[Scalar]) -> Result<()> {
    if let Some(bad) = m.iter().find(|w| !w.is_positive()) {
        return Err(Error::NotStationary(format!("non-positive weight {bad}")));
    }
    let n = rows.len();
    for j in 0..n {
        let mut flow = Scalar::zero();
        for (i, row) in rows.iter().enumerate() {
            flow = flow.add(&m[i].mul(&row[j]));
        }
        let ok = match (&flow, &m[j]) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => (flow.to_f64() - m[j].to_f64()).abs() <= STATIONARY_TOL * m[j].to_f64().abs(),
        };
        if !ok {
            return Err(Error::NotStationary(format!(
                "state {j}: (mP)_j = {flow} but m_j = {}",
                m[j]
            )));
        }
    }
    Ok(())
}

fn dual_rows(rows: &[Vec<Scalar>], m: &[Scalar]) -> Vec<Vec<Scalar>> {
    let n = rows.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if rows[j][i].is_zero() {
                        Scalar::zero()
                    } else {
                        m[j].div(&m[i]).mul(&rows[j][i])
                    }
                })
                .collect()
        })
        .collect()
}

/// A two-sided sample path materialized over a window `[lo, hi]` containing 0.
///
/// Forward values come from the forward kernel driven by the replica's
/// forward lane; backward values from the dual kernel driven by the backward
/// lane. The two directions never share a stream, so the realized path does
/// not depend on the order in which the window is extended.
#[derive(Debug, Clone)]
pub struct Trajectory {
    forward: Vec<State>,
    backward: Vec<State>,
    source: PathSource,
}

#[derive(Debug, Clone)]
enum PathSource {
    Random {
        streams: ReplicaStreams,
        forward: Box<ChaCha8Rng>,
        backward: Box<ChaCha8Rng>,
    },
    Fixed,
}

impl Trajectory {
    pub fn new(spec: &ChainSpec, initial: State, streams: ReplicaStreams) -> Result<Self> {
        if !spec.contains(initial) {
            return Err(Error::UnknownState(format!("{initial:?}")));
        }
        Ok(Trajectory {
            forward: vec![initial],
            backward: Vec::new(),
            source: PathSource::Random {
                streams,
                forward: Box::new(streams.lane(Lane::Forward)),
                backward: Box::new(streams.lane(Lane::Backward)),
            },
        })
    }

    /// A frozen path; `values[origin]` sits at index 0. It cannot be extended.
    pub fn fixed(values: Vec<State>, origin: usize) -> Result<Self> {
        if origin >= values.len() {
            return Err(Error::Config(format!(
                "origin {origin} outside a path of length {}",
                values.len()
            )));
        }
        let mut backward: Vec<State> = values[..origin].to_vec();
        backward.reverse();
        Ok(Trajectory {
            forward: values[origin..].to_vec(),
            backward,
            source: PathSource::Fixed,
        })
    }

    pub fn streams(&self) -> Option<ReplicaStreams> {
        match &self.source {
            PathSource::Random { streams, .. } => Some(*streams),
            PathSource::Fixed => None,
        }
    }

    pub fn lo(&self) -> i64 {
        -(self.backward.len() as i64)
    }

    pub fn hi(&self) -> i64 {
        self.forward.len() as i64 - 1
    }

    pub fn origin_state(&self) -> State {
        self.forward[0]
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.source, PathSource::Fixed)
    }

    #[inline]
    pub fn get(&self, n: i64) -> Option<State> {
        if n >= 0 {
            self.forward.get(n as usize).copied()
        } else {
            self.backward.get((-n - 1) as usize).copied()
        }
    }

    /// Materialized values over `[lo, hi]`, erroring if the window is not covered.
    pub fn window(&self, lo: i64, hi: i64) -> Result<Vec<State>> {
        if lo > hi || lo < self.lo() || hi > self.hi() {
            return Err(Error::WindowNotMaterialized {
                lo,
                hi,
                have_lo: self.lo(),
                have_hi: self.hi(),
            });
        }
        Ok((lo..=hi).map(|n| self.get(n).unwrap()).collect())
    }

    /// Extends the window to `[lo, upto]` with forward-kernel draws.
    pub fn sample_forward(&mut self, spec: &ChainSpec, upto: i64) -> Result<()> {
        if upto <= self.hi() {
            return Ok(());
        }
        let need = (upto - self.hi()) as usize;
        match &mut self.source {
            PathSource::Fixed => Err(Error::PathExhausted(upto)),
            PathSource::Random { forward: rng, .. } => {
                let kernel = spec.forward();
                self.forward.reserve(need);
                let mut s = *self.forward.last().unwrap();
                for _ in 0..need {
                    s = kernel.step(s, rng.as_mut());
                    self.forward.push(s);
                }
                Ok(())
            }
        }
    }

    /// Extends the window to `[downto, hi]` with dual-kernel draws.
    pub fn sample_backward(&mut self, spec: &ChainSpec, downto: i64) -> Result<()> {
        if downto >= self.lo() {
            return Ok(());
        }
        let need = (self.lo() - downto) as usize;
        match &mut self.source {
            PathSource::Fixed => Err(Error::PathExhausted(downto)),
            PathSource::Random { backward: rng, .. } => {
                let kernel = spec.dual();
                self.backward.reserve(need);
                let mut s = self.backward.last().copied().unwrap_or(self.forward[0]);
                for _ in 0..need {
                    s = kernel.step(s, rng.as_mut());
                    self.backward.push(s);
                }
                Ok(())
            }
        }
    }

    /// Makes sure index `n` is materialized, extending in whichever direction is needed.
    pub fn ensure(&mut self, spec: &ChainSpec, n: i64) -> Result<()> {
        if n > self.hi() {
            self.sample_forward(spec, n)
        } else if n < self.lo() {
            self.sample_backward(spec, n)
        } else {
            Ok(())
        }
    }

    /// Re-roots the materialized path so that index `shift` becomes the new origin.
    pub fn shifted(&self, shift: i64) -> Result<Trajectory> {
        let values = self.window(self.lo(), self.hi())?;
        Trajectory::fixed(values, (shift - self.lo()) as usize)
    }
}
