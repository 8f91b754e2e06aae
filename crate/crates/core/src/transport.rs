//! Transport rules on finite windows: balance, stable matching, crossings,
//! the ordered repair sweep, excursions and concave costs.
//!
//! Weights are exact rationals so that repairs hit zero exactly. A rule
//! stores rows for the sources `x ∈ [lo, hi]`; destinations may lie outside
//! the window. Mass whose destination is known only to lie beyond `hi` (an
//! unmatched white ball at the right edge) is kept as frontier mass.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::chain::{ChainSpec, State, Trajectory};
use crate::embedding::AllocationView;
use crate::error::{Error, Result};
use crate::local_time::{balls as ball_config, BallConfig, BallCounts, Site, TargetMeasure};
use crate::numeric::{format_ratio, Scalar};

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportRule {
    lo: i64,
    hi: i64,
    edges: BTreeMap<(i64, i64), BigRational>,
    frontier: BTreeMap<i64, BigRational>,
}

impl TransportRule {
    pub fn identity(lo: i64, hi: i64) -> Self {
        let edges = (lo..=hi).map(|x| ((x, x), BigRational::one())).collect();
        TransportRule {
            lo,
            hi,
            edges,
            frontier: BTreeMap::new(),
        }
    }

    /// Builds a rule from explicit edges; sources must lie in `[lo, hi]`.
    pub fn from_edges(
        lo: i64,
        hi: i64,
        edges: impl IntoIterator<Item = ((i64, i64), BigRational)>,
    ) -> Result<Self> {
        let mut rule = TransportRule {
            lo,
            hi,
            edges: BTreeMap::new(),
            frontier: BTreeMap::new(),
        };
        for ((x, y), w) in edges {
            if x < lo || x > hi {
                return Err(Error::Config(format!("source {x} outside [{lo}, {hi}]")));
            }
            if w.is_negative() {
                return Err(Error::Config(format!("negative weight on ({x}, {y})")));
            }
            rule.add(x, y, &w);
        }
        Ok(rule)
    }

    /// The indicator rule of an allocation: `θ(k, τ(k)) = 1` at white sites,
    /// `θ(x, x) = 1` elsewhere; white sites on the view's frontier send their
    /// unit mass beyond the window.
    pub fn from_allocation(view: &AllocationView) -> Self {
        let mut rule = TransportRule::identity(view.lo, view.hi);
        for (&k, &t) in &view.matches {
            rule.edges.remove(&(k, k));
            rule.edges.insert((k, t), BigRational::one());
        }
        for &k in &view.frontier {
            rule.edges.remove(&(k, k));
            rule.frontier.insert(k, BigRational::one());
        }
        rule
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn weight(&self, x: i64, y: i64) -> BigRational {
        self.edges
            .get(&(x, y))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn frontier_mass(&self, x: i64) -> BigRational {
        self.frontier
            .get(&x)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn edges(&self) -> impl Iterator<Item = ((i64, i64), &BigRational)> {
        self.edges.iter().map(|(k, w)| (*k, w))
    }

    /// Whether any mass leaves `[lo, hi]`.
    pub fn has_frontier(&self) -> bool {
        !self.frontier.is_empty() || self.edges.keys().any(|&(_, y)| y < self.lo || y > self.hi)
    }

    pub fn row_sum(&self, x: i64) -> BigRational {
        self.edges
            .range((x, i64::MIN)..=(x, i64::MAX))
            .fold(self.frontier_mass(x), |acc, (_, w)| acc + w)
    }

    /// Total mass arriving at `y` from sources other than `y`.
    pub fn incoming(&self, y: i64) -> BigRational {
        self.edges
            .iter()
            .filter(|(&(x, t), _)| t == y && x != y)
            .fold(BigRational::zero(), |acc, (_, w)| acc + w)
    }

    pub fn is_forward_only(&self) -> bool {
        self.edges.keys().all(|&(x, y)| y >= x)
    }

    /// Every row sums to one.
    pub fn is_stochastic(&self) -> bool {
        (self.lo..=self.hi).all(|x| self.row_sum(x).is_one())
    }

    fn add(&mut self, x: i64, y: i64, w: &BigRational) {
        if w.is_zero() {
            return;
        }
        let e = self.edges.entry((x, y)).or_insert_with(BigRational::zero);
        *e += w;
        if e.is_zero() {
            self.edges.remove(&(x, y));
        }
    }

    fn sub(&mut self, x: i64, y: i64, w: &BigRational) {
        self.add(x, y, &-w.clone());
    }

    /// White sites are rows that keep no mass at home.
    fn white_sites(&self) -> Vec<i64> {
        (self.lo..=self.hi)
            .filter(|&x| self.weight(x, x).is_zero())
            .collect()
    }

    /// Ball counts implied by the rule: a white ball where `θ(x, x) = 0`, and as
    /// many coloured balls at `y` as the mass it receives from elsewhere.
    pub fn implied_balls(&self) -> Result<BallConfig> {
        let sites = (self.lo..=self.hi)
            .map(|x| {
                let incoming = self.incoming(x);
                if !incoming.is_integer() {
                    return Err(Error::Config(format!(
                        "site {x} receives a non-integer mass {}",
                        format_ratio(&incoming)
                    )));
                }
                Ok(Site {
                    white: self.weight(x, x).is_zero(),
                    coloured: incoming.to_integer().to_u64().unwrap_or(0),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BallConfig::from_sites(self.lo, sites))
    }
}

impl Serialize for TransportRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Edge {
            from: i64,
            to: i64,
            weight: String,
        }
        #[derive(Serialize)]
        struct Frontier {
            from: i64,
            weight: String,
        }
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|(&(from, to), w)| Edge {
                from,
                to,
                weight: format_ratio(w),
            })
            .collect();
        let frontier: Vec<Frontier> = self
            .frontier
            .iter()
            .map(|(&from, w)| Frontier {
                from,
                weight: format_ratio(w),
            })
            .collect();
        let mut st = serializer.serialize_struct("TransportRule", 4)?;
        st.serialize_field("lo", &self.lo)?;
        st.serialize_field("hi", &self.hi)?;
        st.serialize_field("edges", &edges)?;
        st.serialize_field("frontier", &frontier)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// First site where the mass received differs from the coloured mass.
    pub first_violation: Option<i64>,
    pub sites_checked: usize,
}

/// Checks, in ball units, that the white mass sent into each site equals its coloured balls.
pub fn verify_balance_balls(rule: &TransportRule, balls: &BallConfig) -> Result<BalanceReport> {
    if let Some(x) = (rule.lo..=rule.hi).find(|&x| {
        !rule.frontier_mass(x).is_zero()
            || rule
                .edges
                .range((x, i64::MIN)..=(x, i64::MAX))
                .any(|(&(_, y), _)| y < rule.lo || y > rule.hi)
    }) {
        return Err(Error::FrontierMassPresent(x));
    }
    if balls.lo != rule.lo || balls.hi != rule.hi {
        return Err(Error::Config(
            "ball window differs from the rule's window".into(),
        ));
    }
    let mut received: BTreeMap<i64, BigRational> = BTreeMap::new();
    for (&(x, y), w) in &rule.edges {
        if balls.site(x).white {
            *received.entry(y).or_insert_with(BigRational::zero) += w;
        }
    }
    let first_violation = (rule.lo..=rule.hi).find(|&y| {
        let got = received.get(&y).cloned().unwrap_or_else(BigRational::zero);
        got != q(balls.site(y).coloured as i64)
    });
    Ok(BalanceReport {
        balanced: first_violation.is_none(),
        first_violation,
        sites_checked: (rule.hi - rule.lo + 1) as usize,
    })
}

/// `Σ_z θ(z, {y}) L^i(z) = L^ν({y})` for every site `y` of the rule's window.
pub fn verify_balance(
    spec: &ChainSpec,
    rule: &TransportRule,
    traj: &Trajectory,
    initial: State,
    nu: &TargetMeasure,
) -> Result<BalanceReport> {
    let balls = ball_config(spec, traj, rule.lo, rule.hi, initial, nu)?;
    verify_balance_balls(rule, &balls)
}

/// `Σ_k θ(k, site) L^μ(k)` with `L^μ(k) = μ(X_k) / m(X_k)`.
pub fn mass_received(
    spec: &ChainSpec,
    rule: &TransportRule,
    traj: &Trajectory,
    mu: &TargetMeasure,
    site: i64,
) -> Result<Scalar> {
    if let Some((&x, _)) = rule.frontier.iter().next() {
        return Err(Error::FrontierMassPresent(x));
    }
    let mut total = Scalar::zero();
    for (&(x, y), w) in &rule.edges {
        if y != site {
            continue;
        }
        let state = traj.window(x, x)?[0];
        let lmu = mu.weight(state).div(&spec.stationary_weight(state));
        total = total.add(&Scalar::Exact(w.clone()).mul(&lmu));
    }
    Ok(total)
}

/// The stable matching by rounds: while some white ball has a coloured site as
/// its next occupied site to the right, match it there and remove both balls.
pub fn greedy_match(balls: &BallConfig) -> AllocationView {
    let mut white: Vec<bool> = balls.sites.iter().map(|s| s.white).collect();
    let mut coloured: Vec<u64> = balls.sites.iter().map(|s| s.coloured).collect();
    let mut matches = BTreeMap::new();
    loop {
        let occupied: Vec<usize> = (0..white.len())
            .filter(|&k| white[k] || coloured[k] > 0)
            .collect();
        let round: Vec<(usize, usize)> = occupied
            .windows(2)
            .filter(|w| white[w[0]] && !white[w[1]] && coloured[w[1]] > 0)
            .map(|w| (w[0], w[1]))
            .collect();
        if round.is_empty() {
            break;
        }
        for (k, v) in round {
            white[k] = false;
            coloured[v] -= 1;
            matches.insert(balls.lo + k as i64, balls.lo + v as i64);
        }
    }
    let frontier = white
        .iter()
        .enumerate()
        .filter(|(_, &w)| w)
        .map(|(k, _)| balls.lo + k as i64)
        .collect();
    AllocationView {
        lo: balls.lo,
        hi: balls.hi,
        matches,
        frontier,
    }
}

/// All `(x, u, v, y)` with `x < u < v < y`, `θ(x, v) > 0` and `θ(u, y) > 0`.
pub fn find_crossings(rule: &TransportRule) -> Vec<(i64, i64, i64, i64)> {
    let arcs: Vec<(i64, i64)> = rule.edges.keys().copied().filter(|&(x, y)| x < y).collect();
    let mut out = Vec::new();
    for &(x, v) in &arcs {
        for &(u, y) in &arcs {
            if x < u && u < v && v < y {
                out.push((x, u, v, y));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Moves `δ = min(θ(x, v), θ(u, y))` from the crossed edges onto `(x, y)` and `(u, v)`.
pub fn repair_crossing(
    rule: &TransportRule,
    crossing: (i64, i64, i64, i64),
) -> Result<TransportRule> {
    let mut out = rule.clone();
    repair_in_place(&mut out, crossing)?;
    Ok(out)
}

fn repair_in_place(rule: &mut TransportRule, (x, u, v, y): (i64, i64, i64, i64)) -> Result<()> {
    let a = rule.weight(x, v);
    let b = rule.weight(u, y);
    if !(x < u && u < v && v < y) || a.is_zero() || b.is_zero() {
        return Err(Error::NotACrossing { x, u, v, y });
    }
    let delta = if a < b { a } else { b };
    rule.sub(x, v, &delta);
    rule.sub(u, y, &delta);
    rule.add(x, y, &delta);
    rule.add(u, v, &delta);
    Ok(())
}

/// Repairs every crossing of the pair `(u, v)`, nearest source first and
/// destinations in ascending order.
fn uncross_pair(rule: &mut TransportRule, u: i64, v: i64) -> Result<usize> {
    let mut repairs = 0;
    loop {
        let x = rule
            .edges
            .iter()
            .filter(|(&(x, t), _)| t == v && x < u)
            .map(|(&(x, _), _)| x)
            .max();
        let y = rule
            .edges
            .range((u, v + 1)..=(u, i64::MAX))
            .map(|(&(_, y), _)| y)
            .next();
        match (x, y) {
            (Some(x), Some(y)) => {
                repair_in_place(rule, (x, u, v, y))?;
                repairs += 1;
            }
            _ => return Ok(repairs),
        }
    }
}

/// The ordered sweep: coloured sites of `[a, b]` left to right, each paired with
/// the rightmost uncancelled white site to its left until its balls or the
/// white sites run out. Every pair is uncrossed before its balls are cancelled.
///
/// Ball counts are read off the rule itself (see [`TransportRule::implied_balls`]).
pub fn repair_all(rule: &TransportRule, a: i64, b: i64) -> Result<TransportRule> {
    if a < rule.lo || b > rule.hi || a > b {
        return Err(Error::Config(format!(
            "[{a}, {b}] is not inside the rule's window [{}, {}]",
            rule.lo, rule.hi
        )));
    }
    let balls = rule.implied_balls()?;
    let mut out = rule.clone();
    let mut uncancelled: Vec<i64> = out
        .white_sites()
        .into_iter()
        .filter(|&x| x >= a && x <= b)
        .collect();
    for v in a..=b {
        let mut left = balls.site(v).coloured;
        while left > 0 {
            let Some(pos) = uncancelled.iter().rposition(|&u| u < v) else {
                break;
            };
            let u = uncancelled.remove(pos);
            uncross_pair(&mut out, u, v)?;
            left -= 1;
        }
    }
    Ok(out)
}

/// Whether the rule coincides with the indicator of `view` on rows and
/// columns inside `[a, b]`.
pub fn agrees_with_allocation(rule: &TransportRule, view: &AllocationView, a: i64, b: i64) -> bool {
    let expected = |x: i64, y: i64| -> BigRational {
        match view.tau(x) {
            Some(t) => {
                if t == y {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            None if view.frontier.contains(&x) => BigRational::zero(),
            None => {
                if x == y {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
        }
    };
    for (&(x, y), w) in &rule.edges {
        if ((a..=b).contains(&x) || (a..=b).contains(&y)) && *w != expected(x, y) {
            return false;
        }
    }
    for x in a..=b {
        if let Some(t) = view.tau(x) {
            if rule.weight(x, t) != BigRational::one() {
                return false;
            }
        }
    }
    true
}

/// A complete excursion: equal white and coloured totals, strict white
/// surplus on every proper prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Excursion {
    pub lo: i64,
    pub hi: i64,
    pub sites: Vec<Site>,
}

impl Excursion {
    pub fn contains(&self, k: i64) -> bool {
        (self.lo..=self.hi).contains(&k)
    }

    pub fn balls(&self) -> BallConfig {
        BallConfig::from_sites(self.lo, self.sites.clone())
    }
}

/// Whether `[0, len)` of `sites` is an excursion.
pub fn is_excursion(sites: &[Site]) -> bool {
    let mut d: i64 = 0;
    for (k, s) in sites.iter().enumerate() {
        d += if s.white { 1 } else { 0 } - s.coloured as i64;
        if k + 1 < sites.len() && d <= 0 {
            return false;
        }
    }
    !sites.is_empty() && d == 0 && sites[0].white
}

fn excursion_search<F>(z: i64, cap: u64, mut site: F) -> Result<Option<(i64, i64)>>
where
    F: FnMut(i64) -> Result<Option<Site>>,
{
    let cap = cap as i64;
    let mut m = z;
    while z - m <= cap {
        let Some(s) = site(m)? else {
            return Ok(None);
        };
        if s.white {
            let mut d: i64 = 0;
            let mut n = m;
            loop {
                let Some(t) = site(n)? else {
                    return Ok(None);
                };
                d += if t.white { 1 } else { 0 } - t.coloured as i64;
                if d <= 0 {
                    break;
                }
                n += 1;
                if n - m > cap {
                    return Err(Error::BudgetExceeded(format!(
                        "excursion from {m} longer than {cap}"
                    )));
                }
            }
            if n >= z && d == 0 {
                return Ok(Some((m, n)));
            }
        }
        m -= 1;
    }
    Err(Error::BudgetExceeded(format!(
        "no excursion around {z} starts within {cap} sites"
    )))
}

/// Minimal excursion of a fixed ball configuration containing `z`; `None` if
/// it is not contained in the configuration's window.
pub fn excursion_in(balls: &BallConfig, z: i64) -> Option<Excursion> {
    let cap = (balls.hi - balls.lo + 1) as u64;
    let found = excursion_search(z, cap, |n| {
        Ok((balls.lo..=balls.hi).contains(&n).then(|| balls.site(n)))
    })
    .ok()
    .flatten()?;
    let sites = (found.0..=found.1).map(|n| balls.site(n)).collect();
    Some(Excursion {
        lo: found.0,
        hi: found.1,
        sites,
    })
}

/// The minimal excursion containing `z`, extending the trajectory both ways
/// as needed. Excursions longer than `cap` are reported as `BudgetExceeded`.
pub fn find_excursion_around(
    spec: &ChainSpec,
    traj: &mut Trajectory,
    z: i64,
    initial: State,
    nu: &TargetMeasure,
    cap: u64,
) -> Result<Excursion> {
    let counts = BallCounts::new(spec, initial, nu)?;
    let site_at = |traj: &mut Trajectory, n: i64| -> Result<Site> {
        traj.ensure(spec, n)?;
        let s = traj.get(n).unwrap();
        Ok(Site {
            white: counts.is_white(s),
            coloured: counts.coloured(s),
        })
    };
    let found = excursion_search(z, cap, |n| site_at(traj, n).map(Some))?
        .expect("trajectory sites are always available");
    let sites = (found.0..=found.1)
        .map(|n| site_at(traj, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(Excursion {
        lo: found.0,
        hi: found.1,
        sites,
    })
}

/// Concave costs `ψ` on the non-negative integers, with `ψ(n) = 0` for `n ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFunction {
    /// `n^β` with `0 < β ≤ 1`.
    Power(f64),
    Log1p,
    /// `min(n, c)`.
    CappedLinear(u64),
}

impl CostFunction {
    pub fn eval(&self, n: i64) -> Scalar {
        if n <= 0 {
            return Scalar::zero();
        }
        match *self {
            CostFunction::Power(1.0) => Scalar::from_int(n),
            CostFunction::Power(b) => Scalar::Float((n as f64).powf(b)),
            CostFunction::Log1p => Scalar::Float((n as f64).ln_1p()),
            CostFunction::CappedLinear(c) => Scalar::from_int(n.min(c as i64)),
        }
    }

    pub fn eval_f64(&self, n: f64) -> f64 {
        if n <= 0.0 {
            return 0.0;
        }
        match *self {
            CostFunction::Power(b) => n.powf(b),
            CostFunction::Log1p => n.ln_1p(),
            CostFunction::CappedLinear(c) => n.min(c as f64),
        }
    }

    /// Whether values are exact rationals at integer arguments.
    pub fn is_rational(&self) -> bool {
        match self {
            CostFunction::CappedLinear(_) => true,
            CostFunction::Power(b) => *b == 1.0,
            CostFunction::Log1p => false,
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Power(b) if *b == 0.5 => f.write_str("sqrt"),
            CostFunction::Power(b) => write!(f, "power:{b}"),
            CostFunction::Log1p => f.write_str("log1p"),
            CostFunction::CappedLinear(c) => write!(f, "capped_linear:{c}"),
        }
    }
}

impl FromStr for CostFunction {
    type Err = Error;

    /// `sqrt`, `log1p`, `identity`, `power:β`, `capped_linear:c`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown cost function `{s}`"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("sqrt", None) => Ok(CostFunction::Power(0.5)),
            ("identity", None) => Ok(CostFunction::Power(1.0)),
            ("log1p", None) => Ok(CostFunction::Log1p),
            ("power", Some(b)) => {
                let b: f64 = b.parse().map_err(|_| bad())?;
                if b > 0.0 && b <= 1.0 {
                    Ok(CostFunction::Power(b))
                } else {
                    Err(Error::Config(format!("exponent {b} outside (0, 1]")))
                }
            }
            ("capped_linear", Some(c)) => {
                let c: u64 = c.parse().map_err(|_| bad())?;
                if c == 0 {
                    return Err(Error::Config(
                        "cap of a capped-linear cost must be positive".into(),
                    ));
                }
                Ok(CostFunction::CappedLinear(c))
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for CostFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// `Σ_{x ∈ A, y} θ(x, y) ψ(y - x) + Σ_{x, y ∈ A} θ(x, y) ψ(y - x)` with `A = [a, b]`.
///
/// Frontier mass from `x` is charged `ψ(hi + 1 - x)`, the least it can cost,
/// so the value is a lower bound when the rule has frontier mass.
pub fn window_cost(rule: &TransportRule, a: i64, b: i64, psi: &CostFunction) -> Scalar {
    let in_a = |k: i64| (a..=b).contains(&k);
    let mut total = Scalar::zero();
    for (&(x, y), w) in &rule.edges {
        let times = in_a(x) as i64 + in_a(y) as i64;
        if times > 0 && y > x {
            let c = psi.eval(y - x).mul(&Scalar::Exact(w * q(times)));
            total = total.add(&c);
        }
    }
    for (&x, w) in &rule.frontier {
        if in_a(x) {
            total = total.add(&psi.eval(rule.hi + 1 - x).mul(&Scalar::Exact(w.clone())));
        }
    }
    total
}

/// A random balancing rule for a ball configuration whose deficit never
/// drops below zero and ends at zero: a convex combination, with random
/// rational weights, of `pieces` random forward ball-level matchings.
pub fn random_balancing_rule<R: Rng + ?Sized>(
    balls: &BallConfig,
    pieces: usize,
    rng: &mut R,
) -> Result<TransportRule> {
    let pieces = pieces.max(1);
    let raw: Vec<i64> = (0..pieces).map(|_| rng.random_range(1..=6)).collect();
    let total: i64 = raw.iter().sum();
    let mut rule = TransportRule {
        lo: balls.lo,
        hi: balls.hi,
        edges: BTreeMap::new(),
        frontier: BTreeMap::new(),
    };
    for (k, s) in balls.sites.iter().enumerate() {
        if !s.white {
            let x = balls.lo + k as i64;
            rule.add(x, x, &BigRational::one());
        }
    }
    for r in raw {
        let weight = BigRational::new(BigInt::from(r), BigInt::from(total));
        let mut pool: Vec<i64> = Vec::new();
        for (k, s) in balls.sites.iter().enumerate() {
            let v = balls.lo + k as i64;
            for _ in 0..s.coloured {
                if pool.is_empty() {
                    return Err(Error::Config(format!(
                        "coloured ball at {v} has no white ball to its left"
                    )));
                }
                let pick = rng.random_range(0..pool.len());
                let u = pool.swap_remove(pick);
                rule.add(u, v, &weight);
            }
            if s.white {
                pool.push(v);
            }
        }
        if !pool.is_empty() {
            return Err(Error::Config(format!(
                "white ball at {} left unmatched",
                pool[0]
            )));
        }
    }
    Ok(rule)
}
