//! Truncated Green functions `a_ij(n) = E_i L^j([0, n])`.
//!
//! Finite chains run the distribution recursion `μ_{k+1} = μ_k P`, exactly
//! over the rationals when the chain is exact and the horizon is short, in
//! floats otherwise. The lattice walks convolve a truncated probability
//! array with the step law, dropping negligible edge entries while keeping
//! the total dropped mass below `1e-12`.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::chain::{ChainKind, ChainSpec, State};
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Longest horizon computed in exact arithmetic by [`green_truncated`].
pub const EXACT_HORIZON: u64 = 2_000;
/// Default bound on inner-loop operations of one Green computation.
pub const DEFAULT_OPS_BUDGET: u64 = 4_000_000_000;

const EDGE_DROP: f64 = 1e-20;
const MASS_LOSS_BOUND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMethod {
    MatrixPower,
    LatticeConvolution,
}

/// `a_ij(n)` for every `n` in `0..=n_max`.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    pub from: State,
    pub to: State,
    pub method: GreenMethod,
    values: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    /// Largest deviation of the distribution's total mass from one (including dropped mass).
    pub max_mass_error: f64,
}

impl GreenFunction {
    pub fn n_max(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    pub fn value(&self, n: u64) -> Option<Scalar> {
        let k = n as usize;
        match &self.exact {
            Some(v) => v.get(k).cloned().map(Scalar::Exact),
            None => self.values.get(k).copied().map(Scalar::Float),
        }
    }

    pub fn value_f64(&self, n: u64) -> Option<f64> {
        self.values.get(n as usize).copied()
    }

    pub fn values_f64(&self) -> &[f64] {
        &self.values
    }
}

/// `a_ij(n)` for `n ≤ n_max`; `exact` requests rational arithmetic (finite exact chains only).
pub fn green_function(
    spec: &ChainSpec,
    from: State,
    to: State,
    n_max: u64,
    exact: bool,
    ops_budget: u64,
) -> Result<GreenFunction> {
    for s in [from, to] {
        if !spec.contains(s) {
            return Err(Error::UnknownState(spec.label(s)));
        }
    }
    match spec.kind() {
        ChainKind::FiniteMatrix | ChainKind::IidCategorical => {
            let n = spec.num_states().unwrap() as u64;
            let ops = n * n * (n_max + 1);
            if ops > ops_budget {
                return Err(Error::BudgetExceeded(format!(
                    "{ops} operations for the matrix recursion"
                )));
            }
            if exact && spec.is_exact() {
                Ok(finite_exact(spec, from, to, n_max))
            } else {
                Ok(finite_float(spec, from, to, n_max))
            }
        }
        ChainKind::SrwZ => lattice_z(from, to, n_max, ops_budget),
        ChainKind::SrwZ2 => lattice_z2(from, to, n_max, ops_budget),
    }
}

/// `a_ij(n)`, exact for exact finite chains up to [`EXACT_HORIZON`].
pub fn green_truncated(spec: &ChainSpec, from: State, to: State, n: u64) -> Result<Scalar> {
    let exact = spec.is_finite() && spec.is_exact() && n <= EXACT_HORIZON;
    let g = green_function(spec, from, to, n, exact, DEFAULT_OPS_BUDGET)?;
    Ok(g.value(n).unwrap())
}

/// `a_ij(n) / a_kl(n)`.
pub fn orey_ratio(
    spec: &ChainSpec,
    (i, j): (State, State),
    (k, l): (State, State),
    n: u64,
) -> Result<Scalar> {
    let num = green_truncated(spec, i, j, n)?;
    let den = green_truncated(spec, k, l, n)?;
    if den.is_zero() {
        return Err(Error::NotYetVisitable(n));
    }
    Ok(num.div(&den))
}

fn finite_exact(spec: &ChainSpec, from: State, to: State, n_max: u64) -> GreenFunction {
    let rows: Vec<Vec<BigRational>> = spec
        .forward()
        .rows()
        .unwrap()
        .iter()
        .map(|r| r.iter().map(|p| p.exact().unwrap().clone()).collect())
        .collect();
    let (State::Finite(i), State::Finite(j)) = (from, to) else {
        unreachable!("finite chains use finite states")
    };
    let m_j = spec.stationary_weight(to).exact().unwrap().clone();
    let n = rows.len();
    let mut mu = vec![BigRational::zero(); n];
    mu[i] = BigRational::from_integer(1.into());
    let mut acc = BigRational::zero();
    let mut exact = Vec::with_capacity(n_max as usize + 1);
    for step in 0..=n_max {
        acc += &mu[j] / &m_j;
        exact.push(acc.clone());
        if step < n_max {
            let mut next = vec![BigRational::zero(); n];
            for (a, mass) in mu.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                for (b, p) in rows[a].iter().enumerate() {
                    if !p.is_zero() {
                        next[b] += mass * p;
                    }
                }
            }
            mu = next;
        }
    }
    let values = exact.iter().map(crate::numeric::ratio_to_f64).collect();
    GreenFunction {
        from,
        to,
        method: GreenMethod::MatrixPower,
        values,
        exact: Some(exact),
        max_mass_error: 0.0,
    }
}

fn finite_float(spec: &ChainSpec, from: State, to: State, n_max: u64) -> GreenFunction {
    let rows: Vec<Vec<f64>> = spec
        .forward()
        .rows()
        .unwrap()
        .iter()
        .map(|r| r.iter().map(Scalar::to_f64).collect())
        .collect();
    let (State::Finite(i), State::Finite(j)) = (from, to) else {
        unreachable!("finite chains use finite states")
    };
    let m_j = spec.stationary_weight(to).to_f64();
    let n = rows.len();
    let mut mu = vec![0.0; n];
    mu[i] = 1.0;
    let mut next = vec![0.0; n];
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(n_max as usize + 1);
    let mut max_err: f64 = 0.0;
    for step in 0..=n_max {
        acc += mu[j] / m_j;
        values.push(acc);
        max_err = max_err.max((mu.iter().sum::<f64>() - 1.0).abs());
        if step < n_max {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (a, &mass) in mu.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for (b, &p) in rows[a].iter().enumerate() {
                    next[b] += mass * p;
                }
            }
            std::mem::swap(&mut mu, &mut next);
        }
    }
    GreenFunction {
        from,
        to,
        method: GreenMethod::MatrixPower,
        values,
        exact: None,
        max_mass_error: max_err,
    }
}

fn lattice_z(from: State, to: State, n_max: u64, budget: u64) -> Result<GreenFunction> {
    let (State::Z(i), State::Z(j)) = (from, to) else {
        return Err(Error::UnknownState(format!("{from:?}")));
    };
    // mu[k] is the mass at site lo + k
    let mut lo = i;
    let mut mu = vec![1.0f64];
    let mut dropped = 0.0;
    let mut ops: u64 = 0;
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(n_max as usize + 1);
    let mut max_err: f64 = 0.0;
    let at = |mu: &[f64], lo: i64, x: i64| -> f64 {
        let k = x - lo;
        if k >= 0 && (k as usize) < mu.len() {
            mu[k as usize]
        } else {
            0.0
        }
    };
    for step in 0..=n_max {
        acc += at(&mu, lo, j);
        values.push(acc);
        max_err = max_err.max((mu.iter().sum::<f64>() + dropped - 1.0).abs());
        if step == n_max {
            break;
        }
        let mut next = vec![0.0; mu.len() + 2];
        for (k, &m) in mu.iter().enumerate() {
            let h = 0.5 * m;
            next[k] += h;
            next[k + 2] += h;
        }
        lo -= 1;
        ops += next.len() as u64;
        if ops > budget {
            return Err(Error::BudgetExceeded(format!(
                "lattice convolution exceeded {budget} operations at step {step}"
            )));
        }
        while next.len() > 1 && next[0] < EDGE_DROP && dropped + next[0] < MASS_LOSS_BOUND {
            dropped += next.remove(0);
            lo += 1;
        }
        while next.len() > 1 {
            let last = *next.last().unwrap();
            if last < EDGE_DROP && dropped + last < MASS_LOSS_BOUND {
                dropped += last;
                next.pop();
            } else {
                break;
            }
        }
        mu = next;
    }
    Ok(GreenFunction {
        from,
        to,
        method: GreenMethod::LatticeConvolution,
        values,
        exact: None,
        max_mass_error: max_err,
    })
}

fn lattice_z2(from: State, to: State, n_max: u64, budget: u64) -> Result<GreenFunction> {
    let (State::Z2(ix, iy), State::Z2(jx, jy)) = (from, to) else {
        return Err(Error::UnknownState(format!("{from:?}")));
    };
    // grid[r][c] is the mass at (x0 + c, y0 + r)
    let (mut x0, mut y0) = (ix, iy);
    let mut grid = vec![vec![1.0f64]];
    let mut dropped = 0.0;
    let mut ops: u64 = 0;
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(n_max as usize + 1);
    let mut max_err: f64 = 0.0;
    for step in 0..=n_max {
        let (r, c) = (jy - y0, jx - x0);
        if r >= 0 && c >= 0 && (r as usize) < grid.len() && (c as usize) < grid[0].len() {
            acc += grid[r as usize][c as usize];
        }
        values.push(acc);
        let total: f64 = grid.iter().flatten().sum();
        max_err = max_err.max((total + dropped - 1.0).abs());
        if step == n_max {
            break;
        }
        let (h, w) = (grid.len(), grid[0].len());
        let mut next = vec![vec![0.0; w + 2]; h + 2];
        for (r, row) in grid.iter().enumerate() {
            for (c, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let q = 0.25 * m;
                next[r + 1][c] += q;
                next[r + 1][c + 2] += q;
                next[r][c + 1] += q;
                next[r + 2][c + 1] += q;
            }
        }
        x0 -= 1;
        y0 -= 1;
        ops += ((h + 2) * (w + 2)) as u64;
        if ops > budget {
            return Err(Error::BudgetExceeded(format!(
                "planar convolution exceeded {budget} operations at step {step}"
            )));
        }
        loop {
            let mut trimmed = false;
            if next.len() > 1 {
                let s: f64 = next[0].iter().sum();
                if s < EDGE_DROP && dropped + s < MASS_LOSS_BOUND {
                    dropped += s;
                    next.remove(0);
                    y0 += 1;
                    trimmed = true;
                }
            }
            if next.len() > 1 {
                let s: f64 = next.last().unwrap().iter().sum();
                if s < EDGE_DROP && dropped + s < MASS_LOSS_BOUND {
                    dropped += s;
                    next.pop();
                    trimmed = true;
                }
            }
            if next[0].len() > 1 {
                let s: f64 = next.iter().map(|r| r[0]).sum();
                if s < EDGE_DROP && dropped + s < MASS_LOSS_BOUND {
                    dropped += s;
                    next.iter_mut().for_each(|r| {
                        r.remove(0);
                    });
                    x0 += 1;
                    trimmed = true;
                }
            }
            if next[0].len() > 1 {
                let s: f64 = next.iter().map(|r| *r.last().unwrap()).sum();
                if s < EDGE_DROP && dropped + s < MASS_LOSS_BOUND {
                    dropped += s;
                    next.iter_mut().for_each(|r| {
                        r.pop();
                    });
                    trimmed = true;
                }
            }
            if !trimmed {
                break;
            }
        }
        grid = next;
    }
    Ok(GreenFunction {
        from,
        to,
        method: GreenMethod::LatticeConvolution,
        values,
        exact: None,
        max_mass_error: max_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srw_z_two_steps() {
        let spec = ChainSpec::srw_z();
        let a = green_truncated(&spec, State::Z(0), State::Z(0), 2).unwrap();
        assert_eq!(a.to_f64(), 1.5);
        assert_eq!(
            green_truncated(&spec, State::Z(0), State::Z(0), 0)
                .unwrap()
                .to_f64(),
            1.0
        );
        assert_eq!(
            green_truncated(&spec, State::Z(0), State::Z(1), 0)
                .unwrap()
                .to_f64(),
            0.0
        );
    }

    #[test]
    fn srw_z2_returns() {
        let spec = ChainSpec::srw_z2();
        let a = green_truncated(&spec, State::Z2(0, 0), State::Z2(0, 0), 2).unwrap();
        assert!((a.to_f64() - 1.25).abs() < 1e-15);
        let err = green_function(
            &spec,
            State::Z2(0, 0),
            State::Z2(0, 0),
            10_000,
            false,
            1_000_000,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }

    #[test]
    fn three_state_exact_values() {
        let spec = ChainSpec::three_state(Scalar::ratio(1, 2)).unwrap();
        let (s1, s2) = (State::Finite(0), State::Finite(1));
        // m_1 = 1/4: visits at 0 and 2 with probability 1 and 1/2
        assert_eq!(
            green_truncated(&spec, s1, s1, 2).unwrap(),
            Scalar::from_int(6)
        );
        assert_eq!(green_truncated(&spec, s1, s2, 0).unwrap(), Scalar::zero());
        let err = orey_ratio(&spec, (s1, s1), (s1, s2), 0).unwrap_err();
        assert_eq!(err, Error::NotYetVisitable(0));
    }

    #[test]
    fn float_and_exact_recursions_agree() {
        let spec = ChainSpec::pattern_chain(Scalar::ratio(1, 3)).unwrap();
        let (a, b) = (State::Finite(0), State::Finite(3));
        let exact = green_function(&spec, a, b, 50, true, DEFAULT_OPS_BUDGET).unwrap();
        let float = green_function(&spec, a, b, 50, false, DEFAULT_OPS_BUDGET).unwrap();
        for n in 0..=50 {
            let e = exact.value_f64(n).unwrap();
            assert!((e - float.value_f64(n).unwrap()).abs() <= 1e-12 * e.max(1.0));
        }
        assert!(float.max_mass_error < 1e-12);
    }
}
