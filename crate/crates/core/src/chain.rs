//! Protocol Markov chains and first-passage moments of finite absorbing chains.
//!
//! For a chain with transition probabilities `π_ij` and target state `s`, the
//! mean `m_i` and second moment `n_i` of the first-passage time to `s` satisfy
//!
//! ```text
//! m_i = 1 + Σ_{j≠s} π_ij m_j
//! n_i = 1 + Σ_{j≠s} π_ij (n_j + 2 m_j)
//! ```
//!
//! for `i ≠ s`, with `m_s = n_s = 0`. Both systems share the matrix `I − P`
//! restricted to the non-target states and are solved by dense Gaussian
//! elimination, so the solver works for chains of any size.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytic::{check_probability, LinkParams};
use crate::error::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-12;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

/// Retransmission policy on the relay hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainKind {
    NonArq,
    Arq,
}

/// A finite Markov chain with a distinguished target state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub state_labels: Vec<String>,
    /// Row-stochastic; `transition[i][j]` is the probability of moving from `i` to `j`.
    pub transition: Vec<Vec<f64>>,
    pub target: usize,
}

impl ChainSpec {
    pub fn len(&self) -> usize {
        self.transition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transition.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.state_labels.iter().position(|l| l == label)
    }
}

/// Two-hop protocol chain over states `1` (first hop), `2` (second hop) and
/// `s` (delivered).
///
/// The two policies differ only in what a second-hop failure does: without
/// ARQ the relay drops the packet and the source starts over in state `1`;
/// with ARQ the relay stays in state `2` and sends the same packet again.
pub fn build_chain(kind: ChainKind, params: LinkParams) -> ChainSpec {
    let (p1, p2) = (params.p1(), params.p2());
    let second_hop = match kind {
        ChainKind::NonArq => vec![1.0 - p2, 0.0, p2],
        ChainKind::Arq => vec![0.0, 1.0 - p2, p2],
    };
    ChainSpec {
        state_labels: vec!["1".into(), "2".into(), "s".into()],
        transition: vec![vec![1.0 - p1, p1, 0.0], second_hop, vec![1.0, 0.0, 0.0]],
        target: 2,
    }
}

/// Single-hop chain over `1` (transmitting) and `s` (delivered).
///
/// Retransmitting or not does not change the transitions, only the age a
/// delivery leaves behind.
pub fn build_single_chain(q: f64) -> Result<ChainSpec> {
    let q = check_probability("q", q)?;
    Ok(ChainSpec {
        state_labels: vec!["1".into(), "s".into()],
        transition: vec![vec![1.0 - q, q], vec![1.0, 0.0]],
        target: 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    TargetOutOfRange { target: usize, states: usize },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    RowSum { row: usize, sum: f64 },
    Unreachable { state: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => f.write_str(msg),
            Violation::TargetOutOfRange { target, states } => {
                write!(f, "target index {target} out of range for {states} states")
            }
            Violation::EntryOutOfRange { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} outside [0, 1]")
            }
            Violation::RowSum { row, sum } => {
                // Rounded to the row-sum tolerance so 0.8999999999999999 reads 0.9.
                write!(f, "row {row} sums to {}", (sum * 1e12).round() / 1e12)
            }
            Violation::Unreachable { state } => {
                write!(f, "target unreachable from state {state}")
            }
        }
    }
}

/// Lists every broken invariant of `chain`; empty means valid.
pub fn validate(chain: &ChainSpec) -> Vec<Violation> {
    let n = chain.len();
    let mut out = Vec::new();

    if n == 0 {
        out.push(Violation::Shape("chain has no states".into()));
        return out;
    }
    if chain.state_labels.len() != n {
        out.push(Violation::Shape(format!(
            "{} labels for {n} states",
            chain.state_labels.len()
        )));
    }
    for (i, row) in chain.transition.iter().enumerate() {
        if row.len() != n {
            out.push(Violation::Shape(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    if chain.target >= n {
        out.push(Violation::TargetOutOfRange {
            target: chain.target,
            states: n,
        });
    }
    if !out.is_empty() {
        return out;
    }

    for (i, row) in chain.transition.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                out.push(Violation::EntryOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
            out.push(Violation::RowSum { row: i, sum });
        }
    }

    out.extend(
        unreachable_states(chain)
            .into_iter()
            .map(|state| Violation::Unreachable { state }),
    );
    out
}

/// States with no positive-probability path to the target, found by
/// transitive closure of the support graph.
fn unreachable_states(chain: &ChainSpec) -> Vec<usize> {
    let n = chain.len();
    let mut reach: Vec<Vec<bool>> = chain
        .transition
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| i == j || v > 0.0)
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            if i != k && reach[i][k] {
                let via = reach[k].clone();
                for (to, &r) in reach[i].iter_mut().zip(&via) {
                    *to |= r;
                }
            }
        }
    }
    (0..n).filter(|&i| !reach[i][chain.target]).collect()
}

fn ensure_valid(chain: &ChainSpec) -> Result<()> {
    let violations = validate(chain);
    if violations.is_empty() {
        return Ok(());
    }
    let unreachable: Vec<usize> = violations
        .iter()
        .filter_map(|v| match v {
            Violation::Unreachable { state } => Some(*state),
            _ => None,
        })
        .collect();
    if unreachable.len() == violations.len() {
        Err(Error::Divergent {
            states: unreachable,
        })
    } else {
        Err(Error::InvalidChain(
            violations.iter().map(ToString::to_string).collect(),
        ))
    }
}

/// Mean and second moment of the first-passage time to the target, per start state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingMoments {
    /// Slots.
    pub mean: Vec<f64>,
    /// Slots².
    pub second_moment: Vec<f64>,
}

impl HittingMoments {
    pub fn variance(&self, state: usize) -> f64 {
        self.second_moment[state] - self.mean[state] * self.mean[state]
    }
}

/// Expected first-passage times to the target.
pub fn mean_hitting(chain: &ChainSpec) -> Result<Vec<f64>> {
    ensure_valid(chain)?;
    let ones = vec![1.0; chain.len()];
    solve_passage(chain, &ones)
}

/// Expected squared first-passage times, given the output of [`mean_hitting`].
pub fn second_moment_hitting(chain: &ChainSpec, mean: &[f64]) -> Result<Vec<f64>> {
    ensure_valid(chain)?;
    if mean.len() != chain.len() {
        return Err(Error::Config(format!(
            "mean vector has {} entries for {} states",
            mean.len(),
            chain.len()
        )));
    }
    // n_i = 1 + Σ_{j≠s} π_ij n_j + 2 Σ_{j≠s} π_ij m_j; the m_j part is known.
    let rhs: Vec<f64> = chain
        .transition
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let carried: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != chain.target)
                .map(|(j, &p)| p * mean[j])
                .sum();
            if i == chain.target {
                0.0
            } else {
                1.0 + 2.0 * carried
            }
        })
        .collect();
    solve_passage(chain, &rhs)
}

pub fn hitting_moments(chain: &ChainSpec) -> Result<HittingMoments> {
    let mean = mean_hitting(chain)?;
    let second_moment = second_moment_hitting(chain, &mean)?;
    Ok(HittingMoments {
        mean,
        second_moment,
    })
}

/// Solves `x_i = rhs_i + Σ_{j≠s} π_ij x_j` for `i ≠ s` with `x_s = 0`.
fn solve_passage(chain: &ChainSpec, rhs: &[f64]) -> Result<Vec<f64>> {
    let target = chain.target;
    let free: Vec<usize> = (0..chain.len()).filter(|&i| i != target).collect();

    let a: Vec<Vec<f64>> = free
        .iter()
        .map(|&i| {
            free.iter()
                .map(|&j| {
                    if i == j {
                        // 1 − π_ii as the sum of the other row entries: avoids
                        // cancellation when π_ii is close to 1.
                        leave_probability(&chain.transition[i], i)
                    } else {
                        -chain.transition[i][j]
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<f64> = free.iter().map(|&i| rhs[i]).collect();

    let divergent = || Error::Divergent {
        states: free.clone(),
    };
    let mut x = gaussian_solve(a.clone(), b.clone()).ok_or_else(divergent)?;
    // Elimination loses about cond(A)·ε; for p near 0 that is ~1e-13 relative.
    // Refining against an error-free residual recovers nearly full precision.
    for _ in 0..REFINEMENT_STEPS {
        let r = compensated_residual(&a, &x, &b);
        let Some(dx) = gaussian_solve(a.clone(), r) else {
            break;
        };
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        let size = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if dx.iter().all(|d| d.abs() <= f64::EPSILON * size) {
            break;
        }
    }

    let scale = x.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let residual = a
        .iter()
        .zip(&b)
        .map(|(row, bi)| (row.iter().zip(&x).map(|(aij, xj)| aij * xj).sum::<f64>() - bi).abs())
        .fold(0.0, f64::max);
    let tolerance = RESIDUAL_TOLERANCE * scale;
    if !(residual <= tolerance) {
        return Err(Error::Residual {
            residual,
            tolerance,
        });
    }

    let mut out = vec![0.0; chain.len()];
    for (&i, v) in free.iter().zip(x) {
        out[i] = v;
    }
    Ok(out)
}

fn leave_probability(row: &[f64], i: usize) -> f64 {
    row.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, p)| p)
        .sum()
}

/// `b − A·x` with each product and sum carried in double-double.
fn compensated_residual(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(row, &bi)| {
            let (mut hi, mut lo) = (bi, 0.0);
            for (&aij, &xj) in row.iter().zip(x) {
                let prod = -aij * xj;
                let prod_err = (-aij).mul_add(xj, -prod);
                let sum = hi + prod;
                let t = sum - hi;
                let sum_err = (hi - (sum - t)) + (prod - t);
                hi = sum;
                lo += sum_err + prod_err;
            }
            hi + lo
        })
        .collect()
}

/// Dense Gaussian elimination with partial pivoting. `None` when singular.
pub(crate) fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if !(a[pivot][col].abs() > 1e-14) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (target, &source) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *target -= factor * source;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
