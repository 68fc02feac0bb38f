//! Brute-force first-passage oracle, independent of the linear solver.
#![allow(dead_code)]

use aoi_arq::ChainSpec;
use nalgebra::DMatrix;

/// Distribution of the first-passage time from `start`, truncated at `max_len`.
pub struct Truncated {
    /// `pmf[k - 1] = P(Z = k)` for `k = 1..=max_len`.
    pub pmf: Vec<f64>,
    /// Probability mass still in flight after `max_len` steps, per state.
    pub in_flight: Vec<f64>,
}

impl Truncated {
    pub fn moment(&self, power: i32) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| ((i + 1) as f64).powi(power) * p)
            .sum()
    }
}

/// Sums the probability of every path that reaches the target for the first
/// time at step `k`, grouping paths by their current state step by step.
pub fn passage_distribution(chain: &ChainSpec, start: usize, max_len: usize) -> Truncated {
    let n = chain.transition.len();
    let mut mass = vec![0.0; n];
    mass[start] = 1.0;
    let mut pmf = Vec::with_capacity(max_len);
    for _ in 0..max_len {
        let mut next = vec![0.0; n];
        for (i, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (j, &p) in chain.transition[i].iter().enumerate() {
                next[j] += m * p;
            }
        }
        pmf.push(next[chain.target]);
        next[chain.target] = 0.0;
        mass = next;
    }
    Truncated {
        pmf,
        in_flight: mass,
    }
}

/// Literal depth-first enumeration of first-passage paths up to `max_len`
/// steps. Exponential; only for short horizons.
pub fn enumerate_paths(chain: &ChainSpec, start: usize, max_len: usize) -> Vec<f64> {
    fn walk(
        chain: &ChainSpec,
        state: usize,
        depth: usize,
        prob: f64,
        max_len: usize,
        pmf: &mut [f64],
    ) {
        if depth == max_len {
            return;
        }
        for (next, &p) in chain.transition[state].iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if next == chain.target {
                pmf[depth] += prob * p;
            } else {
                walk(chain, next, depth + 1, prob * p, max_len, pmf);
            }
        }
    }
    let mut pmf = vec![0.0; max_len];
    walk(chain, start, 0, 1.0, max_len, &mut pmf);
    pmf
}

fn transient_block(chain: &ChainSpec) -> (Vec<usize>, DMatrix<f64>) {
    let free: Vec<usize> = (0..chain.transition.len())
        .filter(|&i| i != chain.target)
        .collect();
    let m = free.len();
    let block = DMatrix::from_fn(m, m, |r, c| chain.transition[free[r]][free[c]]);
    (free, block)
}

/// Spectral radius of the chain restricted to its non-target states.
pub fn dominant_transient_eigenvalue(chain: &ChainSpec) -> f64 {
    let (_, block) = transient_block(chain);
    block
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Rigorous upper bound on `Σ_{k > max_len} k^power P(Z = k)`.
///
/// With `B` the transient block, spectral radius `ρ` and any `ρ' ∈ (ρ, 1)`,
/// the positive vector `w = Σ_k B^k 1 / ρ'^(k+1)` satisfies `B w ≤ ρ' w`.
/// Then the in-flight mass after `k ≥ n` steps is at most
/// `ρ'^(k−n) (r_n · w) / min w`, and `P(Z = k) ≤ P(Z > k − 1)`.
pub fn tail_bound(chain: &ChainSpec, truncated: &Truncated, power: i32) -> f64 {
    let (free, block) = transient_block(chain);
    let rho = dominant_transient_eigenvalue(chain);
    let rho_up = rho + (1.0 - rho) / 10.0;

    let mut w = nalgebra::DVector::<f64>::zeros(free.len());
    let mut term = nalgebra::DVector::<f64>::from_element(free.len(), 1.0 / rho_up);
    for _ in 0..200_000 {
        w += &term;
        term = &block * &term / rho_up;
        if term.max() < 1e-18 * w.max() {
            break;
        }
    }
    let r_dot_w: f64 = free
        .iter()
        .enumerate()
        .map(|(idx, &state)| truncated.in_flight[state] * w[idx])
        .sum();
    let scale = r_dot_w / w.min();

    let n = truncated.pmf.len();
    let mut bound = 0.0;
    let mut k = n + 1;
    loop {
        let piece = (k as f64).powi(power) * scale * rho_up.powi((k - 1 - n) as i32);
        bound += piece;
        if piece < 1e-16 * bound.max(1e-300) || k > n + 1_000_000 {
            break;
        }
        k += 1;
    }
    bound
}
