use super::{log_sum_exp, ChainError, PerturbedChain};
use crate::dynamics::tau_from_epsilon;

/// Largest chain handed to the spanning-tree enumerator by default.
pub const DEFAULT_TREE_STATE_CAP: usize = 8;

/// Bound on `max |(mu P - mu)_j|` accepted from the elimination solver.
pub const STATIONARY_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LinearSolve,
    TreeTheorem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub mu: Vec<f64>,
    pub epsilon: f64,
    pub tau: f64,
    pub method: Method,
}

impl StationaryDistribution {
    fn new(mu: Vec<f64>, epsilon: f64, method: Method) -> Self {
        StationaryDistribution {
            mu,
            epsilon,
            tau: tau_from_epsilon(epsilon),
            method,
        }
    }

    /// Total mass on a set of states.
    pub fn mass(&self, states: &[usize]) -> f64 {
        states.iter().map(|&s| self.mu[s]).sum()
    }

    /// `max_j |(mu P)_j - mu_j|`.
    pub fn residual(&self, chain: &PerturbedChain) -> f64 {
        let p = chain.matrix();
        let n = chain.n_states();
        (0..n)
            .map(|j| {
                let mp: f64 = (0..n).map(|i| self.mu[i] * p[[i, j]]).sum();
                (mp - self.mu[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Dense direct solve of `mu P = mu, sum(mu) = 1`.
///
/// Uses Grassmann-Taksar-Heyman elimination: states are censored one at a
/// time, and the pivot is formed as a sum of off-diagonal probabilities
/// instead of `1 - P(x, x)`. There are no subtractions, so entries many orders
/// of magnitude apart keep full relative precision.
pub fn stationary_linear(chain: &PerturbedChain) -> Result<StationaryDistribution, ChainError> {
    chain.check_ergodic()?;
    let n = chain.n_states();
    let mut a = chain.matrix().clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[[k, j]]).sum();
        if s <= 0.0 {
            // unreachable for an irreducible chain, kept for robustness
            return Err(ChainError::Reducible { from: k, to: 0 });
        }
        for i in 0..k {
            a[[i, k]] /= s;
        }
        for i in 0..k {
            let aik = a[[i, k]];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[[i, j]] += aik * a[[k, j]];
            }
        }
    }
    let mut mu = vec![0.0; n];
    mu[0] = 1.0;
    for k in 1..n {
        mu[k] = (0..k).map(|i| mu[i] * a[[i, k]]).sum();
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= total);
    let dist = StationaryDistribution::new(mu, chain.epsilon(), Method::LinearSolve);
    let r = dist.residual(chain);
    if r > STATIONARY_RESIDUAL_TOLERANCE {
        return Err(ChainError::Residual(r));
    }
    Ok(dist)
}

/// Stationary distribution from the Markov chain tree theorem: the weight of
/// state `z` is the sum over spanning in-trees rooted at `z` of the product of
/// their edge probabilities.
pub fn stationary_tree_theorem(chain: &PerturbedChain) -> Result<StationaryDistribution, ChainError> {
    stationary_tree_theorem_with_cap(chain, DEFAULT_TREE_STATE_CAP)
}

pub fn stationary_tree_theorem_with_cap(
    chain: &PerturbedChain,
    cap: usize,
) -> Result<StationaryDistribution, ChainError> {
    let n = chain.n_states();
    if n > cap {
        return Err(ChainError::StateCap { states: n, cap });
    }
    let p = chain.matrix();
    let out: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x && p[[x, y]] > 0.0)
                .map(|y| (y, p[[x, y]].ln()))
                .collect()
        })
        .collect();
    let ln_weights: Vec<f64> = (0..n)
        .map(|root| {
            let mut terms = Vec::new();
            let mut succ = vec![usize::MAX; n];
            enumerate_in_trees(&out, root, 0, 0.0, &mut succ, &mut terms);
            log_sum_exp(&terms)
        })
        .collect();
    let ln_total = log_sum_exp(&ln_weights);
    if ln_total == f64::NEG_INFINITY {
        return Err(ChainError::Reducible { from: 0, to: 0 });
    }
    let mu = ln_weights.iter().map(|w| (w - ln_total).exp()).collect();
    Ok(StationaryDistribution::new(mu, chain.epsilon(), Method::TreeTheorem))
}

// Assigns a successor to every non-root node in index order and keeps the
// assignments that form an in-tree (every node reaches the root).
fn enumerate_in_trees(
    out: &[Vec<(usize, f64)>],
    root: usize,
    node: usize,
    ln_w: f64,
    succ: &mut [usize],
    terms: &mut Vec<f64>,
) {
    let n = out.len();
    if node == n {
        if is_in_tree(succ, root) {
            terms.push(ln_w);
        }
        return;
    }
    if node == root {
        enumerate_in_trees(out, root, node + 1, ln_w, succ, terms);
        return;
    }
    for &(y, lp) in &out[node] {
        succ[node] = y;
        enumerate_in_trees(out, root, node + 1, ln_w + lp, succ, terms);
    }
    succ[node] = usize::MAX;
}

pub(crate) fn is_in_tree(succ: &[usize], root: usize) -> bool {
    let n = succ.len();
    // 0 = unknown, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n];
    state[root] = 2;
    for start in 0..n {
        let mut path = Vec::new();
        let mut x = start;
        while state[x] == 0 {
            state[x] = 1;
            path.push(x);
            x = succ[x];
            if x == usize::MAX {
                return false;
            }
        }
        if state[x] == 1 {
            return false;
        }
        for v in path {
            state[v] = 2;
        }
    }
    true
}
