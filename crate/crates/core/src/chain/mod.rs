//! Exact analysis of the perturbed Markov chains induced by BLLL.
//!
//! States are action profiles (mixed-radix indices). Transition matrices are
//! built entry by entry in the log domain, stationary distributions are
//! available through elimination and through the spanning-tree formula, and
//! resistances feed a minimum-arborescence search for stochastic potentials.

mod arborescence;
mod lemma;
mod resistance;
mod stationary;
mod transition;

use ndarray::Array2;
use thiserror::Error;

use crate::comm::CommError;
use crate::game::GameError;

pub use arborescence::{
    min_in_arborescence, min_in_arborescence_exhaustive, stochastic_potentials,
    stochastic_potentials_with_cap, InTree, StochasticPotentialReport,
};
pub use lemma::{
    coupled_probability, lemma1_check, minimal_uniform_exponent, remark1_bound,
    theorem4_temperature, Lemma1Report, Lemma1Violation,
};
pub use resistance::{
    conditional_resistance, resistance_limit_check, resistance_perfect, resistance_stochastic,
    LimitCheck, ResistanceGraph, ResistanceVariant, LIMIT_EPSILONS, LIMIT_RELATIVE_TOLERANCE,
};
pub use stationary::{
    stationary_linear, stationary_tree_theorem, stationary_tree_theorem_with_cap, Method,
    StationaryDistribution, DEFAULT_TREE_STATE_CAP, STATIONARY_RESIDUAL_TOLERANCE,
};
pub use transition::{
    perfect_ln_transition, stochastic_ln_transition, transition_matrix_perfect,
    transition_matrix_stochastic,
};

/// Tolerance used when grouping near-equal stochastic potentials.
pub const GAMMA_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("perturbation eps = {0} must lie in (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("transition {from} -> {to} is not a feasible unilateral move")]
    Infeasible { from: usize, to: usize },
    #[error("chain is reducible: state {to} is unreachable from state {from}")]
    Reducible { from: usize, to: usize },
    #[error("chain is periodic with period {0}")]
    Periodic(usize),
    #[error("{states} states exceed the enumeration cap of {cap}; use the linear solver")]
    StateCap { states: usize, cap: usize },
    #[error("row {row} is not stochastic (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("stationary residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("arborescence oracles disagree at root {root}: {exact} vs {exhaustive}")]
    OracleMismatch {
        root: usize,
        exact: f64,
        exhaustive: f64,
    },
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Where a chain's transition probabilities came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Perfect,
    StochasticLinks,
    Explicit,
}

/// A row-stochastic matrix over action profiles at a fixed perturbation level.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedChain {
    matrix: Array2<f64>,
    epsilon: f64,
    provenance: Provenance,
    warnings: Vec<String>,
}

impl PerturbedChain {
    /// Wraps an arbitrary stochastic matrix.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self, ChainError> {
        for (row, r) in matrix.rows().into_iter().enumerate() {
            let sum: f64 = r.sum();
            if (sum - 1.0).abs() > 1e-12 || r.iter().any(|&x| !(x >= 0.0)) {
                return Err(ChainError::NotStochastic { row, sum });
            }
        }
        Ok(PerturbedChain {
            matrix,
            epsilon: f64::NAN,
            provenance: Provenance::Explicit,
            warnings: Vec::new(),
        })
    }

    pub(crate) fn from_parts(
        matrix: Array2<f64>,
        epsilon: f64,
        provenance: Provenance,
        warnings: Vec<String>,
    ) -> Self {
        PerturbedChain {
            matrix,
            epsilon,
            provenance,
            warnings,
        }
    }

    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.matrix[[from, to]]
    }

    /// NaN for chains built from a raw matrix.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Non-fatal issues found while building (e.g. failed reachability).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let n = self.n_states();
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            #[allow(clippy::needless_range_loop)]
            for y in 0..n {
                let p = if forward {
                    self.matrix[[x, y]]
                } else {
                    self.matrix[[y, x]]
                };
                if p > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    /// Strong connectivity of the positive-probability digraph.
    pub fn check_irreducible(&self) -> Result<(), ChainError> {
        if let Some(to) = self.reach(0, true).iter().position(|s| !s) {
            return Err(ChainError::Reducible { from: 0, to });
        }
        if let Some(from) = self.reach(0, false).iter().position(|s| !s) {
            return Err(ChainError::Reducible { from, to: 0 });
        }
        Ok(())
    }

    /// Period of an irreducible chain (1 = aperiodic).
    pub fn period(&self) -> usize {
        let n = self.n_states();
        if (0..n).any(|x| self.matrix[[x, x]] > 0.0) {
            return 1;
        }
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        let mut g = 0usize;
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if self.matrix[[x, y]] <= 0.0 {
                    continue;
                }
                if level[y] == usize::MAX {
                    level[y] = level[x] + 1;
                    queue.push_back(y);
                } else {
                    let d = (level[x] + 1).abs_diff(level[y]);
                    g = gcd(g, d);
                }
            }
        }
        g.max(1)
    }

    /// Irreducible and aperiodic.
    pub fn check_ergodic(&self) -> Result<(), ChainError> {
        self.check_irreducible()?;
        match self.period() {
            1 => Ok(()),
            p => Err(ChainError::Periodic(p)),
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn check_epsilon(eps: f64) -> Result<(), ChainError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(ChainError::EpsilonOutOfRange(eps))
    }
}

/// Numerically stable `ln(sum(exp(x)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
