use ndarray::Array2;

use super::{check_epsilon, log_sum_exp, ChainError, PerturbedChain, Provenance};
use crate::comm::{ConnectivityModel, PartialUtilityModel, DEFAULT_ENUMERATION_CAP};
use crate::dynamics::ln_logistic;
use crate::game::{Game, MoveCheck};

fn deviation(game: &Game, a0: usize, a1: usize) -> Result<usize, ChainError> {
    if !game.is_feasible_transition(a0, a1) {
        return Err(ChainError::Infeasible { from: a0, to: a1 });
    }
    Ok(game.deviating_player(a0, a1).expect("feasible moves are unilateral"))
}

// ln(1 / (n k)), k counting the current action among the candidates
fn ln_selection(game: &Game, a0: usize, player: usize) -> f64 {
    let k = game.n_candidates(player, game.action_of(a0, player));
    -((game.n_players() * k) as f64).ln()
}

/// `ln P(a0 -> a1)` with perfect links. The logistic form of
/// `eps^{-U(a1)} / (eps^{-U(a1)} + eps^{-U(a0)})` keeps this finite for any eps.
pub fn perfect_ln_transition(game: &Game, a0: usize, a1: usize, eps: f64) -> Result<f64, ChainError> {
    check_epsilon(eps)?;
    let i = deviation(game, a0, a1)?;
    let inv_tau = -eps.ln();
    let gap = game.utility(i, a1) - game.utility(i, a0);
    Ok(ln_selection(game, a0, i) + ln_logistic(gap * inv_tau))
}

/// `ln P_c(a0 -> a1)`: the perfect-link formula applied to partial utilities,
/// averaged over the updating agent's link realizations at `a0`.
pub fn stochastic_ln_transition(
    game: &Game,
    links: &ConnectivityModel,
    partial: &PartialUtilityModel,
    a0: usize,
    a1: usize,
    eps: f64,
) -> Result<f64, ChainError> {
    check_epsilon(eps)?;
    let i = deviation(game, a0, a1)?;
    let inv_tau = -eps.ln();
    let terms = links
        .enumerate_realizations_ln(i, a0, eps, DEFAULT_ENUMERATION_CAP)?
        .into_iter()
        .map(|(r, ln_p)| {
            if ln_p == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            let u0 = partial.partial_utility(i, a0, &r)?;
            let u1 = partial.partial_utility(i, a1, &r)?;
            Ok(ln_p + ln_logistic((u1 - u0) * inv_tau))
        })
        .collect::<Result<Vec<f64>, ChainError>>()?;
    Ok(ln_selection(game, a0, i) + log_sum_exp(&terms))
}

fn reachability_warnings(game: &Game) -> Vec<String> {
    game.check_reachability()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            MoveCheck::Ok => None,
            MoveCheck::Failed { from, to } => Some(format!(
                "player {} cannot reach action {} from {}; the chain may be reducible",
                i + 1,
                game.action_label(i, *to),
                game.action_label(i, *from)
            )),
        })
        .collect()
}

fn assemble<F>(game: &Game, eps: f64, provenance: Provenance, mut ln_entry: F) -> Result<PerturbedChain, ChainError>
where
    F: FnMut(usize, usize) -> Result<f64, ChainError>,
{
    check_epsilon(eps)?;
    let n = game.n_profiles();
    let mut m = Array2::<f64>::zeros((n, n));
    for (a0, a1, _) in game.feasible_transitions() {
        m[[a0, a1]] = ln_entry(a0, a1)?.exp();
    }
    for a in 0..n {
        let off: f64 = (0..n).filter(|&b| b != a).map(|b| m[[a, b]]).sum();
        m[[a, a]] = 1.0 - off;
    }
    Ok(PerturbedChain::from_parts(m, eps, provenance, reachability_warnings(game)))
}

/// BLLL transition matrix with perfect communication.
pub fn transition_matrix_perfect(game: &Game, eps: f64) -> Result<PerturbedChain, ChainError> {
    assemble(game, eps, Provenance::Perfect, |a0, a1| {
        perfect_ln_transition(game, a0, a1, eps)
    })
}

/// BLLL transition matrix under random link failures.
pub fn transition_matrix_stochastic(
    game: &Game,
    links: &ConnectivityModel,
    partial: &PartialUtilityModel,
    eps: f64,
) -> Result<PerturbedChain, ChainError> {
    assemble(game, eps, Provenance::StochasticLinks, |a0, a1| {
        stochastic_ln_transition(game, links, partial, a0, a1, eps)
    })
}
