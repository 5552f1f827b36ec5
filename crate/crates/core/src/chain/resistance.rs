use std::collections::BTreeMap;

use super::ChainError;
use crate::comm::{CommError, ConnectivityModel, LinkMode, PartialUtilityModel, Realization};
use crate::game::Game;

/// Perturbation levels `10^-1 .. 10^-6` used to probe `eps^-R P^eps`.
pub const LIMIT_EPSILONS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Maximum relative change between the last two probes for a limit to count as settled.
pub const LIMIT_RELATIVE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResistanceVariant {
    Perfect,
    StochasticLinks,
}

fn feasible_player(game: &Game, a0: usize, a1: usize) -> Result<usize, ChainError> {
    if !game.is_feasible_transition(a0, a1) {
        return Err(ChainError::Infeasible { from: a0, to: a1 });
    }
    Ok(game.deviating_player(a0, a1).expect("feasible moves are unilateral"))
}

/// `max(U_i(a0), U_i(a1)) - U_i(a1)` for the deviating player.
pub fn resistance_perfect(game: &Game, a0: usize, a1: usize) -> Result<f64, ChainError> {
    let i = feasible_player(game, a0, a1)?;
    let (u0, u1) = (game.utility(i, a0), game.utility(i, a1));
    Ok(u0.max(u1) - u1)
}

/// Resistance of `a0 -> a1` when the mover only hears from `reachable`.
pub fn conditional_resistance(
    game: &Game,
    partial: &PartialUtilityModel,
    a0: usize,
    a1: usize,
    reachable: &Realization,
) -> Result<f64, ChainError> {
    feasible_player(game, a0, a1)?;
    let i = reachable.agent();
    let u0 = partial.partial_utility(i, a0, reachable)?;
    let u1 = partial.partial_utility(i, a1, reachable)?;
    Ok(u0.max(u1) - u1)
}

/// Minimum over realizations of the conditional resistance plus the exponents
/// of the links that failed.
pub fn resistance_stochastic(
    game: &Game,
    links: &ConnectivityModel,
    partial: &PartialUtilityModel,
    a0: usize,
    a1: usize,
) -> Result<f64, ChainError> {
    if links.mode() != LinkMode::Exponent {
        return Err(CommError::ExponentModeRequired.into());
    }
    let i = feasible_player(game, a0, a1)?;
    let n = game.n_players();
    let mut best = f64::INFINITY;
    for r in Realization::all_for(i, n) {
        let penalty: f64 = (0..n)
            .filter(|&j| !r.contains(j))
            .map(|j| links.exponent(i, j, a0))
            .sum::<Result<f64, _>>()?;
        let rc = conditional_resistance(game, partial, a0, a1, &r)?;
        best = best.min(rc + penalty);
    }
    Ok(best)
}

/// Resistances of every feasible unilateral transition. Missing pairs are
/// infeasible (infinite resistance).
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceGraph {
    n_states: usize,
    edges: BTreeMap<(usize, usize), f64>,
    variant: ResistanceVariant,
}

impl ResistanceGraph {
    pub fn perfect(game: &Game) -> Result<Self, ChainError> {
        let edges = game
            .feasible_transitions()
            .into_iter()
            .map(|(a0, a1, _)| Ok(((a0, a1), resistance_perfect(game, a0, a1)?)))
            .collect::<Result<_, ChainError>>()?;
        Ok(ResistanceGraph {
            n_states: game.n_profiles(),
            edges,
            variant: ResistanceVariant::Perfect,
        })
    }

    pub fn stochastic(
        game: &Game,
        links: &ConnectivityModel,
        partial: &PartialUtilityModel,
    ) -> Result<Self, ChainError> {
        let edges = game
            .feasible_transitions()
            .into_iter()
            .map(|(a0, a1, _)| Ok(((a0, a1), resistance_stochastic(game, links, partial, a0, a1)?)))
            .collect::<Result<_, ChainError>>()?;
        Ok(ResistanceGraph {
            n_states: game.n_profiles(),
            edges,
            variant: ResistanceVariant::StochasticLinks,
        })
    }

    /// Arbitrary edge set, mainly for tests and external graphs.
    pub fn from_edges(n_states: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        ResistanceGraph {
            n_states,
            edges: edges.into_iter().map(|(a, b, r)| ((a, b), r)).collect(),
            variant: ResistanceVariant::Perfect,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn variant(&self) -> ResistanceVariant {
        self.variant
    }

    pub fn resistance(&self, from: usize, to: usize) -> f64 {
        self.edges.get(&(from, to)).copied().unwrap_or(f64::INFINITY)
    }

    /// `(from, to, resistance)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &r)| (a, b, r))
    }

    pub fn max_resistance(&self) -> f64 {
        self.edges.values().copied().fold(0.0, f64::max)
    }
}

/// Samples of `eps^-R P^eps` along [`LIMIT_EPSILONS`].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    pub claimed: f64,
    pub samples: Vec<(f64, f64)>,
    pub passed: bool,
}

/// Checks that `eps^-R P^eps(a0 -> a1)` settles to a finite positive value as
/// eps shrinks. `ln_transition(eps)` must return `ln P^eps(a0 -> a1)`.
pub fn resistance_limit_check<F>(mut ln_transition: F, claimed: f64) -> Result<LimitCheck, ChainError>
where
    F: FnMut(f64) -> Result<f64, ChainError>,
{
    let samples = LIMIT_EPSILONS
        .iter()
        .map(|&eps| Ok((eps, (ln_transition(eps)? - claimed * eps.ln()).exp())))
        .collect::<Result<Vec<_>, ChainError>>()?;
    let finite_positive = samples.iter().all(|(_, v)| v.is_finite() && *v > 0.0);
    let (prev, last) = (samples[samples.len() - 2].1, samples[samples.len() - 1].1);
    let settled = ((last - prev) / prev).abs() < LIMIT_RELATIVE_TOLERANCE;
    Ok(LimitCheck {
        claimed,
        samples,
        passed: finite_positive && settled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{perfect_ln_transition, stochastic_ln_transition};
    use crate::fixtures::toy;

    #[test]
    fn perfect_resistances_of_toy() {
        let g = toy::game();
        assert_eq!(resistance_perfect(&g, toy::A4, toy::A2).unwrap(), 2.0);
        assert_eq!(resistance_perfect(&g, toy::A1, toy::A3).unwrap(), 0.0);
        // improving move
        assert_eq!(resistance_perfect(&g, toy::A2, toy::A4).unwrap(), 0.0);
        assert!(matches!(
            resistance_perfect(&g, toy::A3, toy::A4),
            Err(ChainError::Infeasible { .. })
        ));
    }

    #[test]
    fn stochastic_resistance_of_toy_mistake() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        let links = toy::exponent_links(0.5).unwrap();
        assert_eq!(resistance_stochastic(&g, &links, &pum, toy::A4, toy::A2).unwrap(), 0.5);
        assert!(matches!(
            resistance_stochastic(&g, &links, &pum, toy::A3, toy::A4),
            Err(ChainError::Infeasible { .. })
        ));
    }

    #[test]
    fn unaffected_partials_reduce_to_perfect() {
        let g = toy::game();
        let pum = PartialUtilityModel::unaffected(&g);
        let links = toy::exponent_links(0.1).unwrap();
        for (a0, a1, _) in g.feasible_transitions() {
            assert_eq!(
                resistance_stochastic(&g, &links, &pum, a0, a1).unwrap(),
                resistance_perfect(&g, a0, a1).unwrap()
            );
        }
    }

    #[test]
    fn probability_mode_has_no_resistance() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        let links = toy::probability_links(0.9).unwrap();
        assert!(matches!(
            resistance_stochastic(&g, &links, &pum, toy::A4, toy::A2),
            Err(ChainError::Comm(CommError::ExponentModeRequired))
        ));
    }

    #[test]
    fn limit_check_accepts_true_and_rejects_shifted_resistance() {
        let g = toy::game();
        for (a0, a1, _) in g.feasible_transitions() {
            let r = resistance_perfect(&g, a0, a1).unwrap();
            let f = |eps| perfect_ln_transition(&g, a0, a1, eps);
            assert!(resistance_limit_check(f, r).unwrap().passed);
            assert!(!resistance_limit_check(f, r - 1.0).unwrap().passed);
            assert!(!resistance_limit_check(f, r + 1.0).unwrap().passed);
        }
    }

    #[test]
    fn stochastic_limit_check_on_toy() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        let links = toy::exponent_links(0.5).unwrap();
        let r = resistance_stochastic(&g, &links, &pum, toy::A4, toy::A2).unwrap();
        let check = resistance_limit_check(
            |eps| stochastic_ln_transition(&g, &links, &pum, toy::A4, toy::A2, eps),
            r,
        )
        .unwrap();
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn stochastic_never_exceeds_perfect() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        for &m in &[0.25, 1.0, 4.0] {
            let links = toy::exponent_links(m).unwrap();
            let rg = ResistanceGraph::stochastic(&g, &links, &pum).unwrap();
            let rp = ResistanceGraph::perfect(&g).unwrap();
            for (a, b, r) in rg.edges() {
                assert!(r <= rp.resistance(a, b));
                assert!(r >= 0.0);
            }
            assert_eq!(rg.edges().count(), 8);
        }
    }
}
