use super::{conditional_resistance, resistance_perfect, ChainError};
use crate::comm::{CommError, ConnectivityModel, LinkMode, PartialUtilityModel, Realization};
use crate::game::Game;

/// One failed instance of the link-exponent sufficient condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Violation {
    pub agent: usize,
    pub subset_mask: u64,
    pub from: usize,
    pub to: usize,
    /// Sum of exponents over the links that failed.
    pub exponent_sum: f64,
    /// `R(a0 -> a1) - R_c(a0 -> a1 | I)`.
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub violations: Vec<Lemma1Violation>,
    /// Smallest uniform exponent satisfying every inequality (0 if any positive one does).
    pub minimal_uniform_m: f64,
    /// Largest perfect-information resistance over feasible transitions; a
    /// per-link exponent at least this large always suffices.
    pub remark1_bound: f64,
}

impl Lemma1Report {
    pub fn satisfied(&self) -> bool {
        self.violations.is_empty()
    }
}

// (realization, a0, a1, n_missing, R - R_c(.|I))
type Gap = (Realization, usize, usize, usize, f64);

// one entry per feasible move and non-full realization of the mover
fn gaps(
    game: &Game,
    partial: &PartialUtilityModel,
) -> Result<Vec<Gap>, ChainError> {
    let n = game.n_players();
    let mut out = Vec::new();
    for (a0, a1, i) in game.feasible_transitions() {
        let r = resistance_perfect(game, a0, a1)?;
        for real in Realization::all_for(i, n).filter(|x| !x.is_full(n)) {
            let rc = conditional_resistance(game, partial, a0, a1, &real)?;
            out.push((real, a0, a1, real.n_missing(n), r - rc));
        }
    }
    Ok(out)
}

/// Smallest `m` such that `k m >= R - R_c(.|I)` for every realization with `k`
/// missing links.
pub fn minimal_uniform_exponent(game: &Game, partial: &PartialUtilityModel) -> Result<f64, ChainError> {
    Ok(gaps(game, partial)?
        .iter()
        .map(|&(_, _, _, k, gap)| gap / k as f64)
        .fold(0.0, f64::max))
}

pub fn remark1_bound(game: &Game) -> Result<f64, ChainError> {
    game.feasible_transitions()
        .iter()
        .map(|&(a0, a1, _)| resistance_perfect(game, a0, a1))
        .try_fold(0.0, |acc, r| Ok(f64::max(acc, r?)))
}

/// Checks the sufficient condition under which link failures leave every
/// resistance, and hence the stochastically stable set, unchanged.
pub fn lemma1_check(
    game: &Game,
    links: &ConnectivityModel,
    partial: &PartialUtilityModel,
) -> Result<Lemma1Report, ChainError> {
    if links.mode() != LinkMode::Exponent {
        return Err(CommError::ExponentModeRequired.into());
    }
    let n = game.n_players();
    let mut violations = Vec::new();
    for (real, a0, a1, _, required) in gaps(game, partial)? {
        let i = real.agent();
        let exponent_sum: f64 = (0..n)
            .filter(|&j| !real.contains(j))
            .map(|j| links.exponent(i, j, a0))
            .sum::<Result<f64, _>>()?;
        if exponent_sum < required {
            violations.push(Lemma1Violation {
                agent: i,
                subset_mask: real.mask(),
                from: a0,
                to: a1,
                exponent_sum,
                required,
            });
        }
    }
    Ok(Lemma1Report {
        violations,
        minimal_uniform_m: minimal_uniform_exponent(game, partial)?,
        remark1_bound: remark1_bound(game)?,
    })
}

/// Temperature at which a uniform delivery probability `p_c` corresponds to
/// exponent `m`: `tau = -m / ln((1 - p_c) / p_c)`.
pub fn theorem4_temperature(p_c: f64, m: f64) -> Result<f64, ChainError> {
    if !(p_c > 0.5 && p_c < 1.0) {
        return Err(ChainError::Comm(CommError::ProbabilityOutOfRange {
            i: 0,
            j: 1,
            value: p_c,
        }));
    }
    if !(m > 0.0) {
        return Err(ChainError::Comm(CommError::ExponentOutOfRange { i: 0, j: 1, value: m }));
    }
    // ln((1-p)/p) = ln(1-p) - ln(p)
    Ok(-m / ((-p_c).ln_1p() - p_c.ln()))
}

/// `1 / (1 + e^{-m/tau})`.
pub fn coupled_probability(m: f64, tau: f64) -> f64 {
    1.0 / (1.0 + (-m / tau).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy;

    #[test]
    fn toy_minimal_exponent_and_bound() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        assert_eq!(minimal_uniform_exponent(&g, &pum).unwrap(), 3.0);
        assert_eq!(remark1_bound(&g).unwrap(), 3.0);
    }

    #[test]
    fn toy_lemma_check_by_exponent() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        let ok = lemma1_check(&g, &toy::exponent_links(3.0).unwrap(), &pum).unwrap();
        assert!(ok.satisfied());
        let bad = lemma1_check(&g, &toy::exponent_links(2.5).unwrap(), &pum).unwrap();
        // only (B,L) -> (B,R) for agent 2 needs more than 2
        assert_eq!(bad.violations.len(), 1);
        assert_eq!(bad.violations[0].agent, 1);
        assert_eq!(bad.violations[0].from, toy::A4);
        assert_eq!(bad.violations[0].to, toy::A1);
        assert_eq!(bad.violations[0].required, 3.0);
    }

    #[test]
    fn unaffected_partials_need_no_links() {
        let g = toy::game();
        let pum = PartialUtilityModel::unaffected(&g);
        let rep = lemma1_check(&g, &toy::exponent_links(1e-3).unwrap(), &pum).unwrap();
        assert!(rep.satisfied());
        assert_eq!(rep.minimal_uniform_m, 0.0);
    }

    #[test]
    fn temperature_inversion() {
        let p1 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((theorem4_temperature(p1, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let p3 = 1.0 / (1.0 + (-3.0f64).exp());
        assert!((theorem4_temperature(p3, 3.0).unwrap() - 1.0).abs() < 1e-12);
        let t = theorem4_temperature(0.96, 3.0).unwrap();
        assert!((t - 3.0 / 24f64.ln()).abs() < 1e-12);
        assert!((t - 0.9440).abs() < 1e-4);
        assert!(theorem4_temperature(0.5, 1.0).is_err());
        assert!(theorem4_temperature(0.3, 1.0).is_err());
        assert!(theorem4_temperature(0.9, 0.0).is_err());
    }

    #[test]
    fn temperature_roundtrips_through_connectivity() {
        for &p in &[0.51, 0.7, 0.96, 0.999] {
            for &m in &[0.5, 1.0, 3.0] {
                let tau = theorem4_temperature(p, m).unwrap();
                let links = ConnectivityModel::uniform_exponent(2, m).unwrap();
                let back = links.connectivity(0, 1, 0, (-1.0 / tau).exp()).unwrap();
                assert!((back - p).abs() < 1e-12, "{p} {m} {back}");
                assert!((coupled_probability(m, tau) - p).abs() < 1e-12);
            }
        }
    }
}
