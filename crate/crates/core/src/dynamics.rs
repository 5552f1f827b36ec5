//! Sample-path simulation of binary log-linear learning.
//!
//! One iteration: a uniformly chosen agent draws a candidate uniformly from
//! its constrained set and keeps its current action with probability
//! `e^{U(a)/tau} / (e^{U(a)/tau} + e^{U(cand)/tau})`. The comparison is done as
//! a logistic of the utility gap so small temperatures never overflow.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::comm::{CommError, ConnectivityModel, PartialUtilityModel, Realization};
use crate::game::Game;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("temperature must be positive and finite, got {0}")]
    Temperature(f64),
    #[error("initial profile {0} out of range")]
    InitialProfile(usize),
    #[error("stochastic-link variant needs a connectivity model and partial utilities")]
    MissingLinks,
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `1 / (1 + e^{-x})`, finite for every finite `x`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 / (1 + e^{-x}))` without overflow or cancellation.
pub fn ln_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Probability of moving to the candidate under the BLLL rule.
pub fn switch_probability(u_current: f64, u_candidate: f64, tau: f64) -> f64 {
    logistic((u_candidate - u_current) / tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// BLLL with every agent observing the true utility.
    Perfect,
    /// BLLL where each evaluation uses the utility conditioned on a random link realization.
    StochasticLinks,
    /// Asynchronous best reply (the zero-temperature limit).
    BestReply,
}

#[derive(Debug, Clone)]
pub struct DynamicsConfig {
    pub tau: f64,
    pub horizon: u64,
    pub seed: u64,
    pub variant: Variant,
    pub initial: usize,
    /// Number of leading iterations excluded from the empirical distribution;
    /// `None` means half the horizon.
    pub burn_in: Option<u64>,
    /// Keep every step in the trajectory.
    pub record: bool,
}

impl DynamicsConfig {
    pub fn new(variant: Variant, tau: f64, horizon: u64, seed: u64) -> Self {
        DynamicsConfig {
            tau,
            horizon,
            seed,
            variant,
            initial: 0,
            burn_in: None,
            record: false,
        }
    }

    /// `eps = e^{-1/tau}`.
    pub fn epsilon(&self) -> f64 {
        epsilon_from_tau(self.tau)
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.horizon / 2).min(self.horizon)
    }
}

pub fn epsilon_from_tau(tau: f64) -> f64 {
    (-1.0 / tau).exp()
}

pub fn tau_from_epsilon(eps: f64) -> f64 {
    -1.0 / eps.ln()
}

/// One update of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub agent: usize,
    pub candidate: usize,
    pub realization: Option<Realization>,
    pub next: usize,
}

fn pick_agent_and_candidate<R: Rng + ?Sized>(game: &Game, profile: usize, rng: &mut R) -> (usize, usize) {
    let agent = rng.gen_range(0..game.n_players());
    let current = game.action_of(profile, agent);
    let candidates = game.candidates(agent, current);
    let candidate = candidates[rng.gen_range(0..candidates.len())];
    (agent, candidate)
}

/// BLLL with perfect information.
pub fn blll_step<R: Rng + ?Sized>(game: &Game, profile: usize, tau: f64, rng: &mut R) -> Step {
    let (agent, candidate) = pick_agent_and_candidate(game, profile, rng);
    let target = game.deviate(profile, agent, candidate);
    let p = switch_probability(game.utility(agent, profile), game.utility(agent, target), tau);
    let next = if rng.gen::<f64>() < p { target } else { profile };
    Step {
        agent,
        candidate,
        realization: None,
        next,
    }
}

/// BLLL where the agent evaluates both options through the same random link realization.
pub fn blll_step_stochastic<R: Rng + ?Sized>(
    game: &Game,
    links: &ConnectivityModel,
    partial: &PartialUtilityModel,
    profile: usize,
    tau: f64,
    rng: &mut R,
) -> Result<Step, CommError> {
    let (agent, candidate) = pick_agent_and_candidate(game, profile, rng);
    let eps = epsilon_from_tau(tau);
    let realization = links.sample_realization(agent, profile, eps, rng)?;
    let target = game.deviate(profile, agent, candidate);
    let u_stay = partial.partial_utility(agent, profile, &realization)?;
    let u_move = partial.partial_utility(agent, target, &realization)?;
    let p = switch_probability(u_stay, u_move, tau);
    let next = if rng.gen::<f64>() < p { target } else { profile };
    Ok(Step {
        agent,
        candidate,
        realization: Some(realization),
        next,
    })
}

/// Asynchronous best reply; ties keep the current action.
pub fn best_reply_step<R: Rng + ?Sized>(game: &Game, profile: usize, rng: &mut R) -> Step {
    let (agent, candidate) = pick_agent_and_candidate(game, profile, rng);
    let target = game.deviate(profile, agent, candidate);
    let next = if game.utility(agent, target) > game.utility(agent, profile) {
        target
    } else {
        profile
    };
    Step {
        agent,
        candidate,
        realization: None,
        next,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub iteration: u64,
    pub agent: usize,
    pub candidate: usize,
    pub subset_mask: Option<u64>,
    pub profile: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: usize,
    pub final_profile: usize,
    /// Every step, when recording was requested.
    pub steps: Vec<StepRecord>,
    /// Visit counts over the post-burn-in window, indexed by profile.
    pub visits: Vec<u64>,
}

impl Trajectory {
    pub fn empirical(&self) -> Vec<f64> {
        let total: u64 = self.visits.iter().sum();
        self.visits
            .iter()
            .map(|&v| v as f64 / total as f64)
            .collect()
    }

    /// `iter,agent,candidate,subset_bitmask,profile_index`. Agents are 1-based,
    /// candidates are action labels and bit `j` of the mask stands for player `j+1`.
    /// The mask is empty for perfect-information variants.
    pub fn write_steps_csv<W: Write>(&self, game: &Game, out: W) -> Result<(), DynamicsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "agent", "candidate", "subset_bitmask", "profile_index"])?;
        for s in &self.steps {
            w.write_record([
                s.iteration.to_string(),
                (s.agent + 1).to_string(),
                game.action_label(s.agent, s.candidate).to_string(),
                s.subset_mask.map(|m| m.to_string()).unwrap_or_default(),
                s.profile.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `state_label,frequency`.
    pub fn write_empirical_csv<W: Write>(&self, game: &Game, out: W) -> Result<(), DynamicsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state_label", "frequency"])?;
        for (a, f) in self.empirical().iter().enumerate() {
            w.write_record([game.state_label(a), format!("{f}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the configured variant for `config.horizon` iterations from `config.initial`.
pub fn run(
    game: &Game,
    links: Option<(&ConnectivityModel, &PartialUtilityModel)>,
    config: &DynamicsConfig,
) -> Result<Trajectory, DynamicsError> {
    if config.variant != Variant::BestReply && !(config.tau > 0.0 && config.tau.is_finite()) {
        return Err(DynamicsError::Temperature(config.tau));
    }
    if config.initial >= game.n_profiles() {
        return Err(DynamicsError::InitialProfile(config.initial));
    }
    if config.variant == Variant::StochasticLinks && links.is_none() {
        return Err(DynamicsError::MissingLinks);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let burn_in = config.burn_in();
    let mut visits = vec![0u64; game.n_profiles()];
    let mut steps = Vec::new();
    let mut profile = config.initial;
    if burn_in == 0 {
        visits[profile] += 1;
    }
    for t in 1..=config.horizon {
        let step = match config.variant {
            Variant::Perfect => blll_step(game, profile, config.tau, &mut rng),
            Variant::BestReply => best_reply_step(game, profile, &mut rng),
            Variant::StochasticLinks => {
                let (c, p) = links.expect("checked above");
                blll_step_stochastic(game, c, p, profile, config.tau, &mut rng)?
            }
        };
        debug_assert!(step.next == profile || game.is_feasible_transition(profile, step.next));
        profile = step.next;
        if config.record {
            steps.push(StepRecord {
                iteration: t,
                agent: step.agent,
                candidate: step.candidate,
                subset_mask: step.realization.map(|r| r.mask()),
                profile,
            });
        }
        if t >= burn_in {
            visits[profile] += 1;
        }
    }
    Ok(Trajectory {
        initial: config.initial,
        final_profile: profile,
        steps,
        visits,
    })
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy;

    #[test]
    fn equal_utilities_switch_with_half() {
        assert_eq!(switch_probability(2.5, 2.5, 0.3), 0.5);
    }

    #[test]
    fn toy_switch_probability_at_unit_temperature() {
        let g = toy::game();
        let p = switch_probability(g.utility(0, toy::A1), g.utility(0, toy::A3), 1.0);
        let e = std::f64::consts::E;
        let oracle = e.powi(3) / (e + e.powi(3));
        assert!((p - oracle).abs() < 1e-15);
        assert!((p - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn logistic_is_stable_at_tiny_temperature() {
        let p = switch_probability(0.0, 3.0, 1e-3);
        assert_eq!(p, 1.0);
        let q = switch_probability(3.0, 0.0, 1e-3);
        assert!(q > 0.0 && q < 1e-300 || q == 0.0);
        assert!(ln_logistic(-3000.0).is_finite());
        assert!((ln_logistic(-3000.0) + 3000.0).abs() < 1e-9);
        assert!((ln_logistic(0.7) - logistic(0.7).ln()).abs() < 1e-15);
        assert!((ln_logistic(-0.7) - logistic(-0.7).ln()).abs() < 1e-15);
    }

    #[test]
    fn switch_probability_shift_invariant() {
        for &(u0, u1, tau) in &[(1.0, 3.0, 1.0), (-2.0, 0.5, 0.05), (4.0, 1.0, 2.0)] {
            let base = switch_probability(u0, u1, tau);
            for &c in &[-10.0, 0.25, 7.0] {
                let shifted = switch_probability(u0 + c, u1 + c, tau);
                assert!((base - shifted).abs() <= 4.0 * f64::EPSILON * base.max(1e-300));
            }
        }
    }

    #[test]
    fn best_reply_from_a2() {
        let g = toy::game();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = best_reply_step(&g, toy::A2, &mut rng);
            // both agents strictly improve by moving away from (T,L); drawing
            // the current action as candidate leaves the profile unchanged
            let current = g.action_of(toy::A2, s.agent);
            let expected = match (s.candidate == current, s.agent) {
                (true, _) => toy::A2,
                (false, 0) => toy::A4,
                (false, _) => toy::A3,
            };
            assert_eq!(s.next, expected);
        }
        for _ in 0..200 {
            // from a4 every candidate is strictly worse
            assert_eq!(best_reply_step(&g, toy::A4, &mut rng).next, toy::A4);
        }
    }

    #[test]
    fn horizon_zero_is_point_mass() {
        let g = toy::game();
        let mut cfg = DynamicsConfig::new(Variant::Perfect, 0.5, 0, 1);
        cfg.initial = toy::A1;
        let t = run(&g, None, &cfg).unwrap();
        let emp = t.empirical();
        assert_eq!(emp[toy::A1], 1.0);
        assert_eq!(emp.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn trajectory_changes_one_coordinate_at_a_time() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        let links = toy::exponent_links(0.5).unwrap();
        let mut cfg = DynamicsConfig::new(Variant::StochasticLinks, 0.3, 5_000, 9);
        cfg.record = true;
        let t = run(&g, Some((&links, &pum)), &cfg).unwrap();
        let mut prev = cfg.initial;
        for s in &t.steps {
            assert!(s.profile == prev || g.is_feasible_transition(prev, s.profile));
            assert!(s.subset_mask.unwrap() >> s.agent & 1 == 1);
            prev = s.profile;
        }
        assert_eq!(prev, t.final_profile);
    }

    #[test]
    fn stochastic_variant_requires_links() {
        let g = toy::game();
        let cfg = DynamicsConfig::new(Variant::StochasticLinks, 0.3, 10, 9);
        assert!(matches!(run(&g, None, &cfg), Err(DynamicsError::MissingLinks)));
        let bad = DynamicsConfig::new(Variant::Perfect, 0.0, 10, 9);
        assert!(matches!(run(&g, None, &bad), Err(DynamicsError::Temperature(_))));
    }

    #[test]
    fn csv_exports_have_headers() {
        let g = toy::game();
        let mut cfg = DynamicsConfig::new(Variant::Perfect, 0.5, 3, 2);
        cfg.record = true;
        let t = run(&g, None, &cfg).unwrap();
        let mut buf = Vec::new();
        t.write_steps_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,agent,candidate,subset_bitmask,profile_index\n"));
        assert_eq!(text.lines().count(), 4);
        let mut buf = Vec::new();
        t.write_empirical_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("state_label,frequency\n"));
        assert!(text.contains("a4,"));
    }
}
