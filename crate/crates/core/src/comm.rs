//! Random communication graphs and partial-information utilities.
//!
//! Each iteration, the updating agent hears from a random subset of players
//! (a [`Realization`]). Links fail independently. The probability that the
//! link between `i` and `j` is up may depend on the current profile and is
//! either given directly or coupled to the BLLL temperature through an
//! exponent `m`: `p = 1 / (1 + eps^m)`.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::game::Game;

/// Largest player count for which realizations are enumerated exactly.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommError {
    #[error("perturbation eps = {0} must lie in (0, 1) for exponent-coupled links")]
    EpsilonOutOfRange(f64),
    #[error("link probability {value} for ({i}, {j}) must lie in (0, 1]")]
    ProbabilityOutOfRange { i: usize, j: usize, value: f64 },
    #[error("link exponent {value} for ({i}, {j}) must be positive")]
    ExponentOutOfRange { i: usize, j: usize, value: f64 },
    #[error("player index {0} out of range")]
    PlayerOutOfRange(usize),
    #[error("{n} players exceed the enumeration cap of {cap}; use the Monte Carlo sampler")]
    EnumerationCap { n: usize, cap: usize },
    #[error("no partial utility for agent {agent} hearing from {subset}")]
    MissingPartialUtility { agent: usize, subset: String },
    #[error("partial utility table for agent {agent}, subset {subset} is incomplete (profile {profile} missing)")]
    IncompleteTable {
        agent: usize,
        subset: String,
        profile: usize,
    },
    #[error("realization for agent {agent} must contain the agent itself")]
    AgentNotInRealization { agent: usize },
    #[error("operation requires exponent-coupled links")]
    ExponentModeRequired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    /// Values are delivery probabilities in (0, 1].
    Probability,
    /// Values are exponents `m > 0`; probability is `1 / (1 + eps^m)`.
    Exponent,
}

/// Up/down probabilities of a single link, both kept to full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProb {
    pub up: f64,
    pub down: f64,
    pub ln_up: f64,
    pub ln_down: f64,
}

impl LinkProb {
    fn certain() -> Self {
        LinkProb {
            up: 1.0,
            down: 0.0,
            ln_up: 0.0,
            ln_down: f64::NEG_INFINITY,
        }
    }
}

/// Symmetric, possibly profile-dependent link model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityModel {
    mode: LinkMode,
    n_players: usize,
    default: f64,
    links: HashMap<(usize, usize), f64>,
    overrides: HashMap<(usize, usize, usize), f64>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl ConnectivityModel {
    /// Same delivery probability on every link and profile.
    pub fn uniform_probability(n_players: usize, p: f64) -> Result<Self, CommError> {
        let m = ConnectivityModel {
            mode: LinkMode::Probability,
            n_players,
            default: p,
            links: HashMap::new(),
            overrides: HashMap::new(),
        };
        m.check_value(0, 1, p)?;
        Ok(m)
    }

    /// Same exponent on every link and profile.
    pub fn uniform_exponent(n_players: usize, m: f64) -> Result<Self, CommError> {
        let model = ConnectivityModel {
            mode: LinkMode::Exponent,
            n_players,
            default: m,
            links: HashMap::new(),
            overrides: HashMap::new(),
        };
        model.check_value(0, 1, m)?;
        Ok(model)
    }

    /// All links always up.
    pub fn perfect(n_players: usize) -> Self {
        ConnectivityModel::uniform_probability(n_players, 1.0).expect("1 is a valid probability")
    }

    fn check_value(&self, i: usize, j: usize, value: f64) -> Result<(), CommError> {
        match self.mode {
            LinkMode::Probability if !(value > 0.0 && value <= 1.0) => {
                Err(CommError::ProbabilityOutOfRange { i, j, value })
            }
            LinkMode::Exponent if !(value > 0.0) => {
                Err(CommError::ExponentOutOfRange { i, j, value })
            }
            _ => Ok(()),
        }
    }

    fn check_player(&self, i: usize) -> Result<(), CommError> {
        if i >= self.n_players {
            Err(CommError::PlayerOutOfRange(i))
        } else {
            Ok(())
        }
    }

    /// Sets the value of link `{i, j}` for all profiles without an override.
    pub fn with_link(mut self, i: usize, j: usize, value: f64) -> Result<Self, CommError> {
        self.check_player(i)?;
        self.check_player(j)?;
        self.check_value(i, j, value)?;
        self.links.insert(ordered(i, j), value);
        Ok(self)
    }

    /// Sets the value of link `{i, j}` at one profile.
    pub fn with_override(
        mut self,
        i: usize,
        j: usize,
        profile: usize,
        value: f64,
    ) -> Result<Self, CommError> {
        self.check_player(i)?;
        self.check_player(j)?;
        self.check_value(i, j, value)?;
        let (a, b) = ordered(i, j);
        self.overrides.insert((a, b, profile), value);
        Ok(self)
    }

    pub fn mode(&self) -> LinkMode {
        self.mode
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    /// True when every link and profile share one value.
    pub fn is_uniform(&self) -> bool {
        self.links.values().all(|&v| v == self.default)
            && self.overrides.values().all(|&v| v == self.default)
    }

    /// The shared value when [`is_uniform`](Self::is_uniform) holds.
    pub fn uniform_value(&self) -> Option<f64> {
        self.is_uniform().then_some(self.default)
    }

    /// Raw stored value (probability or exponent) of link `{i, j}` at `profile`.
    pub fn value(&self, i: usize, j: usize, profile: usize) -> f64 {
        let (a, b) = ordered(i, j);
        self.overrides
            .get(&(a, b, profile))
            .or_else(|| self.links.get(&(a, b)))
            .copied()
            .unwrap_or(self.default)
    }

    /// Exponent `m_{i,j}(a)`; only defined in exponent mode.
    pub fn exponent(&self, i: usize, j: usize, profile: usize) -> Result<f64, CommError> {
        match self.mode {
            LinkMode::Exponent => Ok(self.value(i, j, profile)),
            LinkMode::Probability => Err(CommError::ExponentModeRequired),
        }
    }

    /// Up/down probabilities for link `{i, j}` at `profile`. `eps` is only
    /// consulted in exponent mode.
    pub fn link(&self, i: usize, j: usize, profile: usize, eps: f64) -> Result<LinkProb, CommError> {
        if i == j {
            return Ok(LinkProb::certain());
        }
        let v = self.value(i, j, profile);
        match self.mode {
            LinkMode::Probability => {
                if v == 1.0 {
                    return Ok(LinkProb::certain());
                }
                Ok(LinkProb {
                    up: v,
                    down: 1.0 - v,
                    ln_up: v.ln(),
                    ln_down: (-v).ln_1p(),
                })
            }
            LinkMode::Exponent => {
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(CommError::EpsilonOutOfRange(eps));
                }
                // eps^m / (1 + eps^m) and 1 / (1 + eps^m), computed without cancellation
                let ln_eps_m = v * eps.ln();
                let ln_norm = ln_eps_m.exp().ln_1p();
                let ln_up = -ln_norm;
                let ln_down = ln_eps_m - ln_norm;
                Ok(LinkProb {
                    up: ln_up.exp(),
                    down: ln_down.exp(),
                    ln_up,
                    ln_down,
                })
            }
        }
    }

    /// Probability that link `{i, j}` delivers at `profile`.
    pub fn connectivity(&self, i: usize, j: usize, profile: usize, eps: f64) -> Result<f64, CommError> {
        self.check_player(i)?;
        self.check_player(j)?;
        Ok(self.link(i, j, profile, eps)?.up)
    }

    /// Probability that `agent` hears from exactly `realization.members()`.
    pub fn realization_probability(
        &self,
        realization: &Realization,
        profile: usize,
        eps: f64,
    ) -> Result<f64, CommError> {
        Ok(self.realization_ln_probability(realization, profile, eps)?.exp())
    }

    pub fn realization_ln_probability(
        &self,
        realization: &Realization,
        profile: usize,
        eps: f64,
    ) -> Result<f64, CommError> {
        let i = realization.agent();
        self.check_player(i)?;
        let mut ln_p = 0.0;
        for j in (0..self.n_players).filter(|&j| j != i) {
            let link = self.link(i, j, profile, eps)?;
            ln_p += if realization.contains(j) {
                link.ln_up
            } else {
                link.ln_down
            };
        }
        Ok(ln_p)
    }

    /// Every subset containing `agent`, with its probability.
    pub fn enumerate_realizations(
        &self,
        agent: usize,
        profile: usize,
        eps: f64,
    ) -> Result<Vec<(Realization, f64)>, CommError> {
        Ok(self
            .enumerate_realizations_ln(agent, profile, eps, DEFAULT_ENUMERATION_CAP)?
            .into_iter()
            .map(|(r, lp)| (r, lp.exp()))
            .collect())
    }

    /// Log-probability version of [`enumerate_realizations`](Self::enumerate_realizations)
    /// with an explicit cap. Subsets are ordered by bitmask.
    pub fn enumerate_realizations_ln(
        &self,
        agent: usize,
        profile: usize,
        eps: f64,
        cap: usize,
    ) -> Result<Vec<(Realization, f64)>, CommError> {
        self.check_player(agent)?;
        if self.n_players > cap {
            return Err(CommError::EnumerationCap {
                n: self.n_players,
                cap,
            });
        }
        let links: Vec<LinkProb> = (0..self.n_players)
            .map(|j| self.link(agent, j, profile, eps))
            .collect::<Result<_, _>>()?;
        let others: Vec<usize> = (0..self.n_players).filter(|&j| j != agent).collect();
        let mut out = Vec::with_capacity(1 << others.len());
        for bits in 0u64..(1u64 << others.len()) {
            let mut members = 1u64 << agent;
            let mut ln_p = 0.0;
            for (k, &j) in others.iter().enumerate() {
                if bits >> k & 1 == 1 {
                    members |= 1 << j;
                    ln_p += links[j].ln_up;
                } else {
                    ln_p += links[j].ln_down;
                }
            }
            out.push((Realization { agent, members }, ln_p));
        }
        out.sort_by_key(|(r, _)| r.members);
        Ok(out)
    }

    /// Draws one realization: every link of `agent` independently up with its probability.
    pub fn sample_realization<R: Rng + ?Sized>(
        &self,
        agent: usize,
        profile: usize,
        eps: f64,
        rng: &mut R,
    ) -> Result<Realization, CommError> {
        self.check_player(agent)?;
        let mut members = 1u64 << agent;
        for j in (0..self.n_players).filter(|&j| j != agent) {
            let link = self.link(agent, j, profile, eps)?;
            if link.down == 0.0 || rng.gen::<f64>() < link.up {
                members |= 1 << j;
            }
        }
        Ok(Realization { agent, members })
    }
}

/// The set of players an updating agent hears from, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Realization {
    agent: usize,
    members: u64,
}

impl Realization {
    pub fn new(agent: usize, members: impl IntoIterator<Item = usize>) -> Result<Self, CommError> {
        let members = members.into_iter().fold(0u64, |acc, j| acc | (1 << j));
        Realization::from_mask(agent, members)
    }

    pub fn from_mask(agent: usize, members: u64) -> Result<Self, CommError> {
        if members >> agent & 1 == 0 {
            return Err(CommError::AgentNotInRealization { agent });
        }
        Ok(Realization { agent, members })
    }

    /// Every subset of `0..n_players` that contains `agent`, ordered by bitmask.
    pub fn all_for(agent: usize, n_players: usize) -> impl Iterator<Item = Realization> {
        (0..=full_mask(n_players))
            .filter(move |m| m >> agent & 1 == 1)
            .map(move |members| Realization { agent, members })
    }

    pub fn full(agent: usize, n_players: usize) -> Self {
        Realization {
            agent,
            members: full_mask(n_players),
        }
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn mask(&self) -> u64 {
        self.members
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members >> j & 1 == 1
    }

    pub fn is_full(&self, n_players: usize) -> bool {
        self.members == full_mask(n_players)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |&j| self.contains(j))
    }

    /// Number of players the agent does not hear from.
    pub fn n_missing(&self, n_players: usize) -> usize {
        n_players - self.members.count_ones() as usize
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `{1,2}` style rendering with 1-based player numbers.
pub fn subset_label(mask: u64) -> String {
    let parts: Vec<String> = (0..64)
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| (j + 1).to_string())
        .collect();
    format!("{{{}}}", parts.join(","))
}

/// How a [`PartialUtilityModel`] was populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialStrategy {
    /// Tables supplied explicitly (e.g. parsed from a comm spec).
    UserSupplied,
    /// Built by evaluating a reduced-utility function that ignores absent players.
    IgnoreAbsent,
}

/// Utilities an agent evaluates when it only hears from a subset of players.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialUtilityModel {
    n_players: usize,
    full: Vec<Vec<f64>>,
    tables: HashMap<(usize, u64), Vec<f64>>,
    strategy: PartialStrategy,
}

impl PartialUtilityModel {
    /// Empty table set; only full-information lookups succeed until rows are added.
    pub fn new(game: &Game) -> Self {
        PartialUtilityModel {
            n_players: game.n_players(),
            full: game.utilities().to_vec(),
            tables: HashMap::new(),
            strategy: PartialStrategy::UserSupplied,
        }
    }

    /// Adds a complete table `values[profile]` for `agent` hearing from `mask`.
    pub fn with_table(mut self, agent: usize, mask: u64, values: Vec<f64>) -> Result<Self, CommError> {
        Realization::from_mask(agent, mask)?;
        let expected = self.full[0].len();
        if values.len() != expected {
            return Err(CommError::IncompleteTable {
                agent,
                subset: subset_label(mask),
                profile: values.len().min(expected),
            });
        }
        if mask != full_mask(self.n_players) {
            self.tables.insert((agent, mask), values);
        }
        Ok(self)
    }

    /// Builds every non-full table from `reduced(agent, mask, profile)`.
    pub fn ignore_absent<F>(game: &Game, reduced: F) -> Self
    where
        F: Fn(usize, u64, usize) -> f64,
    {
        let n = game.n_players();
        let mut model = PartialUtilityModel::new(game);
        model.strategy = PartialStrategy::IgnoreAbsent;
        for agent in 0..n {
            for mask in 0..full_mask(n) {
                if mask >> agent & 1 == 0 {
                    continue;
                }
                let values = (0..game.n_profiles())
                    .map(|a| reduced(agent, mask, a))
                    .collect();
                model.tables.insert((agent, mask), values);
            }
        }
        model
    }

    /// Partial utilities identical to the true utilities for every subset.
    pub fn unaffected(game: &Game) -> Self {
        let utilities = game.utilities().to_vec();
        PartialUtilityModel::ignore_absent(game, move |i, _, a| utilities[i][a])
    }

    /// Fills every absent `(agent, subset)` table with the true utilities.
    pub fn with_missing_as_full(mut self) -> Self {
        let n = self.n_players;
        for agent in 0..n {
            for mask in 0..full_mask(n) {
                if mask >> agent & 1 == 1 && !self.tables.contains_key(&(agent, mask)) {
                    self.tables.insert((agent, mask), self.full[agent].clone());
                }
            }
        }
        self
    }

    /// `(agent, subset)` pairs that have no table yet.
    pub fn missing_tables(&self) -> Vec<(usize, u64)> {
        let n = self.n_players;
        let mut out = Vec::new();
        for agent in 0..n {
            for mask in 0..full_mask(n) {
                if mask >> agent & 1 == 1 && !self.tables.contains_key(&(agent, mask)) {
                    out.push((agent, mask));
                }
            }
        }
        out
    }

    pub fn strategy(&self) -> PartialStrategy {
        self.strategy
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    /// `U_i(a | I_{c,i})`; the full subset returns the true utility.
    pub fn partial_utility(
        &self,
        agent: usize,
        profile: usize,
        reachable: &Realization,
    ) -> Result<f64, CommError> {
        if reachable.is_full(self.n_players) {
            return Ok(self.full[agent][profile]);
        }
        self.tables
            .get(&(agent, reachable.mask()))
            .map(|t| t[profile])
            .ok_or_else(|| CommError::MissingPartialUtility {
                agent,
                subset: subset_label(reachable.mask()),
            })
    }
}
