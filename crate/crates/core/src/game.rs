//! Finite games with constrained action sets.
//!
//! Action profiles are encoded as mixed-radix integers (player 0 is the most
//! significant digit). That profile index is the state id used by every other
//! module: transition matrices, resistance graphs and CSV exports all speak
//! in profile indices.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

/// Default absolute tolerance for potential-alignment checks.
pub const DEFAULT_POTENTIAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("player {player} has an empty action set")]
    EmptyActionSet { player: usize },
    #[error("utility table for player {player} has {got} entries, expected {expected}")]
    UtilityTableSize {
        player: usize,
        got: usize,
        expected: usize,
    },
    #[error("expected {expected} utility tables, got {got}")]
    UtilityTableCount { got: usize, expected: usize },
    #[error("potential table has {got} entries, expected {expected}")]
    PotentialTableSize { got: usize, expected: usize },
    #[error("constrained-move table for player {player} is malformed: {reason}")]
    MoveTable { player: usize, reason: String },
    #[error("no potential table configured")]
    MissingPotential,
    #[error("not a potential game: utility differences around cycle {cycle:?} sum to {residual}")]
    NotPotential { cycle: Vec<usize>, residual: f64 },
    #[error("profile has {got} coordinates, game has {expected} players")]
    ProfileArity { got: usize, expected: usize },
    #[error("action {action} out of range for player {player}")]
    ActionOutOfRange { player: usize, action: usize },
    #[error("unknown action label {label:?} for player {player}")]
    UnknownLabel { player: usize, label: String },
}

/// One action index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionProfile(pub Vec<usize>);

impl ActionProfile {
    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

/// A unilateral deviation that breaks potential alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentViolation {
    pub player: usize,
    /// Profile before the deviation.
    pub from: usize,
    /// Profile after the deviation.
    pub to: usize,
    pub utility_delta: f64,
    pub potential_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialReport {
    pub violations: Vec<AlignmentViolation>,
}

impl PotentialReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Outcome of a per-player structural check on the constrained-move relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveCheck {
    Ok,
    /// `to` cannot be reached from `from` (reachability) or the reverse move
    /// `to -> from` is missing (reversibility).
    Failed { from: usize, to: usize },
}

impl MoveCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, MoveCheck::Ok)
    }
}

/// A finite normal-form game with per-player constrained move sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    labels: Vec<Vec<String>>,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    utilities: Vec<Vec<f64>>,
    potential: Option<Vec<f64>>,
    moves: Vec<Vec<Vec<usize>>>,
    profile_names: Vec<Option<String>>,
}

impl Game {
    /// Builds a game with complete constrained sets (every other action is one
    /// move away). `utilities[i][profile]` is player `i`'s payoff.
    pub fn new(labels: Vec<Vec<String>>, utilities: Vec<Vec<f64>>) -> Result<Self, GameError> {
        if labels.is_empty() {
            return Err(GameError::NoPlayers);
        }
        let sizes: Vec<usize> = labels.iter().map(Vec::len).collect();
        if let Some(player) = sizes.iter().position(|&s| s == 0) {
            return Err(GameError::EmptyActionSet { player });
        }
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let n_profiles: usize = sizes.iter().product();
        if utilities.len() != sizes.len() {
            return Err(GameError::UtilityTableCount {
                got: utilities.len(),
                expected: sizes.len(),
            });
        }
        for (player, table) in utilities.iter().enumerate() {
            if table.len() != n_profiles {
                return Err(GameError::UtilityTableSize {
                    player,
                    got: table.len(),
                    expected: n_profiles,
                });
            }
        }
        let moves = sizes
            .iter()
            .map(|&k| (0..k).map(|a| (0..k).filter(|&b| b != a).collect()).collect())
            .collect();
        Ok(Game {
            labels,
            sizes,
            strides,
            utilities,
            potential: None,
            moves,
            profile_names: vec![None; n_profiles],
        })
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Result<Self, GameError> {
        if potential.len() != self.n_profiles() {
            return Err(GameError::PotentialTableSize {
                got: potential.len(),
                expected: self.n_profiles(),
            });
        }
        self.potential = Some(potential);
        Ok(self)
    }

    /// Replaces the constrained-move adjacency of one player. `moves[a]` lists
    /// the actions reachable from `a` in one step. Self-loops are permitted but
    /// never required: staying put is always possible through the BLLL rule.
    pub fn with_moves(mut self, player: usize, moves: Vec<Vec<usize>>) -> Result<Self, GameError> {
        let k = *self
            .sizes
            .get(player)
            .ok_or(GameError::MoveTable {
                player,
                reason: "no such player".into(),
            })?;
        if moves.len() != k {
            return Err(GameError::MoveTable {
                player,
                reason: format!("{} rows for {} actions", moves.len(), k),
            });
        }
        let mut cleaned = Vec::with_capacity(k);
        for row in moves {
            let mut row = row;
            row.sort_unstable();
            row.dedup();
            if let Some(&bad) = row.iter().find(|&&b| b >= k) {
                return Err(GameError::ActionOutOfRange { player, action: bad });
            }
            cleaned.push(row);
        }
        self.moves[player] = cleaned;
        Ok(self)
    }

    /// Attaches a display name (e.g. `a4`) to a profile.
    pub fn with_profile_name(mut self, profile: usize, name: impl Into<String>) -> Self {
        self.profile_names[profile] = Some(name.into());
        self
    }

    pub fn n_players(&self) -> usize {
        self.sizes.len()
    }

    pub fn n_actions(&self, player: usize) -> usize {
        self.sizes[player]
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_profiles(&self) -> usize {
        self.utilities[0].len()
    }

    pub fn action_label(&self, player: usize, action: usize) -> &str {
        &self.labels[player][action]
    }

    pub fn action_labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn action_index(&self, player: usize, label: &str) -> Result<usize, GameError> {
        self.labels[player]
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| GameError::UnknownLabel {
                player,
                label: label.to_string(),
            })
    }

    pub fn utility(&self, player: usize, profile: usize) -> f64 {
        self.utilities[player][profile]
    }

    pub fn utilities(&self) -> &[Vec<f64>] {
        &self.utilities
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.potential.as_deref()
    }

    /// Actions reachable from `action` in one constrained step.
    pub fn moves(&self, player: usize, action: usize) -> &[usize] {
        &self.moves[player][action]
    }

    /// Candidate set used by the learning dynamics: the stored moves plus the
    /// current action itself, sorted. Drawing the current action means no move.
    pub fn candidates(&self, player: usize, action: usize) -> Vec<usize> {
        let mut c = self.moves[player][action].clone();
        if let Err(pos) = c.binary_search(&action) {
            c.insert(pos, action);
        }
        c
    }

    /// `|candidates(player, action)|`.
    pub fn n_candidates(&self, player: usize, action: usize) -> usize {
        let m = &self.moves[player][action];
        m.len() + usize::from(m.binary_search(&action).is_err())
    }

    pub fn action_of(&self, profile: usize, player: usize) -> usize {
        (profile / self.strides[player]) % self.sizes[player]
    }

    /// Profile obtained when `player` switches to `action`, everyone else fixed.
    pub fn deviate(&self, profile: usize, player: usize, action: usize) -> usize {
        let current = self.action_of(profile, player);
        profile - current * self.strides[player] + action * self.strides[player]
    }

    pub fn index_of(&self, profile: &ActionProfile) -> Result<usize, GameError> {
        if profile.0.len() != self.n_players() {
            return Err(GameError::ProfileArity {
                got: profile.0.len(),
                expected: self.n_players(),
            });
        }
        let mut idx = 0;
        for (player, &a) in profile.0.iter().enumerate() {
            if a >= self.sizes[player] {
                return Err(GameError::ActionOutOfRange { player, action: a });
            }
            idx += a * self.strides[player];
        }
        Ok(idx)
    }

    pub fn profile(&self, index: usize) -> ActionProfile {
        ActionProfile((0..self.n_players()).map(|i| self.action_of(index, i)).collect())
    }

    /// Parses a comma-separated label list such as `B,L`.
    pub fn parse_profile(&self, text: &str) -> Result<usize, GameError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != self.n_players() {
            return Err(GameError::ProfileArity {
                got: parts.len(),
                expected: self.n_players(),
            });
        }
        let actions = parts
            .iter()
            .enumerate()
            .map(|(i, l)| self.action_index(i, l))
            .collect::<Result<Vec<_>, _>>()?;
        self.index_of(&ActionProfile(actions))
    }

    /// Comma-joined action labels, e.g. `B,L`.
    pub fn profile_labels(&self, index: usize) -> String {
        (0..self.n_players())
            .map(|i| self.labels[i][self.action_of(index, i)].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Display name if one was attached, else the label tuple.
    pub fn state_label(&self, index: usize) -> String {
        self.profile_names[index]
            .clone()
            .unwrap_or_else(|| self.profile_labels(index))
    }

    pub fn profile_name(&self, index: usize) -> Option<&str> {
        self.profile_names[index].as_deref()
    }

    /// If `a1` differs from `a0` in exactly one coordinate, returns that player.
    pub fn deviating_player(&self, a0: usize, a1: usize) -> Option<usize> {
        let mut who = None;
        for i in 0..self.n_players() {
            if self.action_of(a0, i) != self.action_of(a1, i) {
                if who.is_some() {
                    return None;
                }
                who = Some(i);
            }
        }
        who
    }

    /// True when `a0 -> a1` is a single-agent move permitted by the constrained sets.
    pub fn is_feasible_transition(&self, a0: usize, a1: usize) -> bool {
        match self.deviating_player(a0, a1) {
            Some(i) => self.moves[i][self.action_of(a0, i)].contains(&self.action_of(a1, i)),
            None => false,
        }
    }

    /// All feasible unilateral transitions `(from, to, player)` in lexicographic order.
    pub fn feasible_transitions(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for a0 in 0..self.n_profiles() {
            for i in 0..self.n_players() {
                let cur = self.action_of(a0, i);
                for &b in &self.moves[i][cur] {
                    if b != cur {
                        out.push((a0, self.deviate(a0, i, b), i));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks the exact-potential identity on every unilateral deviation.
    pub fn validate_potential(&self, tolerance: f64) -> Result<PotentialReport, GameError> {
        let phi = self.potential.as_ref().ok_or(GameError::MissingPotential)?;
        let mut violations = Vec::new();
        for from in 0..self.n_profiles() {
            for player in 0..self.n_players() {
                let cur = self.action_of(from, player);
                for b in 0..self.sizes[player] {
                    if b == cur {
                        continue;
                    }
                    let to = self.deviate(from, player, b);
                    let du = self.utilities[player][to] - self.utilities[player][from];
                    let dphi = phi[to] - phi[from];
                    if (du - dphi).abs() > tolerance {
                        violations.push(AlignmentViolation {
                            player,
                            from,
                            to,
                            utility_delta: du,
                            potential_delta: dphi,
                        });
                    }
                }
            }
        }
        Ok(PotentialReport { violations })
    }

    /// Reconstructs a potential with value 0 at profile 0 by integrating
    /// utility differences along a BFS tree of unilateral deviations.
    ///
    /// Fails with a witness cycle when some deviation edge is inconsistent
    /// with the tree.
    pub fn recover_potential(&self, tolerance: f64) -> Result<Vec<f64>, GameError> {
        let n = self.n_profiles();
        let mut phi = vec![f64::NAN; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        phi[0] = 0.0;
        queue.push_back(0);
        while let Some(a) = queue.pop_front() {
            for player in 0..self.n_players() {
                for b in 0..self.sizes[player] {
                    let to = self.deviate(a, player, b);
                    if to == a || !phi[to].is_nan() {
                        continue;
                    }
                    phi[to] = phi[a] + self.utilities[player][to] - self.utilities[player][a];
                    parent[to] = a;
                    queue.push_back(to);
                }
            }
        }
        for a in 0..n {
            for player in 0..self.n_players() {
                for b in 0..self.sizes[player] {
                    let to = self.deviate(a, player, b);
                    if to <= a {
                        continue;
                    }
                    let du = self.utilities[player][to] - self.utilities[player][a];
                    let residual = phi[a] + du - phi[to];
                    if residual.abs() > tolerance {
                        let cycle = self.witness_cycle(&parent, a, to);
                        let residual = self.cycle_residual(&cycle);
                        return Err(GameError::NotPotential { cycle, residual });
                    }
                }
            }
        }
        Ok(phi)
    }

    // Tree path root->a, edge a->b, tree path b->root, trimmed at the lowest
    // common ancestor. Returned as a closed walk starting and ending at the LCA.
    fn witness_cycle(&self, parent: &[usize], a: usize, b: usize) -> Vec<usize> {
        let path_to_root = |mut x: usize| {
            let mut p = vec![x];
            while parent[x] != usize::MAX {
                x = parent[x];
                p.push(x);
            }
            p.reverse();
            p
        };
        let pa = path_to_root(a);
        let pb = path_to_root(b);
        let common = pa.iter().zip(&pb).take_while(|(x, y)| x == y).count();
        let lca = pa[common - 1];
        let mut cycle = vec![lca];
        cycle.extend_from_slice(&pa[common..]);
        cycle.extend(pb[common..].iter().rev());
        cycle.push(lca);
        cycle
    }

    /// Sum of deviator utility differences around a closed walk of unilateral moves.
    pub fn cycle_residual(&self, cycle: &[usize]) -> f64 {
        cycle
            .windows(2)
            .map(|w| {
                let i = self
                    .deviating_player(w[0], w[1])
                    .expect("cycle steps are unilateral deviations");
                self.utilities[i][w[1]] - self.utilities[i][w[0]]
            })
            .sum()
    }

    /// Stored potential, or a recovered one if none was supplied.
    pub fn potential_or_recovered(&self, tolerance: f64) -> Result<Vec<f64>, GameError> {
        match &self.potential {
            Some(p) => Ok(p.clone()),
            None => self.recover_potential(tolerance),
        }
    }

    /// Pure Nash equilibria: no player has a strictly improving deviation
    /// anywhere in its full action set.
    pub fn nash_equilibria(&self) -> Vec<usize> {
        (0..self.n_profiles())
            .filter(|&a| {
                (0..self.n_players()).all(|i| {
                    let u = self.utilities[i][a];
                    (0..self.sizes[i]).all(|b| self.utilities[i][self.deviate(a, i, b)] <= u)
                })
            })
            .collect()
    }

    /// Argmax set of the potential; entries within `tolerance` of the maximum are ties.
    pub fn potential_maximizers(&self, tolerance: f64) -> Result<Vec<usize>, GameError> {
        let phi = self.potential_or_recovered(DEFAULT_POTENTIAL_TOLERANCE.max(tolerance))?;
        Ok(argmax_set(&phi, tolerance))
    }

    /// Strong connectivity of each player's constrained-move digraph.
    pub fn check_reachability(&self) -> Vec<MoveCheck> {
        (0..self.n_players())
            .map(|i| {
                let k = self.sizes[i];
                for from in 0..k {
                    let seen = self.reachable_actions(i, from);
                    if let Some(to) = seen.iter().position(|s| !s) {
                        return MoveCheck::Failed { from, to };
                    }
                }
                MoveCheck::Ok
            })
            .collect()
    }

    fn reachable_actions(&self, player: usize, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.sizes[player]];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(a) = stack.pop() {
            for &b in &self.moves[player][a] {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen
    }

    /// Symmetry of each player's constrained-move relation.
    pub fn check_reversibility(&self) -> Vec<MoveCheck> {
        (0..self.n_players())
            .map(|i| {
                for (from, row) in self.moves[i].iter().enumerate() {
                    for &to in row {
                        if !self.moves[i][to].contains(&from) {
                            return MoveCheck::Failed { from, to };
                        }
                    }
                }
                MoveCheck::Ok
            })
            .collect()
    }

    pub fn constrained_sets_valid(&self) -> bool {
        self.check_reachability().iter().all(MoveCheck::is_ok)
            && self.check_reversibility().iter().all(MoveCheck::is_ok)
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-player game, {} profiles",
            self.n_players(),
            self.n_profiles()
        )
    }
}

/// Indices whose value lies within `tolerance` of the maximum.
pub fn argmax_set(values: &[f64], tolerance: f64) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - tolerance)
        .map(|(i, _)| i)
        .collect()
}
