//! Line-oriented text formats for games and link models.
//!
//! Both formats share the same lexical rules: one directive per line,
//! whitespace-separated fields, `#` starts a comment. Players are numbered
//! from 1; profiles are comma-separated action labels without spaces
//! (`B,L`). See the README for the full grammar.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use crate::comm::{subset_label, ConnectivityModel, LinkMode, PartialUtilityModel};
use crate::game::Game;

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SpecError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError {
        line,
        message: message.into(),
    })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((k + 1, fields))
    })
}

fn number(line: usize, field: &str) -> Result<f64, SpecError> {
    match field.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => err(line, format!("expected a number, found {field:?}")),
    }
}

fn player(line: usize, field: &str, n: usize) -> Result<usize, SpecError> {
    match field.parse::<usize>() {
        Ok(p) if p >= 1 && p <= n => Ok(p - 1),
        _ => err(line, format!("expected a player number in 1..={n}, found {field:?}")),
    }
}

fn arity(line: usize, fields: &[&str], expected: usize) -> Result<(), SpecError> {
    if fields.len() != expected {
        return err(
            line,
            format!(
                "`{}` takes {} fields, found {}",
                fields[0],
                expected - 1,
                fields.len() - 1
            ),
        );
    }
    Ok(())
}

/// Parses a game spec.
///
/// ```text
/// players 2
/// actions 1 T B
/// actions 2 L R
/// name a4 B,L                # optional display name
/// utility 1 T,L 1            # one row per (player, profile)
/// potential T,L 2            # optional; all profiles if present
/// move 1 T B                 # optional; listed players use exactly these moves
/// ```
pub fn parse_game(text: &str) -> Result<Game, SpecError> {
    let mut n_players: Option<(usize, usize)> = None;
    let mut labels: Vec<Option<Vec<String>>> = Vec::new();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (line, fields) in lines(text) {
        match fields[0] {
            "players" => {
                arity(line, &fields, 2)?;
                if n_players.is_some() {
                    return err(line, "duplicate `players` directive");
                }
                let n = match fields[1].parse::<usize>() {
                    Ok(n) if n >= 1 => n,
                    _ => return err(line, "player count must be a positive integer"),
                };
                n_players = Some((n, line));
                labels = vec![None; n];
            }
            "actions" => {
                let Some((n, _)) = n_players else {
                    return err(line, "`actions` before `players`");
                };
                if fields.len() < 3 {
                    return err(line, "`actions` needs a player and at least one label");
                }
                let p = player(line, fields[1], n)?;
                if labels[p].is_some() {
                    return err(line, format!("actions for player {} declared twice", p + 1));
                }
                let set: Vec<String> = fields[2..].iter().map(|s| s.to_string()).collect();
                let mut sorted = set.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != set.len() {
                    return err(line, "duplicate action label");
                }
                labels[p] = Some(set);
            }
            "utility" | "potential" | "move" | "name" => rows.push((line, fields)),
            other => return err(line, format!("unknown directive `{other}`")),
        }
    }
    let Some((n, players_line)) = n_players else {
        return err(1, "missing `players` directive");
    };
    let labels: Vec<Vec<String>> = labels
        .into_iter()
        .enumerate()
        .map(|(p, l)| {
            l.ok_or(SpecError {
                line: players_line,
                message: format!("no `actions` line for player {}", p + 1),
            })
        })
        .collect::<Result<_, _>>()?;

    // a zero table is enough to resolve profile labels
    let skeleton = Game::new(labels.clone(), vec![vec![0.0; labels.iter().map(Vec::len).product()]; n])
        .map_err(|e| SpecError {
            line: players_line,
            message: e.to_string(),
        })?;
    let profile = |line: usize, field: &str| {
        skeleton.parse_profile(field).map_err(|e| SpecError {
            line,
            message: format!("bad profile {field:?}: {e}"),
        })
    };
    let n_profiles = skeleton.n_profiles();

    let mut utilities: Vec<Vec<Option<f64>>> = vec![vec![None; n_profiles]; n];
    let mut first_utility_line: Vec<Option<usize>> = vec![None; n];
    let mut potential: Vec<Option<f64>> = vec![None; n_profiles];
    let mut potential_line: Option<usize> = None;
    let mut moves: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    let mut names: Vec<(usize, String)> = Vec::new();
    let mut seen_names: HashMap<String, usize> = HashMap::new();

    for (line, fields) in &rows {
        let line = *line;
        match fields[0] {
            "utility" => {
                arity(line, fields, 4)?;
                let p = player(line, fields[1], n)?;
                let a = profile(line, fields[2])?;
                let v = number(line, fields[3])?;
                if utilities[p][a].replace(v).is_some() {
                    return err(line, format!("duplicate utility for player {} at {}", p + 1, fields[2]));
                }
                first_utility_line[p].get_or_insert(line);
            }
            "potential" => {
                arity(line, fields, 3)?;
                let a = profile(line, fields[1])?;
                let v = number(line, fields[2])?;
                if potential[a].replace(v).is_some() {
                    return err(line, format!("duplicate potential at {}", fields[1]));
                }
                potential_line.get_or_insert(line);
            }
            "move" => {
                arity(line, fields, 4)?;
                let p = player(line, fields[1], n)?;
                let idx = |label: &str| {
                    skeleton.action_index(p, label).map_err(|e| SpecError {
                        line,
                        message: e.to_string(),
                    })
                };
                let (from, to) = (idx(fields[2])?, idx(fields[3])?);
                moves.entry(p).or_insert_with(|| vec![Vec::new(); labels[p].len()])[from].push(to);
            }
            "name" => {
                arity(line, fields, 3)?;
                let a = profile(line, fields[2])?;
                if seen_names.insert(fields[1].to_string(), a).is_some() {
                    return err(line, format!("duplicate profile name {}", fields[1]));
                }
                names.push((a, fields[1].to_string()));
            }
            _ => unreachable!("filtered above"),
        }
    }

    let mut tables = Vec::with_capacity(n);
    for (p, table) in utilities.into_iter().enumerate() {
        let line = first_utility_line[p].unwrap_or(players_line);
        let complete = table
            .iter()
            .enumerate()
            .map(|(a, v)| {
                v.ok_or_else(|| SpecError {
                    line,
                    message: format!(
                        "utility table for player {} is missing profile {}",
                        p + 1,
                        skeleton.profile_labels(a)
                    ),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        tables.push(complete);
    }
    let to_spec = |e: crate::game::GameError| SpecError {
        line: players_line,
        message: e.to_string(),
    };
    let mut game = Game::new(labels, tables).map_err(to_spec)?;
    if let Some(line) = potential_line {
        let phi = potential
            .iter()
            .enumerate()
            .map(|(a, v)| {
                v.ok_or_else(|| SpecError {
                    line,
                    message: format!("potential table is missing profile {}", skeleton.profile_labels(a)),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        game = game.with_potential(phi).map_err(to_spec)?;
    }
    for (p, m) in moves {
        game = game.with_moves(p, m).map_err(to_spec)?;
    }
    for (a, name) in names {
        game = game.with_profile_name(a, name);
    }
    Ok(game)
}

/// Links plus partial utilities parsed from a comm spec.
#[derive(Debug, Clone)]
pub struct CommSpec {
    pub links: ConnectivityModel,
    pub partial: PartialUtilityModel,
}

fn parse_subset(line: usize, field: &str, n: usize) -> Result<u64, SpecError> {
    let inner = field
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or(SpecError {
            line,
            message: format!("subset must look like {{1,2}}, found {field:?}"),
        })?;
    let mut mask = 0u64;
    for part in inner.split(',').filter(|s| !s.is_empty()) {
        mask |= 1 << player(line, part, n)?;
    }
    Ok(mask)
}

type PartialRows = BTreeMap<(usize, u64), (usize, Vec<Option<f64>>)>;

/// Parses a comm spec against an already-parsed game.
///
/// ```text
/// mode exponent              # or: mode probability
/// uniform 3                  # default value on every link
/// link 1 2 0.5               # per-link value
/// link 1 2 0.7 @ B,L         # per-link value at one profile
/// partial 1 {1} T,L 3        # U_1(T,L | hears only from {1}) = 3
/// fallback full              # absent tables copy the true utilities
/// ```
pub fn parse_comm(text: &str, game: &Game) -> Result<CommSpec, SpecError> {
    let n = game.n_players();
    let mut mode: Option<LinkMode> = None;
    let mut uniform: Option<(f64, usize)> = None;
    let mut link_rows = Vec::new();
    // (agent, mask) -> (first line, values by profile)
    let mut partial_rows: PartialRows = BTreeMap::new();
    let mut fallback = false;
    let mut last_line = 1;
    for (line, fields) in lines(text) {
        last_line = line;
        match fields[0] {
            "mode" => {
                arity(line, &fields, 2)?;
                if mode.is_some() {
                    return err(line, "duplicate `mode`");
                }
                mode = Some(match fields[1] {
                    "exponent" => LinkMode::Exponent,
                    "probability" => LinkMode::Probability,
                    other => return err(line, format!("unknown mode {other:?}")),
                });
            }
            "uniform" => {
                arity(line, &fields, 2)?;
                if uniform.is_some() {
                    return err(line, "duplicate `uniform`");
                }
                uniform = Some((number(line, fields[1])?, line));
            }
            "link" => {
                if fields.len() != 4 && !(fields.len() == 6 && fields[4] == "@") {
                    return err(line, "expected `link <i> <j> <value> [@ <profile>]`");
                }
                let i = player(line, fields[1], n)?;
                let j = player(line, fields[2], n)?;
                if i == j {
                    return err(line, "self-links always deliver and cannot be configured");
                }
                let v = number(line, fields[3])?;
                let at = if fields.len() == 6 {
                    Some(game.parse_profile(fields[5]).map_err(|e| SpecError {
                        line,
                        message: format!("bad profile {:?}: {e}", fields[5]),
                    })?)
                } else {
                    None
                };
                link_rows.push((line, i, j, v, at));
            }
            "partial" => {
                arity(line, &fields, 5)?;
                let agent = player(line, fields[1], n)?;
                let mask = parse_subset(line, fields[2], n)?;
                if mask >> agent & 1 == 0 {
                    return err(line, format!("subset {} must contain agent {}", fields[2], agent + 1));
                }
                let a = game.parse_profile(fields[3]).map_err(|e| SpecError {
                    line,
                    message: format!("bad profile {:?}: {e}", fields[3]),
                })?;
                let v = number(line, fields[4])?;
                let entry = partial_rows
                    .entry((agent, mask))
                    .or_insert_with(|| (line, vec![None; game.n_profiles()]));
                if entry.1[a].replace(v).is_some() {
                    return err(line, "duplicate partial utility row");
                }
            }
            "fallback" => {
                arity(line, &fields, 2)?;
                if fields[1] != "full" {
                    return err(line, "only `fallback full` is supported");
                }
                fallback = true;
            }
            other => return err(line, format!("unknown directive `{other}`")),
        }
    }
    let Some(mode) = mode else {
        return err(1, "missing `mode` directive");
    };
    let (default, default_line) = match (uniform, mode) {
        (Some(u), _) => u,
        (None, LinkMode::Probability) => (1.0, 1),
        (None, LinkMode::Exponent) => return err(1, "exponent mode needs a `uniform` default exponent"),
    };
    let spec_err = |line: usize| move |e: crate::comm::CommError| SpecError {
        line,
        message: e.to_string(),
    };
    let mut links = match mode {
        LinkMode::Exponent => ConnectivityModel::uniform_exponent(n, default),
        LinkMode::Probability => ConnectivityModel::uniform_probability(n, default),
    }
    .map_err(spec_err(default_line))?;
    for (line, i, j, v, at) in link_rows {
        links = match at {
            None => links.with_link(i, j, v),
            Some(a) => links.with_override(i, j, a, v),
        }
        .map_err(spec_err(line))?;
    }

    let mut partial = PartialUtilityModel::new(game);
    for ((agent, mask), (line, values)) in partial_rows {
        let values = values
            .iter()
            .enumerate()
            .map(|(a, v)| {
                v.ok_or_else(|| SpecError {
                    line,
                    message: format!(
                        "partial utility table for agent {} hearing from {} is missing profile {}",
                        agent + 1,
                        subset_label(mask),
                        game.profile_labels(a)
                    ),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        partial = partial.with_table(agent, mask, values).map_err(spec_err(line))?;
    }
    if fallback {
        partial = partial.with_missing_as_full();
    } else if let Some(&(agent, mask)) = partial.missing_tables().first() {
        return err(
            last_line,
            format!(
                "no partial utilities for agent {} hearing from {} (add rows or `fallback full`)",
                agent + 1,
                subset_label(mask)
            ),
        );
    }
    Ok(CommSpec { links, partial })
}

/// Reads and parses a game spec file; errors carry the path.
pub fn load_game(path: &Path) -> anyhow::Result<Game> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    parse_game(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn load_comm(path: &Path, game: &Game) -> anyhow::Result<CommSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    parse_comm(&text, game).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
