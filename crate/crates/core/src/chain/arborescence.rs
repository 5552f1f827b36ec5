//! Minimum-resistance in-trees (stochastic potentials).
//!
//! An in-tree rooted at `z` gives every other state exactly one outgoing
//! edge so that all paths end at `z`. Reversing every edge turns it into an
//! ordinary out-arborescence, which Chu-Liu/Edmonds finds exactly.

use super::stationary::is_in_tree;
use super::{ChainError, ResistanceGraph, GAMMA_TIE_TOLERANCE};
use crate::chain::DEFAULT_TREE_STATE_CAP;

/// Edge list `(from, to)` of an in-tree, sorted.
pub type InTree = Vec<(usize, usize)>;

#[derive(Debug, Clone, Copy)]
struct Edge {
    u: usize,
    v: usize,
    w: f64,
}

// Chu-Liu/Edmonds on an out-arborescence problem. Returns indices into
// `edges` of the chosen edges, or None if some node has no incoming edge.
// Ties go to the earliest edge in `edges`.
fn chu_liu_edmonds(n: usize, root: usize, edges: &[Edge]) -> Option<Vec<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (k, e) in edges.iter().enumerate() {
        if e.v == root || e.u == e.v {
            continue;
        }
        if best[e.v].is_none_or(|b| e.w < edges[b].w) {
            best[e.v] = Some(k);
        }
    }
    if (0..n).any(|v| v != root && best[v].is_none()) {
        return None;
    }
    let parent = |v: usize| edges[best[v].expect("checked above")].u;

    // find one cycle among the chosen edges
    let mut mark = vec![usize::MAX; n];
    let mut cycle = None;
    for start in 0..n {
        let mut v = start;
        while v != root && mark[v] == usize::MAX {
            mark[v] = start;
            v = parent(v);
        }
        if v != root && mark[v] == start {
            let mut c = vec![v];
            let mut x = parent(v);
            while x != v {
                c.push(x);
                x = parent(x);
            }
            cycle = Some(c);
            break;
        }
    }
    let Some(cycle) = cycle else {
        return Some((0..n).filter(|&v| v != root).map(|v| best[v].unwrap()).collect());
    };

    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    let mut map = vec![0usize; n];
    let mut next = 0;
    for v in 0..n {
        if !in_cycle[v] {
            map[v] = next;
            next += 1;
        }
    }
    let c = next;
    for &v in &cycle {
        map[v] = c;
    }
    let mut contracted = Vec::new();
    let mut origin = Vec::new();
    for (k, e) in edges.iter().enumerate() {
        if in_cycle[e.u] && in_cycle[e.v] {
            continue;
        }
        let w = if in_cycle[e.v] {
            e.w - edges[best[e.v].unwrap()].w
        } else {
            e.w
        };
        contracted.push(Edge {
            u: map[e.u],
            v: map[e.v],
            w,
        });
        origin.push(k);
    }
    let chosen = chu_liu_edmonds(c + 1, map[root], &contracted)?;
    let mut result: Vec<usize> = chosen.iter().map(|&k| origin[k]).collect();
    let entry = result
        .iter()
        .map(|&k| edges[k].v)
        .find(|&v| in_cycle[v])
        .expect("contracted node has an incoming edge");
    result.extend(cycle.iter().filter(|&&v| v != entry).map(|&v| best[v].unwrap()));
    Some(result)
}

/// Exact minimum-resistance in-tree rooted at `root`. `edges` are
/// `(from, to, resistance)`; absent pairs are unusable. Returns `None` when
/// some state cannot reach `root`.
pub fn min_in_arborescence(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Option<(f64, InTree)> {
    let mut sorted: Vec<(usize, usize, f64)> = edges
        .iter()
        .copied()
        .filter(|(a, b, w)| a != b && w.is_finite())
        .collect();
    sorted.sort_by_key(|e| (e.0, e.1));
    // reversed: an original edge x -> y becomes y -> x
    let reversed: Vec<Edge> = sorted.iter().map(|&(x, y, w)| Edge { u: y, v: x, w }).collect();
    let chosen = chu_liu_edmonds(n, root, &reversed)?;
    let mut tree: InTree = chosen.iter().map(|&k| (sorted[k].0, sorted[k].1)).collect();
    tree.sort_unstable();
    let cost = chosen.iter().map(|&k| sorted[k].2).sum();
    Some((cost, tree))
}

/// Minimum in-tree by trying every successor assignment. Exponential; only
/// meant as an oracle for small state counts.
pub fn min_in_arborescence_exhaustive(
    n: usize,
    root: usize,
    edges: &[(usize, usize, f64)],
) -> Option<(f64, InTree)> {
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, w) in edges {
        if a != b && w.is_finite() {
            out[a].push((b, w));
        }
    }
    for row in &mut out {
        row.sort_by_key(|&(b, _)| b);
    }
    let mut succ = vec![usize::MAX; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    search(&out, root, 0, 0.0, &mut succ, &mut best);
    best.map(|(cost, succ)| {
        let tree = (0..n).filter(|&x| x != root).map(|x| (x, succ[x])).collect();
        (cost, tree)
    })
}

fn search(
    out: &[Vec<(usize, f64)>],
    root: usize,
    node: usize,
    cost: f64,
    succ: &mut [usize],
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if node == out.len() {
        if is_in_tree(succ, root) && best.as_ref().is_none_or(|(b, _)| cost < *b) {
            *best = Some((cost, succ.to_vec()));
        }
        return;
    }
    if node == root {
        search(out, root, node + 1, cost, succ, best);
        return;
    }
    for &(y, w) in &out[node] {
        succ[node] = y;
        search(out, root, node + 1, cost + w, succ, best);
    }
    succ[node] = usize::MAX;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPotentialReport {
    /// Minimum in-tree resistance per state; infinite if some state cannot reach it.
    pub gamma: Vec<f64>,
    /// States whose potential is within [`GAMMA_TIE_TOLERANCE`] of the minimum.
    pub argmin: Vec<usize>,
    /// Witness tree per root.
    pub trees: Vec<Option<InTree>>,
    /// For roots with infinite potential, a state that cannot reach them.
    pub unreachable_witness: Vec<Option<usize>>,
}

/// Stochastic potential of every state, cross-checked by enumeration when
/// the graph has at most 8 states.
pub fn stochastic_potentials(rg: &ResistanceGraph) -> Result<StochasticPotentialReport, ChainError> {
    stochastic_potentials_with_cap(rg, DEFAULT_TREE_STATE_CAP)
}

pub fn stochastic_potentials_with_cap(
    rg: &ResistanceGraph,
    cross_check_cap: usize,
) -> Result<StochasticPotentialReport, ChainError> {
    let n = rg.n_states();
    let edges: Vec<(usize, usize, f64)> = rg.edges().collect();
    let mut gamma = Vec::with_capacity(n);
    let mut trees = Vec::with_capacity(n);
    let mut witness = Vec::with_capacity(n);
    for root in 0..n {
        match min_in_arborescence(n, root, &edges) {
            Some((cost, tree)) => {
                if n <= cross_check_cap {
                    let (brute, _) = min_in_arborescence_exhaustive(n, root, &edges)
                        .expect("exact search found a tree, so one exists");
                    if (brute - cost).abs() > GAMMA_TIE_TOLERANCE {
                        return Err(ChainError::OracleMismatch {
                            root,
                            exact: cost,
                            exhaustive: brute,
                        });
                    }
                }
                gamma.push(cost);
                trees.push(Some(tree));
                witness.push(None);
            }
            None => {
                gamma.push(f64::INFINITY);
                trees.push(None);
                witness.push(Some(cannot_reach(n, root, &edges)));
            }
        }
    }
    let best = gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin = (0..n)
        .filter(|&z| gamma[z] <= best + GAMMA_TIE_TOLERANCE)
        .collect();
    Ok(StochasticPotentialReport {
        gamma,
        argmin,
        trees,
        unreachable_witness: witness,
    })
}

fn cannot_reach(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> usize {
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(y) = stack.pop() {
        for &(a, b, w) in edges {
            if b == y && w.is_finite() && !seen[a] {
                seen[a] = true;
                stack.push(a);
            }
        }
    }
    seen.iter().position(|s| !s).unwrap_or(root)
}
