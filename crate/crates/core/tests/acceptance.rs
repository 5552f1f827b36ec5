//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use blll::chain::{
    lemma1_check, minimal_uniform_exponent, perfect_ln_transition, remark1_bound,
    resistance_limit_check, resistance_perfect, resistance_stochastic, stationary_linear,
    stationary_tree_theorem, stochastic_ln_transition, stochastic_potentials,
    transition_matrix_perfect, transition_matrix_stochastic, ResistanceGraph,
};
use blll::comm::ConnectivityModel;
use blll::dynamics::{self, epsilon_from_tau, total_variation, DynamicsConfig, Variant};
use blll::experiments::sweep::{run_curve, run_sweep, SweepConfig};
use blll::fixtures::toy::{self, A1, A2, A3, A4};
use blll::game::Game;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn names(game: &Game, set: &[usize]) -> String {
    let v: Vec<String> = set.iter().map(|&z| game.state_label(z)).collect();
    format!("{{{}}}", v.join(","))
}

/// Hand-derived resistances of the toy game's eight feasible moves with
/// uniform exponent `m`; `None` gives the perfect-link values.
fn toy_resistances(m: Option<f64>) -> Vec<(usize, usize, f64)> {
    let cap = |r: f64| m.map_or(r, |m| r.min(m));
    vec![
        (A1, A3, 0.0),
        (A3, A1, 2.0),
        (A2, A4, 0.0),
        (A4, A2, cap(2.0)),
        (A2, A3, 0.0),
        (A3, A2, 1.0),
        (A4, A1, cap(3.0)),
        (A1, A4, 0.0),
    ]
}

/// Brute-force stochastic potential on the four toy states: every choice of
/// one outgoing edge per non-root state that reaches the root.
fn brute_gamma(edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let n = 4;
    let out: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|a| edges.iter().filter(|e| e.0 == a).map(|e| (e.1, e.2)).collect())
        .collect();
    (0..n)
        .map(|root| {
            let others: Vec<usize> = (0..n).filter(|&s| s != root).collect();
            let mut best = f64::INFINITY;
            let mut idx = vec![0; others.len()];
            'outer: loop {
                let parent = |s: usize| {
                    let k = others.iter().position(|&o| o == s).unwrap();
                    out[s][idx[k]].0
                };
                let ok = others.iter().all(|&s| {
                    let mut cur = s;
                    for _ in 0..n {
                        if cur == root {
                            return true;
                        }
                        cur = parent(cur);
                    }
                    cur == root
                });
                if ok {
                    let cost: f64 = others
                        .iter()
                        .enumerate()
                        .map(|(k, &s)| out[s][idx[k]].1)
                        .sum();
                    best = best.min(cost);
                }
                for k in 0..others.len() {
                    idx[k] += 1;
                    if idx[k] < out[others[k]].len() {
                        continue 'outer;
                    }
                    idx[k] = 0;
                }
                break;
            }
            best
        })
        .collect()
}

fn argmin(gamma: &[f64]) -> Vec<usize> {
    let min = gamma.iter().copied().fold(f64::INFINITY, f64::min);
    (0..gamma.len()).filter(|&z| gamma[z] - min <= 1e-9).collect()
}

fn criterion_1() -> Outcome {
    let g = toy::game();
    let report = g.validate_potential(0.0).map_err(|e| e.to_string())?;
    ensure!(report.is_ok(), "potential misaligned: {:?}", report.violations);
    let nash = sorted(g.nash_equilibria());
    ensure!(nash == sorted(vec![A3, A4]), "nash set {}", names(&g, &nash));
    let max = g.potential_maximizers(0.0).map_err(|e| e.to_string())?;
    ensure!(max == vec![A4], "maximizers {}", names(&g, &max));
    Ok(format!("nash {} maximizers {}", names(&g, &nash), names(&g, &max)))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g = toy::game();
    let rg = ResistanceGraph::perfect(&g).map_err(|e| e.to_string())?;
    let rep = stochastic_potentials(&rg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let oracle = brute_gamma(&toy_resistances(None));
    ensure!(rep.gamma == oracle, "gamma {:?} vs hand oracle {:?}", rep.gamma, oracle);
    ensure!(rep.argmin == vec![A4], "argmin {}", names(&g, &rep.argmin));
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("argmin {} in {elapsed:.2?}", names(&g, &rep.argmin)))
}

fn criterion_3() -> Outcome {
    let g = toy::game();
    let pum = toy::partial_utilities(&g);
    let mut summary = Vec::new();
    for &m in &[0.25, 0.5, 0.9, 1.0, 1.1, 2.0, 3.0] {
        let links = toy::exponent_links(m).map_err(|e| e.to_string())?;
        let rg = ResistanceGraph::stochastic(&g, &links, &pum).map_err(|e| e.to_string())?;
        let rep = stochastic_potentials(&rg).map_err(|e| e.to_string())?;
        let oracle = brute_gamma(&toy_resistances(Some(m)));
        ensure!(rep.gamma == oracle, "m={m}: gamma {:?} vs oracle {:?}", rep.gamma, oracle);
        let expected = if m > 1.0 {
            vec![A4]
        } else if m == 1.0 {
            sorted(vec![A3, A4])
        } else {
            vec![A3]
        };
        let got = sorted(rep.argmin.clone());
        ensure!(got == expected, "m={m}: argmin {}", names(&g, &got));
        ensure!(argmin(&oracle) == expected, "m={m}: oracle disagrees with expectation");
        summary.push(format!("m={m}:{}", names(&g, &got)));
    }
    Ok(summary.join(" "))
}

fn criterion_4() -> Outcome {
    let g = toy::game();
    let pum = toy::partial_utilities(&g);
    let m = minimal_uniform_exponent(&g, &pum).map_err(|e| e.to_string())?;
    ensure!(m == 3.0, "minimal uniform m = {m}");
    let at = lemma1_check(&g, &toy::exponent_links(3.0).unwrap(), &pum).map_err(|e| e.to_string())?;
    ensure!(at.minimal_uniform_m == 3.0, "report minimal m = {}", at.minimal_uniform_m);
    ensure!(at.satisfied(), "m = 3 should satisfy the condition");
    let below = lemma1_check(&g, &toy::exponent_links(2.99).unwrap(), &pum).map_err(|e| e.to_string())?;
    ensure!(!below.satisfied(), "m = 2.99 should violate the condition");
    Ok(format!("minimal uniform m = {m}"))
}

fn criterion_5() -> Outcome {
    let g = toy::game();
    let pum = toy::partial_utilities(&g);
    let cfg = SweepConfig::from_toml(toy::SWEEP_CONFIG).map_err(|e| e.to_string())?;
    let taus = cfg.taus();
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let at_min = |grid: &blll::experiments::sweep::SweepGrid| {
        grid.rows.iter().find(|r| r.tau == tau_min).map(|r| r.mu[A4]).unwrap()
    };
    let strong = run_curve(&g, &pum, 3.0, &taus).map_err(|e| e.to_string())?;
    let mu3 = at_min(&strong);
    ensure!(mu3 >= 0.99, "m=3: mu(a4) = {mu3} at tau = {tau_min}");
    let weak = run_curve(&g, &pum, 0.5, &taus).map_err(|e| e.to_string())?;
    let mu05 = at_min(&weak);
    ensure!(mu05 <= 0.5, "m=0.5: mu(a4) = {mu05} at tau = {tau_min}");
    let mut decade: Vec<(f64, f64)> = weak
        .rows
        .iter()
        .filter(|r| r.tau <= 10.0 * tau_min * (1.0 + 1e-12))
        .map(|r| (r.tau, r.mu[A4]))
        .collect();
    decade.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure!(decade.len() >= 2, "decade has {} grid points", decade.len());
    for w in decade.windows(2) {
        ensure!(w[0].1 < w[1].1, "m=0.5: mu(a4) not decreasing as tau falls at tau = {}", w[0].0);
    }
    let start = Instant::now();
    let grid = run_sweep(&g, &pum, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(grid.rows.len() == 1600, "grid has {} points", grid.rows.len());
    for r in &grid.rows {
        let s: f64 = r.mu.iter().sum();
        ensure!((s - 1.0).abs() < 1e-10, "row at tau={} p_c={} sums to {s}", r.tau, r.p_c);
    }
    ensure!(elapsed < Duration::from_secs(10), "40x40 grid took {elapsed:?}");
    Ok(format!(
        "mu(a4) at tau={tau_min}: m=3 {mu3:.6}, m=0.5 {mu05:.3e}; {} decade points monotone; 40x40 grid in {elapsed:.2?}",
        decade.len()
    ))
}

fn criterion_6() -> Outcome {
    let g = toy::game();
    let pum = toy::partial_utilities(&g);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &tau in &[0.2, 0.5, 1.0] {
        for &m in &[0.5, 1.0, 3.0] {
            let links = toy::exponent_links(m).unwrap();
            let chain = transition_matrix_stochastic(&g, &links, &pum, epsilon_from_tau(tau))
                .map_err(|e| e.to_string())?;
            let a = stationary_linear(&chain).map_err(|e| e.to_string())?;
            let b = stationary_tree_theorem(&chain).map_err(|e| e.to_string())?;
            let d = a.mu.iter().zip(&b.mu).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            ensure!(d <= 1e-9, "tau={tau} m={m}: routes differ by {d:e}");
            worst = worst.max(d);
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("max entrywise difference {worst:.1e} over 9 points in {elapsed:.2?}"))
}

fn criterion_7() -> Outcome {
    let g = toy::game();
    let pum = toy::partial_utilities(&g);
    let mut checked = 0;
    for (a0, a1, hand) in toy_resistances(None) {
        let r = resistance_perfect(&g, a0, a1).map_err(|e| e.to_string())?;
        ensure!(r == hand, "perfect R({a0}->{a1}) = {r}, hand value {hand}");
        let c = resistance_limit_check(|eps| perfect_ln_transition(&g, a0, a1, eps), r)
            .map_err(|e| e.to_string())?;
        ensure!(c.passed, "perfect {a0}->{a1} R={r}: samples {:?}", c.samples);
        checked += 1;
    }
    for &m in &[0.5, 1.0, 3.0] {
        let links = toy::exponent_links(m).unwrap();
        for (a0, a1, hand) in toy_resistances(Some(m)) {
            let r = resistance_stochastic(&g, &links, &pum, a0, a1).map_err(|e| e.to_string())?;
            ensure!(r == hand, "m={m} R_c({a0}->{a1}) = {r}, hand value {hand}");
            let c = resistance_limit_check(
                |eps| stochastic_ln_transition(&g, &links, &pum, a0, a1, eps),
                r,
            )
            .map_err(|e| e.to_string())?;
            ensure!(c.passed, "m={m} {a0}->{a1} R={r}: samples {:?}", c.samples);
            checked += 1;
        }
    }
    Ok(format!("{checked} edge limits settled (8 perfect, 24 lossy at m = 0.5, 1, 3)"))
}

fn criterion_8() -> Outcome {
    let g = toy::game();
    let spec = blll::experiments::spec_file::parse_comm(toy::COMM_SPEC_M1, &g).map_err(|e| e.to_string())?;
    let tau = 0.5;
    let start = Instant::now();
    let mut tvs = Vec::new();
    for variant in [Variant::Perfect, Variant::StochasticLinks] {
        let cfg = DynamicsConfig::new(variant, tau, 1_000_000, 20_240_611);
        let (traj, exact) = match variant {
            Variant::Perfect => (
                dynamics::run(&g, None, &cfg).map_err(|e| e.to_string())?,
                transition_matrix_perfect(&g, cfg.epsilon()).map_err(|e| e.to_string())?,
            ),
            _ => (
                dynamics::run(&g, Some((&spec.links, &spec.partial)), &cfg).map_err(|e| e.to_string())?,
                transition_matrix_stochastic(&g, &spec.links, &spec.partial, cfg.epsilon())
                    .map_err(|e| e.to_string())?,
            ),
        };
        let mu = stationary_linear(&exact).map_err(|e| e.to_string())?;
        let tv = total_variation(&traj.empirical(), &mu.mu);
        ensure!(tv < 0.02, "{variant:?}: total variation {tv}");
        tvs.push(format!("{variant:?} TV {tv:.4}"));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{} in {elapsed:.2?}", tvs.join(", ")))
}

fn criterion_9() -> Outcome {
    let mut rng = common::rng(9);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let g = common::random_potential_game(&mut rng, 3, 3);
        let pum = common::random_partial(&mut rng, &g);
        let links = ConnectivityModel::uniform_probability(g.n_players(), 1.0).map_err(|e| e.to_string())?;
        for &eps in &[0.7, 0.2, 1e-3] {
            let a = transition_matrix_perfect(&g, eps).map_err(|e| e.to_string())?;
            let b = transition_matrix_stochastic(&g, &links, &pum, eps).map_err(|e| e.to_string())?;
            let d = (a.matrix() - b.matrix()).iter().map(|x| x.abs()).fold(0.0, f64::max);
            ensure!(d <= 1e-14, "game {k} eps={eps}: difference {d:e}");
            worst = worst.max(d);
        }
    }
    Ok(format!("20 random games, max difference {worst:e}"))
}

fn criterion_10() -> Outcome {
    let mut rng = common::rng(10);
    let mut ties = 0;
    for k in 0..50 {
        let g = common::random_potential_game(&mut rng, 3, 3);
        let pum = common::random_partial(&mut rng, &g);
        let bound = remark1_bound(&g).map_err(|e| e.to_string())?;
        let n = g.n_players();
        let mut links = ConnectivityModel::uniform_exponent(n, bound + 0.01).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in i + 1..n {
                let m = bound + 0.01 + rng.gen_range(0.0..2.0);
                links = links.with_link(i, j, m).map_err(|e| e.to_string())?;
            }
        }
        let rg = ResistanceGraph::stochastic(&g, &links, &pum).map_err(|e| e.to_string())?;
        let rep = stochastic_potentials(&rg).map_err(|e| e.to_string())?;
        let max = g.potential_maximizers(1e-9).map_err(|e| e.to_string())?;
        ensure!(
            rep.argmin.iter().all(|z| max.contains(z)),
            "game {k}: argmin {:?} not within maximizers {:?}",
            rep.argmin,
            max
        );
        if max.len() > 1 {
            ties += 1;
        }
    }
    Ok(format!("50 random games, argmin within maximizers ({ties} with tied maximizers)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("toy game structure", criterion_1),
        ("perfect-link stochastic stability", criterion_2),
        ("transition threshold at m = 1", criterion_3),
        ("sufficient link exponent", criterion_4),
        ("coupled curve behavior", criterion_5),
        ("dual-route stationary distribution", criterion_6),
        ("regular perturbation limits", criterion_7),
        ("simulation vs exact", criterion_8),
        ("reduction at p_c = 1", criterion_9),
        ("random-game stability property", criterion_10),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
