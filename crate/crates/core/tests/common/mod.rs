#![allow(dead_code)]

use blll::comm::PartialUtilityModel;
use blll::game::Game;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Values on a quarter grid so sums stay exact and ties actually occur.
fn quarter<R: Rng>(rng: &mut R, hi: f64) -> f64 {
    (rng.gen_range(0.0..hi) * 4.0).round() / 4.0
}

/// Mixed-radix profile index with player 0 most significant.
pub fn decode(sizes: &[usize], mut profile: usize) -> Vec<usize> {
    let mut a = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        a[i] = profile % sizes[i];
        profile /= sizes[i];
    }
    a
}

pub fn encode(sizes: &[usize], actions: &[usize]) -> usize {
    actions.iter().zip(sizes).fold(0, |acc, (&a, &k)| acc * k + a)
}

/// Symmetric, connected move sets: a random spanning tree plus random extra edges.
pub fn random_moves<R: Rng>(rng: &mut R, k: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); k];
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    for idx in 1..k {
        let a = order[idx];
        let b = order[rng.gen_range(0..idx)];
        adj[a].push(b);
        adj[b].push(a);
    }
    for a in 0..k {
        for b in a + 1..k {
            if !adj[a].contains(&b) && rng.gen_bool(0.5) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Random potential game: `U_i = phi + d_i(a_{-i})`, up to `max_players`
/// players with 1..=`max_actions` actions each and at least two profiles.
pub fn random_potential_game<R: Rng>(rng: &mut R, max_players: usize, max_actions: usize) -> Game {
    loop {
        let n = rng.gen_range(1..=max_players);
        let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_actions)).collect();
        let n_profiles: usize = sizes.iter().product();
        if n_profiles < 2 {
            continue;
        }
        let phi: Vec<f64> = (0..n_profiles).map(|_| quarter(rng, 4.0)).collect();
        let mut utilities = Vec::with_capacity(n);
        for i in 0..n {
            // d_i depends only on the opponents' actions
            let mut others = sizes.clone();
            others[i] = 1;
            let d: Vec<f64> = (0..others.iter().product::<usize>()).map(|_| quarter(rng, 2.0)).collect();
            let table = (0..n_profiles)
                .map(|z| {
                    let mut a = decode(&sizes, z);
                    a[i] = 0;
                    phi[z] + d[encode(&others, &a)]
                })
                .collect();
            utilities.push(table);
        }
        let labels = sizes
            .iter()
            .enumerate()
            .map(|(i, &k)| (0..k).map(|a| format!("p{i}a{a}")).collect())
            .collect();
        let mut game = Game::new(labels, utilities).unwrap().with_potential(phi).unwrap();
        for (i, &k) in sizes.iter().enumerate() {
            game = game.with_moves(i, random_moves(rng, k)).unwrap();
        }
        return game;
    }
}

/// Random complete partial-utility tables for every agent and every proper subset.
pub fn random_partial<R: Rng>(rng: &mut R, game: &Game) -> PartialUtilityModel {
    let n = game.n_players();
    let full = (1u64 << n) - 1;
    let mut model = PartialUtilityModel::new(game);
    for agent in 0..n {
        for mask in 0..full {
            if mask >> agent & 1 == 0 {
                continue;
            }
            let values = (0..game.n_profiles()).map(|_| quarter(rng, 5.0)).collect();
            model = model.with_table(agent, mask, values).unwrap();
        }
    }
    model
}

/// Brute-force pure Nash equilibria under unrestricted deviations.
pub fn brute_force_nash(game: &Game) -> Vec<usize> {
    let sizes = game.action_counts().to_vec();
    (0..game.n_profiles())
        .filter(|&z| {
            let a = decode(&sizes, z);
            (0..sizes.len()).all(|i| {
                (0..sizes[i]).all(|b| {
                    let mut d = a.clone();
                    d[i] = b;
                    game.utility(i, encode(&sizes, &d)) <= game.utility(i, z)
                })
            })
        })
        .collect()
}
