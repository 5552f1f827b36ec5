//! Bundled example inputs.

/// The two-agent, two-action toy game with lossy links.
///
/// Agent 1 picks T/B, agent 2 picks L/R. Profiles are numbered by the mixed
/// radix scheme, so (T,L)=0, (T,R)=1, (B,L)=2, (B,R)=3. The `A*` constants
/// give the conventional names used in reports.
pub mod toy {
    use crate::comm::{CommError, ConnectivityModel, PartialUtilityModel};
    use crate::game::Game;

    pub const A1: usize = 3; // (B,R)
    pub const A2: usize = 0; // (T,L)
    pub const A3: usize = 1; // (T,R)
    pub const A4: usize = 2; // (B,L)

    pub const GAME_SPEC: &str = include_str!("../fixtures/toy_game.txt");
    pub const COMM_SPEC_M05: &str = include_str!("../fixtures/toy_comm_m0.5.txt");
    pub const COMM_SPEC_M1: &str = include_str!("../fixtures/toy_comm_m1.txt");
    pub const COMM_SPEC_M3: &str = include_str!("../fixtures/toy_comm_m3.txt");
    pub const SWEEP_CONFIG: &str = include_str!("../fixtures/toy_sweep.toml");

    /// Potential indexed by profile.
    pub fn potential() -> Vec<f64> {
        vec![2.0, 3.0, 4.0, 1.0]
    }

    pub fn game() -> Game {
        let labels = vec![
            vec!["T".to_string(), "B".to_string()],
            vec!["L".to_string(), "R".to_string()],
        ];
        //              (T,L) (T,R) (B,L) (B,R)
        let u1 = vec![1.0, 3.0, 3.0, 1.0];
        let u2 = vec![1.0, 2.0, 4.0, 1.0];
        Game::new(labels, vec![u1, u2])
            .and_then(|g| g.with_potential(potential()))
            .expect("toy game tables are complete")
            .with_profile_name(A1, "a1")
            .with_profile_name(A2, "a2")
            .with_profile_name(A3, "a3")
            .with_profile_name(A4, "a4")
    }

    /// Utilities evaluated when the link is down: agent 1 sees only its own
    /// action (T -> 3, B -> 1); agent 2 likewise (L -> 1, R -> 2).
    pub fn partial_utilities(game: &Game) -> PartialUtilityModel {
        let alone1 = (0..game.n_profiles())
            .map(|a| if game.action_of(a, 0) == 0 { 3.0 } else { 1.0 })
            .collect();
        let alone2 = (0..game.n_profiles())
            .map(|a| if game.action_of(a, 1) == 0 { 1.0 } else { 2.0 })
            .collect();
        PartialUtilityModel::new(game)
            .with_table(0, 0b01, alone1)
            .and_then(|m| m.with_table(1, 0b10, alone2))
            .expect("toy partial tables are complete")
    }

    pub fn exponent_links(m: f64) -> Result<ConnectivityModel, CommError> {
        ConnectivityModel::uniform_exponent(2, m)
    }

    pub fn probability_links(p: f64) -> Result<ConnectivityModel, CommError> {
        ConnectivityModel::uniform_probability(2, p)
    }
}
