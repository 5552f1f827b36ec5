//! Aggregated structural and stochastic-stability report for one game.

use std::fmt;
use std::io::Write;

use crate::chain::{
    lemma1_check, minimal_uniform_exponent, remark1_bound, stochastic_potentials, ChainError,
    Lemma1Report, ResistanceGraph, StochasticPotentialReport,
};
use crate::comm::LinkMode;
use crate::experiments::spec_file::CommSpec;
use crate::game::{Game, GameError, MoveCheck, DEFAULT_POTENTIAL_TOLERANCE};

#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// `None` when the game has no potential table.
    pub alignment: Option<crate::game::PotentialReport>,
    /// Outcome of reconstructing a potential when none was given.
    pub recovered: Option<Result<Vec<f64>, GameError>>,
    pub reachability: Vec<MoveCheck>,
    pub reversibility: Vec<MoveCheck>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.alignment.as_ref().is_none_or(|a| a.is_ok())
            && self.recovered.as_ref().is_none_or(|r| r.is_ok())
            && self.reachability.iter().all(MoveCheck::is_ok)
            && self.reversibility.iter().all(MoveCheck::is_ok)
    }
}

pub fn validate(game: &Game) -> ValidationReport {
    let alignment = game
        .potential()
        .map(|_| game.validate_potential(DEFAULT_POTENTIAL_TOLERANCE).expect("potential present"));
    let recovered = game
        .potential()
        .is_none()
        .then(|| game.recover_potential(DEFAULT_POTENTIAL_TOLERANCE));
    ValidationReport {
        alignment,
        recovered,
        reachability: game.check_reachability(),
        reversibility: game.check_reversibility(),
    }
}

/// Text rendering of a validation report against its game.
pub fn render_validation(game: &Game, report: &ValidationReport) -> String {
    let mut s = String::new();
    match (&report.alignment, &report.recovered) {
        (Some(a), _) if a.is_ok() => s.push_str("potential: ok\n"),
        (Some(a), _) => {
            s.push_str(&format!("potential: {} alignment violation(s)\n", a.violations.len()));
            for v in &a.violations {
                s.push_str(&format!(
                    "  player {}: {} -> {}: utility change {} vs potential change {}\n",
                    v.player + 1,
                    game.state_label(v.from),
                    game.state_label(v.to),
                    v.utility_delta,
                    v.potential_delta
                ));
            }
        }
        (None, Some(Ok(_))) => s.push_str("potential: none given; utilities admit an exact potential\n"),
        (None, Some(Err(e))) => s.push_str(&format!("potential: {e}\n")),
        (None, None) => {}
    }
    for (name, checks) in [("reachability", &report.reachability), ("reversibility", &report.reversibility)] {
        for (i, c) in checks.iter().enumerate() {
            match c {
                MoveCheck::Ok => s.push_str(&format!("{name} player {}: ok\n", i + 1)),
                MoveCheck::Failed { from, to } => s.push_str(&format!(
                    "{name} player {}: FAILED ({} -> {})\n",
                    i + 1,
                    game.action_label(i, *from),
                    game.action_label(i, *to)
                )),
            }
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub nash: Vec<usize>,
    pub maximizers: Vec<usize>,
    pub perfect: ResistanceGraph,
    pub perfect_potentials: StochasticPotentialReport,
    pub stochastic: Option<(ResistanceGraph, StochasticPotentialReport)>,
    pub lemma1: Option<Lemma1Report>,
    pub minimal_uniform_m: Option<f64>,
    pub remark1_bound: f64,
    pub notes: Vec<String>,
}

pub fn analyze(game: &Game, comm: Option<&CommSpec>) -> Result<AnalysisReport, ChainError> {
    let perfect = ResistanceGraph::perfect(game)?;
    let perfect_potentials = stochastic_potentials(&perfect)?;
    let mut notes = Vec::new();
    let (stochastic, lemma1, minimal) = match comm {
        None => (None, None, None),
        Some(spec) => {
            let minimal = Some(minimal_uniform_exponent(game, &spec.partial)?);
            if spec.links.mode() == LinkMode::Exponent {
                let rg = ResistanceGraph::stochastic(game, &spec.links, &spec.partial)?;
                let pots = stochastic_potentials(&rg)?;
                let lemma = lemma1_check(game, &spec.links, &spec.partial)?;
                (Some((rg, pots)), Some(lemma), minimal)
            } else {
                notes.push(
                    "links are given as plain probabilities; link resistances need exponent mode".into(),
                );
                (None, None, minimal)
            }
        }
    };
    Ok(AnalysisReport {
        nash: game.nash_equilibria(),
        maximizers: game.potential_maximizers(1e-9)?,
        perfect,
        perfect_potentials,
        stochastic,
        lemma1,
        minimal_uniform_m: minimal,
        remark1_bound: remark1_bound(game)?,
        notes,
    })
}

impl AnalysisReport {
    /// Argmin of the stochastic potential for the link model in use (perfect if none).
    pub fn argmin(&self) -> &[usize] {
        match &self.stochastic {
            Some((_, p)) => &p.argmin,
            None => &self.perfect_potentials.argmin,
        }
    }

    pub fn render(&self, game: &Game) -> String {
        Rendered { report: self, game }.to_string()
    }

    /// `from,to,agent,resistance_perfect,resistance_stochastic`.
    pub fn write_resistances_csv<W: Write>(&self, game: &Game, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "agent", "resistance_perfect", "resistance_stochastic"])?;
        for (a, b, r) in self.perfect.edges() {
            let agent = game.deviating_player(a, b).map(|i| i + 1).unwrap_or(0);
            let rc = self
                .stochastic
                .as_ref()
                .map(|(g, _)| format!("{}", g.resistance(a, b)))
                .unwrap_or_default();
            w.write_record([
                game.state_label(a),
                game.state_label(b),
                agent.to_string(),
                format!("{r}"),
                rc,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `state_label,gamma_perfect,gamma_stochastic,argmin`.
    pub fn write_potentials_csv<W: Write>(&self, game: &Game, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state_label", "gamma_perfect", "gamma_stochastic", "argmin"])?;
        for z in 0..game.n_profiles() {
            let gs = self
                .stochastic
                .as_ref()
                .map(|(_, p)| format!("{}", p.gamma[z]))
                .unwrap_or_default();
            w.write_record([
                game.state_label(z),
                format!("{}", self.perfect_potentials.gamma[z]),
                gs,
                self.argmin().contains(&z).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Rendered<'a> {
    report: &'a AnalysisReport,
    game: &'a Game,
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.game;
        let r = self.report;
        let set = |s: &[usize]| {
            let names: Vec<String> = s.iter().map(|&a| g.state_label(a)).collect();
            format!("{{{}}}", names.join(", "))
        };
        writeln!(f, "nash equilibria: {}", set(&r.nash))?;
        writeln!(f, "potential maximizers: {}", set(&r.maximizers))?;
        writeln!(f, "resistances:")?;
        for (a, b, rp) in r.perfect.edges() {
            write!(f, "  {} -> {}: R = {}", g.state_label(a), g.state_label(b), rp)?;
            if let Some((rg, _)) = &r.stochastic {
                write!(f, ", R_c = {}", rg.resistance(a, b))?;
            }
            writeln!(f)?;
        }
        writeln!(f, "stochastic potential:")?;
        for z in 0..g.n_profiles() {
            write!(f, "  {}: perfect {}", g.state_label(z), r.perfect_potentials.gamma[z])?;
            if let Some((_, p)) = &r.stochastic {
                write!(f, ", lossy links {}", p.gamma[z])?;
            }
            writeln!(f)?;
        }
        writeln!(f, "perfect-link argmin: {}", set(&r.perfect_potentials.argmin))?;
        if let Some((_, p)) = &r.stochastic {
            writeln!(f, "lossy-link argmin: {}", set(&p.argmin))?;
        }
        if let Some(m) = r.minimal_uniform_m {
            writeln!(f, "minimal uniform exponent for unchanged resistances: {m}")?;
        }
        if let Some(l) = &r.lemma1 {
            if l.satisfied() {
                writeln!(f, "configured exponents satisfy the sufficient condition")?;
            } else {
                writeln!(f, "sufficient condition violated in {} case(s):", l.violations.len())?;
                for v in &l.violations {
                    writeln!(
                        f,
                        "  agent {} hearing {}: {} -> {} needs {} > {}",
                        v.agent + 1,
                        crate::comm::subset_label(v.subset_mask),
                        g.state_label(v.from),
                        g.state_label(v.to),
                        v.required,
                        v.exponent_sum
                    )?;
                }
            }
        }
        writeln!(f, "per-link exponent bound (max resistance): {}", r.remark1_bound)?;
        for n in &r.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::spec_file::parse_comm;
    use crate::fixtures::toy;

    #[test]
    fn toy_without_links() {
        let g = toy::game();
        let r = analyze(&g, None).unwrap();
        assert_eq!(r.argmin(), &[toy::A4]);
        assert!(r.minimal_uniform_m.is_none());
        assert_eq!(r.remark1_bound, 3.0);
        let text = r.render(&g);
        assert!(text.contains("perfect-link argmin: {a4}"), "{text}");
    }

    #[test]
    fn toy_on_transition_curve() {
        let g = toy::game();
        let spec = parse_comm(toy::COMM_SPEC_M1, &g).unwrap();
        let r = analyze(&g, Some(&spec)).unwrap();
        let mut argmin = r.argmin().to_vec();
        argmin.sort_unstable();
        let mut expected = vec![toy::A3, toy::A4];
        expected.sort_unstable();
        assert_eq!(argmin, expected);
        assert_eq!(r.minimal_uniform_m, Some(3.0));
        assert!(!r.lemma1.as_ref().unwrap().satisfied());
    }

    #[test]
    fn validation_flags_broken_inputs() {
        let g = toy::game();
        assert!(validate(&g).ok());
        let bad = g.clone().with_moves(1, vec![vec![1], vec![]]).unwrap();
        let rep = validate(&bad);
        assert!(!rep.ok());
        assert!(render_validation(&bad, &rep).contains("reversibility player 2: FAILED"));
    }
}
