//! Empirical temperature / connectivity thresholds along a coupled curve.
//!
//! The existence result only promises some threshold temperature. Here it is
//! estimated on a grid: the largest grid temperature such that every grid
//! temperature at or below it puts at least `p_tar` stationary mass on the
//! potential maximizers.

use std::io::Write;

use super::sweep::{run_curve, SweepError};
use crate::chain::{coupled_probability, minimal_uniform_exponent};
use crate::comm::PartialUtilityModel;
use crate::game::Game;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEstimate {
    pub p_tar: f64,
    pub m: f64,
    /// `None` when the smallest grid temperature already misses the target.
    pub tau_th: Option<f64>,
    pub p_c_th: Option<f64>,
    pub mu_at_threshold: Option<f64>,
    /// Whether `m` meets the link-exponent sufficient condition.
    pub sufficient_m: bool,
}

impl ThresholdEstimate {
    pub fn found(&self) -> bool {
        self.tau_th.is_some()
    }

    /// `p_tar,tau_th,p_c_th,mu_at_threshold`; empty fields when no threshold exists.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SweepError> {
        let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p_tar", "tau_th", "p_c_th", "mu_at_threshold"])?;
        w.write_record([
            format!("{}", self.p_tar),
            opt(self.tau_th),
            opt(self.p_c_th),
            opt(self.mu_at_threshold),
        ])?;
        w.flush()?;
        Ok(())
    }
}

pub fn find_threshold(
    game: &Game,
    partial: &PartialUtilityModel,
    m: f64,
    p_tar: f64,
    taus: &[f64],
) -> Result<ThresholdEstimate, SweepError> {
    if !(0.0..=1.0).contains(&p_tar) {
        return Err(SweepError::Config("p_tar must lie in [0, 1]".into()));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let curve = run_curve(game, partial, m, &taus)?;
    let mut last_ok = None;
    for r in &curve.rows {
        if r.mu_maximizers >= p_tar {
            last_ok = Some(r);
        } else {
            break;
        }
    }
    let sufficient_m = m >= minimal_uniform_exponent(game, partial)?;
    Ok(ThresholdEstimate {
        p_tar,
        m,
        tau_th: last_ok.map(|r| r.tau),
        p_c_th: last_ok.map(|r| coupled_probability(m, r.tau)),
        mu_at_threshold: last_ok.map(|r| r.mu_maximizers),
        sufficient_m,
    })
}
