//! Stationary-distribution sweeps over temperature and link quality.

use std::io::Write;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::chain::{
    coupled_probability, stationary_linear, transition_matrix_stochastic, ChainError,
    StationaryDistribution,
};
use crate::comm::{CommError, ConnectivityModel, PartialUtilityModel};
use crate::dynamics::epsilon_from_tau;
use crate::game::Game;

/// Environment variable holding the worker count for grid evaluation.
pub const WORKERS_ENV: &str = "BLLL_WORKERS";

/// Grid points above which the CLI prints a runtime warning.
pub const LARGE_GRID_POINTS: usize = 250_000;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
}

/// Second sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Delivery probability, independent of temperature.
    Pc,
    /// Link exponent; delivery probability follows `1 / (1 + e^{-m/tau})`.
    M,
}

fn d_tau_min() -> f64 {
    0.02
}
fn d_tau_max() -> f64 {
    5.0
}
fn d_points() -> usize {
    40
}
fn d_axis() -> Axis {
    Axis::Pc
}
fn d_axis_min() -> f64 {
    0.52
}
fn d_axis_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "d_tau_min")]
    pub tau_min: f64,
    #[serde(default = "d_tau_max")]
    pub tau_max: f64,
    #[serde(default = "d_points")]
    pub tau_points: usize,
    #[serde(default = "d_axis")]
    pub axis: Axis,
    #[serde(default = "d_axis_min")]
    pub axis_min: f64,
    #[serde(default = "d_axis_max")]
    pub axis_max: f64,
    #[serde(default = "d_points")]
    pub axis_points: usize,
    /// Explicit second-axis values; overrides `axis_min/max/points`.
    #[serde(default)]
    pub axis_values: Option<Vec<f64>>,
    /// Exponents whose coupled curves are emitted as separate series.
    #[serde(default)]
    pub curves: Vec<f64>,
    #[serde(default)]
    pub p_tar: Option<f64>,
    #[serde(default)]
    pub output: Option<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            tau_min: d_tau_min(),
            tau_max: d_tau_max(),
            tau_points: d_points(),
            axis: d_axis(),
            axis_min: d_axis_min(),
            axis_max: d_axis_max(),
            axis_points: d_points(),
            axis_values: None,
            curves: Vec::new(),
            p_tar: None,
            output: None,
        }
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points)
                .map(|k| {
                    if k == points - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (points - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|k| {
                if k == points - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn taus(&self) -> Vec<f64> {
        log_grid(self.tau_min, self.tau_max, self.tau_points)
    }

    pub fn axis_grid(&self) -> Vec<f64> {
        self.axis_values
            .clone()
            .unwrap_or_else(|| linear_grid(self.axis_min, self.axis_max, self.axis_points))
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::Config(m.to_string()));
        if !(self.tau_min > 0.0 && self.tau_min.is_finite() && self.tau_max.is_finite()) {
            return bad("temperatures must be positive and finite");
        }
        let taus = self.taus();
        if taus.is_empty() || !strictly_increasing(&taus) {
            return bad("temperature grid must be nonempty and strictly increasing");
        }
        let axis = self.axis_grid();
        if axis.is_empty() || !strictly_increasing(&axis) {
            return bad("second-axis grid must be nonempty and strictly increasing");
        }
        match self.axis {
            Axis::Pc if axis.iter().any(|&p| !(p > 0.0 && p <= 1.0)) => {
                return bad("delivery probabilities must lie in (0, 1]")
            }
            Axis::M if axis.iter().any(|&m| !(m > 0.0 && m.is_finite())) => {
                return bad("exponents must be positive")
            }
            _ => {}
        }
        if self.curves.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return bad("curve exponents must be positive");
        }
        if let Some(p) = self.p_tar {
            if !(0.0..=1.0).contains(&p) {
                return bad("p_tar must lie in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.taus().len() * self.axis_grid().len()
    }
}

/// Uniform link setting for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkSetting {
    Probability(f64),
    Exponent(f64),
}

/// One solved grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub p_c: f64,
    /// `log_eps((1 - p_c) / p_c)`; infinite when `p_c = 1`.
    pub m: f64,
    pub mu: Vec<f64>,
    /// Stationary mass on the potential maximizers.
    pub mu_maximizers: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub rows: Vec<SweepRow>,
}

/// Stationary distribution at one `(tau, link)` point with uniform links.
pub fn solve_point(
    game: &Game,
    partial: &PartialUtilityModel,
    setting: LinkSetting,
    tau: f64,
) -> Result<StationaryDistribution, SweepError> {
    let n = game.n_players();
    let links = match setting {
        LinkSetting::Probability(p) => ConnectivityModel::uniform_probability(n, p)?,
        LinkSetting::Exponent(m) => ConnectivityModel::uniform_exponent(n, m)?,
    };
    let eps = epsilon_from_tau(tau);
    let chain = transition_matrix_stochastic(game, &links, partial, eps)?;
    Ok(stationary_linear(&chain)?)
}

fn row(
    game: &Game,
    partial: &PartialUtilityModel,
    setting: LinkSetting,
    tau: f64,
    maximizers: &[usize],
) -> Result<SweepRow, SweepError> {
    let dist = solve_point(game, partial, setting, tau)?;
    let (p_c, m) = match setting {
        LinkSetting::Probability(p) => {
            let m = if p == 1.0 {
                f64::INFINITY
            } else {
                // ln((1-p)/p) / ln(eps) with ln(eps) = -1/tau
                -tau * ((-p).ln_1p() - p.ln())
            };
            (p, m)
        }
        LinkSetting::Exponent(m) => (coupled_probability(m, tau), m),
    };
    Ok(SweepRow {
        tau,
        p_c,
        m,
        mu_maximizers: dist.mass(maximizers),
        mu: dist.mu,
    })
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`] (default: all cores).
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Solves every `(tau, setting)` point in order; results do not depend on the worker count.
pub fn sweep_points(
    game: &Game,
    partial: &PartialUtilityModel,
    points: &[(f64, LinkSetting)],
) -> Result<SweepGrid, SweepError> {
    let maximizers = game.potential_maximizers(1e-9)?;
    let rows = with_workers(|| {
        points
            .par_iter()
            .map(|&(tau, s)| row(game, partial, s, tau, &maximizers))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(SweepGrid { rows })
}

/// Full grid: every temperature against every second-axis value.
pub fn run_sweep(game: &Game, partial: &PartialUtilityModel, cfg: &SweepConfig) -> Result<SweepGrid, SweepError> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.n_points());
    for &tau in &cfg.taus() {
        for &v in &cfg.axis_grid() {
            let s = match cfg.axis {
                Axis::Pc => LinkSetting::Probability(v),
                Axis::M => LinkSetting::Exponent(v),
            };
            points.push((tau, s));
        }
    }
    sweep_points(game, partial, &points)
}

/// The coupled curve `p_c = 1 / (1 + e^{-m/tau})` over the configured temperatures.
pub fn run_curve(
    game: &Game,
    partial: &PartialUtilityModel,
    m: f64,
    taus: &[f64],
) -> Result<SweepGrid, SweepError> {
    let points: Vec<_> = taus.iter().map(|&t| (t, LinkSetting::Exponent(m))).collect();
    sweep_points(game, partial, &points)
}

fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl SweepGrid {
    /// `tau,p_c,m,state_label,mu`, one line per state per grid point.
    pub fn write_csv<W: Write>(&self, game: &Game, out: W) -> Result<(), SweepError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "p_c", "m", "state_label", "mu"])?;
        for r in &self.rows {
            for (a, mu) in r.mu.iter().enumerate() {
                w.write_record([
                    fmt_num(r.tau),
                    fmt_num(r.p_c),
                    fmt_num(r.m),
                    game.state_label(a),
                    fmt_num(*mu),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
