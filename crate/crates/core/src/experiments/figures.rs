//! CSV datasets behind the toy-example plots.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::sweep::{
    linear_grid, run_curve, run_sweep, sweep_points, Axis, LinkSetting, SweepConfig, SweepError,
    SweepGrid,
};
use crate::comm::PartialUtilityModel;
use crate::game::Game;

/// Exponents of the temperature curves.
pub const CURVE_EXPONENTS: [f64; 6] = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0];
/// Temperatures of the exponent curves.
pub const FIXED_TEMPERATURES: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
/// Marked curves on the heatmap.
pub const MARKED_EXPONENTS: [f64; 2] = [1.0, 3.0];

#[derive(Debug, Clone)]
pub struct FigureData {
    pub heatmap: SweepGrid,
    pub marked: Vec<(f64, SweepGrid)>,
    pub mu_vs_tau: SweepGrid,
    pub mu_vs_m: SweepGrid,
}

pub fn figure_data(game: &Game, partial: &PartialUtilityModel) -> Result<FigureData, SweepError> {
    let cfg = SweepConfig {
        axis: Axis::Pc,
        ..SweepConfig::default()
    };
    let taus = cfg.taus();
    let heatmap = run_sweep(game, partial, &cfg)?;
    let marked = MARKED_EXPONENTS
        .iter()
        .map(|&m| Ok((m, run_curve(game, partial, m, &taus)?)))
        .collect::<Result<Vec<_>, SweepError>>()?;
    let mut points = Vec::new();
    for &m in &CURVE_EXPONENTS {
        points.extend(taus.iter().map(|&t| (t, LinkSetting::Exponent(m))));
    }
    let mu_vs_tau = sweep_points(game, partial, &points)?;
    let ms = linear_grid(0.1, 4.0, 40);
    let mut points = Vec::new();
    for &t in &FIXED_TEMPERATURES {
        points.extend(ms.iter().map(|&m| (t, LinkSetting::Exponent(m))));
    }
    let mu_vs_m = sweep_points(game, partial, &points)?;
    Ok(FigureData {
        heatmap,
        marked,
        mu_vs_tau,
        mu_vs_m,
    })
}

fn write(grid: &SweepGrid, game: &Game, path: PathBuf) -> Result<PathBuf, SweepError> {
    grid.write_csv(game, BufWriter::new(File::create(&path)?))?;
    Ok(path)
}

/// Writes every dataset into `dir` and returns the paths written.
pub fn write_figures(data: &FigureData, game: &Game, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    std::fs::create_dir_all(dir)?;
    let mut out = vec![write(&data.heatmap, game, dir.join("heatmap_tau_pc.csv"))?];
    for (m, grid) in &data.marked {
        out.push(write(grid, game, dir.join(format!("heatmap_curve_m{m}.csv")))?);
    }
    out.push(write(&data.mu_vs_tau, game, dir.join("mu_vs_tau.csv"))?);
    out.push(write(&data.mu_vs_m, game, dir.join("mu_vs_m.csv"))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::log_grid;
    use crate::fixtures::toy;

    #[test]
    fn mu_vs_m_crosses_at_one() {
        let g = toy::game();
        let pum = toy::partial_utilities(&g);
        let tau = 0.05;
        let mu = |m: f64| {
            sweep_points(&g, &pum, &[(tau, LinkSetting::Exponent(m))]).unwrap().rows[0].mu.clone()
        };
        // below the transition a3 dominates a4, above it the order flips
        let below = mu(0.8);
        let above = mu(1.2);
        assert!(below[toy::A3] > below[toy::A4]);
        assert!(above[toy::A4] > above[toy::A3]);
        let grid = log_grid(0.02, 5.0, 3);
        assert_eq!(grid.len(), 3);
    }
}
