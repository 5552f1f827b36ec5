use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use blll::chain::{
    minimal_uniform_exponent, stationary_linear, transition_matrix_perfect,
    transition_matrix_stochastic,
};
use blll::comm::LinkMode;
use blll::dynamics::{self, DynamicsConfig, Variant};
use blll::experiments::analysis::{analyze, render_validation, validate};
use blll::experiments::figures::{figure_data, write_figures};
use blll::experiments::spec_file::{load_comm, load_game};
use blll::experiments::sweep::{
    log_grid, run_curve, run_sweep, Axis, SweepConfig, LARGE_GRID_POINTS, WORKERS_ENV,
};
use blll::experiments::threshold::find_threshold;
use blll::fixtures::toy;

#[derive(Parser)]
#[command(name = "blll", version, about = "Binary log-linear learning under lossy links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the potential, reachability and reversibility of a game spec.
    Validate { game: PathBuf },
    /// Equilibria, resistances and stochastic potentials.
    Analyze {
        game: PathBuf,
        #[arg(long)]
        comm: Option<PathBuf>,
        /// Directory for resistances.csv and potentials.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact stationary distributions over a (tau, p_c) or (tau, m) grid.
    Sweep(SweepArgs),
    /// Monte Carlo run compared against the exact stationary distribution.
    Simulate(SimulateArgs),
    /// Grid estimate of the temperature threshold along a coupled curve.
    Threshold(ThresholdArgs),
    /// CSV datasets for the bundled toy example.
    Figures { out_dir: PathBuf },
}

#[derive(Args)]
struct TauGrid {
    #[arg(long)]
    tau_min: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    tau_points: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    game: PathBuf,
    comm: PathBuf,
    config: PathBuf,
    #[command(flatten)]
    taus: TauGrid,
    /// Sweep these exponents instead of the configured axis.
    #[arg(long, value_delimiter = ',', conflicts_with = "pc")]
    m: Option<Vec<f64>>,
    /// Sweep these link probabilities instead of the configured axis.
    #[arg(long, value_delimiter = ',')]
    pc: Option<Vec<f64>>,
    /// Output CSV; marked curves go next to it as `<stem>_curve_m<m>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    game: PathBuf,
    #[arg(long)]
    comm: Option<PathBuf>,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial profile, e.g. `T,L`; defaults to the first profile.
    #[arg(long)]
    initial: Option<String>,
    /// Iterations excluded from the empirical distribution (default: half the horizon).
    #[arg(long)]
    burn_in: Option<u64>,
    /// Use asynchronous best reply instead of log-linear learning.
    #[arg(long, conflicts_with = "comm")]
    best_reply: bool,
    /// Directory for empirical.csv (and trajectory.csv with --trajectory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, requires = "out")]
    trajectory: bool,
}

#[derive(Args)]
struct ThresholdArgs {
    game: PathBuf,
    comm: PathBuf,
    #[arg(long)]
    ptar: f64,
    /// Curve exponent; defaults to the comm spec's uniform exponent, else the
    /// smallest exponent meeting the sufficient condition.
    #[arg(long)]
    m: Option<f64>,
    #[command(flatten)]
    taus: TauGrid,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Validate { game } => cmd_validate(&game),
        Command::Analyze { game, comm, out } => cmd_analyze(&game, comm.as_deref(), out.as_deref()),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Figures { out_dir } => cmd_figures(&out_dir),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let game = load_game(path)?;
    let report = validate(&game);
    print!("{}", render_validation(&game, &report));
    if report.ok() {
        println!("ok");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("validation failed");
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_analyze(game: &Path, comm: Option<&Path>, out: Option<&Path>) -> Result<ExitCode> {
    let game = load_game(game)?;
    let comm = comm.map(|c| load_comm(c, &game)).transpose()?;
    let report = analyze(&game, comm.as_ref())?;
    print!("{}", report.render(&game));
    if let Some(dir) = out {
        report.write_resistances_csv(&game, create(&dir.join("resistances.csv"))?)?;
        report.write_potentials_csv(&game, create(&dir.join("potentials.csv"))?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn apply_taus(cfg: &mut SweepConfig, t: &TauGrid) {
    if let Some(v) = t.tau_min {
        cfg.tau_min = v;
    }
    if let Some(v) = t.tau_max {
        cfg.tau_max = v;
    }
    if let Some(v) = t.tau_points {
        cfg.tau_points = v;
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let game = load_game(&a.game)?;
    let comm = load_comm(&a.comm, &game)?;
    let text = std::fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = SweepConfig::from_toml(&text).with_context(|| format!("{}", a.config.display()))?;
    apply_taus(&mut cfg, &a.taus);
    if let Some(ms) = a.m {
        cfg.axis = Axis::M;
        cfg.axis_values = Some(ms);
    } else if let Some(pcs) = a.pc {
        cfg.axis = Axis::Pc;
        cfg.axis_values = Some(pcs);
    }
    cfg.validate()?;
    if cfg.n_points() > LARGE_GRID_POINTS {
        eprintln!(
            "warning: {} grid points; expect a long run (set {WORKERS_ENV} to control parallelism)",
            cfg.n_points()
        );
    }
    let out = a
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let start = Instant::now();
    let grid = run_sweep(&game, &comm.partial, &cfg)?;
    grid.write_csv(&game, create(&out)?)?;
    println!("wrote {} ({} points, {:.2?})", out.display(), grid.rows.len(), start.elapsed());
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").to_string();
    let taus = cfg.taus();
    for &m in &cfg.curves {
        let curve = run_curve(&game, &comm.partial, m, &taus)?;
        let path = out.with_file_name(format!("{stem}_curve_m{m}.csv"));
        curve.write_csv(&game, create(&path)?)?;
        println!("wrote {}", path.display());
        if let Some(p_tar) = cfg.p_tar {
            let est = find_threshold(&game, &comm.partial, m, p_tar, &taus)?;
            match (est.tau_th, est.p_c_th) {
                (Some(t), Some(p)) => println!("  m = {m}: tau_th = {t}, p_c_th = {p} (grid estimate)"),
                _ => println!("  m = {m}: no threshold on this curve for p_tar = {p_tar}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode> {
    let game = load_game(&a.game)?;
    let comm = a.comm.as_deref().map(|c| load_comm(c, &game)).transpose()?;
    let variant = match (&comm, a.best_reply) {
        (Some(_), _) => Variant::StochasticLinks,
        (None, true) => Variant::BestReply,
        (None, false) => Variant::Perfect,
    };
    let mut cfg = DynamicsConfig::new(variant, a.tau, a.horizon, a.seed);
    if let Some(label) = &a.initial {
        cfg.initial = game.parse_profile(label)?;
    }
    cfg.burn_in = a.burn_in;
    cfg.record = a.trajectory;
    let start = Instant::now();
    let traj = dynamics::run(&game, comm.as_ref().map(|c| (&c.links, &c.partial)), &cfg)?;
    let elapsed = start.elapsed();
    let empirical = traj.empirical();
    let exact = match (&comm, variant) {
        (_, Variant::BestReply) => None,
        (Some(c), _) => Some(transition_matrix_stochastic(&game, &c.links, &c.partial, cfg.epsilon())?),
        (None, _) => Some(transition_matrix_perfect(&game, cfg.epsilon())?),
    }
    .map(|chain| stationary_linear(&chain))
    .transpose()?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "final profile: {}", game.state_label(traj.final_profile))?;
    writeln!(w, "state,empirical{}", if exact.is_some() { ",exact" } else { "" })?;
    for (z, f) in empirical.iter().enumerate() {
        match &exact {
            Some(d) => writeln!(w, "{},{f},{}", game.state_label(z), d.mu[z])?,
            None => writeln!(w, "{},{f}", game.state_label(z))?,
        }
    }
    if let Some(d) = &exact {
        writeln!(w, "total variation: {}", dynamics::total_variation(&empirical, &d.mu))?;
    }
    writeln!(w, "elapsed: {elapsed:.2?}")?;
    if let Some(dir) = &a.out {
        traj.write_empirical_csv(&game, create(&dir.join("empirical.csv"))?)?;
        if a.trajectory {
            traj.write_steps_csv(&game, create(&dir.join("trajectory.csv"))?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_threshold(a: ThresholdArgs) -> Result<ExitCode> {
    let game = load_game(&a.game)?;
    let comm = load_comm(&a.comm, &game)?;
    let m = match a.m {
        Some(m) => m,
        None => match (comm.links.mode(), comm.links.uniform_value()) {
            (LinkMode::Exponent, Some(m)) => m,
            _ => minimal_uniform_exponent(&game, &comm.partial)?,
        },
    };
    if !(m > 0.0 && m.is_finite()) {
        bail!("curve exponent must be positive, got {m}");
    }
    let mut cfg = SweepConfig::default();
    apply_taus(&mut cfg, &a.taus);
    cfg.validate()?;
    let taus = log_grid(cfg.tau_min, cfg.tau_max, cfg.tau_points);
    let est = find_threshold(&game, &comm.partial, m, a.ptar, &taus)?;
    println!("curve exponent m = {m}");
    if !est.sufficient_m {
        println!("note: m is below the exponent that keeps every resistance unchanged");
    }
    match (est.tau_th, est.p_c_th, est.mu_at_threshold) {
        (Some(t), Some(p), Some(mu)) => {
            println!("empirical grid estimate: tau_th = {t}, p_c_th = {p}, mass on maximizers = {mu}")
        }
        _ => println!("no threshold on this curve: target {} not met at the smallest grid temperature", a.ptar),
    }
    if let Some(path) = &a.out {
        est.write_csv(create(path)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_figures(dir: &Path) -> Result<ExitCode> {
    let game = toy::game();
    let partial = toy::partial_utilities(&game);
    let start = Instant::now();
    let data = figure_data(&game, &partial)?;
    for p in write_figures(&data, &game, dir)? {
        println!("wrote {}", p.display());
    }
    println!("elapsed: {:.2?}", start.elapsed());
    Ok(ExitCode::SUCCESS)
}
