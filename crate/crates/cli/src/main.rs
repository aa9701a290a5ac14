//! `infogeo`: compute free-energy geometry data for cost-only gridworlds.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical
//! non-convergence, 3 internal error.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use infogeo_core as core;
use infogeo_core::{
    enumerate_epsilon_infodesics, find_value_geodesics, interim_histogram, mds_embed,
    pairwise_free_energy, sample_trajectories, scan_triangle_violations, symmetrize,
    tradeoff_curve, value_distance_matrix, Error as CoreError, GridSpec, MdsConfig, Mdp,
    Neighborhood, SolverConfig,
};

use output::{
    csv_writer, write_asymmetry_csv, write_infodesics_jsonl, write_json, write_matrix_csv,
    write_solve_csv, EmbeddingJson, MatrixJson, SolveJson,
};

#[derive(Parser)]
#[command(
    name = "infogeo",
    version,
    about = "Free-energy geometry of cost-only gridworlds",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: INFOGEO_JOBS, then available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory the output files are written to.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Primary output format; JSON is canonical, CSV is a lossy convenience.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GridArgs {
    /// Grid dimensions as WxH, e.g. 5x5.
    #[arg(long)]
    grid: String,
    /// Neighborhood: manhattan (4 actions) or moore (8 actions).
    #[arg(long, default_value = "manhattan")]
    nbhd: String,
}

impl GridArgs {
    fn spec(&self, goal: usize) -> anyhow::Result<GridSpec> {
        let (width, height) = parse_grid(&self.grid)?;
        let neighborhood = Neighborhood::from_str(&self.nbhd)?;
        Ok(GridSpec::new(width, height, neighborhood, goal)?)
    }

    fn config_fields(&self) -> Value {
        json!({ "grid": self.grid, "nbhd": self.nbhd.to_ascii_lowercase() })
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Free-energy convergence threshold.
    #[arg(long, default_value_t = 1e-5)]
    eps_f: f64,
    /// Policy-KL convergence threshold (bits).
    #[arg(long, default_value_t = 1e-5)]
    eps_pi: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Floor for the marginal action prior.
    #[arg(long, default_value_t = 1e-12)]
    prior_floor: f64,
}

impl SolverArgs {
    fn config(&self, beta: f64) -> anyhow::Result<SolverConfig> {
        let mut cfg = SolverConfig::new(beta)?;
        cfg.eps_f = self.eps_f;
        cfg.eps_pi = self.eps_pi;
        cfg.max_iters = self.max_iters;
        cfg.prior_floor = self.prior_floor;
        Ok(cfg)
    }

    fn config_fields(&self) -> Value {
        json!({
            "eps_f": self.eps_f,
            "eps_pi": self.eps_pi,
            "max_iters": self.max_iters,
            "prior_floor": self.prior_floor,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one (goal, beta) instance and write the full result.
    Solve {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        goal: usize,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// All-pairs free energies: raw, symmetrized and asymmetry-proportion files.
    Pairwise {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// MDS-embed the symmetrized pairwise matrix into 2 or 3 dimensions.
    Embed {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        max_iter: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Interim-state histogram, triangle violations, and (given --start and
    /// --goal) the accepted epsilon-infodesic list.
    Infodesics {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        epsilon: f64,
        /// Longest sequence length to enumerate (3, 4 or 5).
        #[arg(long, default_value_t = 3)]
        len: usize,
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        goal: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sweep beta and record expected value against expected information.
    Tradeoff {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        goal: usize,
        /// Comma list (0.1,1,10) or geometric range a..b:n (0.001..100:12).
        #[arg(long)]
        betas: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sample rollouts of the solved policy and export visitation statistics.
    Sample {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        goal: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        start: usize,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rollout cap; defaults to 100 * |S|.
        #[arg(long)]
        max_steps: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Shortest-path distance matrix and the additive intermediate states
    /// between --start and --goal.
    Geodesics {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        goal: usize,
    },
}

fn parse_grid(s: &str) -> anyhow::Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.len() != 2 {
        anyhow::bail!("grid must look like WxH, got {s:?}");
    }
    let width: usize = parts[0].parse().context("grid width")?;
    let height: usize = parts[1].parse().context("grid height")?;
    Ok((width, height))
}

/// Comma list or geometric range `a..b:n` (n defaults to 12).
fn parse_betas(s: &str) -> anyhow::Result<Vec<f64>> {
    let (range, count) = match s.split_once(':') {
        Some((range, count)) => (range, Some(count)),
        None => (s, None),
    };
    if let Some((lo, hi)) = range.split_once("..") {
        let lo: f64 = lo.parse().context("betas range start")?;
        let hi: f64 = hi.parse().context("betas range end")?;
        let n: usize = match count {
            Some(c) => c.parse().context("betas range count")?,
            None => 12,
        };
        if !(lo > 0.0 && hi > lo && n >= 2) {
            anyhow::bail!("betas range needs 0 < a < b and n >= 2, got {s:?}");
        }
        let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
        return Ok((0..n).map(|i| lo * ratio.powi(i as i32)).collect());
    }
    if count.is_some() {
        anyhow::bail!("betas range must look like a..b:n, got {s:?}");
    }
    s.split(',')
        .map(|b| b.trim().parse::<f64>().map_err(Into::into))
        .collect::<anyhow::Result<Vec<f64>>>()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are success paths, anything else is usage.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };

    let jobs = cli.jobs.or_else(|| {
        std::env::var("INFOGEO_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(jobs) = jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not configure {jobs} workers: {e}");
            return ExitCode::from(3);
        }
    }

    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<CoreError>() {
        Some(
            CoreError::GoalOutOfRange { .. }
            | CoreError::CoordinateOutOfRange { .. }
            | CoreError::StateOutOfRange { .. }
            | CoreError::InvalidArgument { .. }
            | CoreError::InvalidDistribution { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::NotSquare { .. },
        ) => 1,
        Some(
            CoreError::NoConvergence { .. }
            | CoreError::ValueIterationDiverged { .. }
            | CoreError::NumericalUnderflow
            | CoreError::Divergence
            | CoreError::NonAbsorbing
            | CoreError::AllTruncated { .. }
            | CoreError::MissingPairEntry { .. }
            | CoreError::UnconvergedEntries
            | CoreError::NotSymmetric { .. },
        ) => 2,
        Some(CoreError::SweepFailed { source, .. }) => match source.as_ref() {
            CoreError::InvalidArgument { .. } => 1,
            _ => 2,
        },
        _ => {
            if e.downcast_ref::<std::io::Error>().is_some() {
                3
            } else if e.is::<clap::Error>() {
                1
            } else {
                // Config-shaped failures (grid parsing and friends) come
                // through as plain anyhow messages.
                1
            }
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    match &cli.command {
        Command::Solve {
            grid,
            goal,
            beta,
            solver,
        } => cmd_solve(cli, grid, *goal, *beta, solver),
        Command::Pairwise { grid, beta, solver } => cmd_pairwise(cli, grid, *beta, solver),
        Command::Embed {
            grid,
            beta,
            dims,
            seed,
            restarts,
            max_iter,
            solver,
        } => cmd_embed(cli, grid, *beta, *dims, *seed, *restarts, *max_iter, solver),
        Command::Infodesics {
            grid,
            beta,
            epsilon,
            len,
            start,
            goal,
            solver,
        } => cmd_infodesics(cli, grid, *beta, *epsilon, *len, *start, *goal, solver),
        Command::Tradeoff {
            grid,
            goal,
            betas,
            solver,
        } => cmd_tradeoff(cli, grid, *goal, betas, solver),
        Command::Sample {
            grid,
            goal,
            beta,
            start,
            count,
            seed,
            max_steps,
            solver,
        } => cmd_sample(
            cli, grid, *goal, *beta, *start, *count, *seed, *max_steps, solver,
        ),
        Command::Geodesics { grid, start, goal } => cmd_geodesics(cli, grid, *start, *goal),
    }
}

fn merge(base: Value, extra: Value) -> Value {
    let mut map = base.as_object().cloned().unwrap_or_default();
    if let Some(more) = extra.as_object() {
        for (k, v) in more {
            map.insert(k.clone(), v.clone());
        }
    }
    Value::Object(map)
}

fn cmd_solve(
    cli: &Cli,
    grid: &GridArgs,
    goal: usize,
    beta: f64,
    solver: &SolverArgs,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(goal)?;
    let mdp = Mdp::build_gridworld(&spec)?;
    let config = solver.config(beta)?;
    let echo = merge(
        grid.config_fields(),
        merge(solver.config_fields(), json!({ "goal": goal, "beta": beta })),
    );
    let (result, code) = match core::solve(&mdp, &config) {
        Ok(result) => (result, ExitCode::SUCCESS),
        Err(CoreError::NoConvergence { result, .. }) => (*result, ExitCode::from(2)),
        Err(e) => return Err(e.into()),
    };
    write_json(
        &cli.out.join("solve.json"),
        "solve",
        &echo,
        SolveJson::new(beta, goal, &result),
    )?;
    if cli.format == Format::Csv {
        write_solve_csv(&cli.out.join("solve.csv"), "solve", &echo, &result)?;
    }
    Ok(code)
}

fn cmd_pairwise(
    cli: &Cli,
    grid: &GridArgs,
    beta: f64,
    solver: &SolverArgs,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(0)?;
    let config = solver.config(beta)?;
    let echo = merge(
        grid.config_fields(),
        merge(solver.config_fields(), json!({ "beta": beta })),
    );
    let d = pairwise_free_energy(&spec, beta, &config)?;
    let sym = symmetrize(&d);
    let asym = core::asymmetry_proportion(&d);
    write_json(
        &cli.out.join("pairwise.json"),
        "pairwise",
        &echo,
        MatrixJson::new(&d),
    )?;
    write_json(
        &cli.out.join("pairwise_sym.json"),
        "pairwise",
        &echo,
        MatrixJson::new(&sym),
    )?;
    write_matrix_csv(&cli.out.join("pairwise.csv"), "pairwise", &echo, &d)?;
    write_matrix_csv(&cli.out.join("pairwise_sym.csv"), "pairwise", &echo, &sym)?;
    write_asymmetry_csv(
        &cli.out.join("pairwise_asymmetry.csv"),
        "pairwise",
        &echo,
        &asym,
    )?;
    Ok(if d.fully_converged() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_embed(
    cli: &Cli,
    grid: &GridArgs,
    beta: f64,
    dims: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    solver: &SolverArgs,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(0)?;
    let config = solver.config(beta)?;
    let mut mds = MdsConfig::new(dims, seed)?;
    mds.restarts = restarts;
    mds.max_iter = max_iter;
    let echo = merge(
        grid.config_fields(),
        merge(
            solver.config_fields(),
            json!({
                "beta": beta,
                "dims": dims,
                "seed": seed,
                "restarts": restarts,
                "max_iter": max_iter,
            }),
        ),
    );
    let d = pairwise_free_energy(&spec, beta, &config)?;
    let embedding = mds_embed(&symmetrize(&d), &mds)?;
    write_json(
        &cli.out.join("embedding.json"),
        "embed",
        &echo,
        EmbeddingJson::new(&embedding),
    )?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_infodesics(
    cli: &Cli,
    grid: &GridArgs,
    beta: f64,
    epsilon: f64,
    len: usize,
    start: Option<usize>,
    goal: Option<usize>,
    solver: &SolverArgs,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(0)?;
    let config = solver.config(beta)?;
    let echo = merge(
        grid.config_fields(),
        merge(
            solver.config_fields(),
            json!({
                "beta": beta,
                "epsilon": epsilon,
                "len": len,
                "start": start,
                "goal": goal,
            }),
        ),
    );
    let d = pairwise_free_energy(&spec, beta, &config)?;

    let histogram = interim_histogram(&d, epsilon)?;
    let mut w = csv_writer(&cli.out.join("interim_histogram.csv"), "infodesics", &echo)?;
    use std::io::Write as _;
    writeln!(w, "state,count")?;
    for (s, &c) in histogram.counts.iter().enumerate() {
        writeln!(w, "{s},{c}")?;
    }
    drop(w);

    let violations = scan_triangle_violations(&d, 1e-6)?;
    let mut w = csv_writer(&cli.out.join("violations.csv"), "infodesics", &echo)?;
    writeln!(w, "from,via,to,deviation")?;
    for v in &violations {
        writeln!(w, "{},{},{},{}", v.from, v.via, v.to, v.deviation)?;
    }
    drop(w);

    if let (Some(start), Some(goal)) = (start, goal) {
        let found = enumerate_epsilon_infodesics(&d, start, goal, epsilon, len)?;
        write_infodesics_jsonl(&cli.out.join("infodesics.jsonl"), "infodesics", &echo, &found)?;
    }
    Ok(if d.fully_converged() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_tradeoff(
    cli: &Cli,
    grid: &GridArgs,
    goal: usize,
    betas: &str,
    solver: &SolverArgs,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(goal)?;
    let mdp = Mdp::build_gridworld(&spec)?;
    let beta_values = parse_betas(betas)?;
    let config = solver.config(*beta_values.first().expect("nonempty betas"))?;
    let echo = merge(
        grid.config_fields(),
        merge(
            solver.config_fields(),
            json!({ "goal": goal, "betas": betas }),
        ),
    );
    let curve = tradeoff_curve(&mdp, &beta_values, &config)?;
    let mut w = csv_writer(&cli.out.join("tradeoff.csv"), "tradeoff", &echo)?;
    use std::io::Write as _;
    writeln!(w, "beta,expected_value,expected_information")?;
    for p in &curve {
        writeln!(w, "{},{},{}", p.beta, p.expected_value, p.expected_information)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    cli: &Cli,
    grid: &GridArgs,
    goal: usize,
    beta: f64,
    start: usize,
    count: usize,
    seed: u64,
    max_steps: Option<usize>,
    solver: &SolverArgs,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(goal)?;
    let mdp = Mdp::build_gridworld(&spec)?;
    let config = solver.config(beta)?;
    let max_steps = max_steps.unwrap_or_else(|| core::default_max_steps(mdp.n_states()));
    let echo = merge(
        grid.config_fields(),
        merge(
            solver.config_fields(),
            json!({
                "goal": goal,
                "beta": beta,
                "start": start,
                "count": count,
                "seed": seed,
                "max_steps": max_steps,
            }),
        ),
    );
    let result = core::solve(&mdp, &config)?;
    let stats = sample_trajectories(&mdp, &result.policy, start, count, seed, max_steps)?;
    let mut w = csv_writer(&cli.out.join("visitation.csv"), "sample", &echo)?;
    use std::io::Write as _;
    writeln!(
        w,
        "# trajectories: {} completed: {} truncated: {} mean_length: {}",
        stats.trajectory_count, stats.completed, stats.truncated, stats.mean_length
    )?;
    writeln!(w, "state_index,proportion")?;
    for (s, &p) in stats.pass_through.iter().enumerate() {
        writeln!(w, "{s},{p}")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_geodesics(
    cli: &Cli,
    grid: &GridArgs,
    start: usize,
    goal: usize,
) -> anyhow::Result<ExitCode> {
    let spec = grid.spec(goal)?;
    if start >= spec.n_states() {
        return Err(CoreError::StateOutOfRange {
            index: start,
            n_states: spec.n_states(),
        }
        .into());
    }
    let echo = merge(
        grid.config_fields(),
        json!({ "start": start, "goal": goal }),
    );
    let d = value_distance_matrix(&spec)?;
    let states = find_value_geodesics(&d, start, goal, 1e-6)?;
    let mut w = csv_writer(&cli.out.join("geodesics.csv"), "geodesics", &echo)?;
    use std::io::Write as _;
    writeln!(w, "state")?;
    for s in &states {
        writeln!(w, "{s}")?;
    }
    drop(w);
    write_matrix_csv(&cli.out.join("value_matrix.csv"), "geodesics", &echo, &d)?;
    Ok(ExitCode::SUCCESS)
}
