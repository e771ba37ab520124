//! `nashgrid`: scenario generation, equilibrium solves, verification and the congestion
//! experiment from the command line.
//!
//! Exit statuses: 0 success, 1 I/O or usage failure, 2 invalid configuration or scenario
//! file, 3 solver non-convergence, 4 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use nashgrid_core::equilibrium::EquilibriumError;
use nashgrid_core::uncertainty::{
    gaussian_rank_correlation, reduce_scenarios, sample_copula_scenarios, DEFAULT_SAMPLE_COUNT,
};
use nashgrid_core::{
    assemble_mcp, bundled_pjm5_case, bundled_pjm5_scenarios, congestion_experiment,
    kkt_residual, load_market_config, load_scenarios, report, solve_equilibrium,
    verify_invariants, verify_no_profitable_deviation, write_scenarios, DeviationGrid,
    EquilibriumSolution, MarketConfig, PlayerWeights, ScenarioSet, SolveOptions,
};

/// Largest relative unilateral gain accepted by `verify`.
const DEVIATION_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "nashgrid", version, about = "Forward and day-ahead electricity market equilibrium")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample correlated wind output, reduce it to the configured scenario count and write it.
    Scenarios {
        #[command(flatten)]
        market: MarketArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Raw samples drawn before reduction.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
        samples: usize,
        /// Scenario file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the equilibrium and write the solution document and tables.
    Solve {
        #[command(flatten)]
        market: MarketArgs,
        #[command(flatten)]
        input: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution document: KKT residual, unilateral deviations and invariants.
    Verify {
        /// Solution document written by `solve`.
        solution: PathBuf,
        #[command(flatten)]
        market: MarketArgs,
        /// Largest accepted KKT residual.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Solve at the configured line limits and at scaled limits, then compare.
    CongestionExperiment {
        #[command(flatten)]
        market: MarketArgs,
        #[command(flatten)]
        input: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Factor applied to every finite line limit.
        #[arg(long, default_value_t = 0.7)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct MarketArgs {
    /// Market configuration (TOML); the bundled 5-bus case when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file; when omitted the bundled reference set is used for the bundled case,
    /// otherwise scenarios are generated from `--seed`.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SolverArgs {
    /// Weight on each new best response, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Best-response cycle cap.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Target KKT residual of the Newton polish.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            damping: self.damping,
            max_cycles: self.max_iter,
            kkt_tol: self.tol,
            ..SolveOptions::default()
        }
    }
}

enum Failure {
    Io(anyhow::Error),
    Schema(anyhow::Error),
    Solve(anyhow::Error),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Solve(_) => 3,
            Failure::Verify(_) => 4,
        }
    }
}

fn io<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Io(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(io)
}

fn load_config(args: &MarketArgs) -> Result<(MarketConfig, bool), Failure> {
    match &args.config {
        None => Ok((bundled_pjm5_case(), true)),
        Some(path) => {
            let text = read(path)?;
            load_market_config(&text)
                .map(|c| (c, false))
                .map_err(|e| Failure::Schema(anyhow!("{}: {e}", path.display())))
        }
    }
}

fn load_input(args: &ScenarioArgs, config: &MarketConfig, bundled: bool) -> Result<ScenarioSet, Failure> {
    match &args.scenarios {
        Some(path) => {
            let text = read(path)?;
            load_scenarios(&text, config).map_err(|e| Failure::Schema(anyhow!("{}: {e}", path.display())))
        }
        None if bundled && args.seed == 1 => Ok(bundled_pjm5_scenarios()),
        None => generate(config, DEFAULT_SAMPLE_COUNT, args.seed).map(|(set, _)| set),
    }
}

fn generate(config: &MarketConfig, samples: usize, seed: u64) -> Result<(ScenarioSet, Vec<Vec<f64>>), Failure> {
    let raw = sample_copula_scenarios(config, samples, seed).map_err(|e| Failure::Schema(e.into()))?;
    let set = reduce_scenarios(&raw, config.scenario_count).map_err(|e| Failure::Schema(e.into()))?;
    Ok((set, raw))
}

fn weights(config: &MarketConfig, set: &ScenarioSet) -> Result<PlayerWeights, Failure> {
    PlayerWeights::for_config(config, set).map_err(|e| Failure::Schema(e.into()))
}

fn solve_failure(e: EquilibriumError) -> Failure {
    match e {
        EquilibriumError::NonConvergence { .. } | EquilibriumError::Oscillation { .. } => {
            Failure::Solve(e.into())
        }
        EquilibriumError::Dimension(_) => Failure::Schema(e.into()),
        other => Failure::Solve(other.into()),
    }
}

fn write_solution(dir: &Path, sol: &EquilibriumSolution) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(io)?;
    write(&dir.join("solution.json"), &sol.to_json())?;
    for (name, table) in report::all_tables(sol) {
        write(&dir.join(name), &table)?;
    }
    Ok(())
}

fn cmd_scenarios(market: &MarketArgs, seed: u64, samples: usize, out: &Path) -> Result<(), Failure> {
    let (config, _) = load_config(market)?;
    let (set, raw) = generate(&config, samples, seed)?;
    write(out, &write_scenarios(&set, &config))?;
    println!("wrote {} scenarios to {}", set.count(), out.display());
    println!("area\tmean_mw\tmax_mw\tcapacity_mw");
    let caps = config.wind_capacity_by_area();
    let means = set.area_means();
    for (k, area) in config.areas.iter().enumerate() {
        if caps[k] > 0.0 {
            let max = set.outputs.iter().map(|r| r[k]).fold(0.0, f64::max);
            println!("{}\t{:.3}\t{:.3}\t{:.1}", area.id, means[k], max, caps[k]);
        }
    }
    println!("plant_a\tplant_b\tconfigured\tsampled");
    let plants = &config.wind_plants;
    for a in 0..plants.len() {
        for b in a + 1..plants.len() {
            let r = gaussian_rank_correlation(&raw, plants[a].area, plants[b].area);
            println!(
                "{}\t{}\t{:.3}\t{:.3}",
                plants[a].id, plants[b].id, config.wind_correlation[a][b], r
            );
        }
    }
    Ok(())
}

fn cmd_solve(market: &MarketArgs, input: &ScenarioArgs, solver: &SolverArgs, out: &Path) -> Result<(), Failure> {
    let (config, bundled) = load_config(market)?;
    let set = load_input(input, &config, bundled)?;
    let w = weights(&config, &set)?;
    let sol = solve_equilibrium(&config, &set, &w, &solver.options()).map_err(|e| {
        if let EquilibriumError::NonConvergence { trace, .. } | EquilibriumError::Oscillation { trace, .. } = &e {
            let text: String = trace.iter().enumerate().map(|(k, v)| format!("{}\t{v:.6e}\n", k + 1)).collect();
            let _ = fs::create_dir_all(out);
            let _ = fs::write(out.join("diagnostics.tsv"), format!("cycle\tchange\n{text}"));
        }
        solve_failure(e)
    })?;
    write_solution(out, &sol)?;
    println!(
        "converged: {} best-response cycles, {} Newton steps, KKT residual {:.3e}",
        sol.diagnostics.best_response_cycles, sol.diagnostics.newton_iterations, sol.diagnostics.kkt_residual
    );
    print!("{}", report::producer_table(&sol));
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(path: &Path, market: &MarketArgs, tol: f64) -> Result<(), Failure> {
    let text = read(path)?;
    let sol = EquilibriumSolution::from_json(&text)
        .map_err(|e| Failure::Schema(anyhow!("{}: {e}", path.display())))?;
    let (config, _) = load_config(market)?;
    if sol.config_hash != config.content_hash() {
        return Err(Failure::Verify(format!(
            "config hash mismatch: solution was computed for a different configuration ({} vs {})",
            sol.config_hash,
            config.content_hash()
        )));
    }
    let system = assemble_mcp(&config, &sol.scenarios, &sol.weights)
        .map_err(|e| Failure::Verify(format!("dimension mismatch: {e}")))?;
    let kkt = kkt_residual(&sol, &system).map_err(|e| Failure::Verify(format!("dimension mismatch: {e}")))?;
    let mut failures = Vec::new();
    println!("block\tresidual");
    for (block, v) in &kkt.blocks {
        println!("{block}\t{v:.3e}");
        if *v > tol {
            failures.push(format!("kkt block {block} residual {v:.3e} exceeds {tol:.1e}"));
        }
    }
    println!("overall\t{:.3e}", kkt.overall);
    let dev = verify_no_profitable_deviation(&sol, &config, &sol.scenarios, &sol.weights, &DeviationGrid::default())
        .map_err(|e| Failure::Verify(e.to_string()))?;
    print!("{}", dev.to_table());
    if dev.max_relative_improvement > DEVIATION_TOL {
        failures.push(format!(
            "profitable deviation: relative improvement {:.3e}",
            dev.max_relative_improvement
        ));
    }
    failures.extend(verify_invariants(&sol, &config));
    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Failure::Verify(failures.join("\n")))
    }
}

fn cmd_experiment(
    market: &MarketArgs,
    input: &ScenarioArgs,
    solver: &SolverArgs,
    scale: f64,
    out: &Path,
) -> Result<(), Failure> {
    let (config, bundled) = load_config(market)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Failure::Io(anyhow!("--scale must be positive, got {scale}")));
    }
    let set = load_input(input, &config, bundled)?;
    let w = weights(&config, &set)?;
    let rep = congestion_experiment(&config, &set, &w, scale, &solver.options()).map_err(solve_failure)?;
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(io)?;
    let table = rep.to_table();
    write(&out.join("congestion.tsv"), &table)?;
    for (leg, res) in [("base", &rep.base), ("scaled", &rep.scaled)] {
        if let Ok(sol) = res {
            write_solution(&out.join(leg), sol)?;
        }
    }
    print!("{table}");
    match (&rep.base, &rep.scaled) {
        (Err(e), _) => Err(Failure::Solve(anyhow!("base leg failed: {e}"))),
        (_, Err(e)) => Err(Failure::Solve(anyhow!("scaled leg failed: {e}"))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scenarios { market, seed, samples, out } => cmd_scenarios(market, *seed, *samples, out),
        Command::Solve { market, input, solver, out } => cmd_solve(market, input, solver, out),
        Command::Verify { solution, market, tol } => cmd_verify(solution, market, *tol),
        Command::CongestionExperiment { market, input, solver, scale, out } => {
            cmd_experiment(market, input, solver, *scale, out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Io(e) | Failure::Schema(e) | Failure::Solve(e) => format!("{e:#}"),
                Failure::Verify(s) => s.clone(),
            };
            let kind = match f {
                Failure::Io(_) => "error",
                Failure::Schema(_) => "invalid input",
                Failure::Solve(_) => "solver failed",
                Failure::Verify(_) => "verification failed",
            };
            eprintln!("{kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}
