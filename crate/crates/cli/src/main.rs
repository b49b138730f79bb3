use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reach_avoid_cli::config::{parse_epsilon, ExperimentConfig};
use reach_avoid_cli::run::{read_json, write_json, write_run, write_sweep};
use reach_avoid_cli::{load_config_with, run_eval, run_oracle, run_solve, run_sweep, CliError, Overrides, RunReport};
use reach_avoid_core::gridworld::PConvention;
use reach_avoid_core::validate_game;

#[derive(Parser)]
#[command(name = "reachavoid", version, about = "Multi-player reach-avoid games on grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run iterative best response and write report.json and metrics.csv.
    Solve(Common),
    /// Evaluate a joint policy (shortest paths unless --policies is given).
    Eval(WithPolicies),
    /// Nash certificate and global-feedback optimum.
    Oracle(WithPolicies),
    /// Run every cell of the config's sweep and write summary.csv.
    Sweep(Common),
    /// Check the config and scenario without solving.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Success,
    Failure,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// paper | off | custom b,m,c
    #[arg(long, num_args = 1..=2, value_name = "SCHEDULE")]
    epsilon: Vec<String>,
    #[arg(long, value_enum)]
    p_convention: Option<Convention>,
    /// Monte-Carlo trials per evaluation.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// IBR convergence tolerance on the potential.
    #[arg(long)]
    tol: Option<f64>,
    /// Attach a Nash certificate to solve reports.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct WithPolicies {
    #[command(flatten)]
    common: Common,
    /// Report whose final policies are evaluated.
    #[arg(long)]
    policies: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let epsilon = match self.epsilon.as_slice() {
            [] => None,
            parts => Some(parse_epsilon(&parts.join(" ")).map_err(|m| CliError::validation("--epsilon", m))?),
        };
        Ok(Overrides {
            seed: self.seed,
            out: self.out.clone(),
            epsilon,
            convention: self.p_convention.map(|c| match c {
                Convention::Success => PConvention::Success,
                Convention::Failure => PConvention::Failure,
            }),
            trials: self.trials,
            max_iterations: self.max_iters,
            tolerance: self.tol,
            oracle: self.oracle,
        })
    }

    fn load(&self) -> Result<ExperimentConfig, CliError> {
        load_config_with(&self.config, &self.overrides()?)
    }
}

fn load_policies(path: &Option<PathBuf>) -> Result<Option<Vec<reach_avoid_core::Policy>>, CliError> {
    path.as_ref().map(|p| read_json::<RunReport>(p).map(|r| r.policies)).transpose()
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.load()?;
            let report = run_solve(&cfg)?;
            write_run(&report, &cfg.output.dir)?;
            let last = report.trace.potentials().last().copied().unwrap_or_default();
            println!(
                "{} best responses, F = {last:.6}, converged = {}; wrote {}",
                report.trace.records.len(),
                report.converged,
                cfg.output.dir.display()
            );
            if let Some(nash) = &report.oracle {
                println!("nash certificate: {} improving deviations", nash.deviations.len());
            }
            Ok(if report.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Eval(args) => {
            let cfg = args.common.load()?;
            let report = run_eval(&cfg, load_policies(&args.policies)?)?;
            std::fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
            write_json(&report, &cfg.output.dir.join("eval.json"))?;
            println!("{}", serde_json::to_string_pretty(&report.metrics).expect("serializable"));
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle(args) => {
            let cfg = args.common.load()?;
            let report = run_oracle(&cfg, load_policies(&args.policies)?)?;
            std::fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
            write_json(&report, &cfg.output.dir.join("oracle.json"))?;
            println!(
                "F = {:.6}, global optimum = {:.6}, improving deviations = {}",
                report.potential,
                report.global_optimum,
                report.nash.deviations.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let outcome = run_sweep(&cfg)?;
            let path = write_sweep(&outcome, &cfg.output.dir)?;
            let failed = outcome.cells.iter().filter(|c| c.error.is_some()).count();
            println!("{} cells ({failed} failed); wrote {}", outcome.cells.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let cfg = args.load()?;
            let game = cfg.game(cfg.seed)?;
            let report = validate_game(&game);
            for v in &report.violations {
                println!("violation: {v}");
            }
            if !report.is_valid() {
                return Ok(ExitCode::from(3));
            }
            println!(
                "valid: {} players, {} states, horizon {}",
                game.player_count(),
                game.state_count(),
                game.horizon()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
