//! Experiment orchestration: solve, evaluate, verify and sweep, plus the
//! JSON and CSV files each one leaves behind.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use reach_avoid_core::gridworld::{random_assignment, scenario_game, Assignment};
use reach_avoid_core::ibr::{run_ibr, run_ibr_with, IbrTrace};
use reach_avoid_core::metrics::{evaluate, reach_baseline, MetricMethod, MetricsRecord, EXACT_METRIC_BOUND};
use reach_avoid_core::oracle::{global_dp, verify_nash, NashReport};
use reach_avoid_core::{potential_value, shortest_path_policy, GameSpec, Policy};
use serde::{Deserialize, Serialize};

use crate::config::{grid_shape, ExperimentConfig, MetricChoice, Scenario, SCHEMA_VERSION, SWEEP_TOLERANCE};
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// Fully resolved configuration that produced this report.
    pub config: ExperimentConfig,
    /// Starts and targets when the scenario is a generated grid.
    pub assignment: Option<Assignment>,
    pub converged: bool,
    /// Per-response potentials and wall-clock seconds.
    pub trace: IbrTrace,
    /// `metrics[0]` is the initial joint policy, `metrics[k]` follows response `k`.
    pub metrics: Vec<MetricsRecord>,
    /// Denominator of the reach reduction.
    pub reach_baseline: f64,
    pub policies: Vec<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<NashReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub metrics: MetricsRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub config: ExperimentConfig,
    pub potential: f64,
    pub nash: NashReport,
    /// Optimum over global-feedback joint policies; an upper bound on `potential`.
    pub global_optimum: f64,
}

/// The scenario game plus the grid assignment that produced it, if any.
pub fn build_scenario(cfg: &ExperimentConfig) -> Result<(GameSpec, Option<Assignment>)> {
    match &cfg.scenario {
        Scenario::Grid(g) => {
            let spec = g.spec(cfg.seed);
            let assignment = random_assignment(&spec).map_err(|e| CliError::validation("scenario.grid", e))?;
            let game = scenario_game(&spec, &assignment)?;
            Ok((game, Some(assignment)))
        }
        Scenario::File(_) => Ok((cfg.game(cfg.seed)?, None)),
    }
}

fn shortest_joint(game: &GameSpec) -> Vec<Policy> {
    game.players()
        .iter()
        .enumerate()
        .map(|(i, m)| shortest_path_policy(m, i, game.horizon()).policy)
        .collect()
}

/// Resolves `auto` against the exact-metric guard.
pub fn metric_method(cfg: &ExperimentConfig, game: &GameSpec) -> MetricMethod {
    let mc = MetricMethod::MonteCarlo { trials: cfg.evaluation.trials, seed: cfg.seed };
    let joint = (game.state_count() as f64).powi(game.player_count() as i32);
    match cfg.evaluation.method {
        MetricChoice::Exact => MetricMethod::Exact,
        MetricChoice::MonteCarlo => mc,
        MetricChoice::Auto if joint <= EXACT_METRIC_BOUND as f64 => MetricMethod::Exact,
        MetricChoice::Auto => {
            eprintln!(
                "warning: joint space of {joint} states exceeds the exact-metric bound; using Monte-Carlo"
            );
            mc
        }
    }
}

/// Runs IBR and evaluates the metrics after every best response.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<RunReport> {
    let (game, assignment) = build_scenario(cfg)?;
    let method = metric_method(cfg, &game);
    let baseline = reach_baseline(&game, &shortest_joint(&game))?;
    let ibr = cfg.solver.ibr(cfg.seed);
    let initial = reach_avoid_core::ibr::initial_policies(&game, &ibr);
    let mut metrics = vec![evaluate(&game, &initial, baseline, method, 0)?];
    let outcome = run_ibr_with(&game, &ibr, Some(initial), |record, pis| {
        metrics.push(evaluate(&game, pis, baseline, method, record.iteration)?);
        Ok(())
    })?;
    let oracle = if cfg.oracle.enabled {
        Some(verify_nash(&game, &outcome.policies, cfg.oracle.tolerance, cfg.oracle.strategy)?)
    } else {
        None
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        assignment,
        converged: outcome.converged,
        trace: outcome.trace,
        metrics,
        reach_baseline: baseline,
        policies: outcome.policies,
        oracle,
    })
}

fn policies_or_default(game: &GameSpec, policies: Option<Vec<Policy>>) -> Result<Vec<Policy>> {
    let pis = policies.unwrap_or_else(|| shortest_joint(game));
    game.check_joint_policy(&pis)?;
    Ok(pis)
}

/// Metrics of `policies`, or of the shortest-path joint policy.
pub fn run_eval(cfg: &ExperimentConfig, policies: Option<Vec<Policy>>) -> Result<EvalReport> {
    let (game, _) = build_scenario(cfg)?;
    let pis = policies_or_default(&game, policies)?;
    let baseline = reach_baseline(&game, &shortest_joint(&game))?;
    let metrics = evaluate(&game, &pis, baseline, metric_method(cfg, &game), 0)?;
    Ok(EvalReport { config: cfg.clone(), metrics })
}

/// Nash certificate and global-feedback optimum for `policies`, or for a
/// fresh IBR solution when none are given.
pub fn run_oracle(cfg: &ExperimentConfig, policies: Option<Vec<Policy>>) -> Result<OracleReport> {
    let (game, _) = build_scenario(cfg)?;
    let global_optimum = global_dp(&game)?.value;
    let pis = match policies {
        Some(p) => policies_or_default(&game, Some(p))?,
        None => run_ibr(&game, &cfg.solver.ibr(cfg.seed), None)?.policies,
    };
    let nash = verify_nash(&game, &pis, cfg.oracle.tolerance, cfg.oracle.strategy)?;
    Ok(OracleReport { config: cfg.clone(), potential: potential_value(&game, &pis)?, nash, global_optimum })
}

pub const METRICS_HEADER: [&str; 6] =
    ["iteration", "player", "potential", "collision_likelihood", "reach_reduction", "seconds"];

/// One row per best response. `potential` is the exact potential; the two
/// metric columns follow the configured evaluation method.
pub fn write_metrics_csv(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for (record, m) in report.trace.records.iter().zip(&report.metrics[1..]) {
        w.write_record([
            record.iteration.to_string(),
            record.player.to_string(),
            record.potential.to_string(),
            m.collision_likelihood.to_string(),
            m.reach_reduction.to_string(),
            record.seconds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `report.json` and `metrics.csv` into `dir`.
pub fn write_run(report: &RunReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(report, &dir.join("report.json"))?;
    write_metrics_csv(report, &dir.join("metrics.csv"))
}

/// One (state size, players, p, trial) sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub state_size: usize,
    pub players: usize,
    pub p: f64,
    pub trial: usize,
    pub seed: u64,
    pub mean_seconds: Option<f64>,
    /// Responses until a full round moves `F` by less than the sweep tolerance.
    pub iterations_to_tol: Option<usize>,
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<RunReport>,
}

impl CellResult {
    pub fn label(&self) -> String {
        format!("s{}_n{}_p{}_k{}", self.state_size, self.players, self.p, self.trial)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub state_size: usize,
    pub players: usize,
    pub p: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub mean_seconds_per_iteration: Option<f64>,
    pub mean_iterations_to_tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

/// Configs for every sweep cell. Without a sweep section the config itself
/// is the single cell.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<Vec<(usize, usize, f64, usize, ExperimentConfig)>> {
    let Scenario::Grid(base) = &cfg.scenario else {
        return Err(CliError::validation("scenario", "sweeps need a grid scenario"));
    };
    let mut single = cfg.clone();
    single.sweep = None;
    let Some(sweep) = &cfg.sweep else {
        return Ok(vec![(base.rows * base.cols, base.players, base.p, 0, single)]);
    };
    let mut cells = Vec::new();
    for &states in &sweep.state_sizes {
        for &players in &sweep.players {
            for &p in &sweep.p {
                for trial in 0..sweep.trials {
                    let (rows, cols) = grid_shape(states);
                    let mut cell = single.clone();
                    cell.seed = cfg.seed.wrapping_add(trial as u64);
                    if let Scenario::Grid(g) = &mut cell.scenario {
                        g.rows = rows;
                        g.cols = cols;
                        g.players = players;
                        g.p = p;
                    }
                    cells.push((states, players, p, trial, cell));
                }
            }
        }
    }
    Ok(cells)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Runs every cell; a failing cell is recorded and the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let cells: Vec<CellResult> = sweep_cells(cfg)?
        .into_par_iter()
        .map(|(state_size, players, p, trial, cell)| {
            let seed = cell.seed;
            let base = CellResult {
                state_size,
                players,
                p,
                trial,
                seed,
                mean_seconds: None,
                iterations_to_tol: None,
                error: None,
                report: None,
            };
            match run_solve(&cell) {
                Ok(report) => CellResult {
                    mean_seconds: mean(report.trace.records.iter().map(|r| r.seconds)),
                    iterations_to_tol: report.trace.responses_to_tolerance(players, SWEEP_TOLERANCE),
                    report: Some(report),
                    ..base
                },
                Err(e) => CellResult { error: Some(e.to_string()), ..base },
            }
        })
        .collect();

    let mut summary: Vec<SummaryRow> = Vec::new();
    for cell in &cells {
        let key = (cell.state_size, cell.players, cell.p);
        if summary.last().is_some_and(|r| (r.state_size, r.players, r.p) == key) {
            continue;
        }
        let group: Vec<&CellResult> =
            cells.iter().filter(|c| (c.state_size, c.players, c.p) == key).collect();
        let ok: Vec<&&CellResult> = group.iter().filter(|c| c.error.is_none()).collect();
        summary.push(SummaryRow {
            state_size: key.0,
            players: key.1,
            p: key.2,
            trials_ok: ok.len(),
            trials_failed: group.len() - ok.len(),
            mean_seconds_per_iteration: mean(ok.iter().filter_map(|c| c.mean_seconds)),
            mean_iterations_to_tol: mean(ok.iter().filter_map(|c| c.iterations_to_tol.map(|k| k as f64))),
        });
    }
    Ok(SweepOutcome { cells, summary })
}

pub const SUMMARY_HEADER: [&str; 7] = [
    "state_size",
    "players",
    "p",
    "trials_ok",
    "trials_failed",
    "mean_seconds_per_iteration",
    "mean_iterations_to_tol",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `summary.csv`, `cells.json`, and `cells/<label>/` run outputs.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let summary_path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in &outcome.summary {
        w.write_record([
            r.state_size.to_string(),
            r.players.to_string(),
            r.p.to_string(),
            r.trials_ok.to_string(),
            r.trials_failed.to_string(),
            opt(r.mean_seconds_per_iteration),
            opt(r.mean_iterations_to_tol),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(&summary_path, e))?;
    write_json(&outcome.cells, &dir.join("cells.json"))?;
    for cell in &outcome.cells {
        if let Some(report) = &cell.report {
            write_run(report, &dir.join("cells").join(cell.label()))?;
        }
    }
    Ok(summary_path)
}
