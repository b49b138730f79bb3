//! Experiment configuration: JSON on disk, defaults filled in on load, and
//! command-line overrides applied before validation.

use std::fs;
use std::path::{Path, PathBuf};

use reach_avoid_core::gridworld::{GridSpec, PConvention};
use reach_avoid_core::ibr::{IbrConfig, InitialPolicy};
use reach_avoid_core::oracle::DeviationStrategy;
use reach_avoid_core::{validate_game, EpsilonSchedule, GameSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Iteration counts in sweeps are measured to this potential change.
pub const SWEEP_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub output: OutputSettings,
    /// Master seed for scenario layout, solver randomness and simulation.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Grid(GridScenario),
    /// JSON-serialized game, relative to the config file.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridScenario {
    pub rows: usize,
    pub cols: usize,
    pub players: usize,
    pub horizon: usize,
    pub p: f64,
    #[serde(default)]
    pub convention: PConvention,
}

impl GridScenario {
    pub fn spec(&self, seed: u64) -> GridSpec {
        GridSpec {
            rows: self.rows,
            cols: self.cols,
            p: self.p,
            convention: self.convention,
            players: self.players,
            horizon: self.horizon,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub epsilon: EpsilonSchedule,
    pub order: Option<Vec<usize>>,
    pub initial: InitialPolicy,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = IbrConfig::default();
        Self {
            max_iterations: d.max_iterations,
            convergence_tol: d.convergence_tol,
            epsilon: d.epsilon,
            order: d.order,
            initial: d.initial,
        }
    }
}

impl SolverSettings {
    pub fn ibr(&self, seed: u64) -> IbrConfig {
        IbrConfig {
            max_iterations: self.max_iterations,
            convergence_tol: self.convergence_tol,
            epsilon: self.epsilon,
            order: self.order.clone(),
            initial: self.initial,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    /// Exact when the joint space fits the exact-metric guard, else Monte-Carlo.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    /// Monte-Carlo trials per evaluation.
    pub trials: usize,
    pub method: MetricChoice,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self { trials: 50, method: MetricChoice::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    /// Run the Nash certificate after solving.
    pub enabled: bool,
    pub tolerance: f64,
    pub strategy: DeviationStrategy,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { enabled: false, tolerance: 1e-10, strategy: DeviationStrategy::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Cross-product of grid parameters, each cell repeated over `trials` seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub state_sizes: Vec<usize>,
    pub players: Vec<usize>,
    pub p: Vec<f64>,
    #[serde(default = "default_sweep_trials")]
    pub trials: usize,
}

fn default_sweep_trials() -> usize {
    5
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub epsilon: Option<EpsilonSchedule>,
    pub convention: Option<PConvention>,
    pub trials: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub oracle: bool,
}

/// Grid shape for a sweep state count: the most square `rows × cols`
/// factorization with `rows ≤ cols`, e.g. 40 → 5×8, 60 → 6×10.
pub fn grid_shape(states: usize) -> (usize, usize) {
    let rows = (1..=states).take_while(|r| r * r <= states).filter(|r| states.is_multiple_of(*r)).last().unwrap_or(1);
    (rows, states / rows)
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(eps) = o.epsilon {
            self.solver.epsilon = eps;
        }
        if let (Some(c), Scenario::Grid(g)) = (o.convention, &mut self.scenario) {
            g.convention = c;
        }
        if let Some(k) = o.trials {
            self.evaluation.trials = k;
        }
        if let Some(m) = o.max_iterations {
            self.solver.max_iterations = m;
        }
        if let Some(tol) = o.tolerance {
            self.solver.convergence_tol = tol;
        }
        if o.oracle {
            self.oracle.enabled = true;
        }
    }

    /// Builds the scenario game for `seed`.
    pub fn game(&self, seed: u64) -> Result<GameSpec> {
        match &self.scenario {
            Scenario::Grid(g) => reach_avoid_core::gridworld::random_scenario(&g.spec(seed))
                .map_err(|e| CliError::validation("scenario.grid", e)),
            Scenario::File(path) => load_game(path),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let game = self.game(self.seed)?;
        self.solver
            .ibr(self.seed)
            .validate(game.player_count(), game.horizon())
            .map_err(|e| CliError::validation("solver", e))?;
        if self.evaluation.trials == 0 {
            return Err(CliError::validation("evaluation.trials", "must be at least 1"));
        }
        if !(self.oracle.tolerance >= 0.0) {
            return Err(CliError::validation("oracle.tolerance", "must be nonnegative"));
        }
        if let Some(sweep) = &self.sweep {
            self.validate_sweep(sweep)?;
        }
        Ok(())
    }

    fn validate_sweep(&self, sweep: &SweepSettings) -> Result<()> {
        let Scenario::Grid(base) = &self.scenario else {
            return Err(CliError::validation("sweep", "sweeps need a grid scenario"));
        };
        for (field, empty) in [
            ("sweep.state_sizes", sweep.state_sizes.is_empty()),
            ("sweep.players", sweep.players.is_empty()),
            ("sweep.p", sweep.p.is_empty()),
        ] {
            if empty {
                return Err(CliError::validation(field, "must list at least one value"));
            }
        }
        if sweep.trials == 0 {
            return Err(CliError::validation("sweep.trials", "must be at least 1"));
        }
        for &states in &sweep.state_sizes {
            for &players in &sweep.players {
                for &p in &sweep.p {
                    let (rows, cols) = grid_shape(states);
                    let cell = GridScenario { rows, cols, players, p, ..base.clone() };
                    cell.spec(self.seed).validate().map_err(|e| {
                        CliError::validation(
                            "sweep",
                            format!("cell (states {states}, players {players}, p {p}): {e}"),
                        )
                    })?;
                }
            }
        }
        Ok(())
    }
}

/// Reads a JSON game and checks every model invariant.
pub fn load_game(path: &Path) -> Result<GameSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let game: GameSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    let report = validate_game(&game);
    if let Some(v) = report.violations.first() {
        let more = report.violations.len() - 1;
        let suffix = if more > 0 { format!(" (and {more} more)") } else { String::new() };
        return Err(CliError::validation("scenario.file", format!("{v}{suffix}")));
    }
    Ok(game)
}

/// Parses, resolves relative paths against the config file, applies
/// overrides and validates.
pub fn load_config_with(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    if let Scenario::File(file) = &mut cfg.scenario {
        if file.is_relative() {
            if let Some(dir) = path.parent() {
                *file = dir.join(&*file);
            }
        }
    }
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    load_config_with(path, &Overrides::default())
}

/// `paper`, `off`, or `custom b,m,c` (also `custom=b,m,c` or bare `b,m,c`).
pub fn parse_epsilon(text: &str) -> std::result::Result<EpsilonSchedule, String> {
    let text = text.trim();
    match text {
        "paper" => return Ok(EpsilonSchedule::paper()),
        "off" => return Ok(EpsilonSchedule::Off),
        _ => {}
    }
    let body = text
        .strip_prefix("custom")
        .map(|r| r.trim_start_matches(['=', ' ', ':']))
        .unwrap_or(text);
    let parts: Vec<f64> = body
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("cannot parse epsilon schedule `{text}`"))?;
    match parts[..] {
        [base, slope, offset] => Ok(EpsilonSchedule::Power { base, slope, offset }),
        _ => Err(format!("custom epsilon needs three numbers b,m,c, got `{text}`")),
    }
}
