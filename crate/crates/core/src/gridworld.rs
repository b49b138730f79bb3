//! Grid-world motion-planning scenarios.
//!
//! Cells are indexed `row · cols + col` with row 0 at the top. Actions are
//! up, down, left, right. The intended cell is reached with the success
//! probability; otherwise a uniformly random in-grid neighbor is reached.
//! A move off the grid has "stay put" as its intended outcome.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::{GameSpec, PlayerMdp};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const ACTIONS: usize = 4;

/// How the stochasticity `p` maps to the chance of the intended move.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PConvention {
    /// Intended move succeeds with probability `p`.
    #[default]
    Success,
    /// Intended move succeeds with probability `1 - p`.
    Failure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub p: f64,
    #[serde(default)]
    pub convention: PConvention,
    pub players: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn state_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn success_probability(&self) -> f64 {
        match self.convention {
            PConvention::Success => self.p,
            PConvention::Failure => 1.0 - self.p,
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, state: usize) -> (usize, usize) {
        (state / self.cols, state % self.cols)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return config("grid must have at least one row and one column");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return config(format!("stochasticity p = {} outside [0, 1]", self.p));
        }
        if self.players == 0 {
            return config("grid scenario needs at least one player");
        }
        if self.horizon == 0 {
            return config("horizon must be at least 1");
        }
        if self.state_count() < 2 * self.players {
            return config(format!(
                "{}x{} grid cannot host {} distinct starts and targets",
                self.rows, self.cols, self.players
            ));
        }
        if self.players > self.rows {
            return config(format!(
                "{} players do not fit in a left column of {} rows",
                self.players, self.rows
            ));
        }
        Ok(())
    }

    fn neighbors(&self, state: usize) -> Vec<usize> {
        let (r, c) = self.coords(state);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.cell(r - 1, c));
        }
        if r + 1 < self.rows {
            out.push(self.cell(r + 1, c));
        }
        if c > 0 {
            out.push(self.cell(r, c - 1));
        }
        if c + 1 < self.cols {
            out.push(self.cell(r, c + 1));
        }
        out
    }

    /// Intended destination of `action`, or `state` itself at the boundary.
    pub fn intended(&self, state: usize, action: usize) -> usize {
        let (r, c) = self.coords(state);
        match action {
            UP if r > 0 => self.cell(r - 1, c),
            DOWN if r + 1 < self.rows => self.cell(r + 1, c),
            LEFT if c > 0 => self.cell(r, c - 1),
            RIGHT if c + 1 < self.cols => self.cell(r, c + 1),
            _ => state,
        }
    }
}

/// Shared 4-action grid dynamics. The returned MDP starts at cell 0 and
/// targets the last cell; scenarios replace both per player.
pub fn build_grid_mdp(spec: &GridSpec) -> Result<PlayerMdp> {
    spec.validate()?;
    let n = spec.state_count();
    let success = spec.success_probability();
    let mut kernel = Vec::with_capacity(n * ACTIONS * n);
    for s in 0..n {
        let nbrs = spec.neighbors(s);
        for a in 0..ACTIONS {
            let mut row = vec![0.0; n];
            row[spec.intended(s, a)] += success;
            if nbrs.is_empty() {
                row[s] += 1.0 - success;
            } else {
                let slip = (1.0 - success) / nbrs.len() as f64;
                for &nb in &nbrs {
                    row[nb] += slip;
                }
            }
            kernel.extend(row);
        }
    }
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    Ok(PlayerMdp::from_flat(n, ACTIONS, kernel, initial, [n - 1]))
}

/// Start and target cell of every player.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub starts: Vec<usize>,
    pub targets: Vec<usize>,
}

/// Draws distinct left-column starts and right-column targets. One player
/// always starts top-left and is sent bottom-right.
pub fn random_assignment(spec: &GridSpec) -> Result<Assignment> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.players;
    let last_row = spec.rows - 1;
    let last_col = spec.cols - 1;

    let mut start_rows: Vec<usize> = (1..spec.rows).collect();
    start_rows.shuffle(&mut rng);
    start_rows.truncate(n - 1);
    start_rows.push(0);
    start_rows.shuffle(&mut rng);

    let mut target_rows: Vec<usize> = (0..last_row).collect();
    target_rows.shuffle(&mut rng);
    target_rows.truncate(n - 1);
    let mut others = target_rows.into_iter();
    let targets_rows: Vec<usize> = start_rows
        .iter()
        .map(|&r| if r == 0 { last_row } else { others.next().expect("enough target rows") })
        .collect();

    let starts: Vec<usize> = start_rows.iter().map(|&r| spec.cell(r, 0)).collect();
    let targets: Vec<usize> = targets_rows.iter().map(|&r| spec.cell(r, last_col)).collect();
    Ok(Assignment { starts, targets })
}

/// Game with shared grid dynamics, point-mass starts and single-cell targets.
pub fn scenario_game(spec: &GridSpec, assignment: &Assignment) -> Result<GameSpec> {
    let template = build_grid_mdp(spec)?;
    let n = spec.state_count();
    let players = assignment
        .starts
        .iter()
        .zip(&assignment.targets)
        .map(|(&s, &g)| {
            let mut p = vec![0.0; n];
            p[s] = 1.0;
            template.with_endpoints(p, [g])
        })
        .collect();
    GameSpec::new(players, spec.horizon)
}

pub fn random_scenario(spec: &GridSpec) -> Result<GameSpec> {
    scenario_game(spec, &random_assignment(spec)?)
}
