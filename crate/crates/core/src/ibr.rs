//! Iterative best response: players respond round-robin to the latest
//! opponent policies until the shared potential stops moving over a round.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::best_response::{best_response, greedy_action};
use crate::error::{config, Result};
use crate::game::{GameSpec, PlayerMdp, Policy};
use crate::joint_value::potential_value;
use crate::occupancy::EpsilonSchedule;

/// Single-player reach-maximizing policy and its value table.
#[derive(Clone, Debug)]
pub struct ShortestPath {
    pub policy: Policy,
    /// `values[t][s]`, `t = 0..=T`.
    pub values: Vec<Vec<f64>>,
    /// `Σ_s p(s) values[0][s]`.
    pub reach_probability: f64,
}

/// Multiplicative DP for one player ignoring everyone else:
/// `V_T = X`, `V_t(s) = max_a Σ_ŝ P(ŝ|s,a) V_{t+1}(ŝ)`.
pub fn shortest_path_policy(mdp: &PlayerMdp, owner: usize, horizon: usize) -> ShortestPath {
    let n = mdp.state_count();
    let mut values = vec![vec![0.0; n]; horizon + 1];
    for (s, v) in values[horizon].iter_mut().enumerate() {
        *v = if mdp.is_target(s) { 1.0 } else { 0.0 };
    }
    let mut policy = Policy::deterministic(owner, n, mdp.action_count(), horizon, |_, _| 0);
    for t in (0..horizon).rev() {
        let (head, tail) = values.split_at_mut(t + 1);
        let next = &tail[0];
        for s in 0..n {
            let q: Vec<f64> = (0..mdp.action_count())
                .map(|a| mdp.transition(s, a).iter().zip(next).map(|(p, v)| p * v).sum())
                .collect();
            let a = greedy_action(&q);
            policy.set_action(s, t, a);
            head[t][s] = q[a];
        }
    }
    let reach_probability = mdp.initial().iter().zip(&values[0]).map(|(p, v)| p * v).sum();
    ShortestPath { policy, values, reach_probability }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPolicy {
    #[default]
    ShortestPath,
    Uniform,
    /// Uniformly random deterministic policy drawn from the config seed.
    RandomDeterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IbrConfig {
    pub max_iterations: usize,
    /// Stop once a full round moves the potential by at most this much.
    pub convergence_tol: f64,
    pub epsilon: EpsilonSchedule,
    /// Response order; `None` is `0, 1, ..., N-1`.
    pub order: Option<Vec<usize>>,
    pub initial: InitialPolicy,
    pub seed: u64,
}

impl Default for IbrConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            convergence_tol: 1e-9,
            epsilon: EpsilonSchedule::paper(),
            order: None,
            initial: InitialPolicy::ShortestPath,
            seed: 0,
        }
    }
}

impl IbrConfig {
    pub fn validate(&self, players: usize, horizon: usize) -> Result<()> {
        if self.max_iterations < players {
            return config(format!(
                "max_iterations {} is below the player count {players}",
                self.max_iterations
            ));
        }
        if !(self.convergence_tol >= 0.0) {
            return config("convergence_tol must be nonnegative");
        }
        if let Some(order) = &self.order {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..players).collect::<Vec<_>>() {
                return config("order must be a permutation of the players");
            }
        }
        self.epsilon.validate(horizon)
    }

    fn order(&self, players: usize) -> Vec<usize> {
        self.order.clone().unwrap_or_else(|| (0..players).collect())
    }
}

/// One best response inside an IBR run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrRecord {
    /// 1-based response counter `k`.
    pub iteration: usize,
    pub player: usize,
    /// Exact potential after the update.
    pub potential: f64,
    /// Projected value reported by the response (differs under truncation).
    pub achieved: f64,
    pub seconds: f64,
    pub dead_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrTrace {
    pub initial_potential: f64,
    pub records: Vec<IbrRecord>,
}

impl IbrTrace {
    /// `F` after 0, 1, 2, ... responses.
    pub fn potentials(&self) -> Vec<f64> {
        std::iter::once(self.initial_potential)
            .chain(self.records.iter().map(|r| r.potential))
            .collect()
    }

    /// Responses needed before a full round of `players` responses moves `F`
    /// by at most `tol`; `None` if the trace never gets there.
    pub fn responses_to_tolerance(&self, players: usize, tol: f64) -> Option<usize> {
        let f = self.potentials();
        (players..f.len()).find(|&k| round_change(&f, k, players) <= tol)
    }
}

fn round_change(f: &[f64], k: usize, players: usize) -> f64 {
    let base = f[k - players];
    f[k - players..=k]
        .iter()
        .map(|v| (v - base).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct IbrOutcome {
    pub policies: Vec<Policy>,
    pub trace: IbrTrace,
    pub converged: bool,
}

/// Initial joint policy chosen by `config.initial`.
pub fn initial_policies(game: &GameSpec, config: &IbrConfig) -> Vec<Policy> {
    let n = game.state_count();
    let horizon = game.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    game.players()
        .iter()
        .enumerate()
        .map(|(i, mdp)| match config.initial {
            InitialPolicy::ShortestPath => shortest_path_policy(mdp, i, horizon).policy,
            InitialPolicy::Uniform => Policy::uniform(i, n, mdp.action_count(), horizon),
            InitialPolicy::RandomDeterministic => {
                Policy::deterministic(i, n, mdp.action_count(), horizon, |_, _| {
                    rng.random_range(0..mdp.action_count())
                })
            }
        })
        .collect()
}

pub fn run_ibr(game: &GameSpec, config: &IbrConfig, initial: Option<Vec<Policy>>) -> Result<IbrOutcome> {
    run_ibr_with(game, config, initial, |_, _| Ok(()))
}

/// [`run_ibr`] calling `observer` after every response with the record and
/// the updated joint policy.
pub fn run_ibr_with(
    game: &GameSpec,
    config: &IbrConfig,
    initial: Option<Vec<Policy>>,
    mut observer: impl FnMut(&IbrRecord, &[Policy]) -> Result<()>,
) -> Result<IbrOutcome> {
    let players = game.player_count();
    config.validate(players, game.horizon())?;
    let mut policies = initial.unwrap_or_else(|| initial_policies(game, config));
    game.check_joint_policy(&policies)?;
    let order = config.order(players);

    let mut potentials = vec![potential_value(game, &policies)?];
    let mut records = Vec::new();
    let mut converged = false;
    for k in 1..=config.max_iterations {
        let player = order[(k - 1) % players];
        let start = Instant::now();
        let br = best_response(game, player, &policies, &config.epsilon)?;
        let seconds = start.elapsed().as_secs_f64();
        policies[player] = br.policy;
        potentials.push(br.potential);
        let record = IbrRecord {
            iteration: k,
            player,
            potential: br.potential,
            achieved: br.achieved,
            seconds,
            dead_rows: br.dead_rows.len(),
        };
        observer(&record, &policies)?;
        records.push(record);
        if k >= players && round_change(&potentials, k, players) <= config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(IbrOutcome {
        policies,
        trace: IbrTrace { initial_potential: potentials[0], records },
        converged,
    })
}
