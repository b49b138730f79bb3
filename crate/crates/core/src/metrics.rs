//! Evaluation metrics for a joint policy: potential, collision likelihood,
//! and reach reduction, computed exactly or by Monte-Carlo simulation.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::game::{GameSpec, Policy, Trajectory};
use crate::joint_value::{joint_kernels, potential_value, JointLayout};
use crate::occupancy::forward_propagate;

/// Largest joint space the exact metrics will propagate over.
pub const EXACT_METRIC_BOUND: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum MetricMethod {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

/// Binomial standard errors of the Monte-Carlo estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub potential: f64,
    pub collision_likelihood: f64,
    pub reach_reduction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: usize,
    pub potential: f64,
    pub collision_likelihood: f64,
    pub reach_reduction: f64,
    pub method: MetricMethod,
    /// Present for Monte-Carlo records.
    pub standard_errors: Option<StandardErrors>,
}

/// `K` independent joint trajectories; trial `k` draws from its own
/// ChaCha stream of `seed`, so results do not depend on thread count.
pub fn simulate_trajectories(
    game: &GameSpec,
    policies: &[Policy],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<Trajectory>>> {
    if trials == 0 {
        return config("Monte-Carlo evaluation needs at least one trial");
    }
    game.check_joint_policy(policies)?;
    let horizon = game.horizon();
    let pick = |weights: &[f64], rng: &mut ChaCha8Rng| -> usize {
        WeightedIndex::new(weights)
            .expect("validated distribution")
            .sample(rng)
    };
    Ok((0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            game.players()
                .iter()
                .zip(policies)
                .map(|(mdp, pi)| {
                    let mut states = Vec::with_capacity(horizon + 1);
                    let mut s = pick(mdp.initial(), &mut rng);
                    states.push(s);
                    for t in 0..horizon {
                        let a = pick(pi.row(s, t), &mut rng);
                        s = pick(mdp.transition(s, a), &mut rng);
                        states.push(s);
                    }
                    Trajectory(states)
                })
                .collect()
        })
        .collect())
}

fn exact_guard(game: &GameSpec) -> Result<()> {
    let size = (game.state_count() as f64).powi(game.player_count() as i32);
    if size > EXACT_METRIC_BOUND as f64 {
        return Err(Error::TooLarge {
            oracle: "exact metrics",
            size,
            bound: EXACT_METRIC_BOUND as f64,
        });
    }
    Ok(())
}

/// Probability that no two players ever share a state, by forward
/// propagation on the joint space with colliding states zeroed each step.
pub fn exact_no_collision_probability(game: &GameSpec, policies: &[Policy]) -> Result<f64> {
    game.check_joint_policy(policies)?;
    exact_guard(game)?;
    let layout = JointLayout::new(game)?;
    let space = layout.space;
    let kernels = joint_kernels(game, policies)?;
    let mut digits = vec![0; space.players()];
    let mut mass: Vec<f64> = (0..space.size())
        .map(|idx| {
            space.decode(idx, &mut digits);
            digits
                .iter()
                .enumerate()
                .map(|(j, &s)| game.player(j).initial()[s])
                .product()
        })
        .collect();
    layout.apply_avoid(&mut mass);
    let mut scratch = vec![0.0; space.size()];
    for t in 0..game.horizon() {
        for (axis, k) in kernels.iter().enumerate() {
            space.propagate_axis(axis, &k[t], &mass, &mut scratch);
            std::mem::swap(&mut mass, &mut scratch);
        }
        layout.apply_avoid(&mut mass);
    }
    Ok(mass.iter().sum())
}

/// Joint probability that every player ends in its target, ignoring
/// collisions; player chains are independent so this is a product.
pub fn exact_all_reach_probability(game: &GameSpec, policies: &[Policy]) -> Result<f64> {
    game.check_joint_policy(policies)?;
    game.players()
        .iter()
        .zip(policies)
        .map(|(mdp, pi)| {
            let rho = forward_propagate(mdp, pi)?;
            Ok(mdp.targets().iter().map(|&s| rho.get(s, game.horizon())).sum::<f64>())
        })
        .product()
}

/// Denominator of the reach reduction: `Π_j P[s_j(T) ∈ 𝒯_j]` under each
/// player's shortest-path policy.
pub fn reach_baseline(game: &GameSpec, shortest: &[Policy]) -> Result<f64> {
    let baseline = exact_all_reach_probability(game, shortest)?;
    if baseline <= 0.0 {
        return Err(Error::Degenerate(
            "some player cannot reach its target even alone".into(),
        ));
    }
    Ok(baseline)
}

struct Tallies {
    success: usize,
    collided: usize,
    all_reach: usize,
    trials: usize,
}

fn tally(game: &GameSpec, samples: &[Vec<Trajectory>]) -> Tallies {
    let horizon = game.horizon();
    let mut out = Tallies { success: 0, collided: 0, all_reach: 0, trials: samples.len() };
    for joint in samples {
        let reach = joint
            .iter()
            .enumerate()
            .all(|(j, tr)| game.player(j).is_target(tr.0[horizon]));
        let collided = (0..=horizon).any(|t| {
            (0..joint.len()).any(|a| (a + 1..joint.len()).any(|b| joint[a].0[t] == joint[b].0[t]))
        });
        out.success += usize::from(reach && !collided);
        out.collided += usize::from(collided);
        out.all_reach += usize::from(reach);
    }
    out
}

/// `1 - p` kept inside `[0, 1]` despite rounding in `p`.
fn complement(p: f64) -> f64 {
    (1.0 - p).clamp(0.0, 1.0)
}

fn binomial_se(hits: usize, trials: usize) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// `E[1 - Π_t Π_{i<j} Y_ij]`.
pub fn collision_likelihood(game: &GameSpec, policies: &[Policy], method: MetricMethod) -> Result<f64> {
    match method {
        MetricMethod::Exact => Ok(complement(exact_no_collision_probability(game, policies)?)),
        MetricMethod::MonteCarlo { trials, seed } => {
            let samples = simulate_trajectories(game, policies, trials, seed)?;
            let t = tally(game, &samples);
            Ok(t.collided as f64 / t.trials as f64)
        }
    }
}

/// Joint final-time reach probability divided by the shortest-path baseline.
pub fn reach_reduction(
    game: &GameSpec,
    policies: &[Policy],
    shortest: &[Policy],
    method: MetricMethod,
) -> Result<f64> {
    let baseline = reach_baseline(game, shortest)?;
    match method {
        MetricMethod::Exact => Ok(exact_all_reach_probability(game, policies)? / baseline),
        MetricMethod::MonteCarlo { trials, seed } => {
            let samples = simulate_trajectories(game, policies, trials, seed)?;
            let t = tally(game, &samples);
            Ok(t.all_reach as f64 / t.trials as f64 / baseline)
        }
    }
}

/// All three metrics for one joint policy. `baseline` is [`reach_baseline`].
pub fn evaluate(
    game: &GameSpec,
    policies: &[Policy],
    baseline: f64,
    method: MetricMethod,
    iteration: usize,
) -> Result<MetricsRecord> {
    match method {
        MetricMethod::Exact => Ok(MetricsRecord {
            iteration,
            potential: potential_value(game, policies)?,
            collision_likelihood: complement(exact_no_collision_probability(game, policies)?),
            reach_reduction: exact_all_reach_probability(game, policies)? / baseline,
            method,
            standard_errors: None,
        }),
        MetricMethod::MonteCarlo { trials, seed } => {
            let samples = simulate_trajectories(game, policies, trials, seed)?;
            let t = tally(game, &samples);
            let (f, f_se) = binomial_se(t.success, t.trials);
            let (c, c_se) = binomial_se(t.collided, t.trials);
            let (r, r_se) = binomial_se(t.all_reach, t.trials);
            Ok(MetricsRecord {
                iteration,
                potential: f,
                collision_likelihood: c,
                reach_reduction: r / baseline,
                method,
                standard_errors: Some(StandardErrors {
                    potential: f_se,
                    collision_likelihood: c_se,
                    reach_reduction: r_se / baseline,
                }),
            })
        }
    }
}
