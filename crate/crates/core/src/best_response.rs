//! One player's multiplicative best response against fixed opponents.
//!
//! Working backwards in time, each local state `s_i` picks the action that
//! maximizes the opponent-occupancy-weighted continuation
//!
//! ```text
//! Σ_{s_-i} ρ_-i(s_-i, t) · Y(s_i, s_-i) · Σ_ŝi P_i(ŝ_i | s_i, a) · U_t(ŝ_i, s_-i)
//! U_t(ŝ_i, s_-i) = Σ_{ŝ_-i} Π_{j≠i} y_j(s_j, ŝ_j, t) · V_{t+1}(ŝ_i, ŝ_-i)
//! ```
//!
//! then rebuilds `V_t` on the joint space under the chosen row. Weighting by
//! `ρ_-i(s_-i, t)·U_t` is the two-step opponent occupancy summed against
//! `V_{t+1}`; sources at or below `ε(t)` are dropped.

use rayon::prelude::*;

use crate::error::{config, Result};
use crate::game::{policy_kernels, GameSpec, Policy, TransitionMatrix};
use crate::joint::JointSpace;
use crate::joint_value::{JointLayout, JointValue};
use crate::occupancy::{
    forward_propagate_kernels, opponent_occupancy, EpsilonSchedule, OccupancyTable,
    TwoStepOpponentOccupancy,
};

#[derive(Clone, Debug)]
pub struct BestResponseResult {
    pub player: usize,
    /// Deterministic best-response policy.
    pub policy: Policy,
    /// `W[t][s_i]` for `t = 0..=T`.
    pub projected_values: Vec<Vec<f64>>,
    /// `V_0` on the joint space under the response and the fixed opponents.
    pub joint_values: JointValue,
    /// `Σ_{s_i} p_i(s_i) W_0(s_i)`; equals [`Self::potential`] when nothing is truncated.
    pub achieved: f64,
    /// Exact potential of the returned joint policy.
    pub potential: f64,
    /// `(state, time)` rows where every action had projected value 0.
    pub dead_rows: Vec<(usize, usize)>,
}

/// Lowest index attaining the maximum.
pub fn greedy_action(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    best
}

/// Conditional no-collision likelihood at time `t` given player `player` sits
/// at `s_i`: `Σ_{s_-i} ρ_-i(s_-i, t) Π_{j,ℓ} Y_jℓ`.
pub fn stochastic_obstacle_term(
    occupancy: &crate::occupancy::OpponentOccupancy,
    player: usize,
    s_i: usize,
) -> f64 {
    let space = occupancy.space();
    let mut digits = vec![0usize; space.players() + 1];
    let mut opp = vec![0usize; space.players()];
    let mut total = 0.0;
    for (r, &m) in occupancy.mass().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        space.decode(r, &mut opp);
        digits[..player].copy_from_slice(&opp[..player]);
        digits[player] = s_i;
        digits[player + 1..].copy_from_slice(&opp[player..]);
        let mut free = true;
        'pairs: for a in 0..digits.len() {
            for b in a + 1..digits.len() {
                if digits[a] == digits[b] {
                    free = false;
                    break 'pairs;
                }
            }
        }
        if free {
            total += m;
        }
    }
    total
}

/// Splits packed joint indices into (player `i`'s digit, opponent index).
#[derive(Clone, Copy)]
struct AxisSplit {
    states: usize,
    inner: usize,
}

impl AxisSplit {
    fn new(space: &JointSpace, axis: usize) -> Self {
        Self { states: space.states(), inner: space.stride(axis) }
    }

    fn join(&self, own: usize, opp: usize) -> usize {
        (opp / self.inner) * self.states * self.inner + own * self.inner + opp % self.inner
    }
}

/// Per-player kernels and occupancies of the fixed opponents.
struct Opponents {
    order: Vec<usize>,
    kernels: Vec<Vec<TransitionMatrix>>,
    occupancy: Vec<OccupancyTable>,
}

impl Opponents {
    fn new(game: &GameSpec, player: usize, joint: &[Policy]) -> Result<Self> {
        let order: Vec<usize> = (0..game.player_count()).filter(|&j| j != player).collect();
        let kernels = order
            .iter()
            .map(|&j| policy_kernels(game.player(j), &joint[j]))
            .collect::<Result<Vec<_>>>()?;
        let occupancy = order
            .iter()
            .zip(&kernels)
            .map(|(&j, k)| forward_propagate_kernels(game.player(j).initial(), k))
            .collect();
        Ok(Self { order, kernels, occupancy })
    }

    fn weights(&self, t: usize, epsilon: f64) -> Result<Vec<f64>> {
        let tables: Vec<&OccupancyTable> = self.occupancy.iter().collect();
        Ok(opponent_occupancy(&tables, t)?.truncated(epsilon))
    }
}

fn check_inputs(game: &GameSpec, player: usize, joint: &[Policy]) -> Result<()> {
    if player >= game.player_count() {
        return config(format!("player {player} out of range"));
    }
    if joint.len() != game.player_count() {
        return config(format!(
            "joint policy has {} entries for {} players",
            joint.len(),
            game.player_count()
        ));
    }
    for (j, pi) in joint.iter().enumerate() {
        if j == player {
            continue;
        }
        let mdp = game.player(j);
        if pi.state_count() != mdp.state_count()
            || pi.action_count() != mdp.action_count()
            || pi.horizon() != game.horizon()
        {
            return config(format!("opponent {j} policy does not match its MDP"));
        }
    }
    Ok(())
}

/// Best response of `player` to the other entries of `joint` (entry `player`
/// itself is ignored).
pub fn best_response(
    game: &GameSpec,
    player: usize,
    joint: &[Policy],
    schedule: &EpsilonSchedule,
) -> Result<BestResponseResult> {
    check_inputs(game, player, joint)?;
    schedule.validate(game.horizon())?;
    let layout = JointLayout::new(game)?;
    let space = layout.space;
    let split = AxisSplit::new(&space, player);
    let opponents = Opponents::new(game, player, joint)?;
    let mdp = game.player(player);
    let states = game.state_count();
    let actions = mdp.action_count();
    let horizon = game.horizon();
    let opp_size = space.size() / states;

    let mut policy = Policy::deterministic(player, states, actions, horizon, |_, _| 0);
    let mut projected = vec![vec![0.0; states]; horizon + 1];
    let mut dead_rows = Vec::new();

    let mut next = layout.terminal.clone();
    let terminal_weights = opponents.weights(horizon, 0.0)?;
    for (s, w) in projected[horizon].iter_mut().enumerate() {
        *w = (0..opp_size)
            .map(|r| terminal_weights[r] * next[split.join(s, r)])
            .sum();
    }

    let supports: Vec<Vec<usize>> = (0..states)
        .map(|s| {
            let mut sup: Vec<usize> = (0..actions)
                .flat_map(|a| {
                    mdp.transition(s, a)
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(k, _)| k)
                })
                .collect();
            sup.sort_unstable();
            sup.dedup();
            sup
        })
        .collect();

    let mut scratch = vec![0.0; space.size()];
    for t in (0..horizon).rev() {
        let epsilon = schedule.epsilon_at(t)?;
        let weights = opponents.weights(t, epsilon)?;

        // U_t: contract V_{t+1} along every opponent axis.
        let mut cont = next;
        for (k, &j) in opponents.order.iter().enumerate() {
            space.contract_axis(j, &opponents.kernels[k][t], &cont, &mut scratch);
            std::mem::swap(&mut cont, &mut scratch);
        }

        let rows: Vec<(usize, f64, bool)> = (0..states)
            .into_par_iter()
            .map(|s| {
                let active: Vec<(usize, f64)> = (0..opp_size)
                    .filter(|&r| weights[r] > 0.0 && layout.collision_free[split.join(s, r)])
                    .map(|r| (r, weights[r]))
                    .collect();
                let mut g = vec![0.0; states];
                for &s_hat in &supports[s] {
                    g[s_hat] = active
                        .iter()
                        .map(|&(r, w)| w * cont[split.join(s_hat, r)])
                        .sum();
                }
                let values: Vec<f64> = (0..actions)
                    .map(|a| {
                        mdp.transition(s, a)
                            .iter()
                            .zip(&g)
                            .map(|(&p, &v)| p * v)
                            .sum()
                    })
                    .collect();
                let a = greedy_action(&values);
                (a, values[a], values.iter().all(|&v| v <= 0.0))
            })
            .collect();

        let mut y = TransitionMatrix::zeros(states);
        for (s, &(a, w, dead)) in rows.iter().enumerate() {
            policy.set_action(s, t, a);
            projected[t][s] = w;
            if dead {
                dead_rows.push((s, t));
            }
            y.row_mut(s).copy_from_slice(mdp.transition(s, a));
        }

        space.contract_axis(player, &y, &cont, &mut scratch);
        layout.apply_avoid(&mut scratch);
        next = std::mem::replace(&mut scratch, cont);
    }

    dead_rows.sort_unstable_by_key(|&(s, t)| (t, s));
    let achieved = mdp
        .initial()
        .iter()
        .zip(&projected[0])
        .map(|(p, w)| p * w)
        .sum();
    let potential = layout.initial_expectation(game, &next);
    Ok(BestResponseResult {
        player,
        policy,
        projected_values: projected,
        joint_values: JointValue { t: 0, space, values: next },
        achieved,
        potential,
        dead_rows,
    })
}

/// Projected action values at `s_i` summed directly over a two-step
/// opponent occupancy table:
/// `Σ_{(s_-i, ŝ_-i)} ρ(s_-i, ŝ_-i) Y(s_i, s_-i) Σ_ŝi P_i(ŝ_i|s_i,a) V_{t+1}(ŝ_i, ŝ_-i)`.
pub fn projected_action_values(
    game: &GameSpec,
    player: usize,
    s_i: usize,
    two_step: &TwoStepOpponentOccupancy,
    next: &JointValue,
) -> Vec<f64> {
    let space = next.space;
    let split = AxisSplit::new(&space, player);
    let mask = space.collision_free_mask();
    let mdp = game.player(player);
    (0..mdp.action_count())
        .map(|a| {
            let row = mdp.transition(s_i, a);
            two_step
                .entries()
                .iter()
                .filter(|e| mask[split.join(s_i, e.from)])
                .map(|e| {
                    let cont: f64 = row
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(s_hat, &p)| p * next.values[split.join(s_hat, e.to)])
                        .sum();
                    e.mass * cont
                })
                .sum()
        })
        .collect()
}
