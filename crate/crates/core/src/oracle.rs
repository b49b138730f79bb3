//! Brute-force ground truth: trajectory enumeration of the objective,
//! global-feedback dynamic programming on the joint space, and exhaustive
//! search over unilateral deterministic deviations.
//!
//! Every oracle refuses instances above its bound instead of approximating.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::game::{policy_kernels, GameSpec, PlayerMdp, Policy, TransitionMatrix};
use crate::joint::JointSpace;
use crate::joint_value::{joint_kernels, potential_value, JointLayout};

/// Bound on `S^(N(T+1))` for trajectory enumeration.
pub const ENUMERATION_BOUND: f64 = 1e7;
/// Bound on `S^N · Π A_i` for one global DP step.
pub const GLOBAL_DP_BOUND: f64 = 1e7;
/// Bound on `A_i^(S·T)` for plain deviation enumeration.
pub const DEVIATION_BOUND: f64 = 1e5;
/// Node budget for the pruned deviation search.
pub const SEARCH_NODE_BUDGET: u64 = 50_000_000;

fn guard(oracle: &'static str, size: f64, bound: f64) -> Result<()> {
    if size > bound {
        return Err(Error::TooLarge { oracle, size, bound });
    }
    Ok(())
}

/// Positive-probability paths of one player over `t0..=T` given its state at
/// `t0` (or its initial distribution when `start` is `None`, with `t0 = 0`).
fn player_paths(
    mdp: &PlayerMdp,
    kernels: &[TransitionMatrix],
    start: Option<usize>,
    t0: usize,
) -> Vec<(Vec<usize>, f64)> {
    let horizon = kernels.len();
    let mut paths: Vec<(Vec<usize>, f64)> = match start {
        Some(s) => vec![(vec![s], 1.0)],
        None => mdp
            .initial()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (vec![s], p))
            .collect(),
    };
    for t in t0..horizon {
        let mut next = Vec::new();
        for (path, prob) in &paths {
            let s = *path.last().expect("nonempty path");
            for (s_hat, &p) in kernels[t].row(s).iter().enumerate() {
                if p > 0.0 {
                    let mut ext = path.clone();
                    ext.push(s_hat);
                    next.push((ext, prob * p));
                }
            }
        }
        paths = next;
    }
    paths
}

/// Sum of `R_t^T · Π_j P(τ_j)` over the cartesian product of path lists,
/// visited in lexicographic order.
fn sum_over_paths(game: &GameSpec, lists: &[Vec<(Vec<usize>, f64)>]) -> f64 {
    fn go(game: &GameSpec, lists: &[Vec<(Vec<usize>, f64)>], chosen: &mut Vec<usize>, weight: f64) -> f64 {
        let depth = chosen.len();
        if depth == lists.len() {
            let paths: Vec<&[usize]> = chosen
                .iter()
                .enumerate()
                .map(|(j, &k)| lists[j][k].0.as_slice())
                .collect();
            return if reach_avoid_suffix(game, &paths) { weight } else { 0.0 };
        }
        let mut total = 0.0;
        for (k, (_, p)) in lists[depth].iter().enumerate() {
            chosen.push(k);
            total += go(game, lists, chosen, weight * p);
            chosen.pop();
        }
        total
    }
    go(game, lists, &mut Vec::new(), 1.0)
}

/// `R_t^T` on path suffixes that all end at time `T`.
fn reach_avoid_suffix(game: &GameSpec, paths: &[&[usize]]) -> bool {
    let len = paths[0].len();
    for (j, p) in paths.iter().enumerate() {
        if !game.player(j).is_target(p[len - 1]) {
            return false;
        }
    }
    for step in 0..len {
        for a in 0..paths.len() {
            for b in a + 1..paths.len() {
                if paths[a][step] == paths[b][step] {
                    return false;
                }
            }
        }
    }
    true
}

/// `F` as the explicit sum over all joint trajectories.
pub fn enumerate_f(game: &GameSpec, policies: &[Policy]) -> Result<f64> {
    game.check_joint_policy(policies)?;
    let n = game.player_count() as f64;
    let size = (game.state_count() as f64).powf(n * (game.horizon() + 1) as f64);
    guard("trajectory enumeration", size, ENUMERATION_BOUND)?;
    let kernels = joint_kernels(game, policies)?;
    let lists: Vec<_> = game
        .players()
        .iter()
        .zip(&kernels)
        .map(|(mdp, k)| player_paths(mdp, k, None, 0))
        .collect();
    Ok(sum_over_paths(game, &lists))
}

/// `E[R_t^T | s(t) = joint]` by enumerating every continuation.
pub fn conditional_expectation(
    game: &GameSpec,
    policies: &[Policy],
    t: usize,
    joint: &[usize],
) -> Result<f64> {
    game.check_joint_policy(policies)?;
    if t > game.horizon() || joint.len() != game.player_count() {
        return config("conditional expectation outside the game");
    }
    let n = game.player_count() as f64;
    let size = (game.state_count() as f64).powf(n * (game.horizon() - t + 1) as f64);
    guard("trajectory enumeration", size, ENUMERATION_BOUND)?;
    let kernels = joint_kernels(game, policies)?;
    let lists: Vec<_> = game
        .players()
        .iter()
        .zip(&kernels)
        .zip(joint)
        .map(|((mdp, k), &s)| player_paths(mdp, k, Some(s), t))
        .collect();
    Ok(sum_over_paths(game, &lists))
}

/// Deterministic joint action per joint state and time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalPolicy {
    action_counts: Vec<usize>,
    /// `actions[t][joint state]`: packed joint action, player 0 most significant.
    actions: Vec<Vec<usize>>,
}

impl GlobalPolicy {
    pub fn joint_action(&self, t: usize, joint_state: usize) -> Vec<usize> {
        let mut packed = self.actions[t][joint_state];
        let mut out = vec![0; self.action_counts.len()];
        for (slot, &a) in out.iter_mut().zip(&self.action_counts).rev() {
            *slot = packed % a;
            packed /= a;
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct GlobalSolution {
    pub policy: GlobalPolicy,
    /// `E_{s ~ Π p_i}[Ṽ_0(s)]`.
    pub value: f64,
}

/// Optimal global-feedback policy by DP over joint states and joint actions.
pub fn global_dp(game: &GameSpec) -> Result<GlobalSolution> {
    let layout = JointLayout::new(game)?;
    let space = layout.space;
    let action_counts: Vec<usize> = game.players().iter().map(PlayerMdp::action_count).collect();
    let joint_actions: usize = action_counts.iter().product();
    guard(
        "global dynamic program",
        space.size() as f64 * joint_actions as f64,
        GLOBAL_DP_BOUND,
    )?;
    let supports: Vec<Vec<Vec<(usize, f64)>>> = game
        .players()
        .iter()
        .map(|mdp| {
            (0..mdp.state_count() * mdp.action_count())
                .map(|k| {
                    let (s, a) = (k / mdp.action_count(), k % mdp.action_count());
                    mdp.transition(s, a)
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(x, &p)| (x, p))
                        .collect()
                })
                .collect()
        })
        .collect();

    let players = space.players();
    let mut next = layout.terminal.clone();
    let mut actions = vec![Vec::new(); game.horizon()];
    for t in (0..game.horizon()).rev() {
        let step: Vec<(f64, usize)> = (0..space.size())
            .into_par_iter()
            .map(|idx| {
                if !layout.collision_free[idx] {
                    return (0.0, 0);
                }
                let mut digits = vec![0; players];
                space.decode(idx, &mut digits);
                let mut best = (f64::NEG_INFINITY, 0);
                let mut ja = vec![0; players];
                for packed in 0..joint_actions {
                    let mut rest = packed;
                    for (slot, &a) in ja.iter_mut().zip(&action_counts).rev() {
                        *slot = rest % a;
                        rest /= a;
                    }
                    let rows: Vec<&[(usize, f64)]> = (0..players)
                        .map(|j| supports[j][digits[j] * action_counts[j] + ja[j]].as_slice())
                        .collect();
                    let v = expect_product(&rows, space.states(), &next);
                    if v > best.0 {
                        best = (v, packed);
                    }
                }
                best
            })
            .collect();
        actions[t] = step.iter().map(|&(_, a)| a).collect();
        next = step.iter().map(|&(v, _)| v).collect();
    }
    let value = layout.initial_expectation(game, &next);
    Ok(GlobalSolution { policy: GlobalPolicy { action_counts, actions }, value })
}

/// `Σ_ŝ Π_j row_j(ŝ_j) · values(ŝ)` over sparse per-player rows.
fn expect_product(rows: &[&[(usize, f64)]], states: usize, values: &[f64]) -> f64 {
    fn go(rows: &[&[(usize, f64)]], states: usize, values: &[f64], idx: usize, w: f64) -> f64 {
        match rows.split_first() {
            None => w * values[idx],
            Some((row, rest)) => row
                .iter()
                .map(|&(s, p)| go(rest, states, values, idx * states + s, w * p))
                .sum(),
        }
    }
    go(rows, states, values, 0, 1.0)
}

/// Best unilateral deterministic deviation found for one player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSearch {
    pub player: usize,
    /// `F` of the joint policy under test.
    pub current: f64,
    /// Largest `F` over the player's deterministic local policies.
    pub best: f64,
    /// `actions[t][s]` attaining `best`.
    pub best_actions: Vec<Vec<usize>>,
    pub method: SearchMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// Every policy in `A^(S·T)` evaluated.
    Exhaustive,
    /// Depth-first enumeration over reachable rows with dominated branches pruned.
    Pruned,
}

/// Evaluates all `A^(S·T)` deterministic policies of `player`.
pub fn exhaustive_best_response(game: &GameSpec, player: usize, joint: &[Policy]) -> Result<DeviationSearch> {
    game.check_joint_policy(joint)?;
    let mdp = game.player(player);
    let (s, a, t) = (mdp.state_count(), mdp.action_count(), game.horizon());
    let count = (a as f64).powf((s * t) as f64);
    guard("deviation enumeration", count, DEVIATION_BOUND)?;
    let current = potential_value(game, joint)?;
    let decode = |mut k: usize| -> Vec<Vec<usize>> {
        let mut actions = vec![vec![0; s]; t];
        for row in actions.iter_mut().rev() {
            for slot in row.iter_mut().rev() {
                *slot = k % a;
                k /= a;
            }
        }
        actions
    };
    let values: Vec<f64> = (0..count as usize)
        .into_par_iter()
        .map(|k| {
            let mut dev = joint.to_vec();
            dev[player] = Policy::from_actions(player, a, &decode(k)).expect("valid actions");
            potential_value(game, &dev).expect("validated joint policy")
        })
        .collect();
    let best_k = crate::best_response::greedy_action(&values);
    Ok(DeviationSearch {
        player,
        current,
        best: values[best_k],
        best_actions: decode(best_k),
        method: SearchMethod::Exhaustive,
    })
}

/// Exact maximum of `F(·, π_-i)` over deterministic local policies.
///
/// Rows are fixed layer by layer (`t = 0, 1, ...`) and only for states the
/// partial policy reaches without collision; actions with identical kernel
/// rows are merged. A branch is cut when the surviving joint mass times a
/// full-information value (player `i` observing every opponent) cannot
/// beat the incumbent.
pub fn pruned_best_response(game: &GameSpec, player: usize, joint: &[Policy]) -> Result<DeviationSearch> {
    game.check_joint_policy(joint)?;
    let current = potential_value(game, joint)?;
    let mut search = PrunedSearch::new(game, player, joint)?;
    // A deterministic current policy is the starting incumbent.
    if let Some(actions) = joint[player].actions() {
        search.best = current;
        search.best_actions = actions;
    }
    let q0 = search.initial_mass(game);
    let mut rows = vec![vec![0usize; game.state_count()]; game.horizon()];
    search.layer(0, &q0, &mut rows)?;
    Ok(DeviationSearch {
        player,
        current,
        best: search.best,
        best_actions: search.best_actions,
        method: SearchMethod::Pruned,
    })
}

struct PrunedSearch<'a> {
    layout: JointLayout,
    space: JointSpace,
    player: usize,
    mdp: &'a PlayerMdp,
    opp_axes: Vec<usize>,
    opp_kernels: Vec<Vec<TransitionMatrix>>,
    /// Opponent-contracted full-information value, `upper[t]` built from `V̄_{t+1}`.
    upper: Vec<Vec<f64>>,
    classes: Vec<Vec<usize>>,
    best: f64,
    best_actions: Vec<Vec<usize>>,
    nodes: u64,
}

impl<'a> PrunedSearch<'a> {
    fn new(game: &'a GameSpec, player: usize, joint: &[Policy]) -> Result<Self> {
        let layout = JointLayout::new(game)?;
        let space = layout.space;
        let mdp = game.player(player);
        let horizon = game.horizon();
        guard(
            "pruned deviation search",
            space.size() as f64 * (horizon + 1) as f64,
            ENUMERATION_BOUND,
        )?;
        let opp_axes: Vec<usize> = (0..game.player_count()).filter(|&j| j != player).collect();
        let opp_kernels = opp_axes
            .iter()
            .map(|&j| policy_kernels(game.player(j), &joint[j]))
            .collect::<Result<Vec<_>>>()?;

        let states = space.states();
        let inner = space.stride(player);
        let mut upper = vec![Vec::new(); horizon];
        let mut vbar = layout.terminal.clone();
        let mut scratch = vec![0.0; space.size()];
        for t in (0..horizon).rev() {
            let mut cont = vbar.clone();
            for (k, &j) in opp_axes.iter().enumerate() {
                space.contract_axis(j, &opp_kernels[k][t], &cont, &mut scratch);
                std::mem::swap(&mut cont, &mut scratch);
            }
            let mut next = vec![0.0; space.size()];
            for (idx, v) in next.iter_mut().enumerate() {
                if !layout.collision_free[idx] {
                    continue;
                }
                let s = (idx / inner) % states;
                let base = idx - s * inner;
                *v = (0..mdp.action_count())
                    .map(|a| {
                        mdp.transition(s, a)
                            .iter()
                            .enumerate()
                            .map(|(x, &p)| if p > 0.0 { p * cont[base + x * inner] } else { 0.0 })
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
            }
            upper[t] = cont;
            vbar = next;
        }

        let classes = (0..states)
            .map(|s| {
                let mut reps: Vec<usize> = Vec::new();
                for a in 0..mdp.action_count() {
                    if !reps.iter().any(|&b| mdp.transition(s, b) == mdp.transition(s, a)) {
                        reps.push(a);
                    }
                }
                reps
            })
            .collect();

        Ok(Self {
            layout,
            space,
            player,
            mdp,
            opp_axes,
            opp_kernels,
            upper,
            classes,
            best: f64::NEG_INFINITY,
            best_actions: Vec::new(),
            nodes: 0,
        })
    }

    fn initial_mass(&self, game: &GameSpec) -> Vec<f64> {
        let mut digits = vec![0; self.space.players()];
        (0..self.space.size())
            .map(|idx| {
                if !self.layout.collision_free[idx] {
                    return 0.0;
                }
                self.space.decode(idx, &mut digits);
                digits
                    .iter()
                    .enumerate()
                    .map(|(j, &s)| game.player(j).initial()[s])
                    .product()
            })
            .collect()
    }

    fn layer(&mut self, t: usize, mass: &[f64], rows: &mut Vec<Vec<usize>>) -> Result<()> {
        let horizon = rows.len();
        if t == horizon {
            let value: f64 = mass.iter().zip(&self.layout.terminal).map(|(m, v)| m * v).sum();
            if value > self.best {
                self.best = value;
                self.best_actions = rows.clone();
            }
            return Ok(());
        }
        let states = self.space.states();
        let inner = self.space.stride(self.player);
        let outer = self.space.size() / (states * inner);
        let upper = &self.upper[t];

        // Per reachable state: candidate actions with their bound contributions.
        let mut options: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for s in 0..states {
            let mut reach = 0.0;
            let mut contrib = vec![0.0; self.mdp.action_count()];
            for o in 0..outer {
                for i in 0..inner {
                    let m = mass[o * states * inner + s * inner + i];
                    if m == 0.0 {
                        continue;
                    }
                    reach += m;
                    let base = o * states * inner + i;
                    for &a in &self.classes[s] {
                        let c: f64 = self
                            .mdp
                            .transition(s, a)
                            .iter()
                            .enumerate()
                            .map(|(x, &p)| if p > 0.0 { p * upper[base + x * inner] } else { 0.0 })
                            .sum();
                        contrib[a] += m * c;
                    }
                }
            }
            if reach > 0.0 {
                let mut opts: Vec<(usize, f64)> =
                    self.classes[s].iter().map(|&a| (a, contrib[a])).collect();
                opts.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
                options.push((s, opts));
            } else {
                rows[t][s] = 0;
            }
        }
        // suffix[k] = Σ_{m ≥ k} best contribution of the m-th reachable state.
        let mut suffix = vec![0.0; options.len() + 1];
        for k in (0..options.len()).rev() {
            suffix[k] = suffix[k + 1] + options[k].1[0].1;
        }
        self.assign(t, 0, 0.0, mass, &options, &suffix, rows)
    }

    #[allow(clippy::too_many_arguments)]
    fn assign(
        &mut self,
        t: usize,
        k: usize,
        fixed: f64,
        mass: &[f64],
        options: &[(usize, Vec<(usize, f64)>)],
        suffix: &[f64],
        rows: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        self.nodes += 1;
        if self.nodes > SEARCH_NODE_BUDGET {
            return Err(Error::TooLarge {
                oracle: "pruned deviation search",
                size: self.nodes as f64,
                bound: SEARCH_NODE_BUDGET as f64,
            });
        }
        if fixed + suffix[k] <= self.best {
            return Ok(());
        }
        if k == options.len() {
            let next = self.propagate(t, mass, &rows[t]);
            return self.layer(t + 1, &next, rows);
        }
        let (s, opts) = &options[k];
        for &(a, c) in opts {
            rows[t][*s] = a;
            self.assign(t, k + 1, fixed + c, mass, options, suffix, rows)?;
        }
        Ok(())
    }

    /// Surviving joint mass at `t+1` given the player's row choices at `t`.
    fn propagate(&self, t: usize, mass: &[f64], actions: &[usize]) -> Vec<f64> {
        let states = self.space.states();
        let mut y = TransitionMatrix::zeros(states);
        for (s, &a) in actions.iter().enumerate() {
            y.row_mut(s).copy_from_slice(self.mdp.transition(s, a));
        }
        let mut cur = vec![0.0; mass.len()];
        self.space.propagate_axis(self.player, &y, mass, &mut cur);
        let mut scratch = vec![0.0; mass.len()];
        for (k, &j) in self.opp_axes.iter().enumerate() {
            self.space.propagate_axis(j, &self.opp_kernels[k][t], &cur, &mut scratch);
            std::mem::swap(&mut cur, &mut scratch);
        }
        self.layout.apply_avoid(&mut cur);
        cur
    }
}

/// Strategy used by [`verify_nash`] for each player's deviation set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationStrategy {
    /// Exhaustive when `A^(S·T)` is within [`DEVIATION_BOUND`], pruned otherwise.
    #[default]
    Auto,
    Exhaustive,
    Pruned,
}

/// A unilateral deviation that raises `F` by more than the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovingDeviation {
    pub player: usize,
    pub actions: Vec<Vec<usize>>,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub tolerance: f64,
    pub potential: f64,
    pub searches: Vec<DeviationSearch>,
    pub deviations: Vec<ImprovingDeviation>,
}

impl NashReport {
    pub fn is_equilibrium(&self) -> bool {
        self.deviations.is_empty()
    }
}

/// Checks the Nash condition against every deterministic unilateral
/// deviation; by multilinearity of `F` these also cover mixed deviations.
pub fn verify_nash(
    game: &GameSpec,
    policies: &[Policy],
    tol: f64,
    strategy: DeviationStrategy,
) -> Result<NashReport> {
    game.check_joint_policy(policies)?;
    let potential = potential_value(game, policies)?;
    let mut searches = Vec::new();
    let mut deviations = Vec::new();
    for i in 0..game.player_count() {
        let mdp = game.player(i);
        let count = (mdp.action_count() as f64).powf((mdp.state_count() * game.horizon()) as f64);
        let search = match strategy {
            DeviationStrategy::Exhaustive => exhaustive_best_response(game, i, policies)?,
            DeviationStrategy::Pruned => pruned_best_response(game, i, policies)?,
            DeviationStrategy::Auto if count <= DEVIATION_BOUND => {
                exhaustive_best_response(game, i, policies)?
            }
            DeviationStrategy::Auto => pruned_best_response(game, i, policies)?,
        };
        let delta = search.best - potential;
        if delta > tol {
            deviations.push(ImprovingDeviation {
                player: i,
                actions: search.best_actions.clone(),
                delta,
            });
        }
        searches.push(search);
    }
    Ok(NashReport { tolerance: tol, potential, searches, deviations })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Corridor of `len` cells; action 0 stays, 1 moves right, 2 moves left.
    fn corridor(len: usize, start: usize, target: usize) -> PlayerMdp {
        let kernel = (0..len)
            .map(|s| {
                [s, (s + 1).min(len - 1), s.saturating_sub(1)]
                    .iter()
                    .map(|&d| {
                        let mut row = vec![0.0; len];
                        row[d] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        let mut p = vec![0.0; len];
        p[start] = 1.0;
        PlayerMdp::new(kernel, p, [target]).unwrap()
    }

    #[test]
    fn enumeration_extremes() {
        let game = GameSpec::new(vec![corridor(4, 0, 1), corridor(4, 3, 2)], 2).unwrap();
        let pis = vec![
            Policy::deterministic(0, 4, 3, 2, |s, _| if s == 0 { 1 } else { 0 }),
            Policy::deterministic(1, 4, 3, 2, |s, _| if s == 3 { 2 } else { 0 }),
        ];
        assert_eq!(enumerate_f(&game, &pis).unwrap(), 1.0);
        let clash = GameSpec::new(vec![corridor(4, 0, 1), corridor(4, 0, 2)], 2).unwrap();
        assert_eq!(enumerate_f(&clash, &pis).unwrap(), 0.0);
    }

    #[test]
    fn enumeration_guard() {
        let game = GameSpec::new(vec![corridor(10, 0, 9), corridor(10, 9, 0)], 6).unwrap();
        let pis = vec![Policy::uniform(0, 10, 3, 6), Policy::uniform(1, 10, 3, 6)];
        assert!(matches!(enumerate_f(&game, &pis), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn global_dp_separable() {
        let game = GameSpec::new(vec![corridor(5, 0, 1), corridor(5, 4, 3)], 3).unwrap();
        let sol = global_dp(&game).unwrap();
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.policy.joint_action(2, JointSpace::new(2, 5).unwrap().encode(&[0, 4]))[0], 1);
    }

    #[test]
    fn verify_nash_detects_forced_failure() {
        let game = GameSpec::new(vec![corridor(3, 0, 2), corridor(3, 2, 2)], 2).unwrap();
        // Player 1 parks on player 0's target forever: no one can succeed.
        let stay1 = Policy::deterministic(1, 3, 3, 2, |_, _| 0);
        let stay0 = Policy::deterministic(0, 3, 3, 2, |_, _| 0);
        let report = verify_nash(&game, &[stay0.clone(), stay1.clone()], 1e-10, DeviationStrategy::Auto).unwrap();
        assert!(report.is_equilibrium(), "targets coincide, F is identically 0");

        let split = GameSpec::new(vec![corridor(3, 0, 1), corridor(3, 2, 2)], 2).unwrap();
        let report = verify_nash(&split, &[stay0, stay1], 1e-10, DeviationStrategy::Auto).unwrap();
        assert_eq!(report.deviations.len(), 1);
        let dev = &report.deviations[0];
        assert_eq!(dev.player, 0);
        assert!((dev.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pruned_search_agrees_with_exhaustive() {
        let game = GameSpec::new(vec![corridor(4, 0, 3), corridor(4, 3, 0)], 2).unwrap();
        let pis = vec![Policy::uniform(0, 4, 3, 2), Policy::uniform(1, 4, 3, 2)];
        for player in 0..2 {
            let ex = exhaustive_best_response(&game, player, &pis).unwrap();
            let pr = pruned_best_response(&game, player, &pis).unwrap();
            assert!((ex.best - pr.best).abs() < 1e-12);
            let mut dev = pis.clone();
            dev[player] = Policy::from_actions(player, 3, &pr.best_actions).unwrap();
            assert!((potential_value(&game, &dev).unwrap() - pr.best).abs() < 1e-12);
        }
    }
}
