//! Game data model: per-player MDPs on a shared state space, local-feedback
//! policies, and the elementary probabilities and indicators built on them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Absolute tolerance for "is a distribution" checks.
pub const PROB_TOL: f64 = 1e-12;

/// One player's finite MDP. Every action is admissible from every state.
///
/// Serializes as `{kernel: [s][a][s'], initial, targets}`; deserializing
/// checks the table shape but leaves probability checks to [`validate_game`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpRepr", into = "MdpRepr")]
pub struct PlayerMdp {
    state_count: usize,
    action_count: usize,
    /// Flat `[s][a][s']` table of next-state probabilities.
    kernel: Vec<f64>,
    initial: Vec<f64>,
    targets: Vec<usize>,
}

impl PlayerMdp {
    /// Builds and validates an MDP. `kernel[s][a]` is the next-state
    /// distribution after playing `a` in `s`.
    pub fn new(
        kernel: Vec<Vec<Vec<f64>>>,
        initial: Vec<f64>,
        targets: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mdp = Self::new_unchecked(kernel, initial, targets)?;
        let violations = mdp.violations(0);
        if let Some(v) = violations.first() {
            return config(v.to_string());
        }
        Ok(mdp)
    }

    /// Builds an MDP checking only that the table is rectangular. Probability
    /// invariants are left to [`validate_game`].
    pub fn new_unchecked(
        kernel: Vec<Vec<Vec<f64>>>,
        initial: Vec<f64>,
        targets: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let state_count = kernel.len();
        if state_count == 0 {
            return config("kernel has no states");
        }
        let action_count = kernel[0].len();
        if action_count == 0 {
            return config("kernel has no actions");
        }
        let mut flat = Vec::with_capacity(state_count * action_count * state_count);
        for (s, rows) in kernel.iter().enumerate() {
            if rows.len() != action_count {
                return config(format!(
                    "state {s} has {} actions, expected {action_count}",
                    rows.len()
                ));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != state_count {
                    return config(format!(
                        "kernel row (state {s}, action {a}) has length {}, expected {state_count}",
                        row.len()
                    ));
                }
                flat.extend_from_slice(row);
            }
        }
        if initial.len() != state_count {
            return config(format!(
                "initial distribution has length {}, expected {state_count}",
                initial.len()
            ));
        }
        Ok(Self::from_flat(state_count, action_count, flat, initial, targets))
    }

    pub(crate) fn from_flat(
        state_count: usize,
        action_count: usize,
        kernel: Vec<f64>,
        initial: Vec<f64>,
        targets: impl IntoIterator<Item = usize>,
    ) -> Self {
        let targets: BTreeSet<usize> = targets.into_iter().collect();
        Self {
            state_count,
            action_count,
            kernel,
            initial,
            targets: targets.into_iter().collect(),
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Next-state distribution for `(s, a)`.
    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        let n = self.state_count;
        let start = (s * self.action_count + a) * n;
        &self.kernel[start..start + n]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Sorted target states.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn is_target(&self, s: usize) -> bool {
        self.targets.binary_search(&s).is_ok()
    }

    /// Same dynamics with a different start distribution and target set.
    pub fn with_endpoints(&self, initial: Vec<f64>, targets: impl IntoIterator<Item = usize>) -> Self {
        Self::from_flat(
            self.state_count,
            self.action_count,
            self.kernel.clone(),
            initial,
            targets,
        )
    }

    fn violations(&self, player: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        for s in 0..self.state_count {
            for a in 0..self.action_count {
                let row = self.transition(s, a);
                let sum: f64 = row.iter().sum();
                let negative = row.iter().any(|&p| p < 0.0 || !p.is_finite());
                if negative || (sum - 1.0).abs() > PROB_TOL {
                    out.push(Violation::KernelRow { player, state: s, action: a, sum });
                }
            }
        }
        let sum: f64 = self.initial.iter().sum();
        if self.initial.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > PROB_TOL {
            out.push(Violation::InitialDistribution { player, sum });
        }
        if self.targets.is_empty() {
            out.push(Violation::EmptyTargetSet { player });
        }
        for &t in &self.targets {
            if t >= self.state_count {
                out.push(Violation::TargetOutOfRange { player, state: t });
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpRepr {
    kernel: Vec<Vec<Vec<f64>>>,
    initial: Vec<f64>,
    targets: Vec<usize>,
}

impl TryFrom<MdpRepr> for PlayerMdp {
    type Error = crate::error::Error;

    fn try_from(r: MdpRepr) -> Result<Self> {
        Self::new_unchecked(r.kernel, r.initial, r.targets)
    }
}

impl From<PlayerMdp> for MdpRepr {
    fn from(m: PlayerMdp) -> Self {
        let kernel = (0..m.state_count)
            .map(|s| (0..m.action_count).map(|a| m.transition(s, a).to_vec()).collect())
            .collect();
        Self { kernel, initial: m.initial, targets: m.targets }
    }
}

/// N players sharing one state space and horizon `T` (number of transitions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    players: Vec<PlayerMdp>,
    horizon: usize,
}

impl GameSpec {
    pub fn new(players: Vec<PlayerMdp>, horizon: usize) -> Result<Self> {
        let game = Self::new_unchecked(players, horizon);
        let report = validate_game(&game);
        if let Some(v) = report.violations.first() {
            return config(v.to_string());
        }
        Ok(game)
    }

    pub fn new_unchecked(players: Vec<PlayerMdp>, horizon: usize) -> Self {
        Self { players, horizon }
    }

    pub fn players(&self) -> &[PlayerMdp] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &PlayerMdp {
        &self.players[i]
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn state_count(&self) -> usize {
        self.players.first().map_or(0, PlayerMdp::state_count)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Checks that `policies` is a full joint policy for this game.
    pub fn check_joint_policy(&self, policies: &[Policy]) -> Result<()> {
        if policies.len() != self.players.len() {
            return config(format!(
                "joint policy has {} entries for {} players",
                policies.len(),
                self.players.len()
            ));
        }
        for (i, (mdp, pi)) in self.players.iter().zip(policies).enumerate() {
            check_policy(mdp, pi, self.horizon)
                .map_err(|e| crate::Error::Config(format!("player {i}: {e}")))?;
        }
        Ok(())
    }
}

fn check_policy(mdp: &PlayerMdp, policy: &Policy, horizon: usize) -> Result<()> {
    if policy.state_count != mdp.state_count
        || policy.action_count != mdp.action_count
        || policy.horizon != horizon
    {
        return config(format!(
            "policy shape (S={}, A={}, T={}) does not match MDP (S={}, A={}, T={horizon})",
            policy.state_count,
            policy.action_count,
            policy.horizon,
            mdp.state_count,
            mdp.action_count
        ));
    }
    Ok(())
}

/// A local-feedback policy: `table[t][s]` is a distribution over actions.
///
/// Serializes as `{owner, rows: [t][s][a]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyRepr", into = "PolicyRepr")]
pub struct Policy {
    owner: usize,
    state_count: usize,
    action_count: usize,
    horizon: usize,
    table: Vec<f64>,
}

impl Policy {
    pub fn uniform(owner: usize, state_count: usize, action_count: usize, horizon: usize) -> Self {
        let p = 1.0 / action_count as f64;
        Self {
            owner,
            state_count,
            action_count,
            horizon,
            table: vec![p; state_count * action_count * horizon],
        }
    }

    /// Deterministic policy playing `action(s, t)`.
    pub fn deterministic(
        owner: usize,
        state_count: usize,
        action_count: usize,
        horizon: usize,
        mut action: impl FnMut(usize, usize) -> usize,
    ) -> Self {
        let mut pi = Self {
            owner,
            state_count,
            action_count,
            horizon,
            table: vec![0.0; state_count * action_count * horizon],
        };
        for t in 0..horizon {
            for s in 0..state_count {
                pi.set_action(s, t, action(s, t));
            }
        }
        pi
    }

    /// Deterministic policy from an `actions[t][s]` table.
    pub fn from_actions(owner: usize, action_count: usize, actions: &[Vec<usize>]) -> Result<Self> {
        let horizon = actions.len();
        let state_count = actions.first().map_or(0, Vec::len);
        if horizon == 0 || state_count == 0 {
            return config("action table is empty");
        }
        for (t, row) in actions.iter().enumerate() {
            if row.len() != state_count {
                return config(format!("action table row {t} has length {}", row.len()));
            }
            if let Some(&a) = row.iter().find(|&&a| a >= action_count) {
                return config(format!("action {a} at time {t} is out of range"));
            }
        }
        Ok(Self::deterministic(owner, state_count, action_count, horizon, |s, t| actions[t][s]))
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn offset(&self, s: usize, t: usize) -> usize {
        (t * self.state_count + s) * self.action_count
    }

    pub fn row(&self, s: usize, t: usize) -> &[f64] {
        let o = self.offset(s, t);
        &self.table[o..o + self.action_count]
    }

    pub fn set_row(&mut self, s: usize, t: usize, row: &[f64]) {
        assert_eq!(row.len(), self.action_count, "policy row length");
        let o = self.offset(s, t);
        self.table[o..o + self.action_count].copy_from_slice(row);
    }

    pub fn set_action(&mut self, s: usize, t: usize, a: usize) {
        assert!(a < self.action_count, "action {a} out of range");
        let o = self.offset(s, t);
        let row = &mut self.table[o..o + self.action_count];
        row.fill(0.0);
        row[a] = 1.0;
    }

    /// The action played at `(s, t)` if that row is a unit vector.
    pub fn action(&self, s: usize, t: usize) -> Option<usize> {
        let row = self.row(s, t);
        let a = row.iter().position(|&p| p == 1.0)?;
        row.iter()
            .enumerate()
            .all(|(b, &p)| b == a || p == 0.0)
            .then_some(a)
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.horizon).all(|t| (0..self.state_count).all(|s| self.action(s, t).is_some()))
    }

    /// `actions[t][s]` for a deterministic policy.
    pub fn actions(&self) -> Option<Vec<Vec<usize>>> {
        (0..self.horizon)
            .map(|t| (0..self.state_count).map(|s| self.action(s, t)).collect())
            .collect()
    }

    /// Returns the first row that is not a distribution.
    pub fn check_rows(&self) -> Result<()> {
        for t in 0..self.horizon {
            for s in 0..self.state_count {
                let row = self.row(s, t);
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > PROB_TOL {
                    return config(format!(
                        "policy row (state {s}, time {t}) of player {} sums to {sum}",
                        self.owner
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyRepr {
    owner: usize,
    rows: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<PolicyRepr> for Policy {
    type Error = crate::error::Error;

    fn try_from(r: PolicyRepr) -> Result<Self> {
        let horizon = r.rows.len();
        let state_count = r.rows.first().map_or(0, Vec::len);
        let action_count = r.rows.first().and_then(|t| t.first()).map_or(0, Vec::len);
        if horizon == 0 || state_count == 0 || action_count == 0 {
            return config("policy table is empty");
        }
        let mut table = Vec::with_capacity(horizon * state_count * action_count);
        for (t, states) in r.rows.iter().enumerate() {
            if states.len() != state_count {
                return config(format!("policy time {t} has {} states, expected {state_count}", states.len()));
            }
            for (s, row) in states.iter().enumerate() {
                if row.len() != action_count {
                    return config(format!(
                        "policy row (state {s}, time {t}) has {} actions, expected {action_count}",
                        row.len()
                    ));
                }
                table.extend_from_slice(row);
            }
        }
        let pi = Self { owner: r.owner, state_count, action_count, horizon, table };
        pi.check_rows()?;
        Ok(pi)
    }
}

impl From<Policy> for PolicyRepr {
    fn from(p: Policy) -> Self {
        let rows = (0..p.horizon)
            .map(|t| (0..p.state_count).map(|s| p.row(s, t).to_vec()).collect())
            .collect();
        Self { owner: p.owner, rows }
    }
}

/// Dense row-stochastic `S×S` matrix; entry `(s, s')` is `P[s -> s']`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for s in 0..n {
            m.data[s * n + s] = 1.0;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }

    pub fn row_mut(&mut self, from: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[from * n..(from + 1) * n]
    }
}

/// Transition matrix `y(s, s', t) = Σ_a P[s'|s,a] π(a|s,t)` of one player at time `t`.
pub fn policy_kernel(mdp: &PlayerMdp, policy: &Policy, t: usize) -> Result<TransitionMatrix> {
    if policy.state_count != mdp.state_count || policy.action_count != mdp.action_count {
        return config(format!(
            "policy shape (S={}, A={}) does not match MDP (S={}, A={})",
            policy.state_count, policy.action_count, mdp.state_count, mdp.action_count
        ));
    }
    if t >= policy.horizon {
        return config(format!("time {t} outside policy horizon {}", policy.horizon));
    }
    let n = mdp.state_count;
    let mut y = TransitionMatrix::zeros(n);
    for s in 0..n {
        let weights = policy.row(s, t);
        let out = y.row_mut(s);
        for (a, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(mdp.transition(s, a)) {
                *o += w * p;
            }
        }
    }
    Ok(y)
}

/// Policy kernels for every `t in [0, T)`.
pub fn policy_kernels(mdp: &PlayerMdp, policy: &Policy) -> Result<Vec<TransitionMatrix>> {
    (0..policy.horizon).map(|t| policy_kernel(mdp, policy, t)).collect()
}

/// One player's state sequence `s(0), ..., s(T)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory(pub Vec<usize>);

impl Trajectory {
    pub fn states(&self) -> &[usize] {
        &self.0
    }
}

/// Probability of `traj` under `policy`: `p(s0) Π_t y(s_t, s_{t+1}, t)`.
pub fn trajectory_probability(mdp: &PlayerMdp, policy: &Policy, traj: &Trajectory) -> Result<f64> {
    let states = traj.states();
    if states.len() != policy.horizon + 1 {
        return config(format!(
            "trajectory has {} states, expected {}",
            states.len(),
            policy.horizon + 1
        ));
    }
    if let Some(&s) = states.iter().find(|&&s| s >= mdp.state_count) {
        return config(format!("trajectory state {s} out of range"));
    }
    let mut prob = mdp.initial[states[0]];
    for (t, w) in states.windows(2).enumerate() {
        if prob == 0.0 {
            break;
        }
        let step: f64 = policy
            .row(w[0], t)
            .iter()
            .enumerate()
            .map(|(a, &pa)| pa * mdp.transition(w[0], a)[w[1]])
            .sum();
        prob *= step;
    }
    Ok(prob)
}

/// `X_i(s)`: whether `s` is in player `i`'s target set.
pub fn reach_indicator(game: &GameSpec, player: usize, s: usize) -> bool {
    game.players[player].is_target(s)
}

/// `Y_ij(s_i, s_j)`: false only for two distinct players sharing a state.
pub fn avoid_indicator(i: usize, j: usize, s_i: usize, s_j: usize) -> bool {
    i == j || s_i != s_j
}

/// The reach-avoid indicator `R` of a joint trajectory: every player ends in
/// its target and no two players ever share a state.
pub fn joint_reach_avoid(game: &GameSpec, trajs: &[Trajectory]) -> Result<bool> {
    if trajs.len() != game.player_count() {
        return config(format!(
            "{} trajectories for {} players",
            trajs.len(),
            game.player_count()
        ));
    }
    let len = game.horizon + 1;
    if let Some(bad) = trajs.iter().position(|tr| tr.0.len() != len) {
        return config(format!("trajectory {bad} does not have {len} states"));
    }
    let reached = trajs
        .iter()
        .enumerate()
        .all(|(i, tr)| reach_indicator(game, i, tr.0[game.horizon]));
    if !reached {
        return Ok(false);
    }
    for t in 0..len {
        for i in 0..trajs.len() {
            for j in i + 1..trajs.len() {
                if !avoid_indicator(i, j, trajs[i].0[t], trajs[j].0[t]) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// One broken invariant, with its location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoPlayers,
    ZeroHorizon,
    StateCountMismatch { player: usize, state_count: usize, expected: usize },
    KernelRow { player: usize, state: usize, action: usize, sum: f64 },
    InitialDistribution { player: usize, sum: f64 },
    EmptyTargetSet { player: usize },
    TargetOutOfRange { player: usize, state: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoPlayers => write!(f, "game has no players"),
            Self::ZeroHorizon => write!(f, "horizon must be at least 1"),
            Self::StateCountMismatch { player, state_count, expected } => write!(
                f,
                "player {player} has {state_count} states, expected {expected}"
            ),
            Self::KernelRow { player, state, action, sum } => write!(
                f,
                "player {player}: kernel row (state {state}, action {action}) is not a distribution (sum {sum})"
            ),
            Self::InitialDistribution { player, sum } => write!(
                f,
                "player {player}: initial distribution is not a distribution (sum {sum})"
            ),
            Self::EmptyTargetSet { player } => write!(f, "player {player}: target set is empty"),
            Self::TargetOutOfRange { player, state } => {
                write!(f, "player {player}: target state {state} is out of range")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collects every invariant violation in `game`; never fails.
pub fn validate_game(game: &GameSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if game.players.is_empty() {
        violations.push(Violation::NoPlayers);
    }
    if game.horizon == 0 {
        violations.push(Violation::ZeroHorizon);
    }
    let expected = game.state_count();
    for (i, mdp) in game.players.iter().enumerate() {
        if mdp.state_count != expected {
            violations.push(Violation::StateCountMismatch {
                player: i,
                state_count: mdp.state_count,
                expected,
            });
        }
        violations.extend(mdp.violations(i));
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 3-state chain; action 0 stays, action 1 moves right (last state absorbs).
    fn chain() -> PlayerMdp {
        let kernel = (0..3)
            .map(|s| {
                let mut stay = vec![0.0; 3];
                stay[s] = 1.0;
                let mut go = vec![0.0; 3];
                go[(s + 1).min(2)] = 1.0;
                vec![stay, go]
            })
            .collect();
        PlayerMdp::new(kernel, vec![1.0, 0.0, 0.0], [2]).unwrap()
    }

    #[test]
    fn deterministic_policy_kernel() {
        let mdp = chain();
        let pi = Policy::deterministic(0, 3, 2, 2, |_, _| 1);
        let y = policy_kernel(&mdp, &pi, 0).unwrap();
        assert_eq!(y.get(0, 1), 1.0);
    }

    #[test]
    fn mixed_policy_kernel() {
        let mdp = chain();
        let mut pi = Policy::uniform(0, 3, 2, 2);
        pi.set_row(0, 1, &[0.5, 0.5]);
        let y = policy_kernel(&mdp, &pi, 1).unwrap();
        assert_eq!(y.get(0, 1), 0.5);
        assert_eq!(y.get(0, 0), 0.5);
    }

    #[test]
    fn policy_kernel_rejects_shape_mismatch() {
        let mdp = chain();
        let pi = Policy::uniform(0, 3, 3, 2);
        assert!(policy_kernel(&mdp, &pi, 0).is_err());
        let pi = Policy::uniform(0, 3, 2, 2);
        assert!(policy_kernel(&mdp, &pi, 2).is_err());
    }

    #[test]
    fn trajectory_probabilities() {
        let mdp = chain();
        let pi = Policy::deterministic(0, 3, 2, 2, |_, _| 1);
        let p = trajectory_probability(&mdp, &pi, &Trajectory(vec![0, 1, 2])).unwrap();
        assert_eq!(p, 1.0);
        let p = trajectory_probability(&mdp, &pi, &Trajectory(vec![1, 2, 2])).unwrap();
        assert_eq!(p, 0.0);
        assert!(trajectory_probability(&mdp, &pi, &Trajectory(vec![0, 1])).is_err());
    }

    #[test]
    fn indicators() {
        let full = chain().with_endpoints(vec![1.0, 0.0, 0.0], 0..3);
        let game = GameSpec::new(vec![chain(), full], 2).unwrap();
        assert!(reach_indicator(&game, 0, 2));
        assert!(!reach_indicator(&game, 0, 1));
        assert!((0..3).all(|s| reach_indicator(&game, 1, s)));
        assert!(avoid_indicator(1, 1, 2, 2));
        assert!(!avoid_indicator(0, 1, 2, 2));
        assert!(avoid_indicator(0, 1, 0, 2));
    }

    #[test]
    fn joint_reach_avoid_cases() {
        let a = chain().with_endpoints(vec![1.0, 0.0, 0.0], [2]);
        let b = chain().with_endpoints(vec![0.0, 1.0, 0.0], [1]);
        let game = GameSpec::new(vec![a, b], 2).unwrap();
        let ok = [Trajectory(vec![0, 0, 2]), Trajectory(vec![1, 1, 1])];
        assert!(joint_reach_avoid(&game, &ok).unwrap());
        let collide0 = [Trajectory(vec![1, 2, 2]), Trajectory(vec![1, 1, 1])];
        assert!(!joint_reach_avoid(&game, &collide0).unwrap());
        let miss = [Trajectory(vec![0, 0, 0]), Trajectory(vec![1, 1, 1])];
        assert!(!joint_reach_avoid(&game, &miss).unwrap());
    }

    #[test]
    fn validation_reports_locations() {
        let mdp = chain();
        let game = GameSpec::new_unchecked(vec![mdp.clone()], 2);
        assert!(validate_game(&game).is_valid());

        let mut kernel: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|s| (0..2).map(|a| mdp.transition(s, a).to_vec()).collect())
            .collect();
        kernel[1][0] = vec![0.0, 0.9, 0.0];
        let bad = PlayerMdp::new_unchecked(kernel, vec![1.0, 0.0, 0.0], [2]).unwrap();
        let report = validate_game(&GameSpec::new_unchecked(vec![mdp.clone(), bad], 2));
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::KernelRow { player, state, action, sum } => {
                assert_eq!((*player, *state, *action), (1, 1, 0));
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected violation {other:?}"),
        }

        let no_target = mdp.with_endpoints(vec![1.0, 0.0, 0.0], []);
        let report = validate_game(&GameSpec::new_unchecked(vec![no_target], 2));
        assert_eq!(report.violations, vec![Violation::EmptyTargetSet { player: 0 }]);
    }

    #[test]
    fn serde_round_trip_and_shape_checks() {
        let game = GameSpec::new(vec![chain()], 2).unwrap();
        let text = serde_json::to_string(&game).unwrap();
        assert_eq!(serde_json::from_str::<GameSpec>(&text).unwrap(), game);
        let mut pi = Policy::uniform(0, 3, 2, 2);
        pi.set_row(1, 1, &[0.25, 0.75]);
        let text = serde_json::to_string(&pi).unwrap();
        assert_eq!(serde_json::from_str::<Policy>(&text).unwrap(), pi);
        let ragged = r#"{"kernel": [[[1.0, 0.0]], [[0.0]]], "initial": [1.0, 0.0], "targets": [1]}"#;
        assert!(serde_json::from_str::<PlayerMdp>(ragged).is_err());
        let bad_row = r#"{"owner": 0, "rows": [[[0.5, 0.6]]]}"#;
        assert!(serde_json::from_str::<Policy>(bad_row).is_err());
    }
}
