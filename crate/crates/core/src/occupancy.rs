//! Occupancy measures: forward propagation of a policy, the opponents'
//! product occupancy, and the ε-truncated two-step opponent occupancy.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::{policy_kernels, PlayerMdp, Policy, TransitionMatrix};
use crate::joint::JointSpace;

/// `ρ(s, t)` for one player, `t = 0..=T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyTable {
    states: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl OccupancyTable {
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Distribution over states at time `t`.
    pub fn slice(&self, t: usize) -> &[f64] {
        &self.data[t * self.states..(t + 1) * self.states]
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.data[t * self.states + s]
    }
}

/// Forward-propagates `mdp`'s initial distribution under `policy`.
pub fn forward_propagate(mdp: &PlayerMdp, policy: &Policy) -> Result<OccupancyTable> {
    let kernels = policy_kernels(mdp, policy)?;
    Ok(forward_propagate_kernels(mdp.initial(), &kernels))
}

/// Same as [`forward_propagate`] with precomputed per-time kernels.
pub fn forward_propagate_kernels(initial: &[f64], kernels: &[TransitionMatrix]) -> OccupancyTable {
    let states = initial.len();
    let horizon = kernels.len();
    let mut data = vec![0.0; (horizon + 1) * states];
    data[..states].copy_from_slice(initial);
    for (t, y) in kernels.iter().enumerate() {
        let (done, rest) = data.split_at_mut((t + 1) * states);
        let current = &done[t * states..];
        let next = &mut rest[..states];
        for (s, &mass) in current.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (n, &p) in next.iter_mut().zip(y.row(s)) {
                *n += mass * p;
            }
        }
    }
    OccupancyTable { states, horizon, data }
}

/// Product occupancy `ρ_{-i}(s_{-i}, t) = Π_{j≠i} ρ_j(s_j, t)` over the
/// opponents' joint space, packed in opponent order.
#[derive(Clone, Debug, PartialEq)]
pub struct OpponentOccupancy {
    space: JointSpace,
    mass: Vec<f64>,
}

impl OpponentOccupancy {
    pub fn space(&self) -> JointSpace {
        self.space
    }

    /// Dense mass vector indexed by packed opponent state.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, opponents: &[usize]) -> f64 {
        self.mass[self.space.encode(opponents)]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass with every entry `≤ epsilon` zeroed; no renormalization.
    pub fn truncated(&self, epsilon: f64) -> Vec<f64> {
        self.mass
            .iter()
            .map(|&m| if m > epsilon { m } else { 0.0 })
            .collect()
    }
}

/// Builds the product measure of the given opponents at time `t`.
pub fn opponent_occupancy(tables: &[&OccupancyTable], t: usize) -> Result<OpponentOccupancy> {
    let states = match tables.first() {
        Some(first) => first.states,
        None => 1,
    };
    if tables.iter().any(|tb| tb.states != states) {
        return config("opponent occupancy tables disagree on state count");
    }
    if let Some(tb) = tables.iter().find(|tb| t > tb.horizon) {
        return config(format!("time {t} outside occupancy horizon {}", tb.horizon));
    }
    let space = JointSpace::new(tables.len(), states)?;
    let mut mass = vec![1.0];
    for tb in tables {
        let slice = tb.slice(t);
        let mut next = Vec::with_capacity(mass.len() * states);
        for &m in &mass {
            next.extend(slice.iter().map(|&r| m * r));
        }
        mass = next;
    }
    Ok(OpponentOccupancy { space, mass })
}

/// `ε(t) = base^(slope·t + offset)`, or no truncation at all.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Off,
    Power { base: f64, slope: f64, offset: f64 },
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::paper()
    }
}

impl EpsilonSchedule {
    /// `(1e-2)^(0.75 t + 3)`.
    pub fn paper() -> Self {
        Self::Power { base: 1e-2, slope: 0.75, offset: 3.0 }
    }

    pub fn epsilon_at(&self, t: usize) -> Result<f64> {
        match *self {
            Self::Off => Ok(0.0),
            Self::Power { base, slope, offset } => {
                let eps = base.powf(slope * t as f64 + offset);
                if eps.is_nan() || !(0.0..1.0).contains(&eps) {
                    return config(format!(
                        "epsilon schedule {base}^({slope}·t+{offset}) gives {eps} at t={t}; must lie in [0, 1)"
                    ));
                }
                Ok(eps)
            }
        }
    }

    /// Checks `ε(t) ∈ [0, 1)` for every decision time of a horizon-`T` game.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        (0..horizon).try_for_each(|t| self.epsilon_at(t).map(drop))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStepEntry {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// `ρ(s_{-i}, ŝ_{-i})`: opponents at `s_{-i}` at `t` and `ŝ_{-i}` at `t+1`.
/// Entries are strictly positive and sorted by `(from, to)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepOpponentOccupancy {
    space: JointSpace,
    entries: Vec<TwoStepEntry>,
}

impl TwoStepOpponentOccupancy {
    pub fn space(&self) -> JointSpace {
        self.space
    }

    pub fn entries(&self) -> &[TwoStepEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.from, e.to).cmp(&(from, to)))
            .map_or(0.0, |k| self.entries[k].mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// Marginal over the time-`t` opponent state.
    pub fn source_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.size()];
        for e in &self.entries {
            out[e.from] += e.mass;
        }
        out
    }

    /// Marginal over the time-`t+1` opponent state.
    pub fn destination_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.size()];
        for e in &self.entries {
            out[e.to] += e.mass;
        }
        out
    }
}

/// Two-step opponent occupancy at one time step. Sources with
/// `ρ_{-i}(s_{-i}, t) ≤ epsilon` are dropped without renormalizing.
/// `kernels[k]` is the time-`t` policy kernel of the `k`-th opponent.
pub fn two_step_occupancy(
    kernels: &[&TransitionMatrix],
    occupancy: &OpponentOccupancy,
    epsilon: f64,
) -> Result<TwoStepOpponentOccupancy> {
    let space = occupancy.space;
    if kernels.len() != space.players() {
        return config(format!(
            "{} opponent kernels for {} opponents",
            kernels.len(),
            space.players()
        ));
    }
    if kernels.iter().any(|y| y.size() != space.states()) {
        return config("opponent kernel size does not match the state space");
    }
    let supports: Vec<Vec<Vec<(usize, f64)>>> = kernels
        .iter()
        .map(|y| {
            (0..y.size())
                .map(|s| {
                    y.row(s)
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(k, &p)| (k, p))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut entries = Vec::new();
    let mut digits = vec![0usize; space.players()];
    for (from, &mass) in occupancy.mass.iter().enumerate() {
        if mass <= epsilon {
            continue;
        }
        space.decode(from, &mut digits);
        // Mixed-radix walk over the product of per-opponent supports; packed
        // destinations come out in increasing order.
        let rows: Vec<&[(usize, f64)]> = digits
            .iter()
            .zip(&supports)
            .map(|(&s, sup)| sup[s].as_slice())
            .collect();
        let mut stack = vec![(0usize, 0usize, mass)];
        while let Some((depth, to, m)) = stack.pop() {
            if depth == rows.len() {
                entries.push(TwoStepEntry { from, to, mass: m });
                continue;
            }
            for &(next, p) in rows[depth].iter().rev() {
                stack.push((depth + 1, to * space.states() + next, m * p));
            }
        }
    }
    Ok(TwoStepOpponentOccupancy { space, entries })
}
