//! Joint-state value recursion for a fixed joint policy.
//!
//! `V_T(s) = Π_j X_j(s_j) · Π_{i<j} Y_ij(s)` and
//! `V_t(s) = Π_{i<j} Y_ij(s) · Σ_ŝ Π_j y_j(s_j, ŝ_j, t) V_{t+1}(ŝ)`;
//! the sum is evaluated as N one-axis contractions.

use crate::error::{config, Result};
use crate::game::{policy_kernels, GameSpec, Policy, TransitionMatrix};
use crate::joint::JointSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct JointValue {
    pub t: usize,
    pub space: JointSpace,
    pub values: Vec<f64>,
}

impl JointValue {
    pub fn get(&self, joint: &[usize]) -> f64 {
        self.values[self.space.encode(joint)]
    }
}

/// Joint space plus the collision-free and all-in-target masks of a game.
#[derive(Clone, Debug)]
pub struct JointLayout {
    pub space: JointSpace,
    pub collision_free: Vec<bool>,
    pub terminal: Vec<f64>,
}

impl JointLayout {
    pub fn new(game: &GameSpec) -> Result<Self> {
        let space = JointSpace::new(game.player_count(), game.state_count())?;
        let collision_free = space.collision_free_mask();
        let mut digits = vec![0; space.players()];
        let terminal = (0..space.size())
            .map(|idx| {
                if !collision_free[idx] {
                    return 0.0;
                }
                space.decode(idx, &mut digits);
                let all_in = digits
                    .iter()
                    .enumerate()
                    .all(|(j, &s)| game.player(j).is_target(s));
                if all_in {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { space, collision_free, terminal })
    }

    /// Zeroes every joint state in which two players collide.
    pub fn apply_avoid(&self, values: &mut [f64]) {
        for (v, &free) in values.iter_mut().zip(&self.collision_free) {
            if !free {
                *v = 0.0;
            }
        }
    }

    /// One backward step under the per-player kernels of a single time step.
    pub fn backward(&self, kernels: &[&TransitionMatrix], next: &[f64]) -> Vec<f64> {
        let mut cur = next.to_vec();
        let mut scratch = vec![0.0; cur.len()];
        for (axis, y) in kernels.iter().enumerate() {
            self.space.contract_axis(axis, y, &cur, &mut scratch);
            std::mem::swap(&mut cur, &mut scratch);
        }
        self.apply_avoid(&mut cur);
        cur
    }

    /// Expectation of `values` under independent initial distributions.
    pub fn initial_expectation(&self, game: &GameSpec, values: &[f64]) -> f64 {
        let mut cur = values.to_vec();
        let mut scratch = vec![0.0; cur.len()];
        // Contract with rank-one matrices whose rows all equal p_j; afterwards
        // every entry holds the expectation.
        for axis in 0..self.space.players() {
            let p = game.player(axis).initial();
            let mut m = TransitionMatrix::zeros(p.len());
            for s in 0..p.len() {
                m.row_mut(s).copy_from_slice(p);
            }
            self.space.contract_axis(axis, &m, &cur, &mut scratch);
            std::mem::swap(&mut cur, &mut scratch);
        }
        cur[0]
    }
}

/// `V_T`: 1 exactly where every player is in its target and no two collide.
pub fn terminal_value(game: &GameSpec) -> Result<JointValue> {
    let layout = JointLayout::new(game)?;
    Ok(JointValue { t: game.horizon(), space: layout.space, values: layout.terminal })
}

/// `V_t` from `V_{t+1}` under the joint policy's rows at `t = next.t - 1`.
pub fn backward_step(game: &GameSpec, policies: &[Policy], next: &JointValue) -> Result<JointValue> {
    game.check_joint_policy(policies)?;
    if next.t == 0 || next.t > game.horizon() {
        return config(format!("cannot step back from time {}", next.t));
    }
    let t = next.t - 1;
    let layout = JointLayout::new(game)?;
    let kernels = policies
        .iter()
        .zip(game.players())
        .map(|(pi, mdp)| crate::game::policy_kernel(mdp, pi, t))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&TransitionMatrix> = kernels.iter().collect();
    Ok(JointValue { t, space: layout.space, values: layout.backward(&refs, &next.values) })
}

/// `V_0, ..., V_T` for a joint policy.
pub fn value_functions(game: &GameSpec, policies: &[Policy]) -> Result<Vec<JointValue>> {
    game.check_joint_policy(policies)?;
    let layout = JointLayout::new(game)?;
    let kernels = joint_kernels(game, policies)?;
    let horizon = game.horizon();
    let mut out = vec![JointValue { t: horizon, space: layout.space, values: layout.terminal.clone() }];
    for t in (0..horizon).rev() {
        let refs: Vec<&TransitionMatrix> = kernels.iter().map(|k| &k[t]).collect();
        let values = layout.backward(&refs, &out.last().expect("nonempty").values);
        out.push(JointValue { t, space: layout.space, values });
    }
    out.reverse();
    Ok(out)
}

/// The potential `F(π) = E[R]`, via the backward recursion from `V_T` to `V_0`.
pub fn potential_value(game: &GameSpec, policies: &[Policy]) -> Result<f64> {
    game.check_joint_policy(policies)?;
    let layout = JointLayout::new(game)?;
    let kernels = joint_kernels(game, policies)?;
    let mut values = layout.terminal.clone();
    for t in (0..game.horizon()).rev() {
        let refs: Vec<&TransitionMatrix> = kernels.iter().map(|k| &k[t]).collect();
        values = layout.backward(&refs, &values);
    }
    Ok(layout.initial_expectation(game, &values))
}

/// `kernels[j][t]` for every player.
pub fn joint_kernels(game: &GameSpec, policies: &[Policy]) -> Result<Vec<Vec<TransitionMatrix>>> {
    game.players()
        .iter()
        .zip(policies)
        .map(|(mdp, pi)| policy_kernels(mdp, pi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::PlayerMdp;

    /// Two-state line: action 0 stays, action 1 swaps.
    fn toggle(initial: Vec<f64>, target: usize) -> PlayerMdp {
        let kernel = vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ];
        PlayerMdp::new(kernel, initial, [target]).unwrap()
    }

    fn three_cell(initial: usize, target: usize) -> PlayerMdp {
        let kernel = (0..3)
            .map(|s| {
                (0..3)
                    .map(|a| {
                        let mut row = vec![0.0; 3];
                        row[if a == 0 { s } else { (s + a) % 3 }] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        let mut p = vec![0.0; 3];
        p[initial] = 1.0;
        PlayerMdp::new(kernel, p, [target]).unwrap()
    }

    #[test]
    fn terminal_value_cases() {
        let game = GameSpec::new(vec![three_cell(0, 1), three_cell(1, 2)], 1).unwrap();
        let v = terminal_value(&game).unwrap();
        assert_eq!(v.get(&[1, 2]), 1.0);
        let shared = GameSpec::new(vec![three_cell(0, 1), three_cell(1, 1)], 1).unwrap();
        assert_eq!(terminal_value(&shared).unwrap().get(&[1, 1]), 0.0);
        assert_eq!(v.get(&[0, 2]), 0.0);
    }

    #[test]
    fn backward_step_normalization_and_collision() {
        let a = toggle(vec![1.0, 0.0], 0).with_endpoints(vec![1.0, 0.0], 0..2);
        let game = GameSpec::new(vec![a.clone(), three_cell(0, 0).with_endpoints(vec![0.0, 1.0, 0.0], 0..3)], 1);
        assert!(game.is_err(), "state counts differ");
        let b = a.with_endpoints(vec![0.0, 1.0], 0..2);
        let game = GameSpec::new(vec![a, b], 1).unwrap();
        let pis = vec![Policy::uniform(0, 2, 2, 1), Policy::uniform(1, 2, 2, 1)];
        let ones = JointValue {
            t: 1,
            space: JointSpace::new(2, 2).unwrap(),
            values: vec![1.0; 4],
        };
        let v0 = backward_step(&game, &pis, &ones).unwrap();
        assert_eq!(v0.get(&[0, 1]), 1.0);
        assert_eq!(v0.get(&[1, 1]), 0.0);
    }

    #[test]
    fn potential_certain_outcomes() {
        let game = GameSpec::new(vec![three_cell(0, 0), three_cell(1, 2)], 2).unwrap();
        // Player 0 stays home; player 1 steps to 2 then stays.
        let stay = Policy::deterministic(0, 3, 3, 2, |_, _| 0);
        let go = Policy::deterministic(1, 3, 3, 2, |s, _| if s == 1 { 1 } else { 0 });
        let f = potential_value(&game, &[stay.clone(), go]).unwrap();
        assert_eq!(f, 1.0);

        let shared = GameSpec::new(vec![three_cell(0, 0), three_cell(0, 2)], 2).unwrap();
        let other = Policy::deterministic(1, 3, 3, 2, |_, _| 2);
        assert_eq!(potential_value(&shared, &[stay, other]).unwrap(), 0.0);
    }
}
