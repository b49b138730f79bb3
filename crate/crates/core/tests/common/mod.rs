#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reach_avoid_core::gridworld::{random_scenario, GridSpec, PConvention};
use reach_avoid_core::{shortest_path_policy, GameSpec, PlayerMdp, Policy};

/// Random distribution over `n` outcomes; `sparse` zeroes about half.
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if sparse && rng.random_bool(0.5) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if v.iter().sum::<f64>() == 0.0 {
        v[rng.random_range(0..n)] = 1.0;
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

pub fn random_mdp(rng: &mut ChaCha8Rng, states: usize, actions: usize) -> PlayerMdp {
    let kernel = (0..states)
        .map(|_| (0..actions).map(|_| random_distribution(rng, states, true)).collect())
        .collect();
    let initial = random_distribution(rng, states, true);
    let mut targets: Vec<usize> = (0..states).filter(|_| rng.random_bool(0.4)).collect();
    if targets.is_empty() {
        targets.push(rng.random_range(0..states));
    }
    PlayerMdp::new(kernel, initial, targets).expect("well-formed random MDP")
}

pub fn random_policy(rng: &mut ChaCha8Rng, owner: usize, states: usize, actions: usize, horizon: usize) -> Policy {
    let mut pi = Policy::uniform(owner, states, actions, horizon);
    for t in 0..horizon {
        for s in 0..states {
            let sparse = rng.random_bool(0.3);
            let row = random_distribution(rng, actions, sparse);
            pi.set_row(s, t, &row);
        }
    }
    pi
}

/// Seeded game with independently drawn dynamics and stochastic policies.
pub fn random_instance(
    seed: u64,
    players: usize,
    states: usize,
    actions: usize,
    horizon: usize,
) -> (GameSpec, Vec<Policy>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mdps = (0..players).map(|_| random_mdp(&mut rng, states, actions)).collect();
    let policies = (0..players)
        .map(|i| random_policy(&mut rng, i, states, actions, horizon))
        .collect();
    (GameSpec::new(mdps, horizon).expect("valid game"), policies)
}

pub fn grid(rows: usize, cols: usize, p: f64, players: usize, horizon: usize, seed: u64) -> GridSpec {
    GridSpec { rows, cols, p, convention: PConvention::Success, players, horizon, seed }
}

pub fn grid_game(spec: &GridSpec) -> GameSpec {
    random_scenario(spec).expect("valid grid scenario")
}

pub fn shortest_joint(game: &GameSpec) -> Vec<Policy> {
    game.players()
        .iter()
        .enumerate()
        .map(|(i, m)| shortest_path_policy(m, i, game.horizon()).policy)
        .collect()
}
