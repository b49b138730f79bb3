//! Mixed-radix packing of joint states and single-axis contractions.
//!
//! A joint state `(s_0, ..., s_{N-1})` is packed as `Σ_j s_j · S^(N-1-j)`, so
//! player 0 is the most significant digit and packed order is lexicographic.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::TransitionMatrix;

const PARALLEL_MIN: usize = 1 << 15;

/// Joint state space `S^N` of `N` players over `S` states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointSpace {
    players: usize,
    states: usize,
    size: usize,
}

impl JointSpace {
    /// Fails if `S^N` does not fit in `usize`.
    pub fn new(players: usize, states: usize) -> Result<Self> {
        let size = u32::try_from(players)
            .ok()
            .and_then(|n| states.checked_pow(n))
            .ok_or(Error::TooLarge {
                oracle: "joint state space",
                size: (states as f64).powi(players as i32),
                bound: usize::MAX as f64,
            })?;
        Ok(Self { players, states, size })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Distance in packed index between consecutive values of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.states.pow((self.players - 1 - axis) as u32)
    }

    pub fn encode(&self, joint: &[usize]) -> usize {
        joint.iter().fold(0, |acc, &s| acc * self.states + s)
    }

    pub fn decode(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.states;
            index /= self.states;
        }
    }

    /// State of player `axis` inside packed `index`.
    pub fn component(&self, index: usize, axis: usize) -> usize {
        (index / self.stride(axis)) % self.states
    }

    /// `mask[s]` is true iff no two players share a state in `s`.
    pub fn collision_free_mask(&self) -> Vec<bool> {
        let mut digits = vec![0usize; self.players];
        let mut seen = vec![false; self.states];
        (0..self.size)
            .map(|idx| {
                self.decode(idx, &mut digits);
                let mut free = true;
                for &d in &digits {
                    if seen[d] {
                        free = false;
                        break;
                    }
                    seen[d] = true;
                }
                for &d in &digits {
                    seen[d] = false;
                }
                free
            })
            .collect()
    }

    /// Backward contraction along one axis:
    /// `out[.., s, ..] = Σ_ŝ m(s, ŝ) · input[.., ŝ, ..]`.
    pub fn contract_axis(&self, axis: usize, m: &TransitionMatrix, input: &[f64], out: &mut [f64]) {
        self.apply_axis(axis, input, out, |s, s_hat| m.get(s, s_hat));
    }

    /// Forward propagation along one axis:
    /// `out[.., ŝ, ..] = Σ_s m(s, ŝ) · input[.., s, ..]`.
    pub fn propagate_axis(&self, axis: usize, m: &TransitionMatrix, input: &[f64], out: &mut [f64]) {
        self.apply_axis(axis, input, out, |s_hat, s| m.get(s, s_hat));
    }

    fn apply_axis(
        &self,
        axis: usize,
        input: &[f64],
        out: &mut [f64],
        weight: impl Fn(usize, usize) -> f64 + Sync,
    ) {
        debug_assert_eq!(input.len(), self.size);
        debug_assert_eq!(out.len(), self.size);
        let n = self.states;
        let inner = self.stride(axis);
        let fill = |(chunk, dst): (usize, &mut [f64])| {
            let outer = chunk / n;
            let digit = chunk % n;
            dst.fill(0.0);
            let base = outer * n * inner;
            for other in 0..n {
                let w = weight(digit, other);
                if w == 0.0 {
                    continue;
                }
                let src = &input[base + other * inner..base + (other + 1) * inner];
                for (d, &v) in dst.iter_mut().zip(src) {
                    *d += w * v;
                }
            }
        };
        if self.size >= PARALLEL_MIN {
            out.par_chunks_mut(inner).enumerate().for_each(fill);
        } else {
            out.chunks_mut(inner).enumerate().for_each(fill);
        }
    }
}
