//! Posterior beliefs of the uninformed player, the boundary sets `K_δ`,
//! the renormalization `ξ_δ` and the block decomposition of a belief path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Belief, Pair, PublicHistory};
use crate::strategy::InformedStrategy;

/// Bayes-updated belief along a history, with unnormalized weights
/// proportional to `ℙ_{p,σ}(k, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    belief: Belief,
    weights: Vec<f64>,
    /// Weights are `exp(log_scale) · ℙ(k, h)`; rescaled to avoid underflow.
    log_scale: f64,
    t: usize,
}

impl PosteriorState {
    pub fn new(prior: Belief) -> Self {
        PosteriorState {
            weights: prior.as_slice().to_vec(),
            belief: prior,
            log_scale: 0.0,
            t: 0,
        }
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn stage(&self) -> usize {
        self.t
    }

    /// `ℙ_{p,σ}(k, h)` for every state.
    pub fn history_weights(&self) -> Vec<f64> {
        let scale = (-self.log_scale).exp();
        self.weights.iter().map(|w| w * scale).collect()
    }

    /// Advances one stage. `likelihood[k]` is `σ(k, h)(i)` for the observed
    /// action of Player I, or `None` when Player I did not move.
    ///
    /// The belief is left untouched when the likelihood is the same in every
    /// state carrying weight.
    pub fn observe(&mut self, likelihood: Option<&[f64]>) -> Result<()> {
        self.t += 1;
        let Some(lik) = likelihood else {
            return Ok(());
        };
        let mut common = None;
        let mut uniform = true;
        for (w, l) in self.weights.iter().zip(lik) {
            if *w > 0.0 {
                match common {
                    None => common = Some(*l),
                    Some(c) if c != *l => uniform = false,
                    _ => {}
                }
            }
        }
        if uniform {
            return match common {
                Some(c) if c > 0.0 => {
                    self.log_scale -= c.ln();
                    Ok(())
                }
                _ => Err(Error::NullHistory),
            };
        }
        let next: Vec<f64> = self.weights.iter().zip(lik).map(|(w, l)| w * l).collect();
        let sum: f64 = next.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::NullHistory);
        }
        self.belief = Belief::normalized(next.clone())?;
        if sum < 1e-100 {
            self.weights = next.iter().map(|w| w / sum).collect();
            self.log_scale -= sum.ln();
        } else {
            self.weights = next;
        }
        Ok(())
    }

    /// Replaces the belief, keeping the stage count.
    pub fn reset(&mut self, belief: Belief) {
        self.weights = belief.as_slice().to_vec();
        self.belief = belief;
        self.log_scale = 0.0;
    }
}

/// Posterior belief after `h` when Player I uses `sigma` and the prior is `p`.
pub fn posterior(p: &Belief, sigma: &dyn InformedStrategy, h: &PublicHistory) -> Result<Belief> {
    let mut state = PosteriorState::new(p.clone());
    let mut cursor = sigma.start();
    let mut lik = vec![0.0; p.len()];
    for pair in h.pairs() {
        if pair.i_moved() {
            for (k, l) in lik.iter_mut().enumerate() {
                *l = cursor.dist(k).get(pair.i).copied().unwrap_or(0.0);
            }
            state.observe(Some(&lik))?;
        } else {
            state.observe(None)?;
        }
        cursor.advance(*pair);
    }
    Ok(state.belief)
}

/// `K_δ(p) = { k : p(k) > δ/|K| }`.
pub fn support_above(p: &Belief, delta: f64) -> Vec<usize> {
    let all: Vec<usize> = (0..p.len()).collect();
    support_above_within(p, delta, &all)
}

/// `K_δ` of the game restricted to `active`.
pub fn support_above_within(p: &Belief, delta: f64, active: &[usize]) -> Vec<usize> {
    let threshold = delta / active.len() as f64;
    active.iter().copied().filter(|&k| p.get(k) > threshold).collect()
}

/// `ξ_δ(p)`: `p` conditioned on `K_δ(p)`.
pub fn renormalize_xi(p: &Belief, delta: f64) -> Belief {
    let all: Vec<usize> = (0..p.len()).collect();
    renormalize_xi_within(p, delta, &all)
}

pub fn renormalize_xi_within(p: &Belief, delta: f64, active: &[usize]) -> Belief {
    let keep = support_above_within(p, delta, active);
    let mut w = vec![0.0; p.len()];
    for k in keep {
        w[k] = p.get(k);
    }
    Belief::normalized(w).expect("K_δ is never empty for δ < 1")
}

/// Whether some state of `K` has probability at most `δ/|K|`.
pub fn is_boundary(p: &Belief, delta: f64) -> bool {
    support_above(p, delta).len() < p.len()
}

pub fn is_boundary_within(p: &Belief, delta: f64, active: &[usize]) -> bool {
    support_above_within(p, delta, active).len() < active.len()
}

/// `δ` for a target `ε`: below `ε²` and small enough that a belief move of
/// `δ` in L1 changes a `lipschitz`-continuous value by at most `ε / |K|`.
pub fn select_delta(epsilon: f64, lipschitz: f64, num_states: usize) -> f64 {
    let continuity = if lipschitz > 0.0 {
        epsilon / (lipschitz * num_states as f64)
    } else {
        f64::INFINITY
    };
    (epsilon * epsilon / 2.0).min(continuity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockEvent {
    Continue,
    NewBlock,
    Theta,
}

/// Cuts a belief path into blocks of L1 movement below `δ·ε`, stopping at
/// the first stage `θ` where the belief is `δ`-close to the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTracker {
    epsilon: f64,
    delta: f64,
    block_index: usize,
    block_start_belief: Belief,
    block_start_stage: usize,
    theta_reached: bool,
    active: Vec<usize>,
}

impl BlockTracker {
    pub fn new(epsilon: f64, delta: f64, start: Belief) -> Result<Self> {
        let active = (0..start.len()).collect();
        Self::restricted(epsilon, delta, start, 0, active)
    }

    /// A tracker for the game restricted to `active`, started at `stage`.
    pub fn restricted(
        epsilon: f64,
        delta: f64,
        start: Belief,
        stage: usize,
        active: Vec<usize>,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0,1)")));
        }
        if !(delta > 0.0 && delta < epsilon * epsilon) {
            return Err(Error::InvalidParameter(format!(
                "delta {delta} outside (0, epsilon²)"
            )));
        }
        if active.is_empty() {
            return Err(Error::InvalidParameter("no active states".into()));
        }
        Ok(BlockTracker {
            epsilon,
            delta,
            block_index: 0,
            block_start_belief: start,
            block_start_stage: stage,
            theta_reached: false,
            active,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn block_index(&self) -> usize {
        self.block_index
    }

    pub fn block_start_belief(&self) -> &Belief {
        &self.block_start_belief
    }

    pub fn block_start_stage(&self) -> usize {
        self.block_start_stage
    }

    pub fn theta_reached(&self) -> bool {
        self.theta_reached
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Classifies the belief reached at `stage`. Once `θ` is reached every
    /// later call returns `Theta`.
    pub fn block_step(&mut self, belief: &Belief, stage: usize) -> BlockEvent {
        if self.theta_reached || is_boundary_within(belief, self.delta, &self.active) {
            self.theta_reached = true;
            return BlockEvent::Theta;
        }
        if belief.l1_distance(&self.block_start_belief) >= self.delta * self.epsilon {
            self.block_index += 1;
            self.block_start_belief = belief.clone();
            self.block_start_stage = stage;
            return BlockEvent::NewBlock;
        }
        BlockEvent::Continue
    }
}

/// `‖Σ_i ℙ(i|h) π(p,σ,h∘(i,j₀)) − π(p,σ,h)‖₁`, every posterior computed
/// from scratch.
pub fn martingale_residual(p: &Belief, sigma: &dyn InformedStrategy, h: &PublicHistory) -> Result<f64> {
    let current = posterior(p, sigma, h)?;
    let mut cursor = sigma.start();
    for pair in h.pairs() {
        cursor.advance(*pair);
    }
    let mut mean = vec![0.0; p.len()];
    for i in 0..sigma.num_actions() {
        let prob: f64 = (0..p.len()).map(|k| current.get(k) * cursor.dist(k)[i]).sum();
        if prob <= 0.0 {
            continue;
        }
        let mut next = h.clone();
        next.push(Pair::new(i, 0));
        let q = posterior(p, sigma, &next)?;
        for (m, qk) in mean.iter_mut().zip(q.as_slice()) {
            *m += prob * qk;
        }
    }
    Ok(mean.iter().zip(current.as_slice()).map(|(a, b)| (a - b).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{DUMMY, LEFT, RIGHT};
    use crate::strategy::{pure_informed, stationary_informed, stationary_uninformed, non_revealing};

    fn b(w: &[f64]) -> Belief {
        Belief::new(w.to_vec()).unwrap()
    }

    fn h(pairs: &[(usize, usize)]) -> PublicHistory {
        PublicHistory::from_pairs(pairs.iter().map(|&(i, j)| Pair::new(i, j)).collect())
    }

    #[test]
    fn posterior_examples() {
        let half = b(&[0.5, 0.5]);
        let nr = non_revealing(stationary_uninformed(vec![0.3, 0.7]).unwrap(), 2);
        assert_eq!(posterior(&half, nr.as_ref(), &h(&[(0, 1), (1, 0)])).unwrap(), half);

        let revealing = pure_informed(2, &[LEFT, RIGHT]).unwrap();
        let post = posterior(&half, revealing.as_ref(), &h(&[(LEFT, DUMMY)])).unwrap();
        assert_eq!(post.as_slice(), &[1.0, 0.0]);

        let partial = stationary_informed(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let post = posterior(&half, partial.as_ref(), &h(&[(LEFT, DUMMY)])).unwrap();
        assert!((post.get(0) - 0.75).abs() < 1e-15 && (post.get(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn null_history_is_an_error() {
        let half = b(&[0.5, 0.5]);
        let always_l = pure_informed(2, &[LEFT, LEFT]).unwrap();
        let err = posterior(&half, always_l.as_ref(), &h(&[(RIGHT, 0)])).unwrap_err();
        assert_eq!(err.to_string(), "posterior undefined on null history");
    }

    #[test]
    fn posterior_ignores_player_two() {
        let p = b(&[0.3, 0.7]);
        let sigma = stationary_informed(vec![vec![0.6, 0.4], vec![0.1, 0.9]]).unwrap();
        let a = posterior(&p, sigma.as_ref(), &h(&[(0, 0), (1, 1), (0, 1)])).unwrap();
        let c = posterior(&p, sigma.as_ref(), &h(&[(0, 1), (1, 0), (0, 0)])).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(support_above(&b(&[0.9, 0.1]), 0.3), vec![0]);
        assert_eq!(support_above(&b(&[0.5, 0.5]), 0.3), vec![0, 1]);
        assert_eq!(support_above(&b(&[1.0, 0.0]), 0.01), vec![0]);

        assert_eq!(renormalize_xi(&b(&[0.9, 0.1]), 0.3).as_slice(), &[1.0, 0.0]);
        assert_eq!(renormalize_xi(&b(&[0.5, 0.5]), 0.3).as_slice(), &[0.5, 0.5]);
        let xi = renormalize_xi(&b(&[0.6, 0.3, 0.1]), 0.6);
        assert!((xi.get(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((xi.get(1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(xi.get(2), 0.0);

        assert!(!is_boundary(&b(&[0.5, 0.5]), 0.3));
        assert!(is_boundary(&b(&[0.9, 0.1]), 0.3));
        assert!(is_boundary(&b(&[1.0, 0.0]), 0.01));
    }

    #[test]
    fn block_step_examples() {
        let mut t = BlockTracker::new(0.1, 0.005, b(&[0.5, 0.5])).unwrap();
        assert_eq!(t.block_step(&b(&[0.5, 0.5]), 1), BlockEvent::Continue);
        assert_eq!(t.block_step(&b(&[0.501, 0.499]), 2), BlockEvent::NewBlock);
        assert_eq!(t.block_index(), 1);
        assert_eq!(t.block_start_stage(), 2);

        let mut t = BlockTracker::new(0.6, 0.3, b(&[0.5, 0.5])).unwrap();
        assert_eq!(t.block_step(&b(&[0.9, 0.1]), 1), BlockEvent::Theta);
        assert!(t.theta_reached());
    }

    #[test]
    fn delta_must_be_below_epsilon_squared() {
        assert!(BlockTracker::new(0.1, 0.02, b(&[0.5, 0.5])).is_err());
        assert!(BlockTracker::new(1.5, 0.01, b(&[0.5, 0.5])).is_err());
        let d = select_delta(0.05, 1.5, 2);
        assert!(d < 0.05 * 0.05);
    }

    #[test]
    fn martingale_examples() {
        let half = b(&[0.5, 0.5]);
        let nr = non_revealing(stationary_uninformed(vec![0.5, 0.5]).unwrap(), 2);
        assert!(martingale_residual(&half, nr.as_ref(), &h(&[(0, 0)])).unwrap() <= 1e-10);
        let revealing = pure_informed(2, &[LEFT, RIGHT]).unwrap();
        assert!(martingale_residual(&half, revealing.as_ref(), &h(&[])).unwrap() <= 1e-10);
        let partial = stationary_informed(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        assert!(martingale_residual(&half, partial.as_ref(), &h(&[])).unwrap() <= 1e-10);
    }

    #[test]
    fn constant_likelihood_keeps_the_belief() {
        let mut s = PosteriorState::new(b(&[0.3, 0.7]));
        s.observe(Some(&[0.4, 0.4])).unwrap();
        assert_eq!(s.belief().as_slice(), &[0.3, 0.7]);
        s.observe(None).unwrap();
        assert_eq!(s.stage(), 2);
        s.observe(Some(&[0.5, 0.25])).unwrap();
        let w = s.history_weights();
        assert!((w[0] - 0.3 * 0.4 * 0.5).abs() < 1e-15 && (w[1] - 0.7 * 0.4 * 0.25).abs() < 1e-15);
    }
}
