//! Stage-by-stage play of a strategy pair, with cycle detection on the
//! joint memory of finite-memory cursors.

use std::collections::HashMap;

use rand::Rng;

use crate::game::{LassoPlay, Pair, PublicHistory, Timing, DUMMY};
use crate::strategy::{hash_key, is_pure, InformedCursor, UninformedCursor};

#[derive(Debug, Clone)]
pub struct PlayOutcome {
    /// Pairs played from the start stage on.
    pub history: PublicHistory,
    /// The play from the start stage, once it is known to repeat.
    pub lasso: Option<LassoPlay>,
    /// Whether any randomization was drawn.
    pub randomized: bool,
}

/// Samples an action; pure distributions consume no randomness.
pub fn sample<R: Rng + ?Sized>(dist: &[f64], rng: &mut R, randomized: &mut bool) -> usize {
    if let Some(a) = dist.iter().position(|&x| x == 1.0) {
        return a;
    }
    *randomized = true;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, &x) in dist.iter().enumerate() {
        acc += x;
        if u < acc {
            return a;
        }
    }
    dist.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

/// Plays up to `horizon` stages starting at stage `start_stage` in `state`.
///
/// With `detect_lasso`, the joint key (σ memory, τ memory, stage modulo
/// the timing period) is recorded at every stage whose moves are pure; a
/// repeated key closes a cycle and play stops. Any randomized stage forgets
/// the recorded keys. `observe` is called after every stage with the stage
/// count and Player II's cursor.
#[allow(clippy::too_many_arguments)]
pub fn play_out<R: Rng + ?Sized>(
    timing: Timing,
    start_stage: usize,
    state: usize,
    sigma: &mut dyn InformedCursor,
    tau: &mut dyn UninformedCursor,
    horizon: usize,
    detect_lasso: bool,
    rng_i: &mut R,
    rng_j: &mut R,
    observe: &mut dyn FnMut(usize, &dyn UninformedCursor),
) -> PlayOutcome {
    let mut pairs: Vec<Pair> = Vec::with_capacity(horizon.min(1 << 16));
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut randomized = false;
    for n in 0..horizon {
        let stage = start_stage + n;
        let i_moves = timing.i_moves(stage);
        let j_moves = timing.j_moves(stage);
        let dist_i = sigma.dist(state);
        let dist_j = tau.dist();
        if detect_lasso {
            let pure = (!i_moves || is_pure(dist_i)) && (!j_moves || is_pure(dist_j));
            match (pure, sigma.memory_key(), tau.memory_key()) {
                (true, Some(ks), Some(kt)) => {
                    let key = hash_key(&(ks, kt, stage % timing.period()));
                    if let Some(&at) = seen.get(&key) {
                        let history = PublicHistory::from_pairs(pairs);
                        let lasso = LassoPlay::new(history.slice(0..at), history.slice(at..history.len()))
                            .expect("cycle of positive length");
                        return PlayOutcome {
                            history,
                            lasso: Some(lasso),
                            randomized,
                        };
                    }
                    seen.insert(key, n);
                }
                _ => seen.clear(),
            }
        }
        let i = if i_moves { sample(dist_i, rng_i, &mut randomized) } else { DUMMY };
        let j = if j_moves { sample(dist_j, rng_j, &mut randomized) } else { DUMMY };
        let pair = Pair::new(i, j);
        sigma.advance(pair);
        tau.advance(pair);
        pairs.push(pair);
        observe(stage + 1, tau);
    }
    PlayOutcome {
        history: PublicHistory::from_pairs(pairs),
        lasso: None,
        randomized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{LEFT, RIGHT};
    use crate::strategy::{pure_informed, pure_uninformed, stationary_uninformed, InformedStrategy, UninformedMachine, UninformedStrategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(tau: &dyn UninformedStrategy, horizon: usize) -> PlayOutcome {
        let sigma = pure_informed(2, &[RIGHT, RIGHT]).unwrap();
        let mut rng_i = ChaCha8Rng::seed_from_u64(1);
        let mut rng_j = ChaCha8Rng::seed_from_u64(2);
        play_out(
            Timing::Alternating,
            0,
            0,
            sigma.start().as_mut(),
            tau.start().as_mut(),
            horizon,
            true,
            &mut rng_i,
            &mut rng_j,
            &mut |_, _| {},
        )
    }

    #[test]
    fn constant_pair_closes_after_one_period() {
        let out = run(pure_uninformed(2, RIGHT).unwrap().as_ref(), 100);
        let lasso = out.lasso.unwrap();
        assert!(lasso.prefix().is_empty());
        assert_eq!(lasso.cycle().pairs(), &[Pair::new(RIGHT, DUMMY), Pair::new(DUMMY, RIGHT)]);
        assert!(!out.randomized);
    }

    #[test]
    fn switching_machine_has_a_prefix() {
        let tau = UninformedMachine::switch_after(2, 2, LEFT, 1, RIGHT).unwrap();
        let lasso = run(&tau, 100).lasso.unwrap();
        assert_eq!(lasso.prefix().len(), 2);
        assert_eq!(lasso.cycle().len(), 2);
        assert!(lasso.cycle().pairs().iter().all(|p| p.j != LEFT));
    }

    #[test]
    fn mixed_play_has_no_lasso() {
        let tau = stationary_uninformed(vec![0.5, 0.5]).unwrap();
        let out = run(tau.as_ref(), 100);
        assert!(out.lasso.is_none());
        assert_eq!(out.history.len(), 100);
        assert!(out.randomized);
    }

    #[test]
    fn sampling_is_pure_when_possible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut flag = false;
        assert_eq!(sample(&[0.0, 1.0], &mut rng, &mut flag), 1);
        assert!(!flag);
        let counts = (0..10_000).fold(0, |c, _| c + sample(&[0.25, 0.75], &mut rng, &mut flag));
        assert!((counts as f64 / 10_000.0 - 0.75).abs() < 0.02);
    }
}
