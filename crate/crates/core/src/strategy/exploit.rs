use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::basic::pure_informed;
use super::{hash_key, InformedCursor, InformedStrategy, MemoryKey, UninformedCursor, UninformedStrategy};
use crate::engine::play_out;
use crate::error::{Error, Result};
use crate::game::{Pair, PublicHistory, Timing, RIGHT};
use crate::payoff::{PayoffEvaluator, PayoffKind};

/// Payoff in `k2` at or above which a play counts as "II plays `ℓ`
/// infinitely often".
const E1_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploitParams {
    /// Stage `t` at which the `k2` type commits.
    pub switch_stage: usize,
    pub rollouts: usize,
    pub rollout_horizon: usize,
    pub seed: u64,
}

impl Default for ExploitParams {
    fn default() -> Self {
        ExploitParams {
            switch_stage: 20,
            rollouts: 64,
            rollout_horizon: 2_000,
            seed: 0,
        }
    }
}

/// Player I's reply to a known `τ` in the `ℓ`/`r` examples. In `k1` always
/// `r`. In `k2`, `r` until stage `t`; then, from rollouts of (always `r`,
/// `τ`) continued from the realized history, estimate whether II plays `ℓ`
/// infinitely often, and keep playing `r` if so (probability at least ½),
/// else switch to `ℓ` forever.
#[derive(Clone)]
pub struct Example1Exploit(Arc<ExploitInner>);

struct ExploitInner {
    tau: Arc<dyn UninformedStrategy>,
    payoff: PayoffEvaluator,
    timing: Timing,
    params: ExploitParams,
}

pub fn make_example1_exploit(
    tau: Arc<dyn UninformedStrategy>,
    payoff: PayoffEvaluator,
    timing: Timing,
    params: ExploitParams,
) -> Result<Arc<Example1Exploit>> {
    if !matches!(payoff.kind(), PayoffKind::Example1 | PayoffKind::Example2) {
        return Err(Error::InvalidParameter(format!(
            "exploit strategy needs the example payoffs, got {}",
            payoff.name()
        )));
    }
    if params.rollouts == 0 || params.rollout_horizon == 0 {
        return Err(Error::InvalidParameter("rollouts and rollout horizon must be positive".into()));
    }
    if tau.num_actions() != 2 {
        return Err(Error::InvalidParameter("τ must choose between ℓ and r".into()));
    }
    Ok(Arc::new(Example1Exploit(Arc::new(ExploitInner {
        tau,
        payoff,
        timing,
        params,
    }))))
}

impl Example1Exploit {
    pub fn params(&self) -> ExploitParams {
        self.0.params
    }
}

impl ExploitInner {
    /// Estimated probability of `ℓ` infinitely often after `history`, given
    /// τ's cursor at that history.
    fn estimate_e1(&self, history: &PublicHistory, tau: &dyn UninformedCursor) -> f64 {
        let seed = hash_key(&(self.params.seed, history.pairs()));
        let sigma_r = pure_informed(2, &[RIGHT, RIGHT]).expect("two actions");
        let mut hits = 0usize;
        let mut runs = 0usize;
        for r in 0..self.params.rollouts {
            let mut rng_i = ChaCha8Rng::seed_from_u64(seed);
            rng_i.set_stream(2 * r as u64);
            let mut rng_j = ChaCha8Rng::seed_from_u64(seed);
            rng_j.set_stream(2 * r as u64 + 1);
            let mut tau = tau.boxed_clone();
            let out = play_out(
                self.timing,
                history.len(),
                1,
                sigma_r.start().as_mut(),
                tau.as_mut(),
                self.params.rollout_horizon,
                true,
                &mut rng_i,
                &mut rng_j,
                &mut |_, _| {},
            );
            let value = match &out.lasso {
                Some(lasso) => self.payoff.eval_lasso(1, lasso),
                None => self.payoff.eval_truncated(1, &out.history),
            };
            runs += 1;
            if value.is_ok_and(|v| v >= E1_THRESHOLD) {
                hits += 1;
            }
            if !out.randomized {
                break;
            }
        }
        hits as f64 / runs as f64
    }
}

const R_DIST: [f64; 2] = [0.0, 1.0];
const L_DIST: [f64; 2] = [1.0, 0.0];

struct ExploitCursor {
    strategy: Arc<ExploitInner>,
    tau: Box<dyn UninformedCursor>,
    history: PublicHistory,
    /// `Some(true)`: stay on `r` in `k2`; `Some(false)`: switch to `ℓ`.
    decision: Option<bool>,
}

impl ExploitCursor {
    fn decide_if_due(&mut self) {
        if self.decision.is_none() && self.history.len() >= self.strategy.params.switch_stage {
            let p = self.strategy.estimate_e1(&self.history, self.tau.as_ref());
            self.decision = Some(p >= 0.5);
        }
    }
}

impl InformedStrategy for Example1Exploit {
    fn num_states(&self) -> usize {
        2
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn start(&self) -> Box<dyn InformedCursor> {
        let mut c = ExploitCursor {
            strategy: self.0.clone(),
            tau: self.0.tau.start(),
            history: PublicHistory::new(),
            decision: None,
        };
        c.decide_if_due();
        Box::new(c)
    }
}

impl InformedCursor for ExploitCursor {
    fn dist(&self, state: usize) -> &[f64] {
        match (state, self.decision) {
            (1, Some(false)) => &L_DIST,
            _ => &R_DIST,
        }
    }

    fn advance(&mut self, pair: Pair) {
        self.tau.advance(pair);
        if self.decision.is_none() {
            self.history.push(pair);
            self.decide_if_due();
        }
    }

    fn memory_key(&self) -> Option<MemoryKey> {
        let t = self.strategy.params.switch_stage;
        Some(hash_key(&(self.history.len().min(t), self.decision, self.tau.memory_key()?)))
    }

    fn boxed_clone(&self) -> Box<dyn InformedCursor> {
        Box::new(ExploitCursor {
            strategy: self.strategy.clone(),
            tau: self.tau.boxed_clone(),
            history: self.history.clone(),
            decision: self.decision,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{DUMMY, LEFT};
    use crate::strategy::{pure_uninformed, UninformedMachine};

    fn exploit(tau: Arc<dyn UninformedStrategy>) -> Arc<dyn InformedStrategy> {
        let params = ExploitParams {
            switch_stage: 10,
            rollouts: 8,
            rollout_horizon: 200,
            seed: 3,
        };
        make_example1_exploit(tau, PayoffEvaluator::example1(), Timing::Alternating, params)
            .unwrap()
    }

    fn k2_action_after_switch(sigma: &dyn InformedStrategy, tau: &dyn UninformedStrategy) -> usize {
        let mut s = sigma.start();
        let mut t = tau.start();
        for stage in 0..12 {
            let pair = if stage % 2 == 0 {
                Pair::new(RIGHT, DUMMY)
            } else {
                let j = if t.dist()[LEFT] == 1.0 { LEFT } else { RIGHT };
                Pair::new(DUMMY, j)
            };
            s.advance(pair);
            t.advance(pair);
        }
        if s.dist(1)[LEFT] == 1.0 { LEFT } else { RIGHT }
    }

    #[test]
    fn switches_against_always_r() {
        let tau = pure_uninformed(2, RIGHT).unwrap();
        let sigma = exploit(tau.clone());
        assert_eq!(k2_action_after_switch(sigma.as_ref(), tau.as_ref()), LEFT);
    }

    #[test]
    fn stays_against_always_l() {
        let tau = pure_uninformed(2, LEFT).unwrap();
        let sigma = exploit(tau.clone());
        assert_eq!(k2_action_after_switch(sigma.as_ref(), tau.as_ref()), RIGHT);
    }

    #[test]
    fn switches_against_l_once() {
        let tau: Arc<dyn UninformedStrategy> =
            Arc::new(UninformedMachine::switch_after(2, 2, LEFT, 1, RIGHT).unwrap());
        let sigma = exploit(tau.clone());
        assert_eq!(k2_action_after_switch(sigma.as_ref(), tau.as_ref()), LEFT);
    }

    #[test]
    fn k1_always_plays_r() {
        let tau = pure_uninformed(2, RIGHT).unwrap();
        let sigma = exploit(tau);
        let mut c = sigma.start();
        for stage in 0..40 {
            assert_eq!(c.dist(0), &R_DIST);
            let pair = if stage % 2 == 0 { Pair::new(stage % 3 % 2, DUMMY) } else { Pair::new(DUMMY, stage % 5 % 2) };
            c.advance(pair);
        }
    }

    #[test]
    fn rejects_other_payoffs() {
        let tau = pure_uninformed(2, RIGHT).unwrap();
        let f = PayoffEvaluator::buchi(vec![]);
        assert!(make_example1_exploit(tau, f, Timing::Alternating, ExploitParams::default()).is_err());
    }
}
