use std::sync::Arc;

use serde::Serialize;

use super::{
    f64_bits, hash_key, InformedCursor, InformedStrategy, MemoryKey, NrOracle, UninformedCursor,
    UninformedStrategy,
};
use crate::belief::{
    is_boundary_within, renormalize_xi_within, select_delta, support_above_within, BlockEvent,
    BlockTracker, PosteriorState,
};
use crate::error::{Error, Result};
use crate::game::{Belief, Pair, PublicHistory};

/// Player II's response to a known `σ`: follow the posterior, play the
/// oracle's strategy at the start belief of the current block, and drop the
/// states whose probability falls to the boundary.
pub struct BlockResponse {
    sigma: Arc<dyn InformedStrategy>,
    prior: Belief,
    epsilon: f64,
    delta: f64,
    oracle: Arc<dyn NrOracle>,
    depth: usize,
}

/// Builds `τ*` with `δ` from [`select_delta`]. `depth` bounds the number of
/// state eliminations and must be at least `|K|`.
pub fn make_block_response(
    sigma: Arc<dyn InformedStrategy>,
    prior: &Belief,
    epsilon: f64,
    oracle: Arc<dyn NrOracle>,
    depth: usize,
) -> Result<Arc<BlockResponse>> {
    let n = prior.len();
    if sigma.num_states() != n || oracle.num_states() != n {
        return Err(Error::InvalidParameter("strategy, oracle and prior disagree on |K|".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0,1)")));
    }
    if depth < n {
        return Err(Error::InvalidParameter(format!("depth {depth} below |K| = {n}")));
    }
    let delta = select_delta(epsilon, oracle.lipschitz(), n);
    Ok(Arc::new(BlockResponse {
        sigma,
        prior: prior.clone(),
        epsilon,
        delta,
        oracle,
        depth,
    }))
}

impl BlockResponse {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn start_cursor(&self) -> Result<BlockCursor> {
        let active: Vec<usize> = (0..self.prior.len()).collect();
        let tracker = BlockTracker::restricted(self.epsilon, self.delta, self.prior.clone(), 0, active)?;
        let history = PublicHistory::new();
        let response = self.oracle.respond(&self.prior, &history)?.start();
        let mut cursor = BlockCursor {
            oracle: self.oracle.clone(),
            epsilon: self.epsilon,
            delta: self.delta,
            sigma: self.sigma.start(),
            posterior: PosteriorState::new(self.prior.clone()),
            tracker: Some(tracker),
            response,
            depth: self.depth,
            history,
            log: BlockLog {
                queries: vec![self.prior.clone()],
                ..BlockLog::default()
            },
            last_event: BlockEvent::Continue,
            frozen: false,
            likelihood: vec![0.0; self.prior.len()],
        };
        if is_boundary_within(&self.prior, self.delta, cursor.tracker.as_ref().unwrap().active()) {
            cursor.enter_theta()?;
        }
        Ok(cursor)
    }
}

/// A non-`Continue` block event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoggedEvent {
    pub stage: usize,
    pub event: BlockEvent,
    pub belief: Belief,
    pub block_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockLog {
    pub events: Vec<LoggedEvent>,
    /// Beliefs at which the oracle was queried, in order.
    pub queries: Vec<Belief>,
    pub new_blocks: usize,
    pub theta_stage: Option<usize>,
}

/// Read-only view of a cursor's posterior and block bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct TrackerView<'a> {
    pub belief: &'a Belief,
    pub block_index: usize,
    pub event: BlockEvent,
    pub depth: usize,
    pub log: &'a BlockLog,
}

struct BlockCursor {
    oracle: Arc<dyn NrOracle>,
    epsilon: f64,
    delta: f64,
    sigma: Box<dyn InformedCursor>,
    posterior: PosteriorState,
    /// `None` once the depth budget is spent.
    tracker: Option<BlockTracker>,
    response: Box<dyn UninformedCursor>,
    depth: usize,
    history: PublicHistory,
    log: BlockLog,
    last_event: BlockEvent,
    frozen: bool,
    likelihood: Vec<f64>,
}

impl BlockCursor {
    fn query(&mut self, belief: Belief) -> Result<()> {
        self.response = self.oracle.respond(&belief, &self.history)?.start();
        self.log.queries.push(belief);
        Ok(())
    }

    fn record(&mut self, event: BlockEvent) {
        self.log.events.push(LoggedEvent {
            stage: self.history.len(),
            event,
            belief: self.posterior.belief().clone(),
            block_index: self.log.new_blocks,
        });
    }

    /// Restricts to `K_δ` and restarts the block machinery, repeating while
    /// the renormalized belief is still on the boundary of the smaller game.
    fn enter_theta(&mut self) -> Result<()> {
        loop {
            let Some(tracker) = self.tracker.take() else {
                return Ok(());
            };
            self.log.theta_stage.get_or_insert(self.history.len());
            self.record(BlockEvent::Theta);
            if self.depth == 0 {
                return Ok(());
            }
            self.depth -= 1;
            let belief = self.posterior.belief().clone();
            let xi = renormalize_xi_within(&belief, self.delta, tracker.active());
            let active = support_above_within(&belief, self.delta, tracker.active());
            self.posterior.reset(xi.clone());
            let next = BlockTracker::restricted(self.epsilon, self.delta, xi.clone(), self.history.len(), active)?;
            let boundary = is_boundary_within(&xi, self.delta, next.active());
            self.tracker = Some(next);
            self.query(xi)?;
            if !boundary {
                return Ok(());
            }
        }
    }

    fn step(&mut self, pair: Pair) -> Result<()> {
        if !self.frozen {
            let observed = if pair.i_moved() {
                for (k, l) in self.likelihood.iter_mut().enumerate() {
                    *l = self.sigma.dist(k).get(pair.i).copied().unwrap_or(0.0);
                }
                Some(self.likelihood.as_slice())
            } else {
                None
            };
            match self.posterior.observe(observed) {
                Ok(()) => {}
                Err(Error::NullHistory) => self.frozen = true,
                Err(e) => return Err(e),
            }
        }
        self.sigma.advance(pair);
        self.response.advance(pair);
        self.history.push(pair);
        self.last_event = BlockEvent::Continue;
        if self.frozen {
            return Ok(());
        }
        let stage = self.history.len();
        let Some(tracker) = self.tracker.as_mut() else {
            return Ok(());
        };
        match tracker.block_step(self.posterior.belief(), stage) {
            BlockEvent::Continue => {}
            BlockEvent::NewBlock => {
                self.last_event = BlockEvent::NewBlock;
                self.log.new_blocks += 1;
                self.record(BlockEvent::NewBlock);
                self.query(self.posterior.belief().clone())?;
            }
            BlockEvent::Theta => {
                self.last_event = BlockEvent::Theta;
                self.enter_theta()?;
            }
        }
        Ok(())
    }
}

impl UninformedStrategy for BlockResponse {
    fn num_actions(&self) -> usize {
        self.oracle
            .respond(&self.prior, &PublicHistory::new())
            .map(|s| s.num_actions())
            .unwrap_or(0)
    }

    /// # Panics
    /// If the oracle fails at the prior; [`make_block_response`] callers
    /// can check with [`BlockResponse::try_start`] first.
    fn start(&self) -> Box<dyn UninformedCursor> {
        Box::new(self.start_cursor().expect("oracle query at the prior"))
    }
}

impl BlockResponse {
    pub fn try_start(&self) -> Result<Box<dyn UninformedCursor>> {
        Ok(Box::new(self.start_cursor()?))
    }
}

impl UninformedCursor for BlockCursor {
    fn dist(&self) -> &[f64] {
        self.response.dist()
    }

    /// # Panics
    /// If the oracle fails at a reachable belief, which breaks its contract.
    fn advance(&mut self, pair: Pair) {
        if let Err(e) = self.step(pair) {
            panic!("block response: {e}");
        }
    }

    fn memory_key(&self) -> Option<MemoryKey> {
        let tracker = self.tracker.as_ref().map(|t| (f64_bits(t.block_start_belief().as_slice()), t.active().to_vec()));
        Some(hash_key(&(
            f64_bits(self.posterior.belief().as_slice()),
            tracker,
            self.depth,
            self.frozen,
            self.response.memory_key()?,
            self.sigma.memory_key()?,
        )))
    }

    fn boxed_clone(&self) -> Box<dyn UninformedCursor> {
        Box::new(BlockCursor {
            oracle: self.oracle.clone(),
            epsilon: self.epsilon,
            delta: self.delta,
            sigma: self.sigma.boxed_clone(),
            posterior: self.posterior.clone(),
            tracker: self.tracker.clone(),
            response: self.response.boxed_clone(),
            depth: self.depth,
            history: self.history.clone(),
            log: self.log.clone(),
            last_event: self.last_event,
            frozen: self.frozen,
            likelihood: self.likelihood.clone(),
        })
    }

    fn tracker(&self) -> Option<TrackerView<'_>> {
        Some(TrackerView {
            belief: self.posterior.belief(),
            block_index: self.log.new_blocks,
            event: self.last_event,
            depth: self.depth,
            log: &self.log,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{DUMMY, LEFT, RIGHT};
    use crate::strategy::{
        make_splitting, non_revealing, pure_uninformed, stationary_uninformed, ExampleOracle, SplitPlan,
    };

    fn oracle() -> Arc<dyn NrOracle> {
        Arc::new(ExampleOracle)
    }

    #[test]
    fn non_revealing_sigma_gives_one_block() {
        let half = Belief::uniform(2);
        let sigma = non_revealing(stationary_uninformed(vec![0.4, 0.6]).unwrap(), 2);
        let tau = make_block_response(sigma, &half, 0.05, oracle(), 2).unwrap();
        let mut c = tau.start();
        for t in 0..200 {
            let pair = if t % 2 == 0 { Pair::new(t % 3 % 2, DUMMY) } else { Pair::new(DUMMY, RIGHT) };
            c.advance(pair);
            assert_eq!(c.dist(), &[0.0, 1.0]);
        }
        let view = c.tracker().unwrap();
        assert_eq!(view.log.new_blocks, 0);
        assert!(view.log.events.is_empty());
        assert_eq!(view.log.queries, vec![half]);
    }

    #[test]
    fn full_revelation_gives_one_theta() {
        let half = Belief::uniform(2);
        let cont = || pure_uninformed(2, LEFT).unwrap() as Arc<dyn UninformedStrategy>;
        let plan = SplitPlan {
            prior: half.clone(),
            posteriors: vec![Belief::vertex(2, 0), Belief::vertex(2, 1)],
            weights: vec![0.5, 0.5],
            continuations: vec![cont(), cont()],
        };
        let sigma = make_splitting(&half, plan, 2).unwrap();
        let tau = make_block_response(sigma, &half, 0.05, oracle(), 2).unwrap();
        let mut c = tau.start();
        c.advance(Pair::new(1, DUMMY));
        let view = c.tracker().unwrap();
        assert_eq!(view.event, BlockEvent::Theta);
        assert_eq!(view.log.theta_stage, Some(1));
        assert_eq!(view.log.queries.last().unwrap(), &Belief::vertex(2, 1));
        // In k2 alone, II plays r.
        assert_eq!(c.dist(), &[0.0, 1.0]);
        for _ in 0..50 {
            c.advance(Pair::new(DUMMY, RIGHT));
            c.advance(Pair::new(LEFT, DUMMY));
        }
        let view = c.tracker().unwrap();
        assert_eq!(view.log.events.len(), 1);
        assert_eq!(view.log.new_blocks, 0);
    }

    #[test]
    fn boundary_prior_is_restricted_at_start() {
        let p = Belief::new(vec![1.0, 0.0]).unwrap();
        let sigma = non_revealing(pure_uninformed(2, RIGHT).unwrap(), 2);
        let tau = make_block_response(sigma, &p, 0.05, oracle(), 2).unwrap();
        let c = tau.start();
        assert_eq!(c.tracker().unwrap().log.theta_stage, Some(0));
        assert_eq!(c.dist(), &[1.0, 0.0]);
    }

    #[test]
    fn parameters_are_checked() {
        let half = Belief::uniform(2);
        let sigma = || non_revealing(pure_uninformed(2, RIGHT).unwrap(), 2) as Arc<dyn InformedStrategy>;
        assert!(make_block_response(sigma(), &half, 1.0, oracle(), 2).is_err());
        assert!(make_block_response(sigma(), &half, 0.1, oracle(), 1).is_err());
        let tau = make_block_response(sigma(), &half, 0.1, oracle(), 2).unwrap();
        assert!(tau.delta() < 0.01);
    }
}
