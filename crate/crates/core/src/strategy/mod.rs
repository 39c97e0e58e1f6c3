//! Strategy representations and the constructions built from them.
//!
//! A strategy is a behavior function of the public history. For efficient
//! play it is consumed through a cursor: a per-episode object that follows
//! the history one pair at a time and answers the mixed action at the
//! current history. A cursor that can summarize its whole future behavior in
//! a [`MemoryKey`] is in finite-memory form; the simulator uses those keys
//! for lasso detection.

use std::hash::{DefaultHasher, Hash, Hasher};

use crate::game::{Pair, PublicHistory};

mod basic;
mod block;
mod exploit;
mod oracle;
mod splitting;

pub use basic::{
    non_revealing, pure_informed, pure_uninformed, stationary_informed, stationary_uninformed,
    InformedMachine, Machine, NonRevealing, StationaryInformed, StationaryUninformed,
    UninformedMachine,
};
pub use block::{make_block_response, BlockLog, BlockResponse, LoggedEvent, TrackerView};
pub use exploit::{make_example1_exploit, Example1Exploit, ExploitParams};
pub use oracle::{oracle_for, AverageOracle, ExampleOracle, NrOracle};
pub use splitting::{make_splitting, optimal_split_for_cav, SplitPlan, SplittingStrategy};

/// Summary of a cursor's internal state; equal keys promise identical
/// future behavior given identical future observations.
pub type MemoryKey = u64;

/// Player I's strategy `σ : K × H → Δ(I)`.
pub trait InformedStrategy: Send + Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn start(&self) -> Box<dyn InformedCursor>;

    /// `σ(k, h)`.
    fn behavior(&self, state: usize, history: &PublicHistory) -> Vec<f64> {
        let mut cursor = self.start();
        for pair in history.pairs() {
            cursor.advance(*pair);
        }
        cursor.dist(state).to_vec()
    }
}

pub trait InformedCursor: Send {
    /// Mixed action of Player I in `state` at the current history.
    fn dist(&self, state: usize) -> &[f64];
    fn advance(&mut self, pair: Pair);
    fn memory_key(&self) -> Option<MemoryKey> {
        None
    }
    fn boxed_clone(&self) -> Box<dyn InformedCursor>;
}

/// A strategy that depends on the public history only: Player II's
/// strategies, and Player I's strategies in the non-revealing game.
pub trait UninformedStrategy: Send + Sync {
    fn num_actions(&self) -> usize;
    fn start(&self) -> Box<dyn UninformedCursor>;

    /// `τ(h)`.
    fn behavior(&self, history: &PublicHistory) -> Vec<f64> {
        let mut cursor = self.start();
        for pair in history.pairs() {
            cursor.advance(*pair);
        }
        cursor.dist().to_vec()
    }
}

pub trait UninformedCursor: Send {
    fn dist(&self) -> &[f64];
    fn advance(&mut self, pair: Pair);
    fn memory_key(&self) -> Option<MemoryKey> {
        None
    }
    fn boxed_clone(&self) -> Box<dyn UninformedCursor>;
    /// Belief and block bookkeeping, for cursors that track one.
    fn tracker(&self) -> Option<TrackerView<'_>> {
        None
    }
}

/// Checks that `dist` is a probability vector of length `n` within 1e-12.
pub(crate) fn check_distribution(dist: &[f64], n: usize) -> crate::Result<()> {
    if dist.len() != n {
        return Err(crate::Error::InvalidParameter(format!(
            "distribution has {} entries, expected {n}",
            dist.len()
        )));
    }
    if dist.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(crate::Error::InvalidParameter(format!("{dist:?} has a negative entry")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > crate::game::PROB_TOL {
        return Err(crate::Error::InvalidParameter(format!("{dist:?} sums to {sum}")));
    }
    Ok(())
}

pub(crate) fn one_hot(n: usize, a: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[a] = 1.0;
    v
}

pub(crate) fn is_pure(dist: &[f64]) -> bool {
    dist.contains(&1.0)
}

pub(crate) fn hash_key<T: Hash>(value: &T) -> MemoryKey {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

pub(crate) fn f64_bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|x| x.to_bits()).collect()
}
