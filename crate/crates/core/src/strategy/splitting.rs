use std::sync::Arc;

use super::{
    hash_key, InformedCursor, InformedStrategy, MemoryKey, NrOracle, UninformedCursor,
    UninformedStrategy,
};
use crate::error::{Error, Result};
use crate::game::{Belief, Pair};
use crate::solver::envelope::ConcaveEnvelope;

const PLAN_TOL: f64 = 1e-10;

/// A splitting of `prior` into posteriors `q_s` with weights `λ_s`, and the
/// non-revealing strategy Player I follows after revealing signal `s`.
#[derive(Clone)]
pub struct SplitPlan {
    pub prior: Belief,
    pub posteriors: Vec<Belief>,
    pub weights: Vec<f64>,
    pub continuations: Vec<Arc<dyn UninformedStrategy>>,
}

impl std::fmt::Debug for SplitPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitPlan")
            .field("prior", &self.prior)
            .field("posteriors", &self.posteriors)
            .field("weights", &self.weights)
            .finish_non_exhaustive()
    }
}

impl SplitPlan {
    pub fn len(&self) -> usize {
        self.posteriors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posteriors.is_empty()
    }

    /// `Σ_s λ_s q_s − p`.
    pub fn residual(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.prior.as_slice().iter().map(|x| -x).collect();
        for (q, w) in self.posteriors.iter().zip(&self.weights) {
            for (rk, qk) in r.iter_mut().zip(q.as_slice()) {
                *rk += w * qk;
            }
        }
        r
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.posteriors.len();
        if m == 0 || self.weights.len() != m || self.continuations.len() != m {
            return Err(Error::InvalidPlan(
                "posteriors, weights and continuations must have the same nonzero length".into(),
            ));
        }
        let n = self.prior.len();
        if self.posteriors.iter().any(|q| q.len() != n) {
            return Err(Error::InvalidPlan("posterior of the wrong dimension".into()));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidPlan("negative weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > PLAN_TOL {
            return Err(Error::InvalidPlan(format!("weights sum to {total}")));
        }
        let residual = self.residual();
        if residual.iter().map(|x| x.abs()).sum::<f64>() > PLAN_TOL {
            return Err(Error::InfeasiblePlan { residual });
        }
        for (q, w) in self.posteriors.iter().zip(&self.weights) {
            if *w > 0.0 && (0..n).any(|k| q.get(k) > 0.0 && self.prior.get(k) <= 0.0) {
                return Err(Error::InvalidPlan(format!("{q} charges a state outside the prior's support")));
            }
        }
        Ok(())
    }

    /// `ℙ(s | k) = λ_s q_s(k) / p(k)`; for a state outside the support of
    /// the prior, `λ_s`.
    pub fn signal_probability(&self, s: usize, k: usize) -> f64 {
        let pk = self.prior.get(k);
        if pk > 0.0 {
            self.weights[s] * self.posteriors[s].get(k) / pk
        } else {
            self.weights[s]
        }
    }
}

/// Player I draws a signal by a type-dependent lottery, announces it in
/// the first moves (base `|I|`, most significant digit first) and then
/// plays the signal's continuation.
#[derive(Clone)]
pub struct SplittingStrategy(Arc<SplitInner>);

struct SplitInner {
    plan: SplitPlan,
    num_actions: usize,
    digits: usize,
    /// `ℙ(s | k)` per state, over all `|I|^digits` codes.
    code_probs: Vec<Vec<f64>>,
}

/// Builds the splitting strategy of a feasible plan.
pub fn make_splitting(prior: &Belief, plan: SplitPlan, num_actions_i: usize) -> Result<Arc<SplittingStrategy>> {
    if &plan.prior != prior {
        return Err(Error::InvalidPlan(format!("plan is for prior {} not {prior}", plan.prior)));
    }
    plan.validate()?;
    let m = plan.len();
    if m > 1 && num_actions_i < 2 {
        return Err(Error::InvalidPlan("cannot encode signals with a single action".into()));
    }
    if plan.continuations.iter().any(|c| c.num_actions() != num_actions_i) {
        return Err(Error::InvalidPlan("continuation over the wrong action set".into()));
    }
    let mut digits = 0;
    let mut codes = 1usize;
    while codes < m {
        codes *= num_actions_i;
        digits += 1;
    }
    let code_probs = (0..prior.len())
        .map(|k| {
            (0..codes)
                .map(|s| if s < m { plan.signal_probability(s, k) } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(Arc::new(SplittingStrategy(Arc::new(SplitInner {
        plan,
        num_actions: num_actions_i,
        digits,
        code_probs,
    }))))
}

impl SplittingStrategy {
    pub fn plan(&self) -> &SplitPlan {
        &self.0.plan
    }

    /// Number of Player I moves used to announce the signal.
    pub fn encoding_length(&self) -> usize {
        self.0.digits
    }

    /// Player I's actions announcing signal `s`.
    pub fn encoding(&self, s: usize) -> Vec<usize> {
        let inner = &self.0;
        let mut out = vec![0; inner.digits];
        let mut rest = s;
        for d in (0..inner.digits).rev() {
            out[d] = rest % inner.num_actions;
            rest /= inner.num_actions;
        }
        out
    }
}

impl SplitInner {
    /// Distribution of the next digit given the digits `(value, count)` seen.
    fn digit_dist(&self, k: usize, value: usize, count: usize) -> Vec<f64> {
        let span = self.num_actions.pow((self.digits - count - 1) as u32);
        let base = value * span * self.num_actions;
        let mut dist: Vec<f64> = (0..self.num_actions)
            .map(|a| {
                let lo = base + a * span;
                self.code_probs[k][lo..lo + span].iter().sum()
            })
            .collect();
        let total: f64 = dist.iter().sum();
        if total > 0.0 {
            dist.iter_mut().for_each(|x| *x /= total);
        } else {
            // Off path for this state.
            dist = vec![0.0; self.num_actions];
            dist[0] = 1.0;
        }
        dist
    }
}

enum Phase {
    Encoding { value: usize, count: usize, dists: Vec<Vec<f64>> },
    Playing { signal: usize, cursor: Box<dyn UninformedCursor> },
}

struct SplittingCursor {
    strategy: Arc<SplitInner>,
    phase: Phase,
}

impl SplittingCursor {
    fn at(strategy: Arc<SplitInner>, value: usize, count: usize) -> Self {
        let phase = if count == strategy.digits {
            let signal = if value < strategy.plan.len() { value } else { 0 };
            Phase::Playing {
                signal,
                cursor: strategy.plan.continuations[signal].start(),
            }
        } else {
            let dists = (0..strategy.plan.prior.len())
                .map(|k| strategy.digit_dist(k, value, count))
                .collect();
            Phase::Encoding { value, count, dists }
        };
        SplittingCursor { strategy, phase }
    }
}

impl InformedStrategy for SplittingStrategy {
    fn num_states(&self) -> usize {
        self.0.plan.prior.len()
    }
    fn num_actions(&self) -> usize {
        self.0.num_actions
    }
    fn start(&self) -> Box<dyn InformedCursor> {
        Box::new(SplittingCursor::at(self.0.clone(), 0, 0))
    }
}

impl InformedCursor for SplittingCursor {
    fn dist(&self, state: usize) -> &[f64] {
        match &self.phase {
            Phase::Encoding { dists, .. } => &dists[state],
            Phase::Playing { cursor, .. } => cursor.dist(),
        }
    }

    fn advance(&mut self, pair: Pair) {
        match &mut self.phase {
            Phase::Encoding { value, count, .. } => {
                if pair.i_moved() {
                    let (v, c) = (*value * self.strategy.num_actions + pair.i, *count + 1);
                    *self = SplittingCursor::at(self.strategy.clone(), v, c);
                }
            }
            Phase::Playing { cursor, .. } => cursor.advance(pair),
        }
    }

    fn memory_key(&self) -> Option<MemoryKey> {
        match &self.phase {
            Phase::Encoding { value, count, .. } => Some(hash_key(&(0u8, *value, *count))),
            Phase::Playing { signal, cursor } => Some(hash_key(&(1u8, *signal, cursor.memory_key()?))),
        }
    }

    fn boxed_clone(&self) -> Box<dyn InformedCursor> {
        let phase = match &self.phase {
            Phase::Encoding { value, count, dists } => Phase::Encoding {
                value: *value,
                count: *count,
                dists: dists.clone(),
            },
            Phase::Playing { signal, cursor } => Phase::Playing {
                signal: *signal,
                cursor: cursor.boxed_clone(),
            },
        };
        Box::new(SplittingCursor {
            strategy: self.strategy.clone(),
            phase,
        })
    }
}

/// The split of `p` achieving `(cav u)(p)`, with the oracle's guarantee
/// strategy at each posterior as continuation. Falls back to the trivial
/// split when `u(p)` already equals the envelope.
pub fn optimal_split_for_cav(p: &Belief, envelope: &ConcaveEnvelope, oracle: &dyn NrOracle) -> Result<SplitPlan> {
    let cav = envelope.eval(p)?;
    let points = envelope.split(p)?;
    if points.len() <= 1 || oracle.value(p)? >= cav - 1e-12 {
        return Ok(SplitPlan {
            prior: p.clone(),
            posteriors: vec![p.clone()],
            weights: vec![1.0],
            continuations: vec![oracle.guarantee(p)?],
        });
    }
    let posteriors: Vec<Belief> = points.iter().map(|s| s.point.clone()).collect();
    let weights: Vec<f64> = points.iter().map(|s| s.weight).collect();
    let continuations = posteriors.iter().map(|q| oracle.guarantee(q)).collect::<Result<Vec<_>>>()?;
    Ok(SplitPlan {
        prior: p.clone(),
        posteriors,
        weights,
        continuations,
    })
}
