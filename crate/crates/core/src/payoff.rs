//! Tail-measurable payoff evaluators.
//!
//! Every built-in evaluator is exact on [`LassoPlay`]s: "infinitely often"
//! means "occurs in the cycle", and limsup averages and densities are cycle
//! averages. On finite histories each evaluator applies a documented
//! surrogate (see [`PayoffEvaluator::eval_truncated`]), which is an
//! approximation and is reported as such by the simulator.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{GameSpec, LassoPlay, Pair, PublicHistory, DUMMY, LEFT};

/// A user-supplied payoff function.
pub trait CustomPayoff: Send + Sync {
    fn name(&self) -> &str;

    /// Exact value on a lasso play, or `None` if this payoff has no lasso rule.
    fn eval_lasso(&self, state: usize, play: &LassoPlay) -> Option<f64>;

    fn eval_truncated(&self, state: usize, history: &PublicHistory) -> f64;
}

#[derive(Clone)]
pub enum PayoffKind {
    /// `limsup_T (1/T) Σ g_k(i_t, j_t)`; `stage[k][i][j]`.
    LimsupAverage { stage: Vec<Vec<Vec<f64>>> },
    /// 1 if some target pair occurs infinitely often, else 0.
    Buchi { targets: Vec<Pair> },
    /// 1 if no target pair occurs infinitely often, else 0.
    CoBuchi { targets: Vec<Pair> },
    /// 1 if the least priority occurring infinitely often is even, else 0.
    /// Pairs without an explicit priority get `default_priority`.
    Parity {
        priorities: Vec<(Pair, u32)>,
        default_priority: u32,
    },
    /// Two states, `ℓ`/`r` alternating game; reads whether II plays `ℓ`
    /// infinitely often, then whether I does.
    Example1,
    /// Density variant of `Example1` with threshold 0.1.
    Example2,
    Custom(Arc<dyn CustomPayoff>),
}

impl fmt::Debug for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffKind::LimsupAverage { stage } => {
                f.debug_struct("LimsupAverage").field("stage", stage).finish()
            }
            PayoffKind::Buchi { targets } => f.debug_struct("Buchi").field("targets", targets).finish(),
            PayoffKind::CoBuchi { targets } => {
                f.debug_struct("CoBuchi").field("targets", targets).finish()
            }
            PayoffKind::Parity {
                priorities,
                default_priority,
            } => f
                .debug_struct("Parity")
                .field("priorities", priorities)
                .field("default_priority", default_priority)
                .finish(),
            PayoffKind::Example1 => write!(f, "Example1"),
            PayoffKind::Example2 => write!(f, "Example2"),
            PayoffKind::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

/// A bounded payoff function `f : K × (I×J)^ℕ → ℝ`, with its declared bounds.
#[derive(Debug, Clone)]
pub struct PayoffEvaluator {
    kind: PayoffKind,
    bounds: (f64, f64),
}

impl PayoffEvaluator {
    pub fn limsup_average(stage: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let entries = || stage.iter().flatten().flatten().copied();
        if entries().next().is_none() {
            return Err(Error::InvalidParameter("empty stage payoff matrices".into()));
        }
        if entries().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite stage payoff".into()));
        }
        let lo = entries().fold(f64::INFINITY, f64::min);
        let hi = entries().fold(f64::NEG_INFINITY, f64::max);
        Ok(PayoffEvaluator {
            kind: PayoffKind::LimsupAverage { stage },
            bounds: (lo, hi),
        })
    }

    pub fn buchi(targets: Vec<Pair>) -> Self {
        PayoffEvaluator {
            kind: PayoffKind::Buchi { targets },
            bounds: (0.0, 1.0),
        }
    }

    pub fn co_buchi(targets: Vec<Pair>) -> Self {
        PayoffEvaluator {
            kind: PayoffKind::CoBuchi { targets },
            bounds: (0.0, 1.0),
        }
    }

    pub fn parity(priorities: Vec<(Pair, u32)>, default_priority: u32) -> Self {
        PayoffEvaluator {
            kind: PayoffKind::Parity {
                priorities,
                default_priority,
            },
            bounds: (0.0, 1.0),
        }
    }

    pub fn example1() -> Self {
        PayoffEvaluator {
            kind: PayoffKind::Example1,
            bounds: (-2.0, 2.0),
        }
    }

    pub fn example2() -> Self {
        PayoffEvaluator {
            kind: PayoffKind::Example2,
            bounds: (-2.0, 2.0),
        }
    }

    pub fn custom(payoff: Arc<dyn CustomPayoff>, bounds: (f64, f64)) -> Self {
        PayoffEvaluator {
            kind: PayoffKind::Custom(payoff),
            bounds,
        }
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// `upper − lower`.
    pub fn range(&self) -> f64 {
        self.bounds.1 - self.bounds.0
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PayoffKind::LimsupAverage { .. } => "limsup_average".into(),
            PayoffKind::Buchi { .. } => "buchi".into(),
            PayoffKind::CoBuchi { .. } => "cobuchi".into(),
            PayoffKind::Parity { .. } => "parity".into(),
            PayoffKind::Example1 => "example1".into(),
            PayoffKind::Example2 => "example2".into(),
            PayoffKind::Custom(c) => c.name().to_string(),
        }
    }

    /// Checks that this payoff can be evaluated on plays of `spec`.
    pub fn check_compatible(&self, spec: &GameSpec) -> Result<()> {
        match &self.kind {
            PayoffKind::LimsupAverage { stage } => {
                if spec.timing != crate::game::Timing::Simultaneous {
                    return Err(Error::InvalidParameter(
                        "limsup average payoffs need simultaneous moves".into(),
                    ));
                }
                let shape_ok = stage.len() == spec.num_states()
                    && stage.iter().all(|g| {
                        g.len() == spec.num_actions_i()
                            && g.iter().all(|row| row.len() == spec.num_actions_j())
                    });
                if !shape_ok {
                    return Err(Error::InvalidParameter(
                        "stage matrices do not match K×I×J".into(),
                    ));
                }
            }
            PayoffKind::Example1 | PayoffKind::Example2
                if spec.num_states() != 2 || spec.num_actions_i() != 2 || spec.num_actions_j() != 2 =>
            {
                return Err(Error::InvalidParameter(format!(
                    "{} needs two states and actions {{l, r}} for both players",
                    self.name()
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Exact value of `f(k, play)`.
    pub fn eval_lasso(&self, state: usize, play: &LassoPlay) -> Result<f64> {
        let cycle = play.cycle().pairs();
        match &self.kind {
            PayoffKind::LimsupAverage { stage } => {
                let g = stage
                    .get(state)
                    .ok_or_else(|| Error::InvalidParameter(format!("state {state}")))?;
                let total = cycle.iter().try_fold(0.0, |acc, p| stage_payoff(g, *p).map(|x| acc + x))?;
                Ok(total / cycle.len() as f64)
            }
            PayoffKind::Buchi { targets } => {
                Ok(indicator(cycle.iter().any(|p| targets.contains(p))))
            }
            PayoffKind::CoBuchi { targets } => {
                Ok(indicator(!cycle.iter().any(|p| targets.contains(p))))
            }
            PayoffKind::Parity {
                priorities,
                default_priority,
            } => {
                let least = cycle
                    .iter()
                    .map(|p| priority_of(priorities, *default_priority, p))
                    .min()
                    .expect("cycle is nonempty");
                Ok(indicator(least % 2 == 0))
            }
            PayoffKind::Example1 => {
                let ii_left = cycle.iter().any(|p| p.j_moved() && p.j == LEFT);
                let i_left = cycle.iter().any(|p| p.i_moved() && p.i == LEFT);
                example_table(state, ii_left, i_left)
            }
            PayoffKind::Example2 => {
                let d1_high = density_above_tenth(cycle.iter().filter(|p| p.i_moved()).map(|p| p.i));
                let d2_high = density_above_tenth(cycle.iter().filter(|p| p.j_moved()).map(|p| p.j));
                example_table(state, d2_high, d1_high)
            }
            PayoffKind::Custom(c) => c
                .eval_lasso(state, play)
                .ok_or_else(|| Error::NotLassoEvaluable(c.name().to_string())),
        }
    }

    /// Finite-horizon surrogate of `f(k, ·)` on a history of length ≥ 1.
    ///
    /// Limsup averages use the running average over all of `history`. Every
    /// other built-in kind discards the first half as burn-in and evaluates
    /// as if the second half repeated forever.
    pub fn eval_truncated(&self, state: usize, history: &PublicHistory) -> Result<f64> {
        if history.is_empty() {
            return Err(Error::InvalidHistory("truncated evaluation needs length ≥ 1".into()));
        }
        match &self.kind {
            PayoffKind::LimsupAverage { stage } => {
                let g = stage
                    .get(state)
                    .ok_or_else(|| Error::InvalidParameter(format!("state {state}")))?;
                let total = history
                    .pairs()
                    .iter()
                    .try_fold(0.0, |acc, p| stage_payoff(g, *p).map(|x| acc + x))?;
                Ok(total / history.len() as f64)
            }
            PayoffKind::Custom(c) => Ok(c.eval_truncated(state, history)),
            _ => {
                let half = history.len() / 2;
                let lasso = LassoPlay::new(
                    history.slice(0..half),
                    history.slice(half..history.len()),
                )?;
                self.eval_lasso(state, &lasso)
            }
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn stage_payoff(g: &[Vec<f64>], p: Pair) -> Result<f64> {
    if p.i == DUMMY || p.j == DUMMY {
        return Err(Error::InvalidHistory(
            "limsup average payoff on an alternating play".into(),
        ));
    }
    g.get(p.i)
        .and_then(|row| row.get(p.j))
        .copied()
        .ok_or_else(|| Error::InvalidHistory(format!("pair {p} outside the stage matrix")))
}

fn priority_of(priorities: &[(Pair, u32)], default: u32, p: &Pair) -> u32 {
    priorities
        .iter()
        .find(|(q, _)| q == p)
        .map(|(_, r)| *r)
        .unwrap_or(default)
}

/// Whether the fraction of `ℓ` among `moves` exceeds 0.1, in exact integer
/// arithmetic. No moves means density zero.
fn density_above_tenth(moves: impl Iterator<Item = usize>) -> bool {
    let (mut left, mut total) = (0usize, 0usize);
    for a in moves {
        total += 1;
        if a == LEFT {
            left += 1;
        }
    }
    10 * left > total
}

/// The shared case table of the two examples: `primary` is the II-condition
/// (`ℓ` infinitely often, or density above 0.1), `secondary` the I-condition.
fn example_table(state: usize, primary: bool, secondary: bool) -> Result<f64> {
    match (state, primary, secondary) {
        (0, true, _) => Ok(-1.0),
        (1, true, _) => Ok(2.0),
        (0, false, true) => Ok(-2.0),
        (1, false, true) => Ok(1.0),
        (0 | 1, false, false) => Ok(0.0),
        _ => Err(Error::InvalidParameter(format!("state {state} of a two-state game"))),
    }
}

/// A sample where rewriting the prefix changed the payoff.
#[derive(Debug, Clone)]
pub struct TailViolation {
    pub sample: usize,
    pub state: usize,
    pub original: LassoPlay,
    pub perturbed: LassoPlay,
    pub original_value: f64,
    pub perturbed_value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TailReport {
    pub checked: usize,
    pub unevaluable: usize,
    pub violations: Vec<TailViolation>,
}

impl TailReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.unevaluable == 0
    }
}

/// Rewrites each sample's prefix with random pairs of the same length
/// `perturbations` times and reports every change of value.
pub fn check_tail_measurable(
    f: &PayoffEvaluator,
    spec: &GameSpec,
    samples: &[(usize, LassoPlay)],
    perturbations: usize,
    seed: u64,
) -> TailReport {
    perturb_prefixes(f, spec, samples, perturbations, seed, false)
}

/// Like [`check_tail_measurable`], but the new prefix may also have a
/// different length (same parity under alternating timing, so the cycle
/// keeps its move pattern).
pub fn check_shift_invariant(
    f: &PayoffEvaluator,
    spec: &GameSpec,
    samples: &[(usize, LassoPlay)],
    perturbations: usize,
    seed: u64,
) -> TailReport {
    perturb_prefixes(f, spec, samples, perturbations, seed, true)
}

fn perturb_prefixes(
    f: &PayoffEvaluator,
    spec: &GameSpec,
    samples: &[(usize, LassoPlay)],
    perturbations: usize,
    seed: u64,
    change_length: bool,
) -> TailReport {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TailReport::default();
    let period = spec.timing.period();
    for (n, (state, lasso)) in samples.iter().enumerate() {
        let Ok(original_value) = f.eval_lasso(*state, lasso) else {
            report.unevaluable += 1;
            continue;
        };
        for _ in 0..perturbations {
            let len = if change_length {
                let old = lasso.prefix().len();
                old % period + period * rng.gen_range(0..=(old / period + 3))
            } else {
                lasso.prefix().len()
            };
            let prefix = spec.random_history(&mut rng, 0, len);
            let perturbed = LassoPlay::new(prefix, lasso.cycle().clone()).expect("nonempty cycle");
            report.checked += 1;
            match f.eval_lasso(*state, &perturbed) {
                Ok(v) if (v - original_value).abs() <= 1e-12 => {}
                Ok(v) => report.violations.push(TailViolation {
                    sample: n,
                    state: *state,
                    original: lasso.clone(),
                    perturbed,
                    original_value,
                    perturbed_value: v,
                }),
                Err(_) => report.unevaluable += 1,
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Timing, RIGHT};
    use rand::Rng;

    const L: usize = LEFT;
    const R: usize = RIGHT;
    const D: usize = DUMMY;

    fn h(pairs: &[(usize, usize)]) -> PublicHistory {
        PublicHistory::from_pairs(pairs.iter().map(|&(i, j)| Pair::new(i, j)).collect())
    }

    fn lasso(prefix: &[(usize, usize)], cycle: &[(usize, usize)]) -> LassoPlay {
        LassoPlay::new(h(prefix), h(cycle)).unwrap()
    }

    #[test]
    fn example1_case_table() {
        let f = PayoffEvaluator::example1();
        // II plays ℓ in the cycle.
        let ii_left = lasso(&[], &[(R, D), (D, L)]);
        assert_eq!(f.eval_lasso(0, &ii_left).unwrap(), -1.0);
        assert_eq!(f.eval_lasso(1, &ii_left).unwrap(), 2.0);
        // I plays ℓ, II always r.
        let i_left = lasso(&[(R, D), (D, L)], &[(L, D), (D, R)]);
        assert_eq!(f.eval_lasso(1, &i_left).unwrap(), 1.0);
        assert_eq!(f.eval_lasso(0, &i_left).unwrap(), -2.0);
        // Both always r.
        let all_r = lasso(&[(L, D), (D, L)], &[(R, D), (D, R)]);
        assert_eq!(f.eval_lasso(0, &all_r).unwrap(), 0.0);
        assert_eq!(f.eval_lasso(1, &all_r).unwrap(), 0.0);
    }

    #[test]
    fn example2_densities() {
        let f = PayoffEvaluator::example2();
        // II plays ℓ on every second II-move: d2 = 0.5.
        let half = lasso(&[], &[(R, D), (D, L), (R, D), (D, R)]);
        assert_eq!(f.eval_lasso(1, &half).unwrap(), 2.0);
        assert_eq!(f.eval_lasso(0, &half).unwrap(), -1.0);
        // d2 exactly 0.1 is not above the threshold; d1 = 1.
        let mut cycle = Vec::new();
        for n in 0..10 {
            cycle.push((L, D));
            cycle.push((D, if n == 0 { L } else { R }));
        }
        let tenth = lasso(&[], &cycle);
        assert_eq!(f.eval_lasso(1, &tenth).unwrap(), 1.0);
        let no_left = lasso(&[], &[(R, D), (D, R)]);
        assert_eq!(f.eval_lasso(0, &no_left).unwrap(), 0.0);
    }

    #[test]
    fn omega_regular_conditions() {
        let target = Pair::new(0, 1);
        let play = lasso(&[(0, 1)], &[(1, 1), (0, 0)]);
        assert_eq!(PayoffEvaluator::buchi(vec![target]).eval_lasso(0, &play).unwrap(), 0.0);
        assert_eq!(PayoffEvaluator::co_buchi(vec![target]).eval_lasso(0, &play).unwrap(), 1.0);
        let hit = lasso(&[], &[(1, 1), (0, 1)]);
        assert_eq!(PayoffEvaluator::buchi(vec![target]).eval_lasso(0, &hit).unwrap(), 1.0);
        assert_eq!(PayoffEvaluator::co_buchi(vec![target]).eval_lasso(0, &hit).unwrap(), 0.0);
        let parity = PayoffEvaluator::parity(vec![(Pair::new(1, 1), 3), (Pair::new(0, 0), 2)], 5);
        assert_eq!(parity.eval_lasso(0, &play).unwrap(), 1.0);
        assert_eq!(parity.eval_lasso(0, &lasso(&[(0, 0)], &[(1, 1), (0, 1)])).unwrap(), 0.0);
    }

    fn constant_average(c: f64) -> PayoffEvaluator {
        PayoffEvaluator::limsup_average(vec![vec![vec![c; 2]; 2]; 2]).unwrap()
    }

    #[test]
    fn limsup_average_of_constant() {
        let f = constant_average(0.3);
        let play = lasso(&[(0, 1), (1, 1)], &[(1, 0)]);
        assert_eq!(f.eval_lasso(1, &play).unwrap(), 0.3);
        assert_eq!(f.eval_truncated(0, &h(&[(0, 0), (1, 1), (0, 1), (1, 0)])).unwrap(), 0.3);
    }

    #[test]
    fn limsup_average_cycle_matches_brute_force_cesaro() {
        // Stage payoff is 1 on (1,1) and 0 elsewhere; cycle alternates 0, 1.
        let g = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let f = PayoffEvaluator::limsup_average(vec![g.clone(), g]).unwrap();
        let play = lasso(&[(1, 1), (1, 1), (1, 1)], &[(0, 0), (1, 1)]);
        let exact = f.eval_lasso(0, &play).unwrap();
        let unrolled = play.unroll(100_000);
        let cesaro = unrolled
            .pairs()
            .iter()
            .map(|p| if *p == Pair::new(1, 1) { 1.0 } else { 0.0 })
            .sum::<f64>()
            / 100_000.0;
        assert!((cesaro - 0.5).abs() < 1e-4);
        assert_eq!(exact, 0.5);
    }

    #[test]
    fn truncated_surrogates() {
        let f = constant_average(1.0);
        assert_eq!(f.eval_truncated(0, &h(&[(0, 0); 4])).unwrap(), 1.0);

        let e1 = PayoffEvaluator::example1();
        let mut pairs = Vec::new();
        for t in 0..100 {
            pairs.push(if t % 2 == 0 {
                (R, D)
            } else if t >= 50 {
                (D, L)
            } else {
                (D, R)
            });
        }
        let hist = h(&pairs);
        assert_eq!(e1.eval_truncated(1, &hist).unwrap(), 2.0);
        let matching = lasso(&pairs[..50], &pairs[50..]);
        assert_eq!(e1.eval_lasso(1, &matching).unwrap(), 2.0);

        let e2 = PayoffEvaluator::example2();
        assert_eq!(e2.eval_truncated(0, &h(&[(R, D), (D, R), (R, D)])).unwrap(), 0.0);
        assert!(e2.eval_truncated(0, &h(&[])).is_err());
    }

    struct PrefixHead;
    impl CustomPayoff for PrefixHead {
        fn name(&self) -> &str {
            "prefix_head"
        }
        fn eval_lasso(&self, _state: usize, play: &LassoPlay) -> Option<f64> {
            Some(play.prefix().pairs().first().map_or(0.0, |p| p.i as f64))
        }
        fn eval_truncated(&self, _state: usize, history: &PublicHistory) -> f64 {
            history.pairs()[0].i as f64
        }
    }

    struct Opaque;
    impl CustomPayoff for Opaque {
        fn name(&self) -> &str {
            "opaque"
        }
        fn eval_lasso(&self, _: usize, _: &LassoPlay) -> Option<f64> {
            None
        }
        fn eval_truncated(&self, _: usize, _: &PublicHistory) -> f64 {
            0.0
        }
    }

    fn random_samples(spec: &GameSpec, n: usize, seed: u64) -> Vec<(usize, LassoPlay)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let k = rng.gen_range(0..spec.num_states());
                (k, LassoPlay::random(spec, &mut rng, 8, 6))
            })
            .collect()
    }

    #[test]
    fn tail_check_passes_for_example1() {
        let spec = GameSpec::example1(0.5);
        let samples = random_samples(&spec, 100, 7);
        let report = check_tail_measurable(&PayoffEvaluator::example1(), &spec, &samples, 10, 1);
        assert_eq!(report.checked, 1000);
        assert!(report.passed());
    }

    #[test]
    fn tail_check_flags_prefix_dependence() {
        let spec = GameSpec {
            states: vec!["k".into()],
            actions_i: vec!["a".into(), "b".into(), "c".into()],
            actions_j: vec!["x".into()],
            prior: vec![1.0],
            timing: Timing::Simultaneous,
        };
        let samples: Vec<_> = random_samples(&spec, 50, 3)
            .into_iter()
            .filter(|(_, l)| !l.prefix().is_empty())
            .collect();
        let broken = PayoffEvaluator::custom(Arc::new(PrefixHead), (0.0, 2.0));
        let report = check_tail_measurable(&broken, &spec, &samples, 10, 2);
        assert!(!report.violations.is_empty());
        let w = &report.violations[0];
        assert_ne!(w.original_value, w.perturbed_value);
    }

    #[test]
    fn custom_without_lasso_rule() {
        let f = PayoffEvaluator::custom(Arc::new(Opaque), (0.0, 1.0));
        let err = f.eval_lasso(0, &lasso(&[], &[(0, 0)])).unwrap_err();
        assert!(err.to_string().contains("not lasso-evaluable"));
    }

    #[test]
    fn outputs_within_bounds() {
        let spec = GameSpec::example1(0.5);
        for f in [PayoffEvaluator::example1(), PayoffEvaluator::example2()] {
            let (lo, hi) = f.bounds();
            for (k, l) in random_samples(&spec, 200, 11) {
                let v = f.eval_lasso(k, &l).unwrap();
                assert!(lo <= v && v <= hi);
            }
        }
    }
}
