//! Game model: states of nature, action sets, prior, move timing, public
//! histories and ultimately periodic ("lasso") plays.
//!
//! Actions are indices into the player's action list. Alternating-move games
//! are encoded in the simultaneous model: the player who is not on turn is
//! recorded as having played [`DUMMY`].

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an action within a player's action list.
pub type Action = usize;

/// Placeholder action of the player who is not on turn in an alternating game.
pub const DUMMY: Action = usize::MAX;

/// Tolerance for simplex membership of probability vectors.
pub const PROB_TOL: f64 = 1e-12;

/// Action index of `ℓ` in the two-action examples (`I = J = {ℓ, r}`).
pub const LEFT: Action = 0;
/// Action index of `r` in the two-action examples.
pub const RIGHT: Action = 1;

/// One stage of public play: the action of Player I and the action of Player II.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub i: Action,
    pub j: Action,
}

impl Pair {
    pub const fn new(i: Action, j: Action) -> Self {
        Pair { i, j }
    }

    pub fn i_moved(&self) -> bool {
        self.i != DUMMY
    }

    pub fn j_moved(&self) -> bool {
        self.j != DUMMY
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |a: Action| {
            if a == DUMMY {
                "·".to_string()
            } else {
                a.to_string()
            }
        };
        write!(f, "({},{})", show(self.i), show(self.j))
    }
}

/// Who moves at which stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    #[default]
    Simultaneous,
    /// Player I moves at even stages, Player II at odd stages.
    Alternating,
}

impl Timing {
    pub fn i_moves(self, stage: usize) -> bool {
        match self {
            Timing::Simultaneous => true,
            Timing::Alternating => stage.is_multiple_of(2),
        }
    }

    pub fn j_moves(self, stage: usize) -> bool {
        match self {
            Timing::Simultaneous => true,
            Timing::Alternating => stage % 2 == 1,
        }
    }

    /// Number of stages after which the move pattern repeats.
    pub fn period(self) -> usize {
        match self {
            Timing::Simultaneous => 1,
            Timing::Alternating => 2,
        }
    }
}

/// A probability distribution over the states of nature.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates that `weights` is a probability vector within [`PROB_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidBelief("belief over an empty state set".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidBelief(format!("entry {w} is not a probability")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidBelief(format!("entries sum to {sum}")));
        }
        Ok(Belief(weights))
    }

    /// Divides nonnegative weights by their sum.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBelief("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::InvalidBelief("weights sum to zero".into()));
        }
        Ok(Belief(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    /// The point mass on state `k`.
    pub fn vertex(n: usize, k: usize) -> Self {
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Belief(w)
    }

    /// Two-state belief where `p` is the probability of the first state.
    pub fn two_state(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidBelief(format!("{p} is outside [0,1]")));
        }
        Ok(Belief(vec![p, 1.0 - p]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn linf_distance(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.0[k] > 0.0).collect()
    }
}

impl<'de> Deserialize<'de> for Belief {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Belief::new(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, w) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

/// A finite public history `(i_0, j_0, …, i_{t-1}, j_{t-1})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PublicHistory(Vec<Pair>);

impl PublicHistory {
    pub fn new() -> Self {
        PublicHistory(Vec::new())
    }

    pub fn from_pairs(pairs: Vec<Pair>) -> Self {
        PublicHistory(pairs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.0
    }

    pub fn push(&mut self, pair: Pair) {
        self.0.push(pair);
    }

    /// `self ∘ other`.
    pub fn concat(&self, other: &PublicHistory) -> PublicHistory {
        let mut pairs = Vec::with_capacity(self.len() + other.len());
        pairs.extend_from_slice(&self.0);
        pairs.extend_from_slice(&other.0);
        PublicHistory(pairs)
    }

    /// The history made of stages `range` of this one.
    pub fn slice(&self, range: std::ops::Range<usize>) -> PublicHistory {
        PublicHistory(self.0[range].to_vec())
    }
}

impl From<Vec<Pair>> for PublicHistory {
    fn from(pairs: Vec<Pair>) -> Self {
        PublicHistory(pairs)
    }
}

impl fmt::Display for PublicHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, p) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// An infinite play `prefix ∘ cycle ∘ cycle ∘ …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LassoPlay {
    prefix: PublicHistory,
    cycle: PublicHistory,
}

impl LassoPlay {
    pub fn new(prefix: PublicHistory, cycle: PublicHistory) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::EmptyCycle);
        }
        Ok(LassoPlay { prefix, cycle })
    }

    pub fn prefix(&self) -> &PublicHistory {
        &self.prefix
    }

    pub fn cycle(&self) -> &PublicHistory {
        &self.cycle
    }

    /// The pair played at stage `t`.
    pub fn pair_at(&self, t: usize) -> Pair {
        let p = self.prefix.len();
        if t < p {
            self.prefix.0[t]
        } else {
            self.cycle.0[(t - p) % self.cycle.len()]
        }
    }

    /// The first `t` stages of the play.
    pub fn unroll(&self, t: usize) -> PublicHistory {
        PublicHistory((0..t).map(|s| self.pair_at(s)).collect())
    }

    /// A random lasso whose pairs respect `spec`'s action sets and timing.
    ///
    /// Under alternating timing the cycle length is even so the move pattern
    /// is preserved when the cycle repeats.
    pub fn random<R: Rng + ?Sized>(
        spec: &GameSpec,
        rng: &mut R,
        max_prefix: usize,
        max_cycle: usize,
    ) -> LassoPlay {
        let period = spec.timing.period();
        let prefix_len = rng.gen_range(0..=max_prefix);
        let cycles = (max_cycle / period).max(1);
        let cycle_len = period * rng.gen_range(1..=cycles);
        let prefix = spec.random_history(rng, 0, prefix_len);
        let cycle = spec.random_history(rng, prefix_len, cycle_len);
        LassoPlay { prefix, cycle }
    }
}

/// One violated invariant of a [`GameSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    EmptyActionSet { player: &'static str },
    PriorLength { expected: usize, found: usize },
    NegativePrior { state: usize, value: f64 },
    PriorSum { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "empty state set"),
            Violation::EmptyActionSet { player } => {
                write!(f, "empty action set for player {player}")
            }
            Violation::PriorLength { expected, found } => {
                write!(f, "prior has {found} entries but there are {expected} states")
            }
            Violation::NegativePrior { state, value } => {
                write!(f, "prior entry {state} is {value}")
            }
            Violation::PriorSum { sum } => write!(f, "prior sums to {sum}"),
        }
    }
}

/// Every invariant a game spec violates.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// States, action sets, prior and timing of a repeated game with incomplete
/// information on one side. The payoff is a separate
/// [`PayoffEvaluator`](crate::payoff::PayoffEvaluator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub states: Vec<String>,
    pub actions_i: Vec<String>,
    pub actions_j: Vec<String>,
    pub prior: Vec<f64>,
    #[serde(default)]
    pub timing: Timing,
}

impl GameSpec {
    /// The two-state alternating game of the `ℓ`/`r` examples; `p` is the
    /// probability of `k1`.
    pub fn example1(p: f64) -> Self {
        GameSpec {
            states: vec!["k1".into(), "k2".into()],
            actions_i: vec!["l".into(), "r".into()],
            actions_j: vec!["l".into(), "r".into()],
            prior: vec![p, 1.0 - p],
            timing: Timing::Alternating,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions_i(&self) -> usize {
        self.actions_i.len()
    }

    pub fn num_actions_j(&self) -> usize {
        self.actions_j.len()
    }

    /// Collects every violated invariant instead of stopping at the first.
    pub fn validate(&self) -> std::result::Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if self.states.is_empty() {
            violations.push(Violation::NoStates);
        }
        if self.actions_i.is_empty() {
            violations.push(Violation::EmptyActionSet { player: "I" });
        }
        if self.actions_j.is_empty() {
            violations.push(Violation::EmptyActionSet { player: "II" });
        }
        if self.prior.len() != self.states.len() {
            violations.push(Violation::PriorLength {
                expected: self.states.len(),
                found: self.prior.len(),
            });
        }
        for (state, &value) in self.prior.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                violations.push(Violation::NegativePrior { state, value });
            }
        }
        let sum: f64 = self.prior.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            violations.push(Violation::PriorSum { sum });
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationReport { violations })
        }
    }

    pub fn prior_belief(&self) -> Result<Belief> {
        self.validate().map_err(Error::Validation)?;
        Belief::new(self.prior.clone())
    }

    /// Copy of the spec with a different prior.
    pub fn with_prior(&self, prior: &Belief) -> GameSpec {
        GameSpec {
            prior: prior.as_slice().to_vec(),
            ..self.clone()
        }
    }

    /// Checks that every pair of `h`, played from stage `start`, uses valid
    /// actions and the dummy exactly where the timing requires it.
    pub fn check_history(&self, h: &PublicHistory, start: usize) -> Result<()> {
        for (n, pair) in h.pairs().iter().enumerate() {
            let stage = start + n;
            let ok_i = if self.timing.i_moves(stage) {
                pair.i < self.num_actions_i()
            } else {
                pair.i == DUMMY
            };
            let ok_j = if self.timing.j_moves(stage) {
                pair.j < self.num_actions_j()
            } else {
                pair.j == DUMMY
            };
            if !(ok_i && ok_j) {
                return Err(Error::InvalidHistory(format!("pair {pair} at stage {stage}")));
            }
        }
        Ok(())
    }

    pub fn check_lasso(&self, lasso: &LassoPlay) -> Result<()> {
        self.check_history(lasso.prefix(), 0)?;
        self.check_history(lasso.cycle(), lasso.prefix().len())?;
        if !lasso.cycle().len().is_multiple_of(self.timing.period()) {
            return Err(Error::InvalidHistory(
                "cycle length breaks the alternation of moves".into(),
            ));
        }
        Ok(())
    }

    /// A uniformly random history of length `len` starting at stage `start`.
    pub fn random_history<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        start: usize,
        len: usize,
    ) -> PublicHistory {
        let pairs = (start..start + len)
            .map(|stage| {
                let i = if self.timing.i_moves(stage) {
                    rng.gen_range(0..self.num_actions_i())
                } else {
                    DUMMY
                };
                let j = if self.timing.j_moves(stage) {
                    rng.gen_range(0..self.num_actions_j())
                } else {
                    DUMMY
                };
                Pair::new(i, j)
            })
            .collect();
        PublicHistory(pairs)
    }
}
