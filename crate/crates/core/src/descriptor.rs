//! JSON descriptions of games and strategies.
//!
//! A game file is a [`GameSpec`] with an extra `payoff` object:
//!
//! ```json
//! {"states": ["k1", "k2"], "actions_i": ["l", "r"], "actions_j": ["l", "r"],
//!  "prior": [0.5, 0.5], "timing": "alternating", "payoff": {"kind": "example1"}}
//! ```
//!
//! Pairs inside payoff descriptors are `[i, j]`, with `null` for the dummy.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Belief, GameSpec, Pair, DUMMY};
use crate::payoff::PayoffEvaluator;
use crate::strategy::{
    make_block_response, make_example1_exploit, make_splitting, non_revealing, optimal_split_for_cav,
    oracle_for, pure_informed, pure_uninformed, stationary_informed, stationary_uninformed,
    ExploitParams, InformedMachine, InformedStrategy, Machine, NrOracle, SplitPlan, UninformedMachine,
    UninformedStrategy,
};

pub type JsonPair = [Option<Action>; 2];

fn pair(p: &JsonPair) -> Pair {
    Pair::new(p[0].unwrap_or(DUMMY), p[1].unwrap_or(DUMMY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffDescriptor {
    Example1,
    Example2,
    /// `stage[k][i][j]`.
    LimsupAverage { stage: Vec<Vec<Vec<f64>>> },
    Buchi { targets: Vec<JsonPair> },
    #[serde(rename = "cobuchi")]
    CoBuchi { targets: Vec<JsonPair> },
    Parity {
        /// `[[i, j], priority]`.
        priorities: Vec<(JsonPair, u32)>,
        default_priority: u32,
    },
}

impl PayoffDescriptor {
    pub fn build(&self) -> Result<PayoffEvaluator> {
        Ok(match self {
            PayoffDescriptor::Example1 => PayoffEvaluator::example1(),
            PayoffDescriptor::Example2 => PayoffEvaluator::example2(),
            PayoffDescriptor::LimsupAverage { stage } => PayoffEvaluator::limsup_average(stage.clone())?,
            PayoffDescriptor::Buchi { targets } => PayoffEvaluator::buchi(targets.iter().map(pair).collect()),
            PayoffDescriptor::CoBuchi { targets } => {
                PayoffEvaluator::co_buchi(targets.iter().map(pair).collect())
            }
            PayoffDescriptor::Parity {
                priorities,
                default_priority,
            } => PayoffEvaluator::parity(
                priorities.iter().map(|(p, n)| (pair(p), *n)).collect(),
                *default_priority,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    #[serde(flatten)]
    pub spec: GameSpec,
    pub payoff: PayoffDescriptor,
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        file.spec.validate().map_err(Error::Validation)?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Validated spec and payoff evaluator.
    pub fn build(&self) -> Result<(GameSpec, PayoffEvaluator)> {
        let f = self.payoff.build()?;
        f.check_compatible(&self.spec)?;
        Ok((self.spec.clone(), f))
    }
}

/// Player I strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaDescriptor {
    /// Exactly one of: `dist` (same mixed action in every state),
    /// `per_state`, `action`, `actions` (one pure action per state).
    Stationary {
        #[serde(default)]
        dist: Option<Vec<f64>>,
        #[serde(default)]
        per_state: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        action: Option<Action>,
        #[serde(default)]
        actions: Option<Vec<Action>>,
    },
    /// The split achieving `cav u` at the prior, or an explicit split.
    /// Continuations are the oracle's guarantee strategies.
    Splitting {
        #[serde(default)]
        posteriors: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Plays the oracle's non-revealing optimal strategy at the prior.
    NrOptimal,
    /// Best reply to the opponent's descriptor in the example games.
    Example1Exploit {
        #[serde(default)]
        t: Option<usize>,
        #[serde(default)]
        rollouts: Option<usize>,
        #[serde(default)]
        rollout_horizon: Option<usize>,
    },
    /// `outputs[k][m]`; transitions as in [`Machine::new`].
    Machine {
        #[serde(default)]
        initial: usize,
        transitions: Vec<Vec<usize>>,
        outputs: Vec<Vec<Vec<f64>>>,
    },
}

/// Player II strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauDescriptor {
    Stationary {
        #[serde(default)]
        dist: Option<Vec<f64>>,
        #[serde(default)]
        action: Option<Action>,
    },
    /// The block response to the opponent's descriptor.
    BlockResponse {
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        depth: Option<usize>,
    },
    /// The oracle's response at the prior, never updated.
    NrOptimal,
    /// `first` for `count` own moves, then `then` forever.
    SwitchAfter { first: Action, count: usize, then: Action },
    Periodic { actions: Vec<Action> },
    /// `outputs[m]`.
    Machine {
        #[serde(default)]
        initial: usize,
        transitions: Vec<Vec<usize>>,
        outputs: Vec<Vec<f64>>,
    },
}

/// Defaults applied where a descriptor leaves a parameter out.
#[derive(Debug, Clone)]
pub struct BuildContext {
    pub spec: GameSpec,
    pub payoff: PayoffEvaluator,
    pub mesh: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub exploit: ExploitParams,
}

impl BuildContext {
    pub fn new(spec: GameSpec, payoff: PayoffEvaluator) -> Self {
        BuildContext {
            spec,
            payoff,
            mesh: 0.01,
            epsilon: 0.05,
            seed: 0,
            exploit: ExploitParams::default(),
        }
    }

    fn oracle(&self) -> Result<Arc<dyn NrOracle>> {
        oracle_for(&self.payoff, &self.spec)
    }

    fn prior(&self) -> Result<Belief> {
        self.spec.prior_belief()
    }
}

fn exactly_one(count: usize, what: &str) -> Result<()> {
    if count != 1 {
        return Err(Error::Descriptor(format!("{what} needs exactly one of its alternatives")));
    }
    Ok(())
}

fn build_sigma(
    desc: &SigmaDescriptor,
    ctx: &BuildContext,
    opponent: Option<&Arc<dyn UninformedStrategy>>,
) -> Result<Arc<dyn InformedStrategy>> {
    let spec = &ctx.spec;
    let (nk, ni, nj) = (spec.num_states(), spec.num_actions_i(), spec.num_actions_j());
    match desc {
        SigmaDescriptor::Stationary {
            dist,
            per_state,
            action,
            actions,
        } => {
            let set = [dist.is_some(), per_state.is_some(), action.is_some(), actions.is_some()];
            exactly_one(set.iter().filter(|x| **x).count(), "stationary")?;
            let s = if let Some(d) = dist {
                stationary_informed(vec![d.clone(); nk])?
            } else if let Some(ps) = per_state {
                stationary_informed(ps.clone())?
            } else if let Some(a) = action {
                pure_informed(ni, &vec![*a; nk])?
            } else {
                pure_informed(ni, actions.as_ref().expect("checked"))?
            };
            if s.num_states() != nk || s.num_actions() != ni {
                return Err(Error::Descriptor("stationary strategy does not match the game".into()));
            }
            Ok(s)
        }
        SigmaDescriptor::Splitting { posteriors, weights } => {
            let oracle = ctx.oracle()?;
            let prior = ctx.prior()?;
            let plan = match (posteriors, weights) {
                (None, None) => {
                    let (_, _, env) = oracle.envelope(ctx.mesh)?;
                    optimal_split_for_cav(&prior, &env, oracle.as_ref())?
                }
                (Some(qs), Some(ws)) => {
                    let posteriors = qs.iter().cloned().map(Belief::new).collect::<Result<Vec<_>>>()?;
                    let continuations = posteriors.iter().map(|q| oracle.guarantee(q)).collect::<Result<_>>()?;
                    SplitPlan {
                        prior: prior.clone(),
                        posteriors,
                        weights: ws.clone(),
                        continuations,
                    }
                }
                _ => return Err(Error::Descriptor("splitting needs both posteriors and weights".into())),
            };
            Ok(make_splitting(&prior, plan, ni)?)
        }
        SigmaDescriptor::NrOptimal => {
            let oracle = ctx.oracle()?;
            Ok(non_revealing(oracle.guarantee(&ctx.prior()?)?, nk))
        }
        SigmaDescriptor::Example1Exploit {
            t,
            rollouts,
            rollout_horizon,
        } => {
            let tau = opponent.ok_or_else(|| {
                Error::Descriptor("example1_exploit needs an opponent that does not depend on it".into())
            })?;
            let params = ExploitParams {
                switch_stage: t.unwrap_or(ctx.exploit.switch_stage),
                rollouts: rollouts.unwrap_or(ctx.exploit.rollouts),
                rollout_horizon: rollout_horizon.unwrap_or(ctx.exploit.rollout_horizon),
                seed: ctx.seed,
            };
            Ok(make_example1_exploit(tau.clone(), ctx.payoff.clone(), spec.timing, params)?)
        }
        SigmaDescriptor::Machine {
            initial,
            transitions,
            outputs,
        } => {
            let m = Machine::new(*initial, ni, nj, transitions.clone())?;
            if outputs.len() != nk {
                return Err(Error::Descriptor("machine needs outputs for every state".into()));
            }
            Ok(Arc::new(InformedMachine::new(m, outputs.clone())?))
        }
    }
}

fn build_tau(
    desc: &TauDescriptor,
    ctx: &BuildContext,
    opponent: Option<&Arc<dyn InformedStrategy>>,
) -> Result<Arc<dyn UninformedStrategy>> {
    let spec = &ctx.spec;
    let (ni, nj) = (spec.num_actions_i(), spec.num_actions_j());
    let s: Arc<dyn UninformedStrategy> = match desc {
        TauDescriptor::Stationary { dist, action } => match (dist, action) {
            (Some(d), None) => stationary_uninformed(d.clone())?,
            (None, Some(a)) => pure_uninformed(nj, *a)?,
            _ => return Err(Error::Descriptor("stationary needs exactly one of dist, action".into())),
        },
        TauDescriptor::BlockResponse { epsilon, depth } => {
            let sigma = opponent.ok_or_else(|| {
                Error::Descriptor("block_response needs an opponent that does not depend on it".into())
            })?;
            make_block_response(
                sigma.clone(),
                &ctx.prior()?,
                epsilon.unwrap_or(ctx.epsilon),
                ctx.oracle()?,
                depth.unwrap_or(spec.num_states()),
            )?
        }
        TauDescriptor::NrOptimal => ctx.oracle()?.respond(&ctx.prior()?, &Default::default())?,
        TauDescriptor::SwitchAfter { first, count, then } => {
            Arc::new(UninformedMachine::switch_after(ni, nj, *first, *count, *then)?)
        }
        TauDescriptor::Periodic { actions } => Arc::new(UninformedMachine::periodic(ni, nj, actions)?),
        TauDescriptor::Machine {
            initial,
            transitions,
            outputs,
        } => Arc::new(UninformedMachine::new(
            Machine::new(*initial, ni, nj, transitions.clone())?,
            outputs.clone(),
        )?),
    };
    if s.num_actions() != nj {
        return Err(Error::Descriptor("Player II strategy does not match the game".into()));
    }
    Ok(s)
}

/// Builds a strategy pair, constructing first whichever side the other
/// depends on.
pub fn build_pair(
    ctx: &BuildContext,
    sigma: &SigmaDescriptor,
    tau: &TauDescriptor,
) -> Result<(Arc<dyn InformedStrategy>, Arc<dyn UninformedStrategy>)> {
    let sigma_needs_tau = matches!(sigma, SigmaDescriptor::Example1Exploit { .. });
    let tau_needs_sigma = matches!(tau, TauDescriptor::BlockResponse { .. });
    match (sigma_needs_tau, tau_needs_sigma) {
        (true, true) => Err(Error::Descriptor(
            "example1_exploit and block_response cannot be built against each other".into(),
        )),
        (true, false) => {
            let t = build_tau(tau, ctx, None)?;
            let s = build_sigma(sigma, ctx, Some(&t))?;
            Ok((s, t))
        }
        _ => {
            let s = build_sigma(sigma, ctx, None)?;
            let t = build_tau(tau, ctx, Some(&s))?;
            Ok((s, t))
        }
    }
}

/// Parses a descriptor given inline or as a path to a JSON file.
pub fn parse_descriptor<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    serde_json::from_str(&text).map_err(|e| Error::Descriptor(e.to_string()))
}
