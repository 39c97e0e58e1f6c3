use std::sync::Arc;

use super::basic::{pure_uninformed, stationary_uninformed};
use super::UninformedStrategy;
use crate::error::{Error, Result};
use crate::game::{Belief, GameSpec, PublicHistory, LEFT, RIGHT};
use crate::payoff::{PayoffEvaluator, PayoffKind};
use crate::solver::envelope::{concavify, ConcaveEnvelope};
use crate::solver::matrix::{matrix_value, MatrixGame};
use crate::solver::value::{example1_breakpoints, grid_with_points, u_example1};

/// Value and subgame-optimal strategies of the non-revealing game at a
/// belief. A belief with zeros outside some set of states stands for the
/// game restricted to that set.
///
/// Contract: `respond(p, _)` holds Player I to at most `value(p)` (plus the
/// oracle's tolerance) in the non-revealing game started at the onset, and
/// `guarantee(p)` holds Player II to at least `value(p)`.
pub trait NrOracle: Send + Sync {
    fn num_states(&self) -> usize;
    /// `u(p)`.
    fn value(&self, p: &Belief) -> Result<f64>;
    /// Player II's strategy for the subgame starting after `onset`; its
    /// cursor sees only the pairs played after the onset.
    fn respond(&self, p: &Belief, onset: &PublicHistory) -> Result<Arc<dyn UninformedStrategy>>;
    /// Player I's non-revealing strategy guaranteeing `u(p)`.
    fn guarantee(&self, p: &Belief) -> Result<Arc<dyn UninformedStrategy>>;
    /// Kinks of `u` that a sampling grid should contain.
    fn breakpoints(&self) -> Vec<Belief> {
        Vec::new()
    }
    /// Lipschitz constant of `u` in the L1 norm.
    fn lipschitz(&self) -> f64;

    /// Samples `u` on a grid of the given mesh (plus the breakpoints) and
    /// concavifies.
    fn envelope(&self, mesh: f64) -> Result<(Vec<Belief>, Vec<f64>, ConcaveEnvelope)> {
        let grid = grid_with_points(self.num_states(), mesh, &self.breakpoints())?;
        let values = grid.iter().map(|q| self.value(q)).collect::<Result<Vec<_>>>()?;
        let env = concavify(&grid, &values)?;
        Ok((grid, values, env))
    }
}

/// Closed-form oracle of the two `ℓ`/`r` example games, which share `u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExampleOracle;

impl NrOracle for ExampleOracle {
    fn num_states(&self) -> usize {
        2
    }

    fn value(&self, p: &Belief) -> Result<f64> {
        check_len(p, 2)?;
        Ok(u_example1(p.get(0)))
    }

    // Against `r`, Player I gets at most max(1 − 3p, 0); against `ℓ`, at most
    // max(2 − 3p, 0).
    fn respond(&self, p: &Belief, _onset: &PublicHistory) -> Result<Arc<dyn UninformedStrategy>> {
        check_len(p, 2)?;
        let a = if p.get(0) < 2.0 / 3.0 { RIGHT } else { LEFT };
        Ok(pure_uninformed(2, a)?)
    }

    fn guarantee(&self, p: &Belief) -> Result<Arc<dyn UninformedStrategy>> {
        check_len(p, 2)?;
        let a = if p.get(0) < 1.0 / 3.0 { LEFT } else { RIGHT };
        Ok(pure_uninformed(2, a)?)
    }

    fn breakpoints(&self) -> Vec<Belief> {
        example1_breakpoints()
    }

    fn lipschitz(&self) -> f64 {
        1.5
    }
}

/// Long-run-average oracle: the non-revealing game at `p` is the repeated
/// `p`-averaged matrix game, whose stationary optimal actions are subgame
/// optimal.
#[derive(Debug, Clone)]
pub struct AverageOracle {
    stage: Vec<MatrixGame>,
    range: f64,
}

impl AverageOracle {
    pub fn new(stage: Vec<MatrixGame>) -> Result<Self> {
        if stage.is_empty() {
            return Err(Error::InvalidParameter("no stage games".into()));
        }
        let entries = stage.iter().flat_map(|g| g.as_rows().iter().flatten());
        let (lo, hi) = entries.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
        Ok(AverageOracle {
            stage,
            range: hi - lo,
        })
    }

    pub fn averaged(&self, p: &Belief) -> Result<MatrixGame> {
        check_len(p, self.stage.len())?;
        MatrixGame::average(&self.stage, p)
    }
}

impl NrOracle for AverageOracle {
    fn num_states(&self) -> usize {
        self.stage.len()
    }

    fn value(&self, p: &Belief) -> Result<f64> {
        Ok(matrix_value(&self.averaged(p)?)?.value)
    }

    fn respond(&self, p: &Belief, _onset: &PublicHistory) -> Result<Arc<dyn UninformedStrategy>> {
        Ok(stationary_uninformed(matrix_value(&self.averaged(p)?)?.col)?)
    }

    fn guarantee(&self, p: &Belief) -> Result<Arc<dyn UninformedStrategy>> {
        Ok(stationary_uninformed(matrix_value(&self.averaged(p)?)?.row)?)
    }

    // |u(p) − u(q)| ≤ max|g| ‖p − q‖₁, and u is unchanged by shifting g.
    fn lipschitz(&self) -> f64 {
        self.range / 2.0
    }
}

fn check_len(p: &Belief, n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::InvalidBelief(format!("{p} is not a belief over {n} states")));
    }
    Ok(())
}

/// The oracle for a payoff family, or [`Error::NoOracle`] naming the family.
pub fn oracle_for(payoff: &PayoffEvaluator, spec: &GameSpec) -> Result<Arc<dyn NrOracle>> {
    payoff.check_compatible(spec)?;
    match payoff.kind() {
        PayoffKind::Example1 | PayoffKind::Example2 => Ok(Arc::new(ExampleOracle)),
        PayoffKind::LimsupAverage { stage } => {
            let games = stage.iter().cloned().map(MatrixGame::new).collect::<Result<Vec<_>>>()?;
            Ok(Arc::new(AverageOracle::new(games)?))
        }
        _ => Err(Error::NoOracle(payoff.name())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_oracle_matches_closed_form() {
        let o = ExampleOracle;
        for n in 0..=20 {
            let p = Belief::two_state(n as f64 / 20.0).unwrap();
            assert_eq!(o.value(&p).unwrap(), u_example1(n as f64 / 20.0));
        }
        let (_, _, env) = o.envelope(0.05).unwrap();
        assert!((env.eval_scalar(0.5).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn average_oracle_agrees_with_matrix_value() {
        let g1 = MatrixGame::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let g2 = MatrixGame::new(vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let o = AverageOracle::new(vec![g1, g2]).unwrap();
        let half = Belief::uniform(2);
        assert!((o.value(&half).unwrap() - 0.25).abs() < 1e-9);
        let y = o.respond(&half, &PublicHistory::new()).unwrap().start().dist().to_vec();
        let avg = o.averaged(&half).unwrap();
        assert!(avg.col_guarantee(&y) <= 0.25 + 1e-9);
    }

    #[test]
    fn unsupported_family_is_named() {
        let spec = GameSpec::example1(0.5);
        let f = PayoffEvaluator::buchi(vec![]);
        match oracle_for(&f, &spec) {
            Err(Error::NoOracle(name)) => assert!(name.to_lowercase().contains("buchi"), "{name}"),
            other => panic!("{:?}", other.map(|_| ())),
        }
    }
}
