//! Repeated zero-sum games with incomplete information on one side and
//! tail-measurable payoffs.
//!
//! The informed player I knows the state of nature `k*`; player II only
//! sees the public history and updates a posterior belief. The crate
//! provides the game model, payoff evaluators that are exact on ultimately
//! periodic plays, matrix-game and concavification solvers, the splitting
//! strategy that attains `cav u`, the block response `τ*`, and a seeded
//! Monte Carlo engine.

pub mod belief;
pub mod cli;
pub mod descriptor;
pub mod engine;
pub mod error;
pub mod game;
pub mod gap;
pub mod payoff;
pub mod simulate;
pub mod solver;
pub mod strategy;

pub use error::{Error, Result};
