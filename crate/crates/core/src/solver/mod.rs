//! Matrix-game values, non-revealing value functions and concavification.

pub mod envelope;
pub mod lp;
pub mod matrix;
pub mod value;

pub use envelope::{concavify, concavify_segment, lipschitz_check, ConcaveEnvelope, SplitPoint};
pub use matrix::{matrix_value, nr_value_average, MatrixGame, MatrixSolution};
pub use value::{u_example1, uniform_grid};
