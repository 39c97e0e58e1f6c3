//! One-shot zero-sum matrix games.

use serde::{Deserialize, Serialize};

use super::lp::{LinearProgram, Relation};
use crate::error::{Error, Result};
use crate::game::Belief;

/// Payoff matrix `G[i][j]`; the row player maximizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixGame(Vec<Vec<f64>>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixSolution {
    pub value: f64,
    /// Optimal mixed strategy of the row player.
    pub row: Vec<f64>,
    /// Optimal mixed strategy of the column player.
    pub col: Vec<f64>,
}

impl MatrixGame {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidParameter("matrix must be nonempty and rectangular".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(MatrixGame(rows))
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn cols(&self) -> usize {
        self.0[0].len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn as_rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// `xᵀ G y`.
    pub fn expected(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(y).map(|(g, yj)| g * yj).sum::<f64>())
            .sum()
    }

    /// `min_j (xᵀG)_j`: what the row strategy `x` guarantees.
    pub fn row_guarantee(&self, x: &[f64]) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| x[i] * self.0[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i (Gy)_i`: what the column strategy `y` concedes at most.
    pub fn col_guarantee(&self, y: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|row| row.iter().zip(y).map(|(g, yj)| g * yj).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_k p(k) G_k`.
    pub fn average(games: &[MatrixGame], p: &Belief) -> Result<MatrixGame> {
        let first = games
            .first()
            .ok_or_else(|| Error::InvalidParameter("no stage matrices".into()))?;
        if games.len() != p.len() {
            return Err(Error::InvalidParameter(format!(
                "{} stage matrices for a belief over {} states",
                games.len(),
                p.len()
            )));
        }
        let (m, n) = (first.rows(), first.cols());
        if games.iter().any(|g| g.rows() != m || g.cols() != n) {
            return Err(Error::InvalidParameter("stage matrices differ in shape".into()));
        }
        let mut avg = vec![vec![0.0; n]; m];
        for (g, &w) in games.iter().zip(p.as_slice()) {
            for (arow, grow) in avg.iter_mut().zip(&g.0) {
                for (a, x) in arow.iter_mut().zip(grow) {
                    *a += w * x;
                }
            }
        }
        Ok(MatrixGame(avg))
    }
}

/// Value and optimal strategies of a matrix game, from the two LPs
/// `max v : xᵀG ≥ v, Σx = 1` and `min w : Gy ≤ w, Σy = 1`.
///
/// The matrix is shifted to be positive so `v, w ≥ 0` is no restriction.
/// Returned strategies are clipped at zero and renormalized.
pub fn matrix_value(g: &MatrixGame) -> Result<MatrixSolution> {
    let (m, n) = (g.rows(), g.cols());
    let min = g.0.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;

    // Variables (x_0..x_{m-1}, v).
    let mut primal = {
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        LinearProgram::maximize(c)
    };
    for j in 0..n {
        let mut row: Vec<f64> = (0..m).map(|i| -(g.0[i][j] + shift)).collect();
        row.push(1.0);
        primal = primal.constraint(row, Relation::Le, 0.0);
    }
    let mut simplex_row = vec![1.0; m];
    simplex_row.push(0.0);
    primal = primal.constraint(simplex_row, Relation::Eq, 1.0);
    let p = primal.solve()?;

    // Variables (y_0..y_{n-1}, w); maximize −w.
    let mut dual = {
        let mut c = vec![0.0; n + 1];
        c[n] = -1.0;
        LinearProgram::maximize(c)
    };
    for i in 0..m {
        let mut row: Vec<f64> = (0..n).map(|j| g.0[i][j] + shift).collect();
        row.push(-1.0);
        dual = dual.constraint(row, Relation::Le, 0.0);
    }
    let mut simplex_row = vec![1.0; n];
    simplex_row.push(0.0);
    dual = dual.constraint(simplex_row, Relation::Eq, 1.0);
    let d = dual.solve()?;

    let v = p.objective;
    let w = -d.objective;
    if (v - w).abs() > 1e-9 * (1.0 + v.abs()) {
        return Err(Error::Lp("not converging (primal/dual gap)"));
    }
    Ok(MatrixSolution {
        value: v - shift,
        row: clean_distribution(&p.x[..m]),
        col: clean_distribution(&d.x[..n]),
    })
}

fn clean_distribution(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    clipped.into_iter().map(|v| v / sum).collect()
}

/// Value of the non-revealing long-run-average game at `p`: the value of
/// the `p`-averaged stage game.
pub fn nr_value_average(p: &Belief, stage: &[MatrixGame]) -> Result<f64> {
    Ok(matrix_value(&MatrixGame::average(stage, p)?)?.value)
}
