//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Problems here have a handful of rows and at most a few thousand columns,
//! so a dense tableau is adequate. Solutions are basic: at most one nonzero
//! per constraint row.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `maximize cᵀx subject to rows, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn constraint(mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> Self {
        assert_eq!(coeffs.len(), self.objective.len(), "constraint width");
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    /// Columns `first_artificial..` are artificial.
    first_artificial: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.objective.len();
        let m = lp.rows.len();
        // Flip rows so every right-hand side is nonnegative.
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|x| -x).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let n_slack = normalized
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Le)
            .count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (n, first_artificial);
        for (a, rel, b) in normalized {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(&a);
            row[width] = b;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            n_orig: n,
            first_artificial,
            width,
        }
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpSolution> {
        if self.width > self.first_artificial {
            // Phase one: maximize −Σ artificials.
            let mut phase1 = vec![0.0; self.width];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            self.optimize(&phase1, self.width)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.rows)
                .filter(|(b, _)| **b >= self.first_artificial)
                .map(|(_, row)| row[self.width])
                .sum();
            if infeasibility > 1e-9 {
                return Err(Error::Lp("infeasible"));
            }
            self.drive_out_artificials();
        }
        let mut costs = vec![0.0; self.width];
        costs[..self.n_orig].copy_from_slice(objective);
        self.optimize(&costs, self.first_artificial)?;
        let mut x = vec![0.0; self.n_orig];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_orig {
                x[b] = self.rows[r][self.width].max(0.0);
            }
        }
        let value = x.iter().zip(objective).map(|(a, c)| a * c).sum();
        Ok(LpSolution { x, objective: value })
    }

    /// Primal simplex on `costs`, letting only columns `< allowed` enter.
    fn optimize(&mut self, costs: &[f64], allowed: usize) -> Result<()> {
        let max_iter = 50_000;
        for _ in 0..max_iter {
            let reduced = self.reduced_costs(costs);
            // Bland: smallest improving column.
            let Some(enter) = (0..allowed).find(|&j| reduced[j] > EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > EPS {
                    let ratio = row[self.width] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - 1e-14
                                || (ratio <= best + 1e-14 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("unbounded"));
            };
            self.pivot(r, enter);
        }
        Err(Error::Lp("not converging"))
    }

    /// `c_j − c_Bᵀ B⁻¹ A_j` for every column.
    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let mut reduced = costs.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (j, red) in reduced.iter_mut().enumerate() {
                    *red -= cb * self.rows[r][j];
                }
            }
        }
        reduced
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (other, row) in self.rows.iter_mut().enumerate() {
            if other != r {
                let factor = row[col];
                if factor != 0.0 {
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        *x -= factor * y;
                    }
                }
            }
        }
        self.basis[r] = col;
    }

    /// Pivots zero-valued artificials out of the basis; rows where that is
    /// impossible are redundant and dropped.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.rows[r][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        self.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let sol = LinearProgram::maximize(vec![3.0, 5.0])
            .constraint(vec![1.0, 0.0], Relation::Le, 4.0)
            .constraint(vec![0.0, 2.0], Relation::Le, 12.0)
            .constraint(vec![3.0, 2.0], Relation::Le, 18.0)
            .solve()
            .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max −x − y s.t. x + y = 1, x ≥ 0.25 → −1 with x ≥ 0.25.
        let sol = LinearProgram::maximize(vec![-1.0, -1.0])
            .constraint(vec![1.0, 1.0], Relation::Eq, 1.0)
            .constraint(vec![1.0, 0.0], Relation::Ge, 0.25)
            .solve()
            .unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!(sol.x[0] >= 0.25 - 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let infeasible = LinearProgram::maximize(vec![1.0])
            .constraint(vec![1.0], Relation::Ge, 2.0)
            .constraint(vec![1.0], Relation::Le, 1.0)
            .solve();
        assert!(matches!(infeasible, Err(Error::Lp("infeasible"))));
        let unbounded = LinearProgram::maximize(vec![1.0, 0.0])
            .constraint(vec![0.0, 1.0], Relation::Le, 1.0)
            .solve();
        assert!(matches!(unbounded, Err(Error::Lp("unbounded"))));
    }

    #[test]
    fn redundant_equalities() {
        let sol = LinearProgram::maximize(vec![1.0, 2.0])
            .constraint(vec![1.0, 1.0], Relation::Eq, 1.0)
            .constraint(vec![2.0, 2.0], Relation::Eq, 2.0)
            .solve()
            .unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // −x ≤ −1 means x ≥ 1.
        let sol = LinearProgram::maximize(vec![-1.0])
            .constraint(vec![-1.0], Relation::Le, -1.0)
            .solve()
            .unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
    }
}
