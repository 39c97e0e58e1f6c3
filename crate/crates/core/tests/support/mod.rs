//! Independent oracles for the integration tests.
//!
//! None of these call the solver, envelope or belief code of the crate;
//! they recompute the same quantities by brute force.

#![allow(dead_code)]

use tailcav::game::{Belief, PublicHistory, DUMMY};
use tailcav::strategy::InformedStrategy;

/// Piecewise formula for the non-revealing value of the `ℓ`/`r` example.
pub fn u_example1_formula(p: f64) -> f64 {
    if p <= 1.0 / 3.0 {
        1.0 - 3.0 * p
    } else if p <= 2.0 / 3.0 {
        0.0
    } else {
        2.0 - 3.0 * p
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(r);
            for (x, y) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= f * y;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// Value of a nondegenerate matrix game by support enumeration over
/// equal-size supports. Returns `(value, row strategy, column strategy)`.
pub fn support_enumeration(g: &[Vec<f64>]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let (m, n) = (g.len(), g[0].len());
    let tol = 1e-9;
    for size in 1..=m.min(n) {
        for rows in subsets(m, size) {
            for cols in subsets(n, size) {
                // Unknowns (x_S, v): Σ_i x_i g[i][j] − v = 0 for j ∈ T, Σ x = 1.
                let mut a = Vec::new();
                let mut b = Vec::new();
                for &j in &cols {
                    let mut row: Vec<f64> = rows.iter().map(|&i| g[i][j]).collect();
                    row.push(-1.0);
                    a.push(row);
                    b.push(0.0);
                }
                let mut last = vec![1.0; size];
                last.push(0.0);
                a.push(last);
                b.push(1.0);
                let Some(xs) = solve_linear(a, b) else { continue };
                // Unknowns (y_T, w): Σ_j g[i][j] y_j − w = 0 for i ∈ S, Σ y = 1.
                let mut a = Vec::new();
                let mut b = Vec::new();
                for &i in &rows {
                    let mut row: Vec<f64> = cols.iter().map(|&j| g[i][j]).collect();
                    row.push(-1.0);
                    a.push(row);
                    b.push(0.0);
                }
                let mut last = vec![1.0; size];
                last.push(0.0);
                a.push(last);
                b.push(1.0);
                let Some(ys) = solve_linear(a, b) else { continue };
                if xs[..size].iter().chain(&ys[..size]).any(|&v| v < -tol) {
                    continue;
                }
                let v = xs[size];
                let mut x = vec![0.0; m];
                for (k, &i) in rows.iter().enumerate() {
                    x[i] = xs[k];
                }
                let mut y = vec![0.0; n];
                for (k, &j) in cols.iter().enumerate() {
                    y[j] = ys[k];
                }
                let row_ok = (0..n).all(|j| (0..m).map(|i| x[i] * g[i][j]).sum::<f64>() >= v - tol);
                let col_ok = (0..m).all(|i| (0..n).map(|j| g[i][j] * y[j]).sum::<f64>() <= v + tol);
                if row_ok && col_ok {
                    return Some((v, x, y));
                }
            }
        }
    }
    None
}

/// Barycentric coordinates of `p` with respect to `points`, all in the
/// same simplex, if `p` lies in their convex hull.
fn barycentric(points: &[&Belief], p: &Belief) -> Option<Vec<f64>> {
    let k = p.len();
    let n = points.len();
    // Least-squares normal equations over the coordinates plus Σλ = 1.
    let mut rows: Vec<Vec<f64>> = (0..k)
        .map(|c| points.iter().map(|q| q.get(c)).collect())
        .collect();
    rows.push(vec![1.0; n]);
    let mut rhs: Vec<f64> = p.as_slice().to_vec();
    rhs.push(1.0);
    let ata: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| rows.iter().map(|r| r[a] * r[b]).sum()).collect())
        .collect();
    let atb: Vec<f64> = (0..n).map(|a| rows.iter().zip(&rhs).map(|(r, y)| r[a] * y).sum()).collect();
    let lambda = solve_linear(ata, atb)?;
    if lambda.iter().any(|&l| l < -1e-12) {
        return None;
    }
    let fit = rows
        .iter()
        .zip(&rhs)
        .map(|(r, y)| (r.iter().zip(&lambda).map(|(a, l)| a * l).sum::<f64>() - y).abs())
        .fold(0.0, f64::max);
    (fit < 1e-10).then_some(lambda)
}

/// `cav` at `p` as the best convex combination of at most `|K|` samples
/// whose hull contains `p`.
pub fn chord_cav(grid: &[Belief], values: &[f64], p: &Belief) -> f64 {
    let n = grid.len();
    let mut best = f64::NEG_INFINITY;
    for size in 1..=p.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let pts: Vec<&Belief> = idx.iter().map(|&i| &grid[i]).collect();
            if let Some(lambda) = barycentric(&pts, p) {
                let v: f64 = idx.iter().zip(&lambda).map(|(&i, l)| l * values[i]).sum();
                best = best.max(v);
            }
            // Next combination in lexicographic order.
            let mut pos = size;
            while pos > 0 && idx[pos - 1] == n - size + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for q in pos..size {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    best
}

/// Joint probabilities `p_k ℙ_σ(h | k)`, each stage's mixed action
/// recomputed from the strategy's behavior function.
pub fn bayes_weights(p: &Belief, sigma: &dyn InformedStrategy, h: &PublicHistory) -> Vec<f64> {
    let mut w = p.as_slice().to_vec();
    for t in 0..h.len() {
        let pair = h.pairs()[t];
        if pair.i == DUMMY {
            continue;
        }
        let prefix = h.slice(0..t);
        for (k, wk) in w.iter_mut().enumerate() {
            *wk *= sigma.behavior(k, &prefix)[pair.i];
        }
    }
    w
}

/// Bayes posterior, `None` on a null history.
pub fn bayes_posterior(p: &Belief, sigma: &dyn InformedStrategy, h: &PublicHistory) -> Option<Vec<f64>> {
    let w = bayes_weights(p, sigma, h);
    let total: f64 = w.iter().sum();
    (total > 0.0).then(|| w.iter().map(|x| x / total).collect())
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
