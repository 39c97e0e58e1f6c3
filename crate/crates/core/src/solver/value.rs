//! Closed-form value functions and simplex grids.

use crate::error::{Error, Result};
use crate::game::Belief;

/// Value of the non-revealing game of the `ℓ`/`r` examples, where `p` is the
/// probability of `k1`: `1 − 3p` on `[0, ⅓]`, `0` on `[⅓, ⅔]`, `2 − 3p` on `[⅔, 1]`.
pub fn u_example1(p: f64) -> f64 {
    if p <= 1.0 / 3.0 {
        1.0 - 3.0 * p
    } else if p <= 2.0 / 3.0 {
        0.0
    } else {
        2.0 - 3.0 * p
    }
}

/// Kinks of [`u_example1`].
pub fn example1_breakpoints() -> Vec<Belief> {
    [1.0 / 3.0, 2.0 / 3.0]
        .iter()
        .map(|&p| Belief::two_state(p).expect("in [0,1]"))
        .collect()
}

/// Number of grid divisions for a mesh, rejecting meshes that do not divide 1.
pub fn divisions_for_mesh(mesh: f64) -> Result<usize> {
    if !(mesh > 0.0 && mesh <= 1.0) {
        return Err(Error::InvalidParameter(format!("mesh {mesh} outside (0,1]")));
    }
    let n = (1.0 / mesh).round();
    if (n * mesh - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("mesh {mesh} does not divide 1")));
    }
    Ok(n as usize)
}

/// All beliefs over `num_states` states whose coordinates are multiples of
/// `mesh` (barycentric grid).
pub fn uniform_grid(num_states: usize, mesh: f64) -> Result<Vec<Belief>> {
    if num_states == 0 {
        return Err(Error::InvalidParameter("no states".into()));
    }
    let n = divisions_for_mesh(mesh)?;
    let mut out = Vec::new();
    let mut counts = vec![0usize; num_states];
    compositions(n, 0, &mut counts, &mut |c| {
        let mut w: Vec<f64> = c.iter().map(|&x| x as f64 / n as f64).collect();
        // Exact last coordinate so every point sums to one.
        let head: f64 = w[..num_states - 1].iter().sum();
        w[num_states - 1] = 1.0 - head;
        out.push(Belief::normalized(w).expect("nonnegative grid point"));
    });
    Ok(out)
}

fn compositions(remaining: usize, idx: usize, counts: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        emit(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[idx] = c;
        compositions(remaining - c, idx + 1, counts, emit);
    }
}

/// The uniform grid with `extra` points merged in, duplicates removed.
pub fn grid_with_points(num_states: usize, mesh: f64, extra: &[Belief]) -> Result<Vec<Belief>> {
    let mut grid = uniform_grid(num_states, mesh)?;
    for q in extra {
        if q.len() == num_states && !grid.iter().any(|g| g.linf_distance(q) < 1e-12) {
            grid.push(q.clone());
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(u_example1(0.0), 1.0);
        assert_eq!(u_example1(0.5), 0.0);
        assert_eq!(u_example1(1.0), -1.0);
        assert!((u_example1(0.25) - 0.25).abs() < 1e-15);
        assert!((u_example1(0.75) + 0.25).abs() < 1e-15);
        assert_eq!(u_example1(2.0 / 3.0), 0.0);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(uniform_grid(2, 0.01).unwrap().len(), 101);
        assert_eq!(uniform_grid(3, 0.02).unwrap().len(), 51 * 52 / 2);
        assert_eq!(uniform_grid(1, 0.5).unwrap().len(), 1);
        assert!(uniform_grid(2, 0.3).is_err());
        let g = grid_with_points(2, 0.5, &example1_breakpoints()).unwrap();
        assert_eq!(g.len(), 5);
    }
}
