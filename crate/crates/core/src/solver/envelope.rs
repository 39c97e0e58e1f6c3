//! Concavification of sampled functions on the simplex `Δ(K)`.
//!
//! For two states the envelope is the exact upper concave hull of the sample
//! points, stored as breakpoints over `p = belief[0]`. For more states the
//! envelope is evaluated on demand by the LP
//! `max Σ α_i u(q_i)  s.t.  Σ α_i q_i = p, α ≥ 0`,
//! whose basic optimal solutions use at most `|K|` grid points.

use serde::Serialize;

use super::lp::{LinearProgram, Relation};
use crate::error::{Error, Result};
use crate::game::Belief;

const VERTEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Repr {
    /// Hull vertices `(p, value)`, strictly increasing in `p`.
    Segment(Vec<(f64, f64)>),
    Simplex { grid: Vec<Belief>, values: Vec<f64> },
}

/// The least concave function dominating a set of samples.
#[derive(Debug, Clone)]
pub struct ConcaveEnvelope {
    num_states: usize,
    repr: Repr,
}

/// One point of a convex decomposition `p = Σ weight · point`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPoint {
    pub point: Belief,
    pub weight: f64,
    /// The sampled value at `point`.
    pub value: f64,
}

/// Builds the envelope of `(grid[n], values[n])`.
pub fn concavify(grid: &[Belief], values: &[f64]) -> Result<ConcaveEnvelope> {
    if grid.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} grid points but {} values",
            grid.len(),
            values.len()
        )));
    }
    let num_states = grid.first().map_or(0, Belief::len);
    if grid.iter().any(|q| q.len() != num_states) {
        return Err(Error::DegenerateGrid("grid points of different dimension".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample value".into()));
    }
    match num_states {
        0 => Err(Error::DegenerateGrid("empty grid".into())),
        1 => Ok(ConcaveEnvelope {
            num_states,
            repr: Repr::Segment(vec![(
                1.0,
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )]),
        }),
        2 => {
            let xs: Vec<f64> = grid.iter().map(|q| q.get(0)).collect();
            concavify_segment(&xs, values)
        }
        _ => {
            let distinct = grid.iter().skip(1).any(|q| q.linf_distance(&grid[0]) > VERTEX_TOL);
            if !distinct {
                return Err(Error::DegenerateGrid(
                    "fewer than 2 affinely independent points".into(),
                ));
            }
            Ok(ConcaveEnvelope {
                num_states,
                repr: Repr::Simplex {
                    grid: grid.to_vec(),
                    values: values.to_vec(),
                },
            })
        }
    }
}

/// Two-state envelope from scalar grid points `p ∈ [0,1]` (the probability of
/// the first state), in any order.
pub fn concavify_segment(xs: &[f64], values: &[f64]) -> Result<ConcaveEnvelope> {
    if xs.len() != values.len() {
        return Err(Error::InvalidParameter("grid and values differ in length".into()));
    }
    if xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::OutsideSimplex("grid point outside [0,1]".into()));
    }
    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(values.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    if pts.len() < 2 {
        return Err(Error::DegenerateGrid(
            "fewer than 2 affinely independent points".into(),
        ));
    }
    Ok(ConcaveEnvelope {
        num_states: 2,
        repr: Repr::Segment(upper_hull(&pts)),
    })
}

/// Monotone-chain upper hull of points sorted by strictly increasing `x`.
/// Collinear interior points are dropped.
fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &c in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    hull
}

impl ConcaveEnvelope {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Breakpoints `(p, value)` of a two-state envelope.
    pub fn breakpoints(&self) -> Option<&[(f64, f64)]> {
        match &self.repr {
            Repr::Segment(hull) if self.num_states == 2 => Some(hull),
            _ => None,
        }
    }

    /// `(cav u)(p)`.
    pub fn eval(&self, p: &Belief) -> Result<f64> {
        self.check_query(p)?;
        match &self.repr {
            Repr::Segment(hull) => {
                if self.num_states == 1 {
                    return Ok(hull[0].1);
                }
                let (lo, hi, w) = self.locate(hull, p.get(0))?;
                Ok(hull[lo].1 * (1.0 - w) + hull[hi].1 * w)
            }
            Repr::Simplex { .. } => Ok(self.simplex_query(p)?.0),
        }
    }

    /// Evaluates a two-state envelope at `p = belief[0]`.
    pub fn eval_scalar(&self, p: f64) -> Result<f64> {
        self.eval(&Belief::two_state(p)?)
    }

    /// A decomposition of `p` into at most `|K|` sample points whose
    /// weighted values sum to `(cav u)(p)`.
    pub fn split(&self, p: &Belief) -> Result<Vec<SplitPoint>> {
        self.check_query(p)?;
        match &self.repr {
            Repr::Segment(hull) => {
                if self.num_states == 1 {
                    return Ok(vec![SplitPoint {
                        point: p.clone(),
                        weight: 1.0,
                        value: hull[0].1,
                    }]);
                }
                let (lo, hi, w) = self.locate(hull, p.get(0))?;
                let point = |n: usize| Belief::two_state(hull[n].0);
                if w <= VERTEX_TOL {
                    return Ok(vec![SplitPoint { point: point(lo)?, weight: 1.0, value: hull[lo].1 }]);
                }
                if w >= 1.0 - VERTEX_TOL {
                    return Ok(vec![SplitPoint { point: point(hi)?, weight: 1.0, value: hull[hi].1 }]);
                }
                Ok(vec![
                    SplitPoint { point: point(lo)?, weight: 1.0 - w, value: hull[lo].1 },
                    SplitPoint { point: point(hi)?, weight: w, value: hull[hi].1 },
                ])
            }
            Repr::Simplex { grid, values } => {
                let (_, alpha) = self.simplex_query(p)?;
                let total: f64 = alpha.iter().filter(|a| **a > VERTEX_TOL).sum();
                Ok(alpha
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a > VERTEX_TOL)
                    .map(|(n, a)| SplitPoint {
                        point: grid[n].clone(),
                        weight: a / total,
                        value: values[n],
                    })
                    .collect())
            }
        }
    }

    fn check_query(&self, p: &Belief) -> Result<()> {
        if p.len() != self.num_states {
            return Err(Error::OutsideSimplex(format!(
                "{p} has {} coordinates, expected {}",
                p.len(),
                self.num_states
            )));
        }
        Ok(())
    }

    /// Hull segment `[lo, hi]` containing `x`, with interpolation weight of `hi`.
    fn locate(&self, hull: &[(f64, f64)], x: f64) -> Result<(usize, usize, f64)> {
        let first = hull[0].0;
        let last = hull[hull.len() - 1].0;
        if x < first - VERTEX_TOL || x > last + VERTEX_TOL {
            return Err(Error::OutsideSimplex(format!("{x} outside [{first}, {last}]")));
        }
        let x = x.clamp(first, last);
        let hi = hull.partition_point(|(px, _)| *px < x).clamp(1, hull.len() - 1);
        let lo = hi - 1;
        let w = (x - hull[lo].0) / (hull[hi].0 - hull[lo].0);
        Ok((lo, hi, w))
    }

    fn simplex_query(&self, p: &Belief) -> Result<(f64, Vec<f64>)> {
        let Repr::Simplex { grid, values } = &self.repr else {
            unreachable!("simplex query on a segment envelope");
        };
        let mut lp = LinearProgram::maximize(values.clone());
        for k in 0..self.num_states {
            lp = lp.constraint(grid.iter().map(|q| q.get(k)).collect(), Relation::Eq, p.get(k));
        }
        match lp.solve() {
            Ok(sol) => Ok((sol.objective, sol.x)),
            Err(Error::Lp("infeasible")) => Err(Error::OutsideSimplex(p.to_string())),
            Err(e) => Err(e),
        }
    }
}

/// Largest `|u(q) − u(q')| / ‖q − q'‖₁` over grid pairs, after dividing
/// values by `range` (the payoff range, so payoffs are rescaled to `[0,1]`).
pub fn lipschitz_check(grid: &[Belief], values: &[f64], range: f64) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..grid.len() {
        for b in (a + 1)..grid.len() {
            let dist = grid[a].l1_distance(&grid[b]);
            if dist > 0.0 {
                best = best.max((values[a] - values[b]).abs() / range / dist);
            }
        }
    }
    best
}
