//! `max p·x  s.t.  w·x ≥ θ,  x ∈ P(M)` via Lagrangian relaxation of the cover
//! constraint.
//!
//! For a fixed multiplier `λ` the relaxed problem is a max-weight base under
//! `W_λ(e) = p(e) + λ·w(e)`, solved by the matroid greedy. `φ(λ)` is convex and
//! piecewise linear with breakpoints among the turning points where two
//! elements' weights cross. The optimal primal point is a convex combination
//! of two bases one swap apart, both greedy bases at `λ*`.

use std::collections::BTreeMap;

use crate::constraints::{IndependenceOracle, IndependenceSystem};
use crate::error::{Error, Result};
use crate::set::ElementSet;

const TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Dense primal vector.
    pub x: Vec<f64>,
    /// One or two `(coefficient, base)` pairs whose combination is `x`.
    pub parts: Vec<(f64, ElementSet)>,
    pub lambda: f64,
    /// `p·x`.
    pub objective: f64,
    /// `w·x`.
    pub cover: f64,
}

impl LpSolution {
    pub fn fractional_count(&self) -> usize {
        self.x.iter().filter(|&&v| v > 1e-12 && v < 1.0 - 1e-12).count()
    }
}

/// The relaxed objective sampled at `0` and every turning point.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    /// `0` followed by the positive turning points, ascending.
    pub candidates: Vec<f64>,
    /// `φ(λ) = max_B W_λ(B) − λθ` at each candidate.
    pub phi: Vec<f64>,
    pub lambda_star: f64,
    pub solution: LpSolution,
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    /// Order valid just below `λ`: among ties, smaller `w` first.
    Left,
    /// Order valid just above `λ`: among ties, larger `w` first.
    Right,
}

/// Elements grouped by their exact `(p, w)` pair; the rounded inputs have few
/// distinct pairs, so orders are computed over classes and expanded.
struct Classes {
    p: Vec<f64>,
    w: Vec<f64>,
    members: Vec<Vec<usize>>,
}

impl Classes {
    fn new(w: &[f64], p: &[f64], tiebreak: Option<&[f64]>) -> Self {
        let mut buckets: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
        for e in 0..w.len() {
            buckets.entry((p[e].to_bits(), w[e].to_bits())).or_default().push(e);
        }
        let mut classes = Classes {
            p: Vec::new(),
            w: Vec::new(),
            members: Vec::new(),
        };
        for ((pb, wb), mut members) in buckets {
            if let Some(tb) = tiebreak {
                members.sort_by(|&a, &b| tb[b].total_cmp(&tb[a]).then(a.cmp(&b)));
            }
            classes.p.push(f64::from_bits(pb));
            classes.w.push(f64::from_bits(wb));
            classes.members.push(members);
        }
        classes
    }

    fn len(&self) -> usize {
        self.p.len()
    }

    fn weight(&self, c: usize, lambda: f64) -> f64 {
        self.p[c] + lambda * self.w[c]
    }

    /// Class order by `W_λ` descending; near-ties are chained into groups and
    /// ordered by `w` according to `side`. Returns the order and group bounds.
    fn order(&self, lambda: f64, side: Side) -> (Vec<usize>, Vec<(usize, usize)>) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.weight(b, lambda)
                .total_cmp(&self.weight(a, lambda))
                .then(a.cmp(&b))
        });
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=idx.len() {
            let split = i == idx.len() || {
                let (x, y) = (self.weight(idx[i - 1], lambda), self.weight(idx[i], lambda));
                (x - y).abs() > TIE_REL * x.abs().max(y.abs()).max(1.0)
            };
            if split {
                let group = &mut idx[start..i];
                match side {
                    Side::Left => group.sort_by(|&a, &b| self.w[a].total_cmp(&self.w[b])),
                    Side::Right => group.sort_by(|&a, &b| self.w[b].total_cmp(&self.w[a])),
                }
                groups.push((start, i));
                start = i;
            }
        }
        (idx, groups)
    }

    fn expand(&self, order: &[usize]) -> Vec<usize> {
        order.iter().flat_map(|&c| self.members[c].iter().copied()).collect()
    }

    /// Positive `λ` where two classes' weights cross, ascending and deduplicated.
    fn turning_points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.w[i] != self.w[j] {
                    let l = (self.p[i] - self.p[j]) / (self.w[j] - self.w[i]);
                    if l > 0.0 && l.is_finite() {
                        pts.push(l);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= TIE_REL * a.abs().max(b.abs()));
        pts
    }
}

struct Greedy<'a, 'o, M: ?Sized> {
    indep: &'a IndependenceOracle<'o, M>,
    rank: usize,
}

impl<M: IndependenceSystem + ?Sized> Greedy<'_, '_, M> {
    fn base(&self, order: &[usize]) -> ElementSet {
        let mut base = ElementSet::new();
        for &e in order {
            if base.len() == self.rank {
                break;
            }
            if self.indep.is_independent(&base.with(e)) {
                base.insert(e);
            }
        }
        base
    }
}

fn weight_of(values: &[f64], set: &ElementSet) -> f64 {
    set.iter().map(|e| values[e]).sum()
}

fn solution(w: &[f64], p: &[f64], lambda: f64, parts: Vec<(f64, ElementSet)>) -> LpSolution {
    let mut x = vec![0.0; w.len()];
    for (c, b) in &parts {
        for e in b {
            x[e] += c;
        }
    }
    let dot = |v: &[f64]| v.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpSolution {
        objective: dot(p),
        cover: dot(w),
        x,
        parts,
        lambda,
    }
}

/// Solves the cover-constrained LP over the matroid polytope of `indep`'s
/// system (rank `rank`). Within a `(p, w)` class elements are ordered by
/// `tiebreak` descending, then by index.
pub fn lp_solve<M: IndependenceSystem + ?Sized>(
    w: &[f64],
    p: &[f64],
    theta: f64,
    indep: &IndependenceOracle<'_, M>,
    rank: usize,
    tiebreak: Option<&[f64]>,
) -> Result<LpSolution> {
    let classes = Classes::new(w, p, tiebreak);
    let greedy = Greedy { indep, rank };
    let tol = 1e-9 * theta.abs().max(1.0);

    let mut by_w: Vec<usize> = (0..classes.len()).collect();
    by_w.sort_by(|&a, &b| {
        classes.w[b]
            .total_cmp(&classes.w[a])
            .then(classes.p[b].total_cmp(&classes.p[a]))
    });
    let max_base = greedy.base(&classes.expand(&by_w));
    let max_weight = weight_of(w, &max_base);
    if max_weight < theta - tol {
        return Err(Error::Infeasible { theta, max_weight });
    }

    let right_base = |lambda: f64| greedy.base(&classes.expand(&classes.order(lambda, Side::Right).0));
    let at_zero = right_base(0.0);
    if weight_of(w, &at_zero) >= theta - tol {
        return Ok(solution(w, p, 0.0, vec![(1.0, at_zero)]));
    }

    let points = classes.turning_points();
    let (mut lo, mut hi) = (0, points.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if weight_of(w, &right_base(points[mid])) >= theta - tol {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let Some(&lambda) = points.get(lo) else {
        return Ok(solution(w, p, f64::INFINITY, vec![(1.0, max_base)]));
    };

    // Walk from the left order to the right order by adjacent swaps inside
    // tie groups; each swap moves the greedy base by at most one exchange.
    let (class_order, groups) = classes.order(lambda, Side::Left);
    let mut order = classes.expand(&class_order);
    let mut offsets = vec![0usize; class_order.len() + 1];
    for (i, &c) in class_order.iter().enumerate() {
        offsets[i + 1] = offsets[i] + classes.members[c].len();
    }
    let mut prev = greedy.base(&order);
    let mut prev_w = weight_of(w, &prev);
    for (gs, ge) in groups {
        let (from, to) = (offsets[gs], offsets[ge]);
        loop {
            let mut swapped = false;
            for i in from..to.saturating_sub(1) {
                if w[order[i]] < w[order[i + 1]] {
                    order.swap(i, i + 1);
                    swapped = true;
                    let next = greedy.base(&order);
                    let next_w = weight_of(w, &next);
                    if next_w >= theta - tol {
                        let a = ((next_w - theta) / (next_w - prev_w)).clamp(0.0, 1.0);
                        let parts = if a > 0.0 {
                            vec![(a, prev), (1.0 - a, next)]
                        } else {
                            vec![(1.0, next)]
                        };
                        return Ok(solution(w, p, lambda, parts));
                    }
                    prev = next;
                    prev_w = next_w;
                }
            }
            if !swapped {
                break;
            }
        }
    }
    // The right order at λ* reaches the cover; reached only through rounding.
    Ok(solution(w, p, lambda, vec![(1.0, right_base(lambda))]))
}

/// `φ` on `0` and every turning point, together with the LP solution.
pub fn lagrangian_profile<M: IndependenceSystem + ?Sized>(
    w: &[f64],
    p: &[f64],
    theta: f64,
    indep: &IndependenceOracle<'_, M>,
    rank: usize,
    tiebreak: Option<&[f64]>,
) -> Result<LagrangianState> {
    let solution = lp_solve(w, p, theta, indep, rank, tiebreak)?;
    let classes = Classes::new(w, p, tiebreak);
    let greedy = Greedy { indep, rank };
    let mut candidates = vec![0.0];
    candidates.extend(classes.turning_points());
    let phi = candidates
        .iter()
        .map(|&l| {
            let base = greedy.base(&classes.expand(&classes.order(l, Side::Right).0));
            base.iter().map(|e| p[e] + l * w[e]).sum::<f64>() - l * theta
        })
        .collect();
    Ok(LagrangianState {
        candidates,
        phi,
        lambda_star: solution.lambda,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Matroid;

    fn solve(m: &Matroid, w: &[f64], p: &[f64], theta: f64) -> Result<LpSolution> {
        let indep = IndependenceOracle::new(m);
        lp_solve(w, p, theta, &indep, m.full_rank(), None)
    }

    #[test]
    fn uniform_rank_two_example() {
        let m = Matroid::uniform(3, 2);
        let s = solve(&m, &[1., 2., 4.], &[4., 2., 1.], 3.0).unwrap();
        assert_eq!(s.x, vec![1.0, 1.0, 0.0]);
        assert_eq!(s.objective, 6.0);
    }

    #[test]
    fn zero_theta_is_max_p_base() {
        let m = Matroid::uniform(4, 2);
        let s = solve(&m, &[5., 1., 1., 9.], &[1., 3., 2., 0.], 0.0).unwrap();
        assert_eq!(s.lambda, 0.0);
        assert_eq!(s.x, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn turning_point_of_two_elements() {
        let c = Classes::new(&[1., 3.], &[4., 2.], None);
        assert_eq!(c.turning_points(), vec![1.0]);
    }

    #[test]
    fn infeasible_theta() {
        let m = Matroid::uniform(3, 1);
        assert!(matches!(
            solve(&m, &[1., 2., 3.], &[1., 1., 1.], 4.0),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn fractional_split_meets_cover_exactly() {
        // rank 1: must mix element 0 (p high, w low) with element 1
        let m = Matroid::uniform(2, 1);
        let s = solve(&m, &[1., 3.], &[4., 2.], 2.0).unwrap();
        assert!((s.cover - 2.0).abs() < 1e-12);
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 0.5).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert_eq!(s.fractional_count(), 2);
        assert_eq!(s.lambda, 1.0);
    }
}
