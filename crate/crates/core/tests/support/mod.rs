//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use submax_core::constraints::{IndependenceSystem, Matroid};
use submax_core::{ElementSet, ValueOracle};

pub fn subsets(n: usize) -> impl Iterator<Item = ElementSet> {
    (0u64..1 << n).map(ElementSet::from_mask)
}

pub fn all_bases(m: &Matroid) -> Vec<ElementSet> {
    let r = m.full_rank();
    subsets(m.ground_size())
        .filter(|s| s.len() == r && m.is_independent(s))
        .collect()
}

fn weight(x: &[f64], set: &ElementSet) -> f64 {
    set.iter().map(|e| x[e]).sum()
}

/// Optimum of `max p·x s.t. w·x ≥ θ, x in the base polytope`, or `None` when
/// infeasible. The feasible region's vertices are bases with enough cover and
/// points where an edge of the base polytope (two bases one swap apart)
/// crosses the cover hyperplane.
pub fn lp_by_enumeration(w: &[f64], p: &[f64], theta: f64, m: &Matroid) -> Option<f64> {
    let tol = 1e-9 * theta.abs().max(1.0);
    let bases = all_bases(m);
    let mut best: Option<f64> = None;
    let mut offer = |v: f64| best = Some(best.map_or(v, |b: f64| b.max(v)));
    for b in &bases {
        if weight(w, b) >= theta - tol {
            offer(weight(p, b));
        }
    }
    for (i, b1) in bases.iter().enumerate() {
        for b2 in &bases[i + 1..] {
            if b1.difference(b2).len() != 1 {
                continue;
            }
            let (w1, w2) = (weight(w, b1), weight(w, b2));
            let (lo, hi, wl, wh) = if w1 < w2 { (b1, b2, w1, w2) } else { (b2, b1, w2, w1) };
            if wl < theta && theta < wh {
                let a = (theta - wl) / (wh - wl);
                offer((1.0 - a) * weight(p, lo) + a * weight(p, hi));
            }
        }
    }
    best
}

/// Every `A ⊆ B`, `e ∉ B`: `f(A+e) − f(A) ≥ f(B+e) − f(B) − tol`.
pub fn exhaustively_submodular<O: ValueOracle + ?Sized>(oracle: &O, tol: f64) -> bool {
    let n = oracle.ground_size();
    let values: Vec<f64> = subsets(n).map(|s| oracle.value(&s)).collect();
    for b in 0u64..1 << n {
        // submasks of b
        let mut a = b;
        loop {
            for e in 0..n {
                let bit = 1u64 << e;
                if b & bit == 0 {
                    let ga = values[(a | bit) as usize] - values[a as usize];
                    let gb = values[(b | bit) as usize] - values[b as usize];
                    if ga < gb - tol {
                        return false;
                    }
                }
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    true
}

/// A random uniform, partition or graphic matroid on `n` elements.
pub fn random_matroid<R: Rng>(rng: &mut R, n: usize) -> Matroid {
    match rng.gen_range(0..3) {
        0 => Matroid::uniform(n, rng.gen_range(1..=n)),
        1 => {
            let parts = rng.gen_range(1..=3);
            let assign = (0..n).map(|_| rng.gen_range(0..parts)).collect();
            let caps = (0..parts).map(|_| rng.gen_range(1..=2)).collect();
            Matroid::partition(assign, caps).unwrap()
        }
        _ => {
            let v = rng.gen_range(3..=5);
            let edges = (0..n)
                .map(|_| {
                    let a = rng.gen_range(0..v);
                    (a, (a + rng.gen_range(1..v)) % v)
                })
                .collect();
            Matroid::graphic(v, edges).unwrap()
        }
    }
}

/// Values on a coarse geometric grid so ties and equal classes are common.
pub fn rounded_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.gen_range(0..6) {
            0 => 0.0,
            j => 1.1f64.powi(j * 3),
        })
        .collect()
}
