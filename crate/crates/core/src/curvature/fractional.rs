//! Fractional points of the matroid polytope kept as convex combinations of
//! bases, gradient sampling over them, and swap rounding back to one base.

use std::collections::HashMap;

use rand::Rng;

use crate::constraints::{IndependenceOracle, IndependenceSystem, Matroid};
use crate::error::{Error, Result};
use crate::oracle::ValueOracle;
use crate::set::ElementSet;

/// `y = Σ coefficient · 1_base`, built up in steps of `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    summands: Vec<(f64, ElementSet)>,
    index: HashMap<ElementSet, usize>,
    pub t: f64,
    pub delta: f64,
}

impl FractionalSolution {
    pub fn new(delta: f64) -> Self {
        Self {
            summands: Vec::new(),
            index: HashMap::new(),
            t: 0.0,
            delta,
        }
    }

    /// A combination given directly; `t` is the coefficient sum.
    pub fn from_summands(summands: impl IntoIterator<Item = (f64, ElementSet)>) -> Self {
        let mut y = Self::new(0.0);
        for (c, b) in summands {
            y.add(c, b);
        }
        y.t = y.coefficient_sum();
        y
    }

    pub fn summands(&self) -> &[(f64, ElementSet)] {
        &self.summands
    }

    fn add(&mut self, coefficient: f64, base: ElementSet) {
        if coefficient <= 0.0 {
            return;
        }
        match self.index.get(&base) {
            Some(&i) => self.summands[i].0 += coefficient,
            None => {
                self.index.insert(base.clone(), self.summands.len());
                self.summands.push((coefficient, base));
            }
        }
    }

    /// `y ← y + delta·x` where `x` is given as `(coefficient, base)` parts.
    pub fn step(&mut self, parts: &[(f64, ElementSet)]) {
        for (c, b) in parts {
            self.add(self.delta * c, b.clone());
        }
        self.t += self.delta;
    }

    pub fn coefficient_sum(&self) -> f64 {
        self.summands.iter().map(|s| s.0).sum()
    }

    /// `y_e` for every element of a ground set of size `n`.
    pub fn marginals(&self, n: usize) -> Vec<f64> {
        let mut y = vec![0.0; n];
        for (c, b) in &self.summands {
            for e in b {
                y[e] += c;
            }
        }
        y
    }
}

/// Per-element gradient estimates and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimates {
    pub values: Vec<f64>,
    pub max: f64,
}

/// Monte Carlo estimate of `∂G/∂y_e = E[g(R ∪ {e}) − g(R ∖ {e})]` with `R`
/// containing each element independently with probability `y_e`.
///
/// Each sample costs one query for `g(R)` (none when `R = ∅`) plus one per
/// element. Estimates are clamped at 0.
pub fn estimate_marginals<O: ValueOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    y: &FractionalSolution,
    samples: usize,
    rng: &mut R,
) -> MarginalEstimates {
    let n = oracle.ground_size();
    let probs = y.marginals(n);
    let mut sums = vec![0.0; n];
    let samples = samples.max(1);
    for _ in 0..samples {
        let sample: ElementSet = (0..n)
            .filter(|&e| {
                let q = probs[e].clamp(0.0, 1.0);
                q > 0.0 && rng.gen_bool(q)
            })
            .collect();
        let base = if sample.is_empty() { 0.0 } else { oracle.value(&sample) };
        for (e, sum) in sums.iter_mut().enumerate() {
            *sum += if sample.contains(e) {
                base - oracle.value(&sample.without(e))
            } else {
                oracle.gain(&sample, e)
            };
        }
    }
    let values: Vec<f64> = sums.iter().map(|s| (s / samples as f64).max(0.0)).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    MarginalEstimates { values, max }
}

/// `(1+eps)^⌊log_{1+eps} x⌋`, or 0 when `x < 1`.
pub fn round_pow(x: f64, eps: f64) -> f64 {
    if !(x >= 1.0) {
        return 0.0;
    }
    let exp = (x.ln() / (1.0 + eps).ln() + 1e-9).floor();
    (1.0 + eps).powi(exp as i32)
}

/// Merges the summands pairwise into a single base. For each pair, the
/// smallest element of `B1 ∖ B2` is exchanged against the first element of
/// `B2 ∖ B1` that keeps both sides independent, and the side that moves is
/// chosen with odds proportional to the coefficients.
pub fn swap_rounding<R: Rng + ?Sized>(
    y: &FractionalSolution,
    matroid: &Matroid,
    indep: &IndependenceOracle<'_, Matroid>,
    rng: &mut R,
) -> Result<ElementSet> {
    let rank = matroid.full_rank();
    for (index, (_, b)) in y.summands().iter().enumerate() {
        if b.len() != rank || !indep.is_independent(b) {
            return Err(Error::NotABase { index });
        }
    }
    let mut iter = y.summands().iter();
    let Some((c0, b0)) = iter.next() else {
        return Err(crate::error::invalid("swap rounding needs at least one summand"));
    };
    let mut acc = b0.clone();
    let mut weight = *c0;
    for (c, b) in iter {
        let mut other = b.clone();
        while acc != other {
            let e1 = acc.difference(&other).iter().next().expect("bases differ");
            let e2 = other
                .difference(&acc)
                .iter()
                .find(|&e2| {
                    indep.is_independent(&acc.without(e1).with(e2))
                        && indep.is_independent(&other.without(e2).with(e1))
                })
                .expect("strong exchange holds in a matroid");
            if rng.gen_bool((weight / (weight + c)).clamp(0.0, 1.0)) {
                other = other.without(e2).with(e1);
            } else {
                acc = acc.without(e1).with(e2);
            }
        }
        weight += c;
    }
    Ok(acc)
}

/// Checks that every summand is a base and the coefficients sum to
/// `min(t, 1)`.
pub fn check_fractional<M: IndependenceSystem>(
    y: &FractionalSolution,
    matroid: &M,
    rank: usize,
) -> bool {
    let sum_ok = (y.coefficient_sum() - y.t.min(1.0)).abs() <= 1e-9;
    sum_ok
        && y
            .summands()
            .iter()
            .all(|(_, b)| b.len() == rank && matroid.is_independent(b))
}
