//! Instrumented value oracles and the built-in function families.
//!
//! Query accounting: one call to [`ValueOracle::value`] is one query, and a
//! marginal gain against a base whose value the caller already holds is also
//! one query ([`ValueOracle::gain`]). `f(∅) = 0` is known by normalization and
//! never queried by the algorithms.

use std::cell::{Cell, RefCell};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::set::ElementSet;

/// A set function over the ground set `0..ground_size()`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;

    fn eval(&self, set: &ElementSet) -> f64;

    /// `f(base ∪ {e}) - f(base)`. Implementations may cache work keyed on `base`.
    fn gain(&self, base: &ElementSet, e: usize) -> f64 {
        if base.contains(e) {
            return 0.0;
        }
        self.eval(&base.with(e)) - self.eval(base)
    }
}

/// Query-counted access to a set function. Algorithms are generic over this.
pub trait ValueOracle {
    fn ground_size(&self) -> usize;

    /// `f(set)`; one query.
    fn value(&self, set: &ElementSet) -> f64;

    /// `f(base ∪ {e}) - f(base)` for a base whose value the caller holds; one query.
    fn gain(&self, base: &ElementSet, e: usize) -> f64;

    fn queries(&self) -> u64;

    fn reset_queries(&self);

    /// Marginal gain of `e` on top of `set`. Costs one query when the value
    /// of `set` is supplied, two otherwise.
    fn marginal(&self, set: &ElementSet, e: usize, cached: Option<f64>) -> f64 {
        match cached {
            Some(_) => self.gain(set, e).max(0.0),
            None => {
                self.value(set);
                self.gain(set, e).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    /// Universe items are `0..universe`.
    pub universe: usize,
    /// `sets[e]` lists the universe items covered by element `e`.
    pub sets: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe_weights: Option<Vec<f64>>,
}

/// The built-in monotone, normalized, submodular function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Coverage(CoverageSpec),
    /// `f(S) = Σ_j max_{i∈S} similarity[i][j]`.
    FacilityLocation { similarity: Vec<Vec<f64>> },
    Modular { weights: Vec<f64> },
    /// `f(S) = (1 - mix)·coverage(S) + mix·Σ_{e∈S} weights[e]`.
    CurvatureMix {
        #[serde(flatten)]
        coverage: CoverageSpec,
        weights: Vec<f64>,
        mix: f64,
    },
}

impl FunctionSpec {
    pub fn ground_size(&self) -> usize {
        match self {
            FunctionSpec::Coverage(c) => c.sets.len(),
            FunctionSpec::FacilityLocation { similarity } => similarity.len(),
            FunctionSpec::Modular { weights } => weights.len(),
            FunctionSpec::CurvatureMix { weights, .. } => weights.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn nonneg(name: &str, xs: &[f64]) -> Result<()> {
            match xs.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                Some(i) => Err(invalid(format!("{name}[{i}] = {} must be finite and >= 0", xs[i]))),
                None => Ok(()),
            }
        }
        fn coverage(c: &CoverageSpec) -> Result<()> {
            for (e, s) in c.sets.iter().enumerate() {
                if let Some(&x) = s.iter().find(|&&x| x >= c.universe) {
                    return Err(invalid(format!(
                        "sets[{e}] contains item {x} outside universe of size {}",
                        c.universe
                    )));
                }
            }
            if let Some(w) = &c.universe_weights {
                if w.len() != c.universe {
                    return Err(invalid("universe_weights length must equal universe"));
                }
                nonneg("universe_weights", w)?;
            }
            Ok(())
        }
        if self.ground_size() == 0 {
            return Err(invalid("ground set must be nonempty"));
        }
        match self {
            FunctionSpec::Coverage(c) => coverage(c),
            FunctionSpec::FacilityLocation { similarity } => {
                let m = similarity[0].len();
                for (i, row) in similarity.iter().enumerate() {
                    if row.len() != m {
                        return Err(invalid(format!("similarity row {i} has length {} != {m}", row.len())));
                    }
                    nonneg("similarity", row)?;
                }
                Ok(())
            }
            FunctionSpec::Modular { weights } => nonneg("weights", weights),
            FunctionSpec::CurvatureMix { coverage: c, weights, mix } => {
                coverage(c)?;
                nonneg("weights", weights)?;
                if c.sets.len() != weights.len() {
                    return Err(invalid("curvature-mix: sets and weights differ in length"));
                }
                if !(0.0..=1.0).contains(mix) {
                    return Err(invalid(format!("curvature-mix: mix = {mix} outside [0, 1]")));
                }
                Ok(())
            }
        }
    }
}

struct CoverageKernel {
    words: usize,
    sets: Vec<Vec<u64>>,
    weights: Option<Vec<f64>>,
}

impl CoverageKernel {
    fn new(c: &CoverageSpec) -> Self {
        let words = c.universe.div_ceil(64);
        let sets = c
            .sets
            .iter()
            .map(|s| {
                let mut bits = vec![0u64; words];
                for &x in s {
                    bits[x / 64] |= 1 << (x % 64);
                }
                bits
            })
            .collect();
        Self {
            words,
            sets,
            weights: c.universe_weights.clone(),
        }
    }

    fn covered(&self, set: &ElementSet) -> Vec<u64> {
        let mut acc = vec![0u64; self.words];
        for e in set {
            for (a, b) in acc.iter_mut().zip(&self.sets[e]) {
                *a |= b;
            }
        }
        acc
    }

    fn weight_of(&self, bits: impl Iterator<Item = (usize, u64)>) -> f64 {
        match &self.weights {
            None => bits.map(|(_, w)| w.count_ones() as f64).sum(),
            Some(wt) => {
                let mut total = 0.0;
                for (i, mut w) in bits {
                    while w != 0 {
                        total += wt[i * 64 + w.trailing_zeros() as usize];
                        w &= w - 1;
                    }
                }
                total
            }
        }
    }

    fn value(&self, covered: &[u64]) -> f64 {
        self.weight_of(covered.iter().copied().enumerate())
    }

    fn gain(&self, covered: &[u64], e: usize) -> f64 {
        self.weight_of(
            self.sets[e]
                .iter()
                .zip(covered)
                .map(|(s, c)| s & !c)
                .enumerate(),
        )
    }
}

enum Kernel {
    Coverage(CoverageKernel),
    Facility { sim: Vec<Vec<f64>> },
    Modular { weights: Vec<f64> },
    Mix { cov: CoverageKernel, weights: Vec<f64>, mix: f64 },
}

enum Scratch {
    Covered(Vec<u64>),
    Best(Vec<f64>),
    None,
}

/// A [`FunctionSpec`] prepared for fast evaluation. Marginal gains against the
/// most recent base set reuse that base's coverage/best-similarity state.
pub struct CompiledFunction {
    n: usize,
    kernel: Kernel,
    cache: RefCell<Option<(ElementSet, Scratch)>>,
}

impl CompiledFunction {
    pub fn new(spec: &FunctionSpec) -> Result<Self> {
        spec.validate()?;
        let kernel = match spec {
            FunctionSpec::Coverage(c) => Kernel::Coverage(CoverageKernel::new(c)),
            FunctionSpec::FacilityLocation { similarity } => Kernel::Facility {
                sim: similarity.clone(),
            },
            FunctionSpec::Modular { weights } => Kernel::Modular {
                weights: weights.clone(),
            },
            FunctionSpec::CurvatureMix { coverage, weights, mix } => Kernel::Mix {
                cov: CoverageKernel::new(coverage),
                weights: weights.clone(),
                mix: *mix,
            },
        };
        Ok(Self {
            n: spec.ground_size(),
            kernel,
            cache: RefCell::new(None),
        })
    }

    fn scratch(&self, set: &ElementSet) -> Scratch {
        match &self.kernel {
            Kernel::Coverage(c) | Kernel::Mix { cov: c, .. } => Scratch::Covered(c.covered(set)),
            Kernel::Facility { sim } => {
                let mut best = vec![0.0; sim[0].len()];
                for i in set {
                    for (b, &s) in best.iter_mut().zip(&sim[i]) {
                        if s > *b {
                            *b = s;
                        }
                    }
                }
                Scratch::Best(best)
            }
            Kernel::Modular { .. } => Scratch::None,
        }
    }
}

impl SetFunction for CompiledFunction {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &ElementSet) -> f64 {
        match &self.kernel {
            Kernel::Coverage(c) => c.value(&c.covered(set)),
            Kernel::Facility { .. } => match self.scratch(set) {
                Scratch::Best(best) => best.iter().sum(),
                _ => unreachable!(),
            },
            Kernel::Modular { weights } => set.iter().map(|e| weights[e]).sum(),
            Kernel::Mix { cov, weights, mix } => {
                let m: f64 = set.iter().map(|e| weights[e]).sum();
                (1.0 - mix) * cov.value(&cov.covered(set)) + mix * m
            }
        }
    }

    fn gain(&self, base: &ElementSet, e: usize) -> f64 {
        if base.contains(e) {
            return 0.0;
        }
        if let Kernel::Modular { weights } = &self.kernel {
            return weights[e];
        }
        let mut cache = self.cache.borrow_mut();
        let hit = matches!(&*cache, Some((s, _)) if s == base);
        if !hit {
            *cache = Some((base.clone(), self.scratch(base)));
        }
        let (_, scratch) = cache.as_ref().unwrap();
        match (&self.kernel, scratch) {
            (Kernel::Coverage(c), Scratch::Covered(cv)) => c.gain(cv, e),
            (Kernel::Mix { cov, weights, mix }, Scratch::Covered(cv)) => {
                (1.0 - mix) * cov.gain(cv, e) + mix * weights[e]
            }
            (Kernel::Facility { sim }, Scratch::Best(best)) => sim[e]
                .iter()
                .zip(best)
                .map(|(&s, &b)| (s - b).max(0.0))
                .sum(),
            _ => unreachable!(),
        }
    }
}

/// A set function together with an exact tally of evaluations.
///
/// Single-owner: the counter is a `Cell`, so the oracle is `!Sync`.
pub struct QueryCountingOracle<F = CompiledFunction> {
    f: F,
    queries: Cell<u64>,
}

impl QueryCountingOracle<CompiledFunction> {
    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        Ok(Self::new(CompiledFunction::new(spec)?))
    }
}

impl<F: SetFunction> QueryCountingOracle<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            queries: Cell::new(0),
        }
    }

    pub fn function(&self) -> &F {
        &self.f
    }

    /// Range-checked evaluation; one query.
    pub fn evaluate(&self, set: &ElementSet) -> Result<f64> {
        self.check(set)?;
        Ok(self.value(set))
    }

    pub fn check(&self, set: &ElementSet) -> Result<()> {
        match set.max_element() {
            Some(index) if index >= self.f.ground_size() => Err(Error::ElementOutOfRange {
                index,
                n: self.f.ground_size(),
            }),
            _ => Ok(()),
        }
    }
}

impl<F: SetFunction> ValueOracle for QueryCountingOracle<F> {
    fn ground_size(&self) -> usize {
        self.f.ground_size()
    }

    fn value(&self, set: &ElementSet) -> f64 {
        self.queries.set(self.queries.get() + 1);
        self.f.eval(set)
    }

    fn gain(&self, base: &ElementSet, e: usize) -> f64 {
        self.queries.set(self.queries.get() + 1);
        self.f.gain(base, e)
    }

    fn queries(&self) -> u64 {
        self.queries.get()
    }

    fn reset_queries(&self) {
        self.queries.set(0);
    }
}

impl<O: ValueOracle + ?Sized> ValueOracle for &O {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, set: &ElementSet) -> f64 {
        (**self).value(set)
    }
    fn gain(&self, base: &ElementSet, e: usize) -> f64 {
        (**self).gain(base, e)
    }
    fn queries(&self) -> u64 {
        (**self).queries()
    }
    fn reset_queries(&self) {
        (**self).reset_queries()
    }
}

/// Values of every singleton; `n` queries.
pub fn singleton_values<O: ValueOracle + ?Sized>(oracle: &O) -> Vec<f64> {
    let empty = ElementSet::new();
    (0..oracle.ground_size()).map(|e| oracle.gain(&empty, e)).collect()
}

pub const SELF_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NotNormalized { value: f64 },
    NotSubmodular { a: ElementSet, b: ElementSet, lhs: f64, rhs: f64 },
    NotMonotone { smaller: ElementSet, larger: ElementSet, f_smaller: f64, f_larger: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub passed: bool,
    pub trials: usize,
    /// Trials in which `f(A)+f(B) = f(A∪B)+f(A∩B)` held to within tolerance.
    pub tight: usize,
    pub violation: Option<Violation>,
}

/// Randomized check of normalization, submodularity and monotonicity.
/// Stops at the first counterexample.
pub fn self_check_submodular<O: ValueOracle + ?Sized>(
    oracle: &O,
    trials: usize,
    seed: u64,
) -> SelfCheckReport {
    let n = oracle.ground_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SelfCheckReport {
        passed: true,
        trials,
        tight: 0,
        violation: None,
    };
    let empty = oracle.value(&ElementSet::new());
    if empty.abs() > SELF_CHECK_TOL {
        report.passed = false;
        report.violation = Some(Violation::NotNormalized { value: empty });
        return report;
    }
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..trials {
        let a: ElementSet = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let b: ElementSet = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let lhs = oracle.value(&a) + oracle.value(&b);
        let rhs = oracle.value(&a.union(&b)) + oracle.value(&a.intersection(&b));
        if lhs < rhs - SELF_CHECK_TOL {
            report.passed = false;
            report.violation = Some(Violation::NotSubmodular { a, b, lhs, rhs });
            return report;
        }
        if (lhs - rhs).abs() <= SELF_CHECK_TOL {
            report.tight += 1;
        }

        order.shuffle(&mut rng);
        let mut chain = ElementSet::new();
        let mut prev = 0.0;
        for &e in &order {
            let next = chain.with(e);
            let v = oracle.value(&next);
            if v < prev - SELF_CHECK_TOL {
                report.passed = false;
                report.violation = Some(Violation::NotMonotone {
                    smaller: chain,
                    larger: next,
                    f_smaller: prev,
                    f_larger: v,
                });
                return report;
            }
            chain = next;
            prev = v;
        }
    }
    report
}
