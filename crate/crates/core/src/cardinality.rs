//! Maximization under `|S| ≤ k`: greedy, lazy greedy, the decreasing-threshold
//! baseline and the adaptive decreasing-threshold algorithm.
//!
//! Every pass scans elements in ascending index order, and members of the
//! current solution are skipped without a query.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::E;

use crate::error::{invalid, Result};
use crate::oracle::{singleton_values, ValueOracle};
use crate::report::{EstimateStep, Meter, RunReport, ThresholdTrace};
use crate::set::ElementSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdtParams {
    pub k: usize,
    pub eps: f64,
    /// Ratio between the final upper and lower OPT estimates, minus one.
    pub c: f64,
}

impl AdtParams {
    pub fn new(k: usize, eps: f64) -> Self {
        Self { k, eps, c: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be >= 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0 - 1.0 / E) {
            return Err(invalid(format!("eps = {} must lie in (0, 1 - 1/e)", self.eps)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid(format!("c = {} must be positive", self.c)));
        }
        Ok(())
    }

    /// Number of estimation rounds, `⌈ln(ln k / ln(1+c))⌉`; may be `≤ 0`.
    pub fn rounds(&self) -> i64 {
        ((self.k as f64).ln() / (1.0 + self.c).ln()).ln().ceil() as i64
    }

    /// Growth factor minus one for round `round` of `rounds`; the last round uses `c`.
    pub fn alpha(&self, round: usize, rounds: usize) -> f64 {
        if round >= rounds {
            self.c
        } else {
            ((self.k as f64).ln() * (-(round as f64)).exp()).exp() - 1.0
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(invalid("k must be >= 1"))
    } else {
        Ok(())
    }
}

/// Adds to `set` every element, in index order, whose gain reaches `threshold`,
/// stopping once `|set| = k`. Returns the updated value of `set`.
fn threshold_pass<O: ValueOracle + ?Sized>(
    oracle: &O,
    set: &mut ElementSet,
    mut value: f64,
    threshold: f64,
    k: usize,
) -> f64 {
    for e in 0..oracle.ground_size() {
        if set.len() >= k {
            break;
        }
        if set.contains(e) {
            continue;
        }
        let g = oracle.gain(set, e);
        if g >= threshold {
            set.insert(e);
            value += g;
        }
    }
    value
}

/// Classic greedy: `k` rounds of the best marginal gain, ties to the smallest
/// index. Stops early once every marginal is zero.
pub fn greedy<O: ValueOracle + ?Sized>(oracle: &O, k: usize) -> Result<RunReport> {
    check_k(k)?;
    let meter = Meter::start(oracle.queries());
    let n = oracle.ground_size();
    let mut set = ElementSet::new();
    let mut value = 0.0;
    for _ in 0..k.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..n).filter(|&e| !set.contains(e)) {
            let g = oracle.gain(&set, e);
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((e, g));
            }
        }
        match best {
            Some((e, g)) if g > 0.0 => {
                set.insert(e);
                value += g;
            }
            _ => break,
        }
    }
    let report = RunReport::new("greedy", set, value).param("k", k as f64);
    Ok(meter.finish(report, oracle.queries()))
}

struct Bound {
    gain: f64,
    e: usize,
    round: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Bound {}
impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Bound {
    // max-heap: larger gain first, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.e.cmp(&self.e))
    }
}

/// Lazy greedy: stale gains are upper bounds by submodularity, so only the
/// top of the queue is re-evaluated. Produces exactly the greedy set.
pub fn lazy_greedy<O: ValueOracle + ?Sized>(oracle: &O, k: usize) -> Result<RunReport> {
    check_k(k)?;
    let meter = Meter::start(oracle.queries());
    let n = oracle.ground_size();
    let mut set = ElementSet::new();
    let mut value = 0.0;
    let mut heap: BinaryHeap<Bound> = singleton_values(oracle)
        .into_iter()
        .enumerate()
        .map(|(e, gain)| Bound { gain, e, round: 0 })
        .collect();
    let mut round = 0;
    while set.len() < k.min(n) {
        let Some(top) = heap.pop() else { break };
        if top.round == round {
            if top.gain <= 0.0 {
                break;
            }
            set.insert(top.e);
            value += top.gain;
            round += 1;
        } else {
            let gain = oracle.gain(&set, top.e);
            heap.push(Bound { gain, e: top.e, round });
        }
    }
    let report = RunReport::new("lazy", set, value).param("k", k as f64);
    Ok(meter.finish(report, oracle.queries()))
}

/// Decreasing-threshold greedy: thresholds from `max_e f(e)` down to
/// `(eps/n)·max_e f(e)`, multiplied by `1 - eps` after each pass.
pub fn threshold_greedy_bv<O: ValueOracle + ?Sized>(
    oracle: &O,
    k: usize,
    eps: f64,
) -> Result<RunReport> {
    check_k(k)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} must lie in (0, 1)")));
    }
    let meter = Meter::start(oracle.queries());
    let n = oracle.ground_size();
    let top = singleton_values(oracle).into_iter().fold(0.0, f64::max);
    let mut set = ElementSet::new();
    let mut value = 0.0;
    if top > 0.0 {
        let floor = eps / n as f64 * top;
        let mut theta = top;
        while theta >= floor && set.len() < k {
            value = threshold_pass(oracle, &mut set, value, theta, k);
            theta *= 1.0 - eps;
        }
    }
    let report = RunReport::new("bv-threshold", set, value)
        .param("k", k as f64)
        .param("eps", eps);
    Ok(meter.finish(report, oracle.queries()))
}

/// The OPT-estimation phase: returns `(lower, upper, trace)` with
/// `upper = (1 + c)·lower`.
pub fn adt_estimate_opt<O: ValueOracle + ?Sized>(
    oracle: &O,
    params: &AdtParams,
) -> Result<(f64, f64, ThresholdTrace)> {
    params.validate()?;
    let singles = singleton_values(oracle);
    let top = singles.iter().copied().fold(0.0, f64::max);
    Ok(estimate_from(oracle, params, top))
}

fn estimate_from<O: ValueOracle + ?Sized>(
    oracle: &O,
    params: &AdtParams,
    top: f64,
) -> (f64, f64, ThresholdTrace) {
    let mut trace = ThresholdTrace::default();
    if top <= 0.0 {
        return (0.0, 0.0, trace);
    }
    let rounds = params.rounds();
    if params.k == 1 || rounds <= 0 {
        trace.final_lower = top;
        trace.final_upper = (1.0 + params.c) * top;
        return (trace.final_lower, trace.final_upper, trace);
    }
    let rounds = rounds as usize;
    let k = params.k;
    let mut lower = top;
    let mut upper = k as f64 * top;
    for round in 1..=rounds {
        let alpha = params.alpha(round, rounds);
        let mut thetas = Vec::new();
        let mut best: f64 = 0.0;
        let mut theta = lower;
        while theta <= upper * (1.0 + 1e-12) {
            let mut set = ElementSet::new();
            let v = threshold_pass(oracle, &mut set, 0.0, theta / (2.0 * k as f64), k);
            best = best.max(v);
            thetas.push(theta);
            theta *= 1.0 + alpha;
        }
        trace.steps.push(EstimateStep {
            round,
            alpha,
            lower,
            upper,
            thetas,
        });
        lower = best;
        upper = (1.0 + alpha) * best;
    }
    trace.final_lower = lower;
    trace.final_upper = upper;
    (lower, upper, trace)
}

/// Adaptive decreasing threshold: estimate OPT within a factor `1 + c`, then
/// run threshold passes from `(1+c)·lower/k` down to `lower/(e·k)` with
/// multiplicative step `1 - eps`.
pub fn adt<O: ValueOracle + ?Sized>(oracle: &O, params: &AdtParams) -> Result<RunReport> {
    params.validate()?;
    let meter = Meter::start(oracle.queries());
    let k = params.k;
    let singles = singleton_values(oracle);
    let (best_e, top) = singles
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (e, v)| if v > acc.1 { (e, v) } else { acc });

    let mut set = ElementSet::new();
    let mut value = 0.0;
    let mut trace = ThresholdTrace::default();
    if top > 0.0 && k == 1 {
        set.insert(best_e);
        value = top;
        trace.final_lower = top;
        trace.final_upper = (1.0 + params.c) * top;
    } else if top > 0.0 {
        let (lower, _, t) = estimate_from(oracle, params, top);
        trace = t;
        let floor = lower / (E * k as f64);
        let mut tau = (1.0 + params.c) * lower / k as f64;
        while tau >= floor && set.len() < k {
            value = threshold_pass(oracle, &mut set, value, tau, k);
            trace.taus.push(tau);
            tau *= 1.0 - params.eps;
        }
    }
    let mut report = RunReport::new("adt", set, value)
        .param("k", k as f64)
        .param("eps", params.eps)
        .param("c", params.c);
    report.trace = Some(trace);
    Ok(meter.finish(report, oracle.queries()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tests::{fixture_coverage, modular};
    use crate::oracle::QueryCountingOracle;

    fn oracle(spec: &crate::oracle::FunctionSpec) -> QueryCountingOracle {
        QueryCountingOracle::from_spec(spec).unwrap()
    }

    #[test]
    fn greedy_on_fixture() {
        let o = oracle(&fixture_coverage());
        let r = greedy(&o, 2).unwrap();
        assert_eq!(r.solution, ElementSet::from([0, 3]));
        assert_eq!(r.value, 5.0);
        assert_eq!(r.value_queries, 7);
    }

    #[test]
    fn greedy_modular_and_full() {
        let o = oracle(&modular(&[1., 2., 3., 4., 5.]));
        assert_eq!(greedy(&o, 2).unwrap().value, 9.0);
        assert_eq!(greedy(&o, 5).unwrap().value, 15.0);
        let f = oracle(&fixture_coverage());
        assert_eq!(greedy(&f, 4).unwrap().value, 5.0);
    }

    #[test]
    fn lazy_modular_query_count() {
        let o = oracle(&modular(&[3., 1., 4., 1., 5., 9., 2., 6.]));
        for k in 1..=8 {
            o.reset_queries();
            let r = lazy_greedy(&o, k).unwrap();
            assert_eq!(r.value_queries, 8 + k as u64 - 1);
        }
    }

    #[test]
    fn lazy_on_fixture() {
        let o = oracle(&fixture_coverage());
        let r = lazy_greedy(&o, 2).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.solution, ElementSet::from([0, 3]));
    }

    #[test]
    fn bv_threshold_examples() {
        let o = oracle(&fixture_coverage());
        assert!(threshold_greedy_bv(&o, 2, 0.1).unwrap().value >= (1.0 - 1.0 / E - 0.1) * 5.0);

        let w = [3., 1., 4., 1., 5., 9., 2., 6.];
        let o = oracle(&modular(&w));
        for eps in [0.05, 0.2, 0.5] {
            assert!(threshold_greedy_bv(&o, 3, eps).unwrap().value >= (1.0 - eps) * 20.0);
        }
        assert!(threshold_greedy_bv(&o, 1, 0.01).unwrap().value >= 0.99 * 9.0);
    }

    #[test]
    fn rounds_and_alphas_for_k16() {
        let p = AdtParams::new(16, 0.1);
        assert_eq!(p.rounds(), 2);
        let a1 = p.alpha(1, 2);
        let by_hand = (16f64.ln() / E).exp() - 1.0;
        assert!((a1 - by_hand).abs() < 1e-12);
        assert!((a1 - 1.7729).abs() < 5e-4);
        assert_eq!(p.alpha(2, 2), 1.0);
    }

    #[test]
    fn estimate_final_ratio_is_one_plus_c() {
        let o = oracle(&fixture_coverage());
        for k in 1..=4 {
            let (lo, hi, _) = adt_estimate_opt(&o, &AdtParams::new(k, 0.1)).unwrap();
            assert!((hi - 2.0 * lo).abs() <= 1e-9);
        }
    }

    #[test]
    fn estimate_zero_function() {
        let o = oracle(&modular(&[0.0; 4]));
        let (lo, hi, t) = adt_estimate_opt(&o, &AdtParams::new(3, 0.1)).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
        assert!(t.steps.is_empty());
        assert!(adt(&o, &AdtParams::new(3, 0.1)).unwrap().solution.is_empty());
    }

    #[test]
    fn adt_examples() {
        let o = oracle(&fixture_coverage());
        let r = adt(&o, &AdtParams::new(2, 0.1)).unwrap();
        assert!(r.value >= (1.0 - 1.0 / E - 0.1) * 5.0);
        assert!(r.solution.len() <= 2);

        let w = [3., 1., 4., 1., 5., 9., 2., 6.];
        let o = oracle(&modular(&w));
        let r = adt(&o, &AdtParams::new(1, 0.1)).unwrap();
        assert_eq!(r.value, 9.0);
        assert_eq!(r.solution, ElementSet::singleton(5));
    }

    #[test]
    fn params_validation() {
        assert!(AdtParams::new(0, 0.1).validate().is_err());
        assert!(AdtParams::new(3, 0.7).validate().is_err());
        assert!(AdtParams { c: 0.0, ..AdtParams::new(3, 0.1) }.validate().is_err());
    }
}
