//! Threshold algorithm for `d` knapsack constraints with an early return on
//! the first budget violation.

use std::cmp::Ordering;

use crate::constraints::KnapsackSystem;
use crate::error::{invalid, Result};
use crate::oracle::ValueOracle;
use crate::psystem::{backtrack_rebuild, check_ground, classify_big_small, Best};
use crate::report::{Meter, RunReport};
use crate::set::ElementSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnapParams {
    pub eps: f64,
    /// Lower estimate of OPT.
    pub lambda: f64,
    /// Certified factor: `lambda ≤ OPT ≤ lambda / c_boot`.
    pub c_boot: f64,
}

/// `(e, f(e))` for every knapsack-feasible singleton; one query each.
fn feasible_singletons<O: ValueOracle + ?Sized>(
    oracle: &O,
    knapsacks: &KnapsackSystem,
) -> Vec<(usize, f64)> {
    let empty = ElementSet::new();
    (0..oracle.ground_size())
        .filter(|&e| knapsacks.singleton_feasible(e))
        .map(|e| (e, oracle.gain(&empty, e)))
        .collect()
}

fn by_density(a: (f64, f64, usize), b: (f64, f64, usize)) -> Ordering {
    // (value, cost, index); zero cost ranks first, then density, then index
    let key = |(v, c, _): (f64, f64, usize)| if c > 0.0 { v / c } else { f64::INFINITY };
    key(b).total_cmp(&key(a)).then(a.2.cmp(&b.2))
}

/// Fractional-knapsack bound on `Σ_{e∈S} f(e)` in dimension `dim`; by
/// submodularity it bounds OPT.
fn fractional_bound(knapsacks: &KnapsackSystem, singles: &[(usize, f64)], dim: usize) -> f64 {
    let mut items: Vec<_> = singles
        .iter()
        .map(|&(e, v)| (v, knapsacks.cost(dim, e), e))
        .collect();
    items.sort_by(|&a, &b| by_density(a, b));
    let mut room = 1.0;
    let mut total = 0.0;
    for (v, c, _) in items {
        if c <= room {
            total += v;
            room -= c;
        } else {
            total += v * room / c;
            break;
        }
    }
    total
}

fn bootstrap_from<O: ValueOracle + ?Sized>(
    oracle: &O,
    knapsacks: &KnapsackSystem,
    singles: &[(usize, f64)],
) -> (f64, f64) {
    let best_single = singles.iter().map(|s| s.1).fold(0.0, f64::max);
    if singles.is_empty() || best_single <= 0.0 {
        return (0.0, 1.0);
    }
    let mut items: Vec<_> = singles
        .iter()
        .map(|&(e, v)| (v, knapsacks.total_cost(e), e))
        .collect();
    items.sort_by(|&a, &b| by_density(a, b));
    let mut prefix = ElementSet::new();
    for (_, _, e) in items {
        if !knapsacks.can_add(&prefix, e) {
            break;
        }
        prefix.insert(e);
    }
    let lambda = best_single.max(oracle.value(&prefix));
    let upper = (0..knapsacks.dims())
        .map(|i| fractional_bound(knapsacks, singles, i))
        .fold(f64::INFINITY, f64::min);
    let d = knapsacks.dims() as f64;
    let c_boot = (1.0 / (2.0 * (1.0 + d))).min(lambda / upper);
    (lambda, c_boot)
}

/// Constant-factor OPT estimate from the best feasible singleton and the
/// density-ordered greedy prefix. `c_boot` is `1/(2(1+d))` capped by
/// `lambda` over the fractional singleton bound, so `OPT ≤ lambda / c_boot`
/// always holds. Returns `(0, 1)` when nothing is feasible.
pub fn bootstrap_lambda<O: ValueOracle + ?Sized>(
    oracle: &O,
    knapsacks: &KnapsackSystem,
) -> Result<(f64, f64)> {
    check_ground(oracle.ground_size(), knapsacks)?;
    let singles = feasible_singletons(oracle, knapsacks);
    Ok(bootstrap_from(oracle, knapsacks, &singles))
}

/// Threshold sweep from `lambda/(c_boot·d)` down to `eps·lambda/d`; the
/// solution persists across thresholds. On the first knapsack violation the
/// best of the current set, its rebuilt variant and the best singleton is
/// returned immediately.
pub fn knapsack_run<O: ValueOracle + ?Sized>(
    oracle: &O,
    knapsacks: &KnapsackSystem,
    eps: f64,
) -> Result<RunReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} must lie in (0, 1)")));
    }
    check_ground(oracle.ground_size(), knapsacks)?;
    let meter = Meter::start(oracle.queries());
    let split = classify_big_small(knapsacks);
    let singles = feasible_singletons(oracle, knapsacks);
    let (lambda, c_boot) = bootstrap_from(oracle, knapsacks, &singles);
    let d = knapsacks.dims() as f64;

    let mut best = Best {
        set: ElementSet::new(),
        value: 0.0,
    };
    let mut violation_pass = None;
    let mut passes = 0usize;
    if lambda > 0.0 {
        let (e_star, v_star) = singles
            .iter()
            .copied()
            .fold((0, 0.0), |acc, s| if s.1 > acc.1 { s } else { acc });
        best.offer(&ElementSet::singleton(e_star), v_star);

        let mut set = ElementSet::new();
        let mut order = Vec::new();
        let mut value = 0.0;
        let floor = eps * lambda / d;
        let mut tau = lambda / (c_boot * d);
        'sweep: while tau >= floor {
            for e in &split.small {
                if set.contains(e) {
                    continue;
                }
                let g = oracle.gain(&set, e);
                if g < tau * knapsacks.total_cost(e) {
                    continue;
                }
                if knapsacks.can_add(&set, e) {
                    set.insert(e);
                    order.push(e);
                    value += g;
                } else {
                    let rebuilt = backtrack_rebuild(knapsacks, &order, e);
                    best.offer(&rebuilt, oracle.value(&rebuilt));
                    violation_pass = Some(passes);
                    break 'sweep;
                }
            }
            passes += 1;
            tau *= 1.0 - eps;
        }
        best.offer(&set, value);
    }
    let mut report = RunReport::new("knap", best.set, best.value)
        .param("eps", eps)
        .param("d", d)
        .param("lambda", lambda)
        .param("c_boot", c_boot);
    if let Some(pass) = violation_pass {
        report = report.param("violation_pass", pass as f64);
    }
    Ok(meter.finish(report, oracle.queries()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tests::modular;
    use crate::oracle::QueryCountingOracle;

    fn knap(costs: &[f64]) -> KnapsackSystem {
        KnapsackSystem::new(vec![costs.to_vec()], None).unwrap()
    }

    fn oracle(w: &[f64]) -> QueryCountingOracle {
        QueryCountingOracle::from_spec(&modular(w)).unwrap()
    }

    #[test]
    fn bootstrap_single_item() {
        let (lambda, c) = bootstrap_lambda(&oracle(&[10.0]), &knap(&[1.0])).unwrap();
        assert!(lambda >= 10.0);
        assert!(c > 0.0 && c <= 0.25);
    }

    #[test]
    fn bootstrap_prefers_many_small_items() {
        let mut w = vec![6.0];
        w.extend([1.0; 10]);
        let mut c = vec![1.0];
        c.extend([0.1; 10]);
        let (lambda, c_boot) = bootstrap_lambda(&oracle(&w), &knap(&c)).unwrap();
        assert!(lambda >= 10.0);
        assert!(10.0 <= lambda / c_boot);
    }

    #[test]
    fn bootstrap_nothing_feasible() {
        assert_eq!(
            bootstrap_lambda(&oracle(&[3.0, 4.0]), &knap(&[1.5, 2.0])).unwrap(),
            (0.0, 1.0)
        );
    }

    #[test]
    fn single_feasible_element() {
        let r = knapsack_run(&oracle(&[3.0, 4.0]), &knap(&[0.7, 2.0]), 0.1).unwrap();
        assert_eq!(r.solution, ElementSet::singleton(0));
        assert_eq!(r.value, 3.0);
    }

    #[test]
    fn cheap_items_are_all_taken() {
        let w = [3., 1., 4., 1., 5., 9., 2., 6.];
        let r = knapsack_run(&oracle(&w), &knap(&[0.05; 8]), 0.05).unwrap();
        assert_eq!(r.value, 31.0);
        assert!(!r.params.contains_key("violation_pass"));
    }

    #[test]
    fn output_is_feasible() {
        let w = [5., 4., 3., 2., 1.];
        let k = knap(&[0.45, 0.4, 0.35, 0.3, 0.2]);
        let r = knapsack_run(&oracle(&w), &k, 0.1).unwrap();
        assert!(k.is_feasible(&r.solution));
        assert!(r.value >= 9.0);
    }
}
