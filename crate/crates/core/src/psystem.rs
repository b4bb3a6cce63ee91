//! Backtracking threshold algorithm for a p-system intersected with `d`
//! knapsacks, plus the big/small split and the rebuild step it shares with
//! the knapsack-only algorithm.

use crate::constraints::{IndependenceOracle, IndependenceSystem, KnapsackSystem, PSystem};
use crate::error::{invalid, Result};
use crate::oracle::ValueOracle;
use crate::report::{Meter, RunReport};
use crate::set::ElementSet;

#[derive(Debug, Clone, PartialEq)]
pub struct BigSmallSplit {
    /// Some dimension costs more than 1/2 (but none more than 1).
    pub big: ElementSet,
    /// Every dimension costs at most 1/2.
    pub small: ElementSet,
    /// Some dimension costs more than 1; never feasible.
    pub infeasible: ElementSet,
}

pub fn classify_big_small(knapsacks: &KnapsackSystem) -> BigSmallSplit {
    let mut split = BigSmallSplit {
        big: ElementSet::new(),
        small: ElementSet::new(),
        infeasible: ElementSet::new(),
    };
    for e in 0..knapsacks.ground_size() {
        let worst = (0..knapsacks.dims())
            .map(|i| knapsacks.cost(i, e))
            .fold(0.0, f64::max);
        if worst > 1.0 {
            split.infeasible.insert(e);
        } else if worst > 0.5 {
            split.big.insert(e);
        } else {
            split.small.insert(e);
        }
    }
    split
}

/// Builds a feasible set from a selection `selected` (in selection order) that
/// `violating` could not join: start from `violating` and the costliest
/// selected element, then re-add the rest in order whenever every knapsack
/// still fits.
///
/// All inputs are small, so the starting pair always fits. The result is a
/// subset of `selected ∪ {violating}`, so it inherits independence in any
/// downward-closed system that set satisfies.
pub fn backtrack_rebuild(
    knapsacks: &KnapsackSystem,
    selected: &[usize],
    violating: usize,
) -> ElementSet {
    let mut rebuilt = ElementSet::singleton(violating);
    let Some(&heaviest) = selected.iter().reduce(|best, e| {
        let (ce, cb) = (knapsacks.total_cost(*e), knapsacks.total_cost(*best));
        if ce > cb || (ce == cb && e < best) {
            e
        } else {
            best
        }
    }) else {
        return rebuilt;
    };
    rebuilt.insert(heaviest);
    for &e in selected {
        if !rebuilt.contains(e) && knapsacks.can_add(&rebuilt, e) {
            rebuilt.insert(e);
        }
    }
    rebuilt
}

/// The best singleton that is knapsack-feasible and passes `admissible`;
/// one query per such singleton.
pub(crate) fn best_feasible_singleton<O: ValueOracle + ?Sized>(
    oracle: &O,
    knapsacks: &KnapsackSystem,
    mut admissible: impl FnMut(usize) -> bool,
) -> Option<(usize, f64)> {
    let empty = ElementSet::new();
    let mut best: Option<(usize, f64)> = None;
    for e in 0..oracle.ground_size() {
        if knapsacks.singleton_feasible(e) && admissible(e) {
            let v = oracle.gain(&empty, e);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((e, v));
            }
        }
    }
    best
}

/// Keeps the first strictly best candidate.
pub(crate) struct Best {
    pub set: ElementSet,
    pub value: f64,
}

impl Best {
    pub fn offer(&mut self, set: &ElementSet, value: f64) {
        if value > self.value {
            self.set = set.clone();
            self.value = value;
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("eps = {eps} must lie in (0, 1)")))
    }
}

pub(crate) fn check_ground(n: usize, knapsacks: &KnapsackSystem) -> Result<()> {
    if knapsacks.ground_size() != n {
        return Err(invalid(format!(
            "knapsack costs cover {} elements, function has {n}",
            knapsacks.ground_size()
        )));
    }
    Ok(())
}

/// Backtracking threshold: for each density threshold on a geometric grid,
/// sweep the small elements once, accepting those that keep the p-system
/// independent, have gain at least `θ·ΣC(e)` and fit every knapsack. The
/// first knapsack violation ends the sweep and contributes the rebuilt set.
/// Returns the best of all sweep candidates and the best feasible singleton.
pub fn bt_run<O: ValueOracle + ?Sized>(
    oracle: &O,
    knapsacks: &KnapsackSystem,
    psystem: &PSystem,
    eps: f64,
) -> Result<RunReport> {
    check_eps(eps)?;
    let n = oracle.ground_size();
    check_ground(n, knapsacks)?;
    if IndependenceSystem::ground_size(psystem) != n {
        return Err(invalid("p-system and function ground sets differ"));
    }
    let meter = Meter::start(oracle.queries());
    let indep = IndependenceOracle::new(psystem);
    let split = classify_big_small(knapsacks);
    let d = knapsacks.dims() as f64;
    let p = psystem.p() as f64;

    let single = best_feasible_singleton(oracle, knapsacks, |e| {
        indep.is_independent(&ElementSet::singleton(e))
    });
    let mut best = Best {
        set: ElementSet::new(),
        value: 0.0,
    };
    let mut grid_len = 0;
    if let Some((e_star, lambda)) = single.filter(|&(_, v)| v > 0.0) {
        best.offer(&ElementSet::singleton(e_star), lambda);
        let top = n as f64 * lambda;
        let mut theta = eps * lambda / (d + p + 1.0);
        while theta <= top * (1.0 + 1e-12) {
            grid_len += 1;
            let mut set = ElementSet::new();
            let mut order = Vec::new();
            let mut value = 0.0;
            for e in &split.small {
                if !indep.is_independent(&set.with(e)) {
                    continue;
                }
                let g = oracle.gain(&set, e);
                if g < theta * knapsacks.total_cost(e) {
                    continue;
                }
                if knapsacks.can_add(&set, e) {
                    set.insert(e);
                    order.push(e);
                    value += g;
                } else {
                    let rebuilt = backtrack_rebuild(knapsacks, &order, e);
                    best.offer(&rebuilt, oracle.value(&rebuilt));
                    break;
                }
            }
            best.offer(&set, value);
            theta *= 1.0 + eps;
        }
    }
    let mut report = RunReport::new("bt", best.set, best.value)
        .param("eps", eps)
        .param("d", d)
        .param("p", p)
        .param("grid", grid_len as f64);
    report.independence_queries = indep.calls();
    Ok(meter.finish(report, oracle.queries()))
}
