//! Exhaustive optimum for small instances.

use serde::Serialize;

use crate::constraints::{Constraint, IndependenceSystem};
use crate::error::{invalid, Error, Result};
use crate::oracle::ValueOracle;
use crate::set::ElementSet;

/// Largest ground set that brute force will enumerate.
pub const EXACT_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub opt_value: f64,
    /// Least bitmask among the maximizers.
    pub opt_set: ElementSet,
    /// Number of feasible sets enumerated, the empty set included.
    pub enumerated_count: u64,
}

/// Enumerates every feasible set in increasing bitmask order. Under a
/// cardinality bound only sets of size at most `k` are visited.
pub fn brute_force_opt<O: ValueOracle + ?Sized>(
    oracle: &O,
    constraint: &Constraint,
) -> Result<ExactReport> {
    let n = oracle.ground_size();
    if n > EXACT_CAP {
        return Err(Error::TooLarge { n, cap: EXACT_CAP });
    }
    if constraint.ground_size() != n {
        return Err(invalid(format!(
            "constraint covers {} elements, function has {n}",
            constraint.ground_size()
        )));
    }
    let k = constraint.cardinality().unwrap_or(n) as u32;
    let mut best = ExactReport {
        opt_value: 0.0,
        opt_set: ElementSet::new(),
        enumerated_count: 1,
    };
    for mask in 1u64..1 << n {
        if mask.count_ones() > k {
            continue;
        }
        let set = ElementSet::from_mask(mask);
        if !constraint.is_independent(&set) {
            continue;
        }
        best.enumerated_count += 1;
        let v = oracle.value(&set);
        if v > best.opt_value {
            best.opt_value = v;
            best.opt_set = set;
        }
    }
    Ok(best)
}

/// `value / opt`, with `0/0 = 1`. A value above the optimum is a bug.
pub fn ratio(value: f64, exact: &ExactReport) -> Result<f64> {
    let opt = exact.opt_value;
    if value > opt + 1e-9 {
        return Err(Error::SuperOptimal { value, opt });
    }
    if opt <= 0.0 {
        return Ok(1.0);
    }
    Ok(value / opt)
}
