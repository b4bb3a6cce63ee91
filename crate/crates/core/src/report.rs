use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::set::ElementSet;

/// One estimation round of the adaptive threshold schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateStep {
    /// 1-based round index.
    pub round: usize,
    pub alpha: f64,
    /// Lower and upper OPT estimates entering this round.
    pub lower: f64,
    pub upper: f64,
    /// Guesses swept in this round, ascending.
    pub thetas: Vec<f64>,
}

/// Record of the OPT-estimation schedule and the final-phase thresholds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ThresholdTrace {
    pub steps: Vec<EstimateStep>,
    /// Estimates after the last round.
    pub final_lower: f64,
    pub final_upper: f64,
    /// Final-phase thresholds, descending.
    pub taus: Vec<f64>,
}

impl ThresholdTrace {
    /// Every `(lower, upper)` pair produced, in order, ending with the final pair.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.steps
            .iter()
            .map(|s| (s.lower, s.upper))
            .chain(std::iter::once((self.final_lower, self.final_upper)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub alg: String,
    pub solution: ElementSet,
    /// Tracked objective value of `solution`.
    pub value: f64,
    pub value_queries: u64,
    pub independence_queries: u64,
    pub wall_ms: f64,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<ThresholdTrace>,
}

impl RunReport {
    pub fn new(alg: &str, solution: ElementSet, value: f64) -> Self {
        Self {
            alg: alg.to_string(),
            solution,
            value,
            value_queries: 0,
            independence_queries: 0,
            wall_ms: 0.0,
            seed: None,
            params: BTreeMap::new(),
            trace: None,
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

/// Wall-clock and query bookkeeping shared by the algorithms.
pub(crate) struct Meter {
    start: Instant,
    queries: u64,
}

impl Meter {
    pub fn start(queries: u64) -> Self {
        Self {
            start: Instant::now(),
            queries,
        }
    }

    pub fn finish(&self, mut report: RunReport, queries: u64) -> RunReport {
        report.value_queries = queries - self.queries;
        report.wall_ms = self.start.elapsed().as_secs_f64() * 1e3;
        report
    }
}
