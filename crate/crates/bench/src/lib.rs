//! Benchmark harness: runs the algorithms of `submax-core` on instance files,
//! attaches exact ratios and emits deterministic CSV or JSON rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use submax_core::cardinality::{adt, greedy, lazy_greedy, threshold_greedy_bv, AdtParams};
use submax_core::constraints::{IndependenceSystem, KnapsackSystem, Matroid, PSystem};
use submax_core::curvature::{continuous_greedy, CgParams};
use submax_core::exact::{brute_force_opt, ratio, ExactReport};
use submax_core::knapsack::knapsack_run;
use submax_core::psystem::bt_run;
use submax_core::{ElementSet, Instance, QueryCountingOracle, RunReport};

/// Absolute-plus-relative tolerance for re-verifying emitted values.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] submax_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 2 for incompatible configurations, 3 for unreadable instances.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Malformed(_) => 3,
            HarnessError::Core(submax_core::Error::TooLarge { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Alg {
    Greedy,
    Lazy,
    BvThreshold,
    Adt,
    Bt,
    Knap,
    CurvCg,
}

impl Alg {
    pub const ALL: [Alg; 7] = [
        Alg::Greedy,
        Alg::Lazy,
        Alg::BvThreshold,
        Alg::Adt,
        Alg::Bt,
        Alg::Knap,
        Alg::CurvCg,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Alg::Greedy => "greedy",
            Alg::Lazy => "lazy",
            Alg::BvThreshold => "bv-threshold",
            Alg::Adt => "adt",
            Alg::Bt => "bt",
            Alg::Knap => "knap",
            Alg::CurvCg => "curv-cg",
        }
    }
}

impl fmt::Display for Alg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Alg {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Alg::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| usage(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alg: Alg,
    pub eps: f64,
    pub seed: u64,
    /// Gradient samples per step for `curv-cg`.
    pub samples: usize,
    /// Attach brute-force optimum and ratio.
    pub exact: bool,
    /// Fill the `wall_ms` column; off by default so output is reproducible.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(alg: Alg) -> Self {
        Self {
            alg,
            eps: 0.1,
            seed: 0,
            samples: 64,
            exact: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(usage(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if self.samples == 0 {
            return Err(usage("samples must be >= 1"));
        }
        Ok(())
    }
}

/// One line of the run table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub instance_id: String,
    pub alg: String,
    pub eps: f64,
    pub n: usize,
    pub k_or_rank: Option<usize>,
    pub value: f64,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
    pub value_queries: u64,
    pub independence_queries: u64,
    pub wall_ms: Option<f64>,
    pub seed: u64,
    pub solution: ElementSet,
}

pub const CSV_HEADER: [&str; 13] = [
    "instance_id",
    "alg",
    "eps",
    "n",
    "k_or_rank",
    "value",
    "opt",
    "ratio",
    "value_queries",
    "independence_queries",
    "wall_ms",
    "seed",
    "solution",
];

/// `printf("%.9g")`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl Row {
    pub fn csv_record(&self) -> Vec<String> {
        let opt_g = |x: Option<f64>| x.map(fmt_g).unwrap_or_default();
        vec![
            self.instance_id.clone(),
            self.alg.clone(),
            fmt_g(self.eps),
            self.n.to_string(),
            self.k_or_rank.map(|k| k.to_string()).unwrap_or_default(),
            fmt_g(self.value),
            opt_g(self.opt),
            opt_g(self.ratio),
            self.value_queries.to_string(),
            self.independence_queries.to_string(),
            opt_g(self.wall_ms),
            self.seed.to_string(),
            self.solution.to_string(),
        ]
    }
}

pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.csv_record()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let inst = Instance::from_json(text).map_err(|e| HarnessError::Malformed(e.to_string()))?;
    inst.validate()
        .map_err(|e| HarnessError::Malformed(e.to_string()))?;
    Ok(inst)
}

fn instance_id(inst: &Instance) -> String {
    inst.id.clone().unwrap_or_else(|| "instance".into())
}

fn only(inst: &Instance, alg: Alg, cardinality: bool, knapsacks: bool, matroids: bool) -> Result<()> {
    let c = &inst.constraints;
    let present = [
        ("cardinality", c.cardinality.is_some(), cardinality),
        ("knapsack", c.knapsacks.is_some(), knapsacks),
        ("matroid", c.matroids.as_ref().is_some_and(|m| !m.is_empty()), matroids),
    ];
    for (name, has, allowed) in present {
        if has && !allowed {
            return Err(usage(format!("{alg} does not accept a {name} constraint")));
        }
    }
    Ok(())
}

fn run_alg(inst: &Instance, oracle: &QueryCountingOracle, config: &RunConfig) -> Result<RunReport> {
    let alg = config.alg;
    let eps = config.eps;
    let need_k = || {
        inst.cardinality()
            .ok_or_else(|| usage(format!("{alg} needs a cardinality constraint")))
    };
    let need_knapsacks = || -> Result<KnapsackSystem> {
        inst.knapsacks()?
            .ok_or_else(|| usage(format!("{alg} needs a knapsack constraint")))
    };
    let report = match alg {
        Alg::Greedy | Alg::Lazy | Alg::BvThreshold | Alg::Adt => {
            only(inst, alg, true, false, false)?;
            let k = need_k()?;
            match alg {
                Alg::Greedy => greedy(oracle, k)?,
                Alg::Lazy => lazy_greedy(oracle, k)?,
                Alg::BvThreshold => threshold_greedy_bv(oracle, k, eps)?,
                _ => adt(oracle, &AdtParams::new(k, eps))?,
            }
        }
        Alg::Bt => {
            only(inst, alg, false, true, true)?;
            let knapsacks = need_knapsacks()?;
            let mut matroids = inst.matroids()?;
            if matroids.is_empty() {
                matroids.push(Matroid::uniform(inst.n, inst.n));
            }
            bt_run(oracle, &knapsacks, &PSystem::new(matroids)?, eps)?
        }
        Alg::Knap => {
            only(inst, alg, false, true, false)?;
            knapsack_run(oracle, &need_knapsacks()?, eps)?
        }
        Alg::CurvCg => {
            only(inst, alg, true, false, true)?;
            let mut matroids = inst.matroids()?;
            let matroid = match (inst.cardinality(), matroids.len()) {
                (Some(k), 0) => Matroid::uniform(inst.n, k),
                (None, 1) => matroids.pop().unwrap(),
                _ => return Err(usage("curv-cg needs exactly one matroid or a cardinality bound")),
            };
            let params = CgParams {
                eps,
                samples: config.samples,
                seed: config.seed,
            };
            continuous_greedy(oracle, &matroid, &params)?
        }
    };
    Ok(report)
}

/// Runs one configuration and re-verifies the result against a fresh oracle.
pub fn run_report(inst: &Instance, config: &RunConfig) -> Result<(Row, RunReport)> {
    config.validate()?;
    let oracle = inst.oracle()?;
    let report = run_alg(inst, &oracle, config)?;

    let fresh = inst.oracle()?.evaluate(&report.solution)?;
    if (fresh - report.value).abs() > VERIFY_TOL * fresh.abs().max(1.0) {
        return Err(HarnessError::Verification(format!(
            "reported value {} but the solution evaluates to {fresh}",
            report.value
        )));
    }
    if !inst.constraint()?.is_independent(&report.solution) {
        return Err(HarnessError::Verification(format!(
            "solution {{{}}} is infeasible",
            report.solution
        )));
    }

    let (opt, ratio_value) = if config.exact {
        let exact = exact_for(inst)?;
        (Some(exact.opt_value), Some(ratio(report.value, &exact)?))
    } else {
        (None, None)
    };
    let row = Row {
        instance_id: instance_id(inst),
        alg: config.alg.id().into(),
        eps: config.eps,
        n: inst.n,
        k_or_rank: inst.k_or_rank(),
        value: report.value,
        opt,
        ratio: ratio_value,
        value_queries: report.value_queries,
        independence_queries: report.independence_queries,
        wall_ms: config.timing.then_some(report.wall_ms),
        seed: config.seed,
        solution: report.solution.clone(),
    };
    Ok((row, report))
}

pub fn run(inst: &Instance, config: &RunConfig) -> Result<Row> {
    run_report(inst, config).map(|(row, _)| row)
}

pub fn exact_for(inst: &Instance) -> Result<ExactReport> {
    Ok(brute_force_opt(&inst.oracle()?, &inst.constraint()?)?)
}

/// Per-`(alg, n)` aggregate of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub alg: String,
    pub n: usize,
    pub instances: usize,
    pub mean_value: f64,
    pub mean_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub mean_value_queries: f64,
    pub mean_independence_queries: f64,
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "alg",
    "n",
    "instances",
    "mean_value",
    "mean_ratio",
    "min_ratio",
    "mean_value_queries",
    "mean_independence_queries",
];

impl Summary {
    pub fn csv_record(&self) -> Vec<String> {
        let opt_g = |x: Option<f64>| x.map(fmt_g).unwrap_or_default();
        vec![
            self.alg.clone(),
            self.n.to_string(),
            self.instances.to_string(),
            fmt_g(self.mean_value),
            opt_g(self.mean_ratio),
            opt_g(self.min_ratio),
            fmt_g(self.mean_value_queries),
            fmt_g(self.mean_independence_queries),
        ]
    }
}

pub fn summaries_to_csv(rows: &[Summary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.into());
    w.write_record(SUMMARY_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.csv_record()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs every configuration on every instance. Rows come back sorted by
/// `(instance_id, alg)`; the summary is sorted by `(alg, n)`.
pub fn compare(instances: &[Instance], configs: &[RunConfig]) -> Result<(Vec<Row>, Vec<Summary>)> {
    if configs.len() < 2 {
        return Err(usage("compare needs at least two configurations"));
    }
    if instances.is_empty() {
        return Err(usage("compare needs at least one instance"));
    }
    let mut ids = BTreeSet::new();
    for inst in instances {
        if !ids.insert(instance_id(inst)) {
            return Err(usage(format!(
                "instance id '{}' appears twice; instance sets are inconsistent",
                instance_id(inst)
            )));
        }
    }
    let mut rows = Vec::new();
    for inst in instances {
        for config in configs {
            rows.push(run(inst, config)?);
        }
    }
    rows.sort_by(|a, b| (&a.instance_id, &a.alg).cmp(&(&b.instance_id, &b.alg)));

    let mut groups: BTreeMap<(String, usize), Vec<&Row>> = BTreeMap::new();
    for r in &rows {
        groups.entry((r.alg.clone(), r.n)).or_default().push(r);
    }
    let summary = groups
        .into_iter()
        .map(|((alg, n), rs)| {
            let count = rs.len() as f64;
            let mean = |f: &dyn Fn(&Row) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / count;
            let ratios: Option<Vec<f64>> = rs.iter().map(|r| r.ratio).collect();
            Summary {
                alg,
                n,
                instances: rs.len(),
                mean_value: mean(&|r| r.value),
                mean_ratio: ratios.as_ref().map(|v| v.iter().sum::<f64>() / count),
                min_ratio: ratios.map(|v| v.into_iter().fold(f64::INFINITY, f64::min)),
                mean_value_queries: mean(&|r| r.value_queries as f64),
                mean_independence_queries: mean(&|r| r.independence_queries as f64),
            }
        })
        .collect();
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_formatting() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(5.0), "5");
        assert_eq!(fmt_g(0.1), "0.1");
        assert_eq!(fmt_g(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_g(123456789.0), "123456789");
        assert_eq!(fmt_g(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.00001234), "1.234e-05");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(999999999.6), "1e+09");
    }

    #[test]
    fn alg_ids_round_trip() {
        for a in Alg::ALL {
            assert_eq!(a.id().parse::<Alg>().unwrap(), a);
        }
        assert_eq!("nope".parse::<Alg>().unwrap_err().exit_code(), 2);
    }
}
