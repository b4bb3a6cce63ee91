use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fractional::{estimate_marginals, round_pow, swap_rounding, FractionalSolution};
use super::lp::lp_solve;
use super::{curvature_from_parts, matroid_greedy, total_curvature, ResidualOracle};
use crate::constraints::{IndependenceOracle, IndependenceSystem, Matroid};
use crate::error::{invalid, Error, Result};
use crate::oracle::ValueOracle;
use crate::report::{Meter, RunReport};
use crate::set::ElementSet;

/// Certified factor of the matroid greedy used to bootstrap `v`.
const GREEDY_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgParams {
    pub eps: f64,
    /// Monte Carlo samples per gradient estimate.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CgParams {
    fn default() -> Self {
        Self {
            eps: 0.1,
            samples: 64,
            seed: 0,
        }
    }
}

/// Rounded cover weights and the cover-target grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedWeights {
    /// `round_pow(β·h(e))`, zero below 1.
    pub w: Vec<f64>,
    pub beta: f64,
    /// Bootstrap OPT estimate.
    pub v: f64,
    /// Cover targets `θ`, ascending.
    pub thetas: Vec<f64>,
}

impl RoundedWeights {
    /// `β = r / (ε(1−κ)·max_e f(e))`; targets run from `εβv` to
    /// `min(βv/c, max-base w-weight)` with ratio `1 + ε`, or just `0` when that
    /// range is empty.
    pub fn new<M: IndependenceSystem + ?Sized>(
        h: &[f64],
        eps: f64,
        kappa: f64,
        max_single: f64,
        v: f64,
        indep: &IndependenceOracle<'_, M>,
        rank: usize,
    ) -> Self {
        let beta = rank as f64 / (eps * (1.0 - kappa) * max_single);
        let w: Vec<f64> = h.iter().map(|he| round_pow(beta * he, eps)).collect();
        let mut by_w: Vec<usize> = (0..w.len()).collect();
        by_w.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        let mut base = ElementSet::new();
        for e in by_w {
            if base.len() < rank && indep.is_independent(&base.with(e)) {
                base.insert(e);
            }
        }
        let max_cover: f64 = base.iter().map(|e| w[e]).sum();
        let top = (beta * v / GREEDY_FACTOR).min(max_cover);
        let mut thetas = Vec::new();
        let mut theta = eps * beta * v;
        while theta > 0.0 && theta <= top * (1.0 + 1e-12) {
            thetas.push(theta);
            theta *= 1.0 + eps;
        }
        if thetas.is_empty() {
            thetas.push(0.0);
        }
        Self { w, beta, v, thetas }
    }
}

fn step_rng(seed: u64, theta_index: usize, step: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((theta_index as u64) << 32) | step as u64);
    rng
}

/// Curvature-aware continuous greedy: for each cover target `θ`, run the
/// continuous greedy on `g` with per-step LP directions that must also cover
/// `θ` of the rounded modular weight, swap-round the result, and return the
/// best rounded base. When `κ > 1 − ε` the modular part is dropped and a
/// single unconstrained trajectory is run.
pub fn continuous_greedy<O: ValueOracle + ?Sized>(
    oracle: &O,
    matroid: &Matroid,
    params: &CgParams,
) -> Result<RunReport> {
    let eps = params.eps;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} must lie in (0, 1)")));
    }
    if params.samples == 0 {
        return Err(invalid("samples must be >= 1"));
    }
    let n = oracle.ground_size();
    if matroid.ground_size() != n {
        return Err(invalid("matroid and function ground sets differ"));
    }
    let meter = Meter::start(oracle.queries());
    let indep = IndependenceOracle::new(matroid);
    let rank = matroid.full_rank();

    let curvature = total_curvature(oracle);
    let kappa = curvature.kappa;
    let max_single = curvature.singles.iter().copied().fold(0.0, f64::max);
    let fallback = kappa > 1.0 - eps;
    let h: Vec<f64> = if fallback {
        vec![0.0; n]
    } else {
        curvature.singles.iter().map(|s| (1.0 - kappa - eps) * s).collect()
    };
    let kappa_g = if fallback {
        kappa
    } else {
        curvature_from_parts(&curvature, &h)
    };

    let mut report = RunReport::new("curv-cg", ElementSet::new(), 0.0);
    report.seed = Some(params.seed);
    if rank == 0 || max_single <= 0.0 {
        report.independence_queries = indep.calls();
        return Ok(meter.finish(report, oracle.queries()));
    }

    let (_, v) = matroid_greedy(oracle, &indep);
    let weights = if fallback {
        RoundedWeights {
            w: vec![0.0; n],
            beta: 0.0,
            v,
            thetas: vec![0.0],
        }
    } else {
        RoundedWeights::new(&h, eps, kappa, max_single, v, &indep, rank)
    };
    let slack = if fallback { 1.0 } else { (1.0 - kappa_g).max(eps) };
    let steps = (rank as f64 / (eps * slack)).ceil() as usize;
    let delta = 1.0 / steps as f64;
    let g = ResidualOracle::new(oracle, h);

    let mut best: Option<(ElementSet, f64)> = None;
    'targets: for (ti, &theta) in weights.thetas.iter().enumerate() {
        let mut y = FractionalSolution::new(delta);
        for step in 0..steps {
            let mut rng = step_rng(params.seed, ti, step);
            let est = estimate_marginals(&g, &y, params.samples, &mut rng);
            let p: Vec<f64> = est
                .values
                .iter()
                .map(|&x| {
                    if est.max > 0.0 {
                        round_pow(rank as f64 * x / (eps * est.max), eps)
                    } else {
                        0.0
                    }
                })
                .collect();
            match lp_solve(&weights.w, &p, theta, &indep, rank, Some(&est.values)) {
                Ok(x) => y.step(&x.parts),
                Err(Error::Infeasible { .. }) => continue 'targets,
                Err(e) => return Err(e),
            }
        }
        let mut rng = step_rng(params.seed, ti, steps);
        let set = swap_rounding(&y, matroid, &indep, &mut rng)?;
        let value = oracle.value(&set);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((set, value));
        }
    }

    if let Some((set, value)) = best {
        report.solution = set;
        report.value = value;
    }
    report = report
        .param("eps", eps)
        .param("samples", params.samples as f64)
        .param("kappa", kappa)
        .param("kappa_g", kappa_g)
        .param("beta", weights.beta)
        .param("v", v)
        .param("steps", steps as f64)
        .param("targets", weights.thetas.len() as f64)
        .param("fallback", if fallback { 1.0 } else { 0.0 });
    report.independence_queries = indep.calls();
    Ok(meter.finish(report, oracle.queries()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tests::modular;
    use crate::oracle::QueryCountingOracle;

    #[test]
    fn modular_partition_is_exact() {
        let w = [3., 1., 4., 1., 5., 9., 2., 6.];
        let o = QueryCountingOracle::from_spec(&modular(&w)).unwrap();
        let m = Matroid::partition(vec![0, 0, 0, 1, 1, 1, 2, 2], vec![1, 2, 1]).unwrap();
        let r = continuous_greedy(&o, &m, &CgParams { samples: 4, ..CgParams::default() }).unwrap();
        // best of part 0 (4), top two of part 1 (9, 5), best of part 2 (6)
        assert_eq!(r.value, 24.0);
        assert!(m.is_independent(&r.solution));
    }

    #[test]
    fn rank_one_returns_best_singleton() {
        let w = [3., 1., 4., 1., 5.];
        let o = QueryCountingOracle::from_spec(&modular(&w)).unwrap();
        let r = continuous_greedy(&o, &Matroid::uniform(5, 1), &CgParams::default()).unwrap();
        assert_eq!(r.solution, ElementSet::singleton(4));
    }
}
