//! Curvature, the `f = g + h` split and the curvature-aware continuous greedy
//! under a matroid constraint.

mod continuous;
pub mod fractional;
pub mod lp;

pub use continuous::{continuous_greedy, CgParams, RoundedWeights};
pub use fractional::{
    estimate_marginals, round_pow, swap_rounding, FractionalSolution, MarginalEstimates,
};
pub use lp::{lagrangian_profile, lp_solve, LagrangianState, LpSolution};

use crate::constraints::{IndependenceOracle, IndependenceSystem};
use crate::error::{invalid, Error, Result};
use crate::oracle::ValueOracle;
use crate::set::ElementSet;

/// Total curvature and the evaluations it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub kappa: f64,
    /// `f(E)`.
    pub full_value: f64,
    /// `f(E ∖ {e})` per element.
    pub without: Vec<f64>,
    /// `f({e})` per element.
    pub singles: Vec<f64>,
}

/// `1 − min (f(T) − f(T∖e)) / f(e)` over `e` with `f(e) > 0`, clamped to [0, 1];
/// 0 when no such `e` exists.
fn curvature_from(total: f64, without: &[f64], singles: &[f64]) -> f64 {
    let worst = without
        .iter()
        .zip(singles)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&w, &s)| (total - w) / s)
        .fold(f64::INFINITY, f64::min);
    if worst.is_finite() {
        (1.0 - worst).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Curvature of `f − h` for modular `h`, from the evaluations of `f` alone.
pub(crate) fn curvature_from_parts(curvature: &CurvatureReport, h: &[f64]) -> f64 {
    let h_total: f64 = h.iter().sum();
    let without: Vec<f64> = curvature
        .without
        .iter()
        .zip(h)
        .map(|(w, he)| w - (h_total - he))
        .collect();
    let singles: Vec<f64> = curvature.singles.iter().zip(h).map(|(s, he)| s - he).collect();
    curvature_from(curvature.full_value - h_total, &without, &singles)
}

/// Total curvature `κ = 1 − min_e (f(E) − f(E∖e)) / f(e)`; exactly `2n + 1`
/// queries.
pub fn total_curvature<O: ValueOracle + ?Sized>(oracle: &O) -> CurvatureReport {
    let n = oracle.ground_size();
    let all = ElementSet::full(n);
    let full_value = oracle.value(&all);
    let without: Vec<f64> = (0..n).map(|e| oracle.value(&all.without(e))).collect();
    let empty = ElementSet::new();
    let singles: Vec<f64> = (0..n).map(|e| oracle.gain(&empty, e)).collect();
    CurvatureReport {
        kappa: curvature_from(full_value, &without, &singles),
        full_value,
        without,
        singles,
    }
}

/// Curvature restricted to `set`: `1 − min_{i∈T} (f(T) − f(T∖i)) / f(i)`.
pub fn restricted_curvature<O: ValueOracle + ?Sized>(oracle: &O, set: &ElementSet) -> Result<f64> {
    if set.is_empty() {
        return Err(invalid("restricted curvature needs a nonempty set"));
    }
    let total = oracle.value(set);
    let empty = ElementSet::new();
    let (without, singles): (Vec<f64>, Vec<f64>) = set
        .iter()
        .map(|e| (oracle.value(&set.without(e)), oracle.gain(&empty, e)))
        .unzip();
    Ok(curvature_from(total, &without, &singles))
}

/// `(1 − e^{−κ}) / κ`, with its limit 1 at `κ = 0`.
pub fn curvature_factor(kappa: f64) -> f64 {
    if kappa.abs() < 1e-6 {
        1.0 - kappa / 2.0 + kappa * kappa / 6.0
    } else {
        -(-kappa).exp_m1() / kappa
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCertificate {
    /// `κ(S_g ∪ S*)`.
    pub kappa: f64,
    pub factor: f64,
    pub greedy_value: f64,
    pub opt_value: f64,
    /// `f(S_g) ≥ factor · f(S*) − 1e-9`.
    pub holds: bool,
}

/// Greedy's guarantee refined by the curvature of `S_g ∪ S*`.
pub fn improved_ratio_certificate<O: ValueOracle + ?Sized>(
    oracle: &O,
    greedy_set: &ElementSet,
    opt_set: &ElementSet,
) -> Result<RatioCertificate> {
    let union = greedy_set.union(opt_set);
    if union.is_empty() {
        return Ok(RatioCertificate {
            kappa: 0.0,
            factor: 1.0,
            greedy_value: 0.0,
            opt_value: 0.0,
            holds: true,
        });
    }
    let kappa = restricted_curvature(oracle, &union)?;
    let factor = curvature_factor(kappa);
    let greedy_value = oracle.value(greedy_set);
    let opt_value = oracle.value(opt_set);
    Ok(RatioCertificate {
        kappa,
        factor,
        greedy_value,
        opt_value,
        holds: greedy_value >= factor * opt_value - 1e-9,
    })
}

/// `g = f − h` for a modular `h`; queries are charged to `f`.
pub struct ResidualOracle<'a, O: ?Sized> {
    f: &'a O,
    h: Vec<f64>,
}

impl<'a, O: ValueOracle + ?Sized> ResidualOracle<'a, O> {
    pub fn new(f: &'a O, h: Vec<f64>) -> Self {
        Self { f, h }
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }
}

impl<O: ValueOracle + ?Sized> ValueOracle for ResidualOracle<'_, O> {
    fn ground_size(&self) -> usize {
        self.f.ground_size()
    }
    fn value(&self, set: &ElementSet) -> f64 {
        self.f.value(set) - set.iter().map(|e| self.h[e]).sum::<f64>()
    }
    fn gain(&self, base: &ElementSet, e: usize) -> f64 {
        if base.contains(e) {
            return 0.0;
        }
        self.f.gain(base, e) - self.h[e]
    }
    fn queries(&self) -> u64 {
        self.f.queries()
    }
    fn reset_queries(&self) {
        self.f.reset_queries()
    }
}

/// The split `f = g + h` with `h(S) = (1 − κ − ε)·Σ_{e∈S} f(e)`.
pub struct Decomposition<'a, O: ?Sized> {
    pub g: ResidualOracle<'a, O>,
    pub kappa: f64,
    pub kappa_g: f64,
    pub curvature: CurvatureReport,
}

/// Splits off the modular part. Fails with [`Error::CurvatureTooHigh`] when
/// `κ > 1 − ε`, the signal to fall back to the plain continuous greedy.
/// Costs the `2n + 1` queries of [`total_curvature`].
pub fn decompose_g_h<O: ValueOracle + ?Sized>(oracle: &O, eps: f64) -> Result<Decomposition<'_, O>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} must lie in (0, 1)")));
    }
    let curvature = total_curvature(oracle);
    let kappa = curvature.kappa;
    if kappa > 1.0 - eps {
        return Err(Error::CurvatureTooHigh {
            kappa,
            limit: 1.0 - eps,
        });
    }
    let scale = 1.0 - kappa - eps;
    let h: Vec<f64> = curvature.singles.iter().map(|s| scale * s).collect();
    let kappa_g = curvature_from_parts(&curvature, &h);
    Ok(Decomposition {
        g: ResidualOracle::new(oracle, h),
        kappa,
        kappa_g,
        curvature,
    })
}

/// Greedy over a matroid: repeatedly add the independent extension with the
/// largest gain (ties to the smallest index) until a base is reached.
pub fn matroid_greedy<O: ValueOracle + ?Sized, M: IndependenceSystem + ?Sized>(
    oracle: &O,
    indep: &IndependenceOracle<'_, M>,
) -> (ElementSet, f64) {
    let n = oracle.ground_size();
    let mut set = ElementSet::new();
    let mut value = 0.0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for e in 0..n {
            if set.contains(e) || !indep.is_independent(&set.with(e)) {
                continue;
            }
            let g = oracle.gain(&set, e);
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((e, g));
            }
        }
        match best {
            Some((e, g)) => {
                set.insert(e);
                value += g;
            }
            None => return (set, value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tests::{fixture_coverage, modular};
    use crate::oracle::{QueryCountingOracle, SetFunction};

    struct AtMostOne(usize);
    impl SetFunction for AtMostOne {
        fn ground_size(&self) -> usize {
            self.0
        }
        fn eval(&self, set: &ElementSet) -> f64 {
            set.len().min(1) as f64
        }
    }

    #[test]
    fn curvature_examples() {
        let m = QueryCountingOracle::from_spec(&modular(&[1., 2., 3., 4., 5.])).unwrap();
        assert_eq!(total_curvature(&m).kappa, 0.0);
        assert_eq!(m.queries(), 11);

        let c = QueryCountingOracle::from_spec(&fixture_coverage()).unwrap();
        assert_eq!(total_curvature(&c).kappa, 1.0);
        assert_eq!(c.queries(), 9);

        let one = QueryCountingOracle::new(AtMostOne(2));
        assert_eq!(total_curvature(&one).kappa, 1.0);

        let zero = QueryCountingOracle::from_spec(&modular(&[0.0, 0.0])).unwrap();
        assert_eq!(total_curvature(&zero).kappa, 0.0);
    }

    #[test]
    fn restricted_curvature_examples() {
        let c = QueryCountingOracle::from_spec(&fixture_coverage()).unwrap();
        assert_eq!(restricted_curvature(&c, &ElementSet::singleton(1)).unwrap(), 0.0);
        assert_eq!(restricted_curvature(&c, &ElementSet::from([0, 2])).unwrap(), 0.0);
        assert_eq!(
            restricted_curvature(&c, &ElementSet::full(4)).unwrap(),
            total_curvature(&c).kappa
        );
        assert!(restricted_curvature(&c, &ElementSet::new()).is_err());
    }

    #[test]
    fn factor_limits() {
        assert!((curvature_factor(1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((curvature_factor(1.0) - 0.6321).abs() < 1e-4);
        assert_eq!(curvature_factor(0.0), 1.0);
        assert!((curvature_factor(1e-7) - 1.0).abs() < 1e-7);
        assert!((curvature_factor(1e-5) - (1.0 - (-1e-5f64).exp()) / 1e-5).abs() < 1e-12);
    }

    #[test]
    fn modular_decomposition() {
        let w = [1., 2., 3., 4., 5.];
        let o = QueryCountingOracle::from_spec(&modular(&w)).unwrap();
        let d = decompose_g_h(&o, 0.1).unwrap();
        assert_eq!(d.kappa, 0.0);
        assert!(d.kappa_g.abs() < 1e-12);
        for (he, we) in d.g.h().iter().zip(w) {
            assert!((he - 0.9 * we).abs() < 1e-12);
        }
        let all = ElementSet::full(5);
        assert!((d.g.value(&all) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn high_curvature_signals_fallback() {
        let c = QueryCountingOracle::from_spec(&fixture_coverage()).unwrap();
        assert!(matches!(
            decompose_g_h(&c, 0.1),
            Err(Error::CurvatureTooHigh { .. })
        ));
    }
}
