//! Self-describing instance files and the seeded instance generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{Constraint, KnapsackSystem, Matroid, PSystem};
use crate::curvature::total_curvature;
use crate::error::{invalid, Error, Result};
use crate::oracle::{CoverageSpec, FunctionSpec, QueryCountingOracle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MatroidSpec {
    Uniform { k: usize },
    Partition { parts: Vec<usize>, caps: Vec<usize> },
    Graphic { vertices: usize, edges: Vec<(usize, usize)> },
}

impl MatroidSpec {
    pub fn build(&self, n: usize) -> Result<Matroid> {
        let m = match self {
            MatroidSpec::Uniform { k } => Matroid::uniform(n, *k),
            MatroidSpec::Partition { parts, caps } => Matroid::partition(parts.clone(), caps.clone())?,
            MatroidSpec::Graphic { vertices, edges } => Matroid::graphic(*vertices, edges.clone())?,
        };
        if m.ground_size() != n {
            return Err(invalid(format!(
                "matroid covers {} elements, instance has {n}",
                m.ground_size()
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<usize>,
    /// `d × n` cost rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knapsacks: Option<Vec<Vec<f64>>>,
    /// Per-row budgets; costs are divided by them on load. Defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matroids: Option<Vec<MatroidSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub function: FunctionSpec,
    #[serde(default)]
    pub constraints: ConstraintsSpec,
}

impl Instance {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        self.function.validate()?;
        if self.function.ground_size() != self.n {
            return Err(invalid(format!(
                "function covers {} elements, n = {}",
                self.function.ground_size(),
                self.n
            )));
        }
        self.knapsacks()?;
        self.matroids()?;
        Ok(())
    }

    pub fn oracle(&self) -> Result<QueryCountingOracle> {
        QueryCountingOracle::from_spec(&self.function)
    }

    pub fn cardinality(&self) -> Option<usize> {
        self.constraints.cardinality
    }

    pub fn knapsacks(&self) -> Result<Option<KnapsackSystem>> {
        let Some(costs) = &self.constraints.knapsacks else {
            return Ok(None);
        };
        let k = KnapsackSystem::new(costs.clone(), self.constraints.budgets.as_deref())?;
        if k.ground_size() != self.n {
            return Err(invalid("knapsack rows must have n entries"));
        }
        Ok(Some(k))
    }

    pub fn matroids(&self) -> Result<Vec<Matroid>> {
        self.constraints
            .matroids
            .iter()
            .flatten()
            .map(|m| m.build(self.n))
            .collect()
    }

    /// Intersection of every constraint in the file.
    pub fn constraint(&self) -> Result<Constraint> {
        let mut parts = Vec::new();
        if let Some(k) = self.constraints.cardinality {
            parts.push(Constraint::Cardinality { n: self.n, k });
        }
        if let Some(k) = self.knapsacks()? {
            parts.push(Constraint::Knapsack(k));
        }
        let matroids = self.matroids()?;
        if !matroids.is_empty() {
            parts.push(Constraint::PSystem(PSystem::new(matroids)?));
        }
        Ok(match parts.len() {
            0 => Constraint::Cardinality { n: self.n, k: self.n },
            1 => parts.pop().unwrap(),
            _ => Constraint::All(parts),
        })
    }

    /// `k` under a cardinality bound, else the rank of the single matroid.
    pub fn k_or_rank(&self) -> Option<usize> {
        if let Some(k) = self.constraints.cardinality {
            return Some(k);
        }
        match self.matroids() {
            Ok(ms) if ms.len() == 1 => Some(ms[0].full_rank()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Coverage,
    Facility,
    Modular,
    CurvatureMix,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Coverage => "coverage",
            Family::Facility => "facility",
            Family::Modular => "modular",
            Family::CurvatureMix => "curvature-mix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MatroidGen {
    Uniform { k: usize },
    /// Each element is assigned a uniformly random part; every part has cap `cap`.
    Partition { parts: usize, cap: usize },
    /// One random edge (endpoints distinct) per element.
    Graphic { vertices: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    /// Universe size for coverage-based families, columns for facility location.
    /// Defaults to `2n`.
    pub universe: Option<usize>,
    /// Probability that an element covers a given item. Defaults to 0.2.
    pub density: Option<f64>,
    /// Target total curvature for `curvature-mix`.
    pub kappa: Option<f64>,
    pub cardinality: Option<usize>,
    /// Number of knapsack rows.
    pub knapsacks: usize,
    pub matroids: Vec<MatroidGen>,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            universe: None,
            density: None,
            kappa: None,
            cardinality: None,
            knapsacks: 0,
            matroids: Vec::new(),
        }
    }
}

const KAPPA_TOL: f64 = 0.05;

fn coverage(rng: &mut ChaCha8Rng, n: usize, universe: usize, density: f64) -> CoverageSpec {
    let sets = (0..n)
        .map(|_| (0..universe).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    CoverageSpec {
        universe,
        sets,
        universe_weights: None,
    }
}

fn kappa_of(spec: &FunctionSpec) -> Result<f64> {
    Ok(total_curvature(&QueryCountingOracle::from_spec(spec)?).kappa)
}

/// Bisects the dyadic mixing weight until the curvature is within tolerance.
fn mix_for_kappa(cov: CoverageSpec, weights: Vec<f64>, target: f64) -> Result<FunctionSpec> {
    let build = |mix: f64| FunctionSpec::CurvatureMix {
        coverage: cov.clone(),
        weights: weights.clone(),
        mix,
    };
    let top = kappa_of(&build(0.0))?;
    if !(0.0..=1.0).contains(&target) || target > top + KAPPA_TOL {
        return Err(Error::UnachievableCurvature {
            target,
            min: 0.0,
            max: top,
        });
    }
    // curvature falls as the modular share grows
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..40 {
        let mid = (lo + hi) / 2.0;
        let k = kappa_of(&build(mid))?;
        if (k - target).abs() < best.0 {
            best = ((k - target).abs(), mid);
        }
        if (k - target).abs() <= KAPPA_TOL / 4.0 {
            break;
        }
        if k > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > KAPPA_TOL {
        return Err(Error::UnachievableCurvature {
            target,
            min: 0.0,
            max: top,
        });
    }
    Ok(build(best.1))
}

/// Deterministic instance for `(spec, seed)`. Values are small integers or
/// dyadic rationals so evaluation is exact.
pub fn gen_instance(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    let n = spec.n;
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let universe = spec.universe.unwrap_or(2 * n).max(1);
    let density = spec.density.unwrap_or(0.2);
    if !(0.0..=1.0).contains(&density) {
        return Err(invalid(format!("density = {density} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let function = match spec.family {
        Family::Coverage => FunctionSpec::Coverage(coverage(&mut rng, n, universe, density)),
        Family::Facility => FunctionSpec::FacilityLocation {
            similarity: (0..n)
                .map(|_| {
                    (0..universe)
                        .map(|_| if rng.gen_bool(density.max(0.5)) { rng.gen_range(1..=8) as f64 } else { 0.0 })
                        .collect()
                })
                .collect(),
        },
        Family::Modular => FunctionSpec::Modular {
            weights: (0..n).map(|_| rng.gen_range(1..=10) as f64).collect(),
        },
        Family::CurvatureMix => {
            let target = spec
                .kappa
                .ok_or_else(|| invalid("curvature-mix needs a target kappa"))?;
            let cov = coverage(&mut rng, n, universe, density);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
            if target == 0.0 {
                FunctionSpec::Modular { weights }
            } else {
                mix_for_kappa(cov, weights, target)?
            }
        }
    };

    let mut constraints = ConstraintsSpec {
        cardinality: spec.cardinality,
        ..ConstraintsSpec::default()
    };
    if spec.knapsacks > 0 {
        constraints.knapsacks = Some(
            (0..spec.knapsacks)
                .map(|_| (0..n).map(|_| rng.gen_range(1..=40) as f64 / 64.0).collect())
                .collect(),
        );
    }
    if !spec.matroids.is_empty() {
        let mut out = Vec::new();
        for m in &spec.matroids {
            out.push(match *m {
                MatroidGen::Uniform { k } => MatroidSpec::Uniform { k },
                MatroidGen::Partition { parts, cap } => {
                    if parts == 0 {
                        return Err(invalid("partition matroid needs at least one part"));
                    }
                    MatroidSpec::Partition {
                        parts: (0..n).map(|_| rng.gen_range(0..parts)).collect(),
                        caps: vec![cap; parts],
                    }
                }
                MatroidGen::Graphic { vertices } => {
                    if vertices < 2 {
                        return Err(invalid("graphic matroid needs at least two vertices"));
                    }
                    MatroidSpec::Graphic {
                        vertices,
                        edges: (0..n)
                            .map(|_| {
                                let u = rng.gen_range(0..vertices);
                                let v = (u + rng.gen_range(1..vertices)) % vertices;
                                (u, v)
                            })
                            .collect(),
                    }
                }
            });
        }
        constraints.matroids = Some(out);
    }

    let instance = Instance {
        id: Some(format!("{}-n{n}-s{seed}", spec.family.name())),
        n,
        function,
        constraints,
    };
    instance.validate()?;
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::new(Family::Modular, 5);
        assert_eq!(
            gen_instance(&spec, 1).unwrap().to_json(),
            gen_instance(&spec, 1).unwrap().to_json()
        );
        assert_ne!(
            gen_instance(&spec, 1).unwrap().to_json(),
            gen_instance(&spec, 2).unwrap().to_json()
        );
    }

    #[test]
    fn zero_kappa_is_modular() {
        let spec = GeneratorSpec {
            kappa: Some(0.0),
            ..GeneratorSpec::new(Family::CurvatureMix, 8)
        };
        let inst = gen_instance(&spec, 3).unwrap();
        assert!(matches!(inst.function, FunctionSpec::Modular { .. }));
    }

    #[test]
    fn mix_hits_target_kappa() {
        for seed in 0..10 {
            let spec = GeneratorSpec {
                kappa: Some(0.5),
                ..GeneratorSpec::new(Family::CurvatureMix, 8)
            };
            let inst = gen_instance(&spec, seed).unwrap();
            let k = kappa_of(&inst.function).unwrap();
            assert!((0.45..=0.55).contains(&k), "seed {seed}: kappa {k}");
        }
    }

    #[test]
    fn unachievable_kappa_is_an_error() {
        // disjoint singletons: coverage is modular, kappa is always 0
        let cov = CoverageSpec {
            universe: 3,
            sets: vec![vec![0], vec![1], vec![2]],
            universe_weights: None,
        };
        assert!(matches!(
            mix_for_kappa(cov, vec![1.0; 3], 0.5),
            Err(Error::UnachievableCurvature { .. })
        ));
    }

    #[test]
    fn constraints_round_trip() {
        let spec = GeneratorSpec {
            knapsacks: 1,
            matroids: vec![
                MatroidGen::Partition { parts: 3, cap: 1 },
                MatroidGen::Graphic { vertices: 4 },
            ],
            ..GeneratorSpec::new(Family::Coverage, 10)
        };
        let inst = gen_instance(&spec, 5).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert!(matches!(back.constraint().unwrap(), Constraint::All(_)));
        assert_eq!(back.knapsacks().unwrap().unwrap().dims(), 1);
    }

    #[test]
    fn schema_from_hand_written_json() {
        let text = r#"{
            "n": 3,
            "function": {"type": "modular", "weights": [1, 2, 3]},
            "constraints": {"knapsacks": [[2, 3, 4]], "budgets": [5],
                            "matroids": [{"type": "uniform", "k": 2}]}
        }"#;
        let inst = Instance::from_json(text).unwrap();
        inst.validate().unwrap();
        assert_eq!(inst.knapsacks().unwrap().unwrap().cost(0, 1), 0.6);
        assert_eq!(inst.k_or_rank(), Some(2));
    }
}
