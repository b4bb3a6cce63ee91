//! Feasibility: cardinality, normalized d-dimensional knapsacks, matroids and
//! p-systems given as intersections of matroids.

use std::cell::Cell;

use crate::error::{invalid, Result};
use crate::set::ElementSet;

/// Anything that can decide whether a set is feasible.
pub trait IndependenceSystem {
    fn ground_size(&self) -> usize;
    fn is_independent(&self, set: &ElementSet) -> bool;
}

/// `d` knapsack constraints with budgets normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSystem {
    /// `costs[i][e]`, already divided by the budget of dimension `i`.
    costs: Vec<Vec<f64>>,
}

impl KnapsackSystem {
    /// `costs` is `d × n`; when `budgets` is given each row is divided by its budget.
    pub fn new(costs: Vec<Vec<f64>>, budgets: Option<&[f64]>) -> Result<Self> {
        if costs.is_empty() {
            return Err(invalid("knapsack system needs at least one dimension"));
        }
        let n = costs[0].len();
        if costs.iter().any(|row| row.len() != n) {
            return Err(invalid("knapsack cost rows differ in length"));
        }
        if costs.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(invalid("knapsack costs must be finite and >= 0"));
        }
        let costs = match budgets {
            None => costs,
            Some(b) => {
                if b.len() != costs.len() {
                    return Err(invalid("one budget per knapsack dimension is required"));
                }
                if b.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(invalid("knapsack budgets must be positive"));
                }
                costs
                    .into_iter()
                    .zip(b)
                    .map(|(row, &cap)| row.into_iter().map(|c| c / cap).collect())
                    .collect()
            }
        };
        Ok(Self { costs })
    }

    pub fn dims(&self) -> usize {
        self.costs.len()
    }

    pub fn ground_size(&self) -> usize {
        self.costs[0].len()
    }

    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn cost(&self, dim: usize, e: usize) -> f64 {
        self.costs[dim][e]
    }

    /// `Σ_i C_i(e)`.
    pub fn total_cost(&self, e: usize) -> f64 {
        self.costs.iter().map(|row| row[e]).sum()
    }

    /// `C_i(S)` for every dimension.
    pub fn load(&self, set: &ElementSet) -> Vec<f64> {
        self.costs
            .iter()
            .map(|row| set.iter().map(|e| row[e]).sum())
            .collect()
    }

    pub fn is_feasible(&self, set: &ElementSet) -> bool {
        self.load(set).iter().all(|&c| c <= 1.0)
    }

    /// True iff `C_i(S ∪ {e}) ≤ 1` for every dimension.
    pub fn can_add(&self, set: &ElementSet, e: usize) -> bool {
        if set.contains(e) {
            return self.is_feasible(set);
        }
        self.costs
            .iter()
            .all(|row| set.iter().map(|x| row[x]).sum::<f64>() + row[e] <= 1.0)
    }

    pub fn singleton_feasible(&self, e: usize) -> bool {
        self.costs.iter().all(|row| row[e] <= 1.0)
    }
}

impl IndependenceSystem for KnapsackSystem {
    fn ground_size(&self) -> usize {
        KnapsackSystem::ground_size(self)
    }
    fn is_independent(&self, set: &ElementSet) -> bool {
        self.is_feasible(set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Matroid {
    Uniform {
        n: usize,
        k: usize,
    },
    /// `parts[e]` is the part of element `e`; at most `caps[j]` elements from part `j`.
    Partition {
        parts: Vec<usize>,
        caps: Vec<usize>,
    },
    /// Element `e` is the edge `edges[e]`; independent sets are forests.
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

impl Matroid {
    pub fn uniform(n: usize, k: usize) -> Self {
        Matroid::Uniform { n, k }
    }

    pub fn partition(parts: Vec<usize>, caps: Vec<usize>) -> Result<Self> {
        if let Some(&p) = parts.iter().find(|&&p| p >= caps.len()) {
            return Err(invalid(format!("partition index {p} has no cap")));
        }
        Ok(Matroid::Partition { parts, caps })
    }

    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= vertices || v >= vertices) {
            return Err(invalid(format!("edge ({u}, {v}) references a missing vertex")));
        }
        Ok(Matroid::Graphic { vertices, edges })
    }

    pub fn ground_size(&self) -> usize {
        match self {
            Matroid::Uniform { n, .. } => *n,
            Matroid::Partition { parts, .. } => parts.len(),
            Matroid::Graphic { edges, .. } => edges.len(),
        }
    }

    /// `r(X) = max{|Y| : Y ⊆ X, Y independent}`.
    pub fn rank(&self, set: &ElementSet) -> usize {
        match self {
            Matroid::Uniform { k, .. } => set.len().min(*k),
            Matroid::Partition { parts, caps } => {
                let mut counts = vec![0usize; caps.len()];
                for e in set {
                    counts[parts[e]] += 1;
                }
                counts.iter().zip(caps).map(|(c, cap)| (*c).min(*cap)).sum()
            }
            Matroid::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(*vertices);
                set.iter()
                    .filter(|&e| {
                        let (u, v) = edges[e];
                        uf.union(u, v)
                    })
                    .count()
            }
        }
    }

    pub fn full_rank(&self) -> usize {
        self.rank(&ElementSet::full(self.ground_size()))
    }

    pub fn is_base(&self, set: &ElementSet) -> bool {
        set.len() == self.full_rank() && self.is_independent(set)
    }
}

impl IndependenceSystem for Matroid {
    fn ground_size(&self) -> usize {
        Matroid::ground_size(self)
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        match self {
            Matroid::Uniform { k, .. } => set.len() <= *k,
            Matroid::Partition { parts, caps } => {
                let mut counts = vec![0usize; caps.len()];
                set.iter().all(|e| {
                    counts[parts[e]] += 1;
                    counts[parts[e]] <= caps[parts[e]]
                })
            }
            Matroid::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(*vertices);
                set.iter().all(|e| {
                    let (u, v) = edges[e];
                    uf.union(u, v)
                })
            }
        }
    }
}

/// Intersection of `p` matroids over one ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct PSystem {
    matroids: Vec<Matroid>,
}

impl PSystem {
    pub fn new(matroids: Vec<Matroid>) -> Result<Self> {
        let Some(first) = matroids.first() else {
            return Err(invalid("a p-system needs at least one matroid"));
        };
        let n = first.ground_size();
        if matroids.iter().any(|m| m.ground_size() != n) {
            return Err(invalid("p-system matroids must share a ground set"));
        }
        Ok(Self { matroids })
    }

    pub fn p(&self) -> usize {
        self.matroids.len()
    }

    pub fn matroids(&self) -> &[Matroid] {
        &self.matroids
    }
}

impl IndependenceSystem for PSystem {
    fn ground_size(&self) -> usize {
        self.matroids[0].ground_size()
    }
    fn is_independent(&self, set: &ElementSet) -> bool {
        self.matroids.iter().all(|m| m.is_independent(set))
    }
}

/// A feasibility constraint; `All` is the intersection of its members.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Cardinality { n: usize, k: usize },
    Knapsack(KnapsackSystem),
    Matroid(Matroid),
    PSystem(PSystem),
    All(Vec<Constraint>),
}

impl Constraint {
    /// The cardinality bound, when this is (or contains) a cardinality constraint.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            Constraint::Cardinality { k, .. } => Some(*k),
            Constraint::All(cs) => cs.iter().filter_map(Constraint::cardinality).min(),
            _ => None,
        }
    }
}

impl IndependenceSystem for Constraint {
    fn ground_size(&self) -> usize {
        match self {
            Constraint::Cardinality { n, .. } => *n,
            Constraint::Knapsack(k) => k.ground_size(),
            Constraint::Matroid(m) => m.ground_size(),
            Constraint::PSystem(p) => IndependenceSystem::ground_size(p),
            Constraint::All(cs) => cs.first().map_or(0, IndependenceSystem::ground_size),
        }
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        match self {
            Constraint::Cardinality { k, .. } => set.len() <= *k,
            Constraint::Knapsack(k) => k.is_feasible(set),
            Constraint::Matroid(m) => m.is_independent(set),
            Constraint::PSystem(p) => p.is_independent(set),
            Constraint::All(cs) => cs.iter().all(|c| c.is_independent(set)),
        }
    }
}

/// Counts independence queries against an underlying system.
pub struct IndependenceOracle<'a, C: ?Sized> {
    system: &'a C,
    calls: Cell<u64>,
}

impl<'a, C: IndependenceSystem + ?Sized> IndependenceOracle<'a, C> {
    pub fn new(system: &'a C) -> Self {
        Self {
            system,
            calls: Cell::new(0),
        }
    }

    pub fn system(&self) -> &'a C {
        self.system
    }

    pub fn is_independent(&self, set: &ElementSet) -> bool {
        self.calls.set(self.calls.get() + 1);
        self.system.is_independent(set)
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Matroid {
        Matroid::graphic(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn subsets(n: usize) -> impl Iterator<Item = ElementSet> {
        (0u64..1 << n).map(ElementSet::from_mask)
    }

    fn assert_matroid_axioms(m: &Matroid) {
        let n = m.ground_size();
        let indep: Vec<ElementSet> = subsets(n).filter(|s| m.is_independent(s)).collect();
        assert!(m.is_independent(&ElementSet::new()));
        for s in &indep {
            for e in s {
                assert!(m.is_independent(&s.without(e)), "downward closure fails at {s:?}");
            }
        }
        for a in &indep {
            for b in &indep {
                if a.len() < b.len() {
                    assert!(
                        b.difference(a).iter().any(|e| m.is_independent(&a.with(e))),
                        "exchange fails for {a:?}, {b:?}"
                    );
                }
            }
        }
    }

    fn brute_rank(m: &Matroid, x: &ElementSet) -> usize {
        let members = x.to_vec();
        (0u64..1 << members.len())
            .map(|mask| {
                (0..members.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| members[i])
                    .collect::<ElementSet>()
            })
            .filter(|s| m.is_independent(s))
            .map(|s| s.len())
            .max()
            .unwrap()
    }

    fn sample_matroids() -> Vec<Matroid> {
        vec![
            Matroid::uniform(8, 3),
            Matroid::uniform(6, 0),
            Matroid::partition(vec![0, 0, 1, 1, 1, 2, 2, 0], vec![1, 2, 1]).unwrap(),
            Matroid::graphic(5, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (0, 4), (1, 1)])
                .unwrap(),
        ]
    }

    #[test]
    fn is_independent_examples() {
        let u = Constraint::Matroid(Matroid::uniform(4, 2));
        let oracle = IndependenceOracle::new(&u);
        assert!(!oracle.is_independent(&[0, 1, 2].into()));
        let p = Matroid::partition(vec![0, 0, 1, 1], vec![1, 1]).unwrap();
        assert!(p.is_independent(&[0, 2].into()));
        assert!(!triangle().is_independent(&[0, 1, 2].into()));
        assert!(triangle().is_independent(&[0, 1].into()));
        assert_eq!(oracle.calls(), 1);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matroid::uniform(5, 2).rank(&ElementSet::full(5)), 2);
        let p = Matroid::partition(vec![0, 0, 0, 1, 1], vec![1, 1]).unwrap();
        assert_eq!(p.rank(&[0, 1, 2].into()), 1);
        assert_eq!(triangle().rank(&ElementSet::full(3)), 2);
        assert_eq!(triangle().rank(&ElementSet::new()), 0);
    }

    #[test]
    fn self_loop_is_dependent() {
        let m = Matroid::graphic(2, vec![(0, 0), (0, 1)]).unwrap();
        assert!(!m.is_independent(&ElementSet::singleton(0)));
        assert_eq!(m.full_rank(), 1);
    }

    #[test]
    fn matroid_axioms_exhaustive() {
        for m in sample_matroids() {
            assert_matroid_axioms(&m);
        }
    }

    #[test]
    fn rank_matches_brute_force() {
        for m in sample_matroids() {
            for x in subsets(m.ground_size()) {
                assert_eq!(m.rank(&x), brute_rank(&m, &x), "{m:?} on {x:?}");
            }
        }
    }

    #[test]
    fn psystem_is_conjunction() {
        let ms = sample_matroids();
        let pool = [ms[0].clone(), ms[2].clone(), ms[3].clone()];
        for p in 1..=3 {
            let sys = PSystem::new(pool[..p].to_vec()).unwrap();
            for s in subsets(8) {
                let expect = pool[..p].iter().all(|m| m.is_independent(&s));
                assert_eq!(sys.is_independent(&s), expect);
            }
        }
    }

    #[test]
    fn knapsack_can_add_examples() {
        // element 0 stands in for S with cost 0.7
        let k = KnapsackSystem::new(vec![vec![0.7, 0.2, 0.4]], None).unwrap();
        let s = ElementSet::singleton(0);
        assert!(k.can_add(&s, 1));
        assert!(!k.can_add(&s, 2));

        let k2 = KnapsackSystem::new(vec![vec![0.6], vec![1.2]], None).unwrap();
        assert!(!k2.can_add(&ElementSet::new(), 0));
        assert!(!k2.singleton_feasible(0));
    }

    #[test]
    fn knapsack_budgets_normalize() {
        let k = KnapsackSystem::new(vec![vec![2.0, 5.0]], Some(&[10.0])).unwrap();
        assert_eq!(k.cost(0, 0), 0.2);
        assert_eq!(k.cost(0, 1), 0.5);
        assert!(KnapsackSystem::new(vec![vec![1.0]], Some(&[0.0])).is_err());
    }

    #[test]
    fn cardinality_lookup() {
        let c = Constraint::All(vec![
            Constraint::Matroid(Matroid::uniform(4, 3)),
            Constraint::Cardinality { n: 4, k: 2 },
        ]);
        assert_eq!(c.cardinality(), Some(2));
        assert!(!c.is_independent(&[0, 1, 2].into()));
    }
}
