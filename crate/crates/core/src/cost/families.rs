use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{CostOracle, CostSpec};
use crate::boxset::BoxSet;
use crate::error::{domain, Error, Result};
use crate::rational::{format_rational, int, parse_rational, serde_q, serde_q_vec, Rational};

fn check_nonneg(what: &str, xs: &[Rational]) -> Result<()> {
    match xs.iter().position(|x| x.is_negative()) {
        Some(i) => domain(format!("{what}: entry {i} is negative")),
        None => Ok(()),
    }
}

fn sum_over(values: &[Rational], set: &BoxSet) -> Rational {
    set.iter().fold(Rational::zero(), |acc, i| acc + &values[i])
}

/// A full table of `2^n` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExplicitRepr", into = "ExplicitRepr")]
pub struct ExplicitCost {
    n: usize,
    table: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct ExplicitRepr {
    n: usize,
    table: BTreeMap<String, String>,
}

impl ExplicitCost {
    pub const MAX_N: usize = 20;

    /// `table[mask]` is the cost of the set with that bitmask.
    pub fn new(n: usize, table: Vec<Rational>) -> Result<Self> {
        if n > Self::MAX_N {
            return Err(Error::Capability {
                what: "explicit cost table",
                n,
                limit: Self::MAX_N,
            });
        }
        if table.len() != 1 << n {
            return domain(format!(
                "explicit table for n = {n} needs {} entries, got {}",
                1u64 << n,
                table.len()
            ));
        }
        if !table[0].is_zero() {
            return domain(format!("explicit table not normalized: c(∅) = {}", table[0]));
        }
        for m in 0..table.len() {
            for i in 0..n {
                let up = m | (1 << i);
                if up != m && table[up] < table[m] {
                    return domain(format!(
                        "explicit table not monotone: c({:?}) = {} > c({:?}) = {}",
                        BoxSet::from_mask(n, m as u64),
                        table[m],
                        BoxSet::from_mask(n, up as u64),
                        table[up]
                    ));
                }
            }
        }
        Ok(ExplicitCost { n, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(&BoxSet) -> Rational) -> Result<Self> {
        if n > Self::MAX_N {
            return Err(Error::Capability {
                what: "explicit cost table",
                n,
                limit: Self::MAX_N,
            });
        }
        let table = (0..1u64 << n).map(|m| f(&BoxSet::from_mask(n, m))).collect();
        Self::new(n, table)
    }

    /// Materializes any oracle of arity at most [`Self::MAX_N`].
    pub fn from_oracle(oracle: &dyn CostOracle) -> Result<Self> {
        Self::from_fn(oracle.arity(), |s| oracle.cost_of(s))
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }
}

impl CostOracle for ExplicitCost {
    fn arity(&self) -> usize {
        self.n
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        let mask = set.to_mask().expect("explicit arity <= 20");
        self.table[mask as usize].clone()
    }
}

impl From<ExplicitCost> for ExplicitRepr {
    fn from(c: ExplicitCost) -> Self {
        let table = c
            .table
            .iter()
            .enumerate()
            .map(|(m, v)| (BoxSet::from_mask(c.n, m as u64).key(), format_rational(v)))
            .collect();
        ExplicitRepr { n: c.n, table }
    }
}

impl TryFrom<ExplicitRepr> for ExplicitCost {
    type Error = Error;

    fn try_from(r: ExplicitRepr) -> Result<Self> {
        if r.n > Self::MAX_N {
            return Err(Error::Capability {
                what: "explicit cost table",
                n: r.n,
                limit: Self::MAX_N,
            });
        }
        let mut table: Vec<Option<Rational>> = vec![None; 1 << r.n];
        for (key, value) in &r.table {
            let set = BoxSet::parse_key(r.n, key)?;
            let mask = set.to_mask().expect("n <= 20") as usize;
            if table[mask].is_some() {
                return domain(format!("explicit table lists subset {set:?} twice"));
            }
            table[mask] = Some(parse_rational(value)?);
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(m, v)| {
                v.ok_or_else(|| {
                    Error::Domain(format!(
                        "explicit table is missing subset {:?}",
                        BoxSet::from_mask(r.n, m as u64)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ExplicitCost::new(r.n, table)
    }
}

/// `c(S) = Σ_{i∈S} c_i`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AdditiveRepr", into = "AdditiveRepr")]
pub struct AdditiveCost {
    costs: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct AdditiveRepr {
    #[serde(with = "serde_q_vec")]
    costs: Vec<Rational>,
}

impl AdditiveCost {
    pub fn new(costs: Vec<Rational>) -> Result<Self> {
        check_nonneg("additive cost", &costs)?;
        Ok(AdditiveCost { costs })
    }

    pub fn per_box(&self) -> &[Rational] {
        &self.costs
    }
}

impl CostOracle for AdditiveCost {
    fn arity(&self) -> usize {
        self.costs.len()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        sum_over(&self.costs, set)
    }
}

impl From<AdditiveCost> for AdditiveRepr {
    fn from(c: AdditiveCost) -> Self {
        AdditiveRepr { costs: c.costs }
    }
}

impl TryFrom<AdditiveRepr> for AdditiveCost {
    type Error = Error;
    fn try_from(r: AdditiveRepr) -> Result<Self> {
        AdditiveCost::new(r.costs)
    }
}

/// `c(S) = min(B, Σ_{i∈S} a_i)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BudgetAdditiveRepr", into = "BudgetAdditiveRepr")]
pub struct BudgetAdditiveCost {
    costs: Vec<Rational>,
    budget: Rational,
}

#[derive(Serialize, Deserialize)]
struct BudgetAdditiveRepr {
    #[serde(with = "serde_q_vec")]
    costs: Vec<Rational>,
    #[serde(with = "serde_q")]
    budget: Rational,
}

impl BudgetAdditiveCost {
    pub fn new(costs: Vec<Rational>, budget: Rational) -> Result<Self> {
        check_nonneg("budget-additive cost", &costs)?;
        if budget.is_negative() {
            return domain("budget-additive cost: negative budget");
        }
        Ok(BudgetAdditiveCost { costs, budget })
    }

    pub fn per_box(&self) -> &[Rational] {
        &self.costs
    }

    pub fn budget(&self) -> &Rational {
        &self.budget
    }
}

impl CostOracle for BudgetAdditiveCost {
    fn arity(&self) -> usize {
        self.costs.len()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        sum_over(&self.costs, set).min(self.budget.clone())
    }
}

impl From<BudgetAdditiveCost> for BudgetAdditiveRepr {
    fn from(c: BudgetAdditiveCost) -> Self {
        BudgetAdditiveRepr {
            costs: c.costs,
            budget: c.budget,
        }
    }
}

impl TryFrom<BudgetAdditiveRepr> for BudgetAdditiveCost {
    type Error = Error;
    fn try_from(r: BudgetAdditiveRepr) -> Result<Self> {
        BudgetAdditiveCost::new(r.costs, r.budget)
    }
}

/// One weighted element `e` of a coverage function with its cover set `g(e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverElement {
    #[serde(with = "serde_q")]
    pub weight: Rational,
    pub covers: Vec<usize>,
}

/// `c(S) = Σ_e w(e)·1{S ∩ g(e) ≠ ∅}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoverageRepr", into = "CoverageRepr")]
pub struct CoverageCost {
    n: usize,
    elements: Vec<CoverElement>,
    covers: Vec<BoxSet>,
}

#[derive(Serialize, Deserialize)]
struct CoverageRepr {
    n: usize,
    elements: Vec<CoverElement>,
}

impl CoverageCost {
    pub fn new(n: usize, elements: Vec<CoverElement>) -> Result<Self> {
        let mut covers = Vec::with_capacity(elements.len());
        for (k, e) in elements.iter().enumerate() {
            if e.weight.is_negative() {
                return domain(format!("coverage element {k} has negative weight"));
            }
            covers.push(BoxSet::from_indices(n, e.covers.iter().copied())?);
        }
        Ok(CoverageCost {
            n,
            elements,
            covers,
        })
    }

    pub fn elements(&self) -> &[CoverElement] {
        &self.elements
    }
}

impl CostOracle for CoverageCost {
    fn arity(&self) -> usize {
        self.n
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        self.elements
            .iter()
            .zip(&self.covers)
            .filter(|(_, g)| !g.is_disjoint(set))
            .fold(Rational::zero(), |acc, (e, _)| acc + &e.weight)
    }
}

impl From<CoverageCost> for CoverageRepr {
    fn from(c: CoverageCost) -> Self {
        CoverageRepr {
            n: c.n,
            elements: c.elements,
        }
    }
}

impl TryFrom<CoverageRepr> for CoverageCost {
    type Error = Error;
    fn try_from(r: CoverageRepr) -> Result<Self> {
        CoverageCost::new(r.n, r.elements)
    }
}

/// `c(S) = max_t Σ_{i∈S} a^t_i`, the max of non-negative additive clauses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "XosRepr", into = "XosRepr")]
pub struct XosCost {
    n: usize,
    clauses: Vec<Vec<Rational>>,
}

#[derive(Serialize, Deserialize)]
struct XosRepr {
    n: usize,
    clauses: Vec<Vec<String>>,
}

impl XosCost {
    pub fn new(n: usize, clauses: Vec<Vec<Rational>>) -> Result<Self> {
        for (t, a) in clauses.iter().enumerate() {
            if a.len() != n {
                return domain(format!("XOS clause {t} has {} entries, n = {n}", a.len()));
            }
            check_nonneg(&format!("XOS clause {t}"), a)?;
        }
        Ok(XosCost { n, clauses })
    }

    pub fn clauses(&self) -> &[Vec<Rational>] {
        &self.clauses
    }

    /// Value of clause `t` on `set`.
    pub fn clause_value(&self, t: usize, set: &BoxSet) -> Rational {
        sum_over(&self.clauses[t], set)
    }
}

impl CostOracle for XosCost {
    fn arity(&self) -> usize {
        self.n
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        (0..self.clauses.len())
            .map(|t| self.clause_value(t, set))
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

impl From<XosCost> for XosRepr {
    fn from(c: XosCost) -> Self {
        XosRepr {
            n: c.n,
            clauses: c
                .clauses
                .iter()
                .map(|a| a.iter().map(format_rational).collect())
                .collect(),
        }
    }
}

impl TryFrom<XosRepr> for XosCost {
    type Error = Error;
    fn try_from(r: XosRepr) -> Result<Self> {
        let clauses = r
            .clauses
            .iter()
            .map(|a| a.iter().map(|s| parse_rational(s)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        XosCost::new(r.n, clauses)
    }
}

/// Precedence-tree cost: `c(S)` sums node costs over the root-connected
/// closure of `S`.
///
/// Nodes are `0..=n`: node 0 is the auxiliary root (cost 0), node `k + 1`
/// is box `k`. `parents[k]` is the parent of node `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct TreeClosureCost {
    parents: Vec<usize>,
    costs: Vec<Rational>,
    /// Node set of the root path of each box, root excluded.
    paths: Vec<FixedBitSet>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    parents: Vec<usize>,
    #[serde(with = "serde_q_vec")]
    costs: Vec<Rational>,
}

impl TreeClosureCost {
    pub fn new(parents: Vec<usize>, costs: Vec<Rational>) -> Result<Self> {
        let n = parents.len();
        if costs.len() != n {
            return domain(format!(
                "tree cost: {} parents but {} node costs",
                n,
                costs.len()
            ));
        }
        check_nonneg("tree node costs", &costs)?;
        let mut paths = Vec::with_capacity(n);
        for k in 0..n {
            let mut path = FixedBitSet::with_capacity(n + 1);
            let mut node = k + 1;
            let mut steps = 0;
            while node != 0 {
                if steps > n {
                    return domain(format!("tree cost: node {} lies on a cycle", k + 1));
                }
                path.insert(node);
                let parent = parents[node - 1];
                if parent > n {
                    return domain(format!("tree cost: parent {parent} of node {node} out of range"));
                }
                node = parent;
                steps += 1;
            }
            paths.push(path);
        }
        Ok(TreeClosureCost {
            parents,
            costs,
            paths,
        })
    }

    /// Path `0 → 1 → … → n`.
    pub fn path(costs: Vec<Rational>) -> Result<Self> {
        Self::new((0..costs.len()).collect(), costs)
    }

    /// Every box hangs directly off the root.
    pub fn star(costs: Vec<Rational>) -> Result<Self> {
        Self::new(vec![0; costs.len()], costs)
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn node_costs(&self) -> &[Rational] {
        &self.costs
    }

    /// Minimal root-connected node set containing `nodes`; always contains 0.
    pub fn closure(&self, nodes: &[usize]) -> Result<BTreeSet<usize>> {
        let n = self.parents.len();
        let mut out = BTreeSet::from([0]);
        for &v in nodes {
            if v > n {
                return domain(format!("node {v} is not in a tree with nodes 0..={n}"));
            }
            if v > 0 {
                out.extend(self.paths[v - 1].ones());
            }
        }
        Ok(out)
    }
}

impl CostOracle for TreeClosureCost {
    fn arity(&self) -> usize {
        self.parents.len()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        let mut closed = FixedBitSet::with_capacity(self.parents.len() + 1);
        for k in set.iter() {
            closed.union_with(&self.paths[k]);
        }
        closed
            .ones()
            .fold(Rational::zero(), |acc, v| acc + &self.costs[v - 1])
    }
}

impl From<TreeClosureCost> for TreeRepr {
    fn from(c: TreeClosureCost) -> Self {
        TreeRepr {
            parents: c.parents,
            costs: c.costs,
        }
    }
}

impl TryFrom<TreeRepr> for TreeClosureCost {
    type Error = Error;
    fn try_from(r: TreeRepr) -> Result<Self> {
        TreeClosureCost::new(r.parents, r.costs)
    }
}

/// The lower-bound family: `c₀(S) = min(|S|, α)` and
/// `c_R(S) = min(|S|, α, β + |S ∖ R|)` for a planted `R` with `|R| = α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HardnessRepr", into = "HardnessRepr")]
pub struct HardnessCost {
    n: usize,
    alpha: usize,
    beta: usize,
    planted: Option<BoxSet>,
}

#[derive(Serialize, Deserialize)]
struct HardnessRepr {
    n: usize,
    alpha: usize,
    beta: usize,
    #[serde(default)]
    planted: Option<Vec<usize>>,
}

impl HardnessCost {
    fn check(n: usize, alpha: usize, beta: usize) -> Result<()> {
        if beta >= alpha {
            return domain(format!("hardness cost needs β < α, got α = {alpha}, β = {beta}"));
        }
        if alpha > n {
            return domain(format!("hardness cost needs α <= n, got α = {alpha}, n = {n}"));
        }
        Ok(())
    }

    pub fn baseline(n: usize, alpha: usize, beta: usize) -> Result<Self> {
        Self::check(n, alpha, beta)?;
        Ok(HardnessCost {
            n,
            alpha,
            beta,
            planted: None,
        })
    }

    pub fn planted(n: usize, alpha: usize, beta: usize, r: BoxSet) -> Result<Self> {
        Self::check(n, alpha, beta)?;
        if r.arity() != n || r.len() != alpha {
            return domain(format!(
                "planted set must have α = {alpha} boxes out of {n}, got {} of {}",
                r.len(),
                r.arity()
            ));
        }
        Ok(HardnessCost {
            n,
            alpha,
            beta,
            planted: Some(r),
        })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn planted_set(&self) -> Option<&BoxSet> {
        self.planted.as_ref()
    }

    /// Integer cost of `set` without allocating a rational.
    pub fn count_cost(&self, set: &BoxSet) -> usize {
        let s = set.len();
        let base = s.min(self.alpha);
        match &self.planted {
            None => base,
            Some(r) => base.min(self.beta + set.difference_count(r)),
        }
    }
}

impl CostOracle for HardnessCost {
    fn arity(&self) -> usize {
        self.n
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        int(self.count_cost(set) as i64)
    }
}

impl From<HardnessCost> for HardnessRepr {
    fn from(c: HardnessCost) -> Self {
        HardnessRepr {
            n: c.n,
            alpha: c.alpha,
            beta: c.beta,
            planted: c.planted.map(|r| r.to_vec()),
        }
    }
}

impl TryFrom<HardnessRepr> for HardnessCost {
    type Error = Error;
    fn try_from(r: HardnessRepr) -> Result<Self> {
        match r.planted {
            None => HardnessCost::baseline(r.n, r.alpha, r.beta),
            Some(items) => {
                let set = BoxSet::from_indices(r.n, items.iter().copied())?;
                if set.len() != items.len() {
                    return domain("planted set lists a box twice");
                }
                HardnessCost::planted(r.n, r.alpha, r.beta, set)
            }
        }
    }
}

/// `c'(S) = c({owners[k] : k ∈ S})`: a cost on copies of the base boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectedRepr", into = "ProjectedRepr")]
pub struct ProjectedCost {
    base: Box<CostSpec>,
    owners: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ProjectedRepr {
    base: Box<CostSpec>,
    owners: Vec<usize>,
}

impl ProjectedCost {
    pub fn new(base: CostSpec, owners: Vec<usize>) -> Result<Self> {
        let m = base.arity();
        if let Some(&o) = owners.iter().find(|&&o| o >= m) {
            return domain(format!("projected cost: owner {o} out of range for base arity {m}"));
        }
        Ok(ProjectedCost {
            base: Box::new(base),
            owners,
        })
    }

    pub fn base(&self) -> &CostSpec {
        &self.base
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn project(&self, set: &BoxSet) -> BoxSet {
        let mut out = BoxSet::empty(self.base.arity());
        for k in set.iter() {
            out.insert(self.owners[k]);
        }
        out
    }
}

impl CostOracle for ProjectedCost {
    fn arity(&self) -> usize {
        self.owners.len()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        self.base.cost_of(&self.project(set))
    }
}

impl From<ProjectedCost> for ProjectedRepr {
    fn from(c: ProjectedCost) -> Self {
        ProjectedRepr {
            base: c.base,
            owners: c.owners,
        }
    }
}

impl TryFrom<ProjectedRepr> for ProjectedCost {
    type Error = Error;
    fn try_from(r: ProjectedRepr) -> Result<Self> {
        ProjectedCost::new(*r.base, r.owners)
    }
}
