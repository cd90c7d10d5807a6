//! Combinatorial cost functions `c: 2^[n] -> Q>=0`.
//!
//! All oracles are normalized and monotone; concrete families enforce this at
//! construction. Oracles are immutable and can be evaluated concurrently.

mod families;
mod lift;
mod validate;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use families::{
    AdditiveCost, BudgetAdditiveCost, CoverElement, CoverageCost, ExplicitCost, HardnessCost,
    ProjectedCost, TreeClosureCost, XosCost,
};
pub use lift::{lift_coverage_certificate, lift_xos_certificate, xos_lift};
pub use validate::{
    budget_additive_representation, check_coverage_certificate, check_xos_certificate,
    validate_class, validate_class_with, CostClass, Validation, Witness,
};

use crate::boxset::BoxSet;
use crate::error::{domain, Error, Result};
use crate::limits::Limits;
use crate::rational::Rational;

/// Value-query access to a set function over `[arity]`.
pub trait CostOracle: Send + Sync {
    fn arity(&self) -> usize;

    /// Evaluates `c(set)`; `set.arity() == self.arity()` is assumed.
    fn cost_of(&self, set: &BoxSet) -> Rational;

    fn eval(&self, set: &BoxSet) -> Result<Rational> {
        if set.arity() != self.arity() {
            return domain(format!(
                "set over {} boxes queried on an oracle of arity {}",
                set.arity(),
                self.arity()
            ));
        }
        Ok(self.cost_of(set))
    }
}

impl<T: CostOracle + ?Sized> CostOracle for &T {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn cost_of(&self, set: &BoxSet) -> Rational {
        (**self).cost_of(set)
    }
}

impl<T: CostOracle + ?Sized> CostOracle for Box<T> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn cost_of(&self, set: &BoxSet) -> Rational {
        (**self).cost_of(set)
    }
}

impl<T: CostOracle + ?Sized> CostOracle for Arc<T> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn cost_of(&self, set: &BoxSet) -> Rational {
        (**self).cost_of(set)
    }
}

/// `c(S ∪ T) − c(T)` for disjoint `S`, `T`.
pub fn marginal_cost(oracle: &dyn CostOracle, s: &BoxSet, t: &BoxSet) -> Result<Rational> {
    if !s.is_disjoint(t) {
        return domain(format!("marginal of {s:?} given overlapping {t:?}"));
    }
    Ok(oracle.eval(&s.union(t))? - oracle.eval(t)?)
}

/// The marginal function `c(· | T)`.
pub struct MarginalOracle<O> {
    inner: O,
    given: BoxSet,
    base: Rational,
}

impl<O: CostOracle> MarginalOracle<O> {
    pub fn new(inner: O, given: BoxSet) -> Result<Self> {
        let base = inner.eval(&given)?;
        Ok(MarginalOracle { inner, given, base })
    }
}

impl<O: CostOracle> CostOracle for MarginalOracle<O> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        self.inner.cost_of(&set.union(&self.given)) - &self.base
    }
}

/// Forwards every query to `inner` and tallies it.
pub struct QueryCountingOracle<O> {
    inner: O,
    count: AtomicU64,
}

impl<O: CostOracle> QueryCountingOracle<O> {
    pub fn new(inner: O) -> Self {
        QueryCountingOracle {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: CostOracle> CostOracle for QueryCountingOracle<O> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.cost_of(set)
    }
}

pub fn with_counter<O: CostOracle>(oracle: O) -> QueryCountingOracle<O> {
    QueryCountingOracle::new(oracle)
}

/// Every value of a small oracle, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct CostTable {
    n: usize,
    values: Vec<Rational>,
}

impl CostTable {
    pub const MAX_N: usize = 24;

    pub fn build(oracle: &dyn CostOracle) -> Result<Self> {
        let n = oracle.arity();
        if n > Self::MAX_N {
            return Err(Error::Capability {
                what: "cost table materialization",
                n,
                limit: Self::MAX_N,
            });
        }
        let values = (0..1u64 << n)
            .map(|m| oracle.cost_of(&BoxSet::from_mask(n, m)))
            .collect();
        Ok(CostTable { n, values })
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn get(&self, mask: u32) -> &Rational {
        &self.values[mask as usize]
    }

    /// `c(i | mask)`
    pub fn marginal(&self, i: usize, mask: u32) -> Rational {
        &self.values[(mask | (1 << i)) as usize] - &self.values[mask as usize]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

impl CostOracle for CostTable {
    fn arity(&self) -> usize {
        self.n
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        let mask = set.to_mask().expect("table arity <= 24");
        self.values[mask as usize].clone()
    }
}

/// Serializable cost specification; the tagged-JSON form of every family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    Explicit(ExplicitCost),
    Additive(AdditiveCost),
    BudgetAdditive(BudgetAdditiveCost),
    Coverage(CoverageCost),
    Xos(XosCost),
    Tree(TreeClosureCost),
    Hardness(HardnessCost),
    Projected(ProjectedCost),
}

impl CostSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CostSpec::Explicit(_) => "explicit",
            CostSpec::Additive(_) => "additive",
            CostSpec::BudgetAdditive(_) => "budget_additive",
            CostSpec::Coverage(_) => "coverage",
            CostSpec::Xos(_) => "xos",
            CostSpec::Tree(_) => "tree",
            CostSpec::Hardness(_) => "hardness",
            CostSpec::Projected(_) => "projected",
        }
    }

    fn as_oracle(&self) -> &dyn CostOracle {
        match self {
            CostSpec::Explicit(c) => c,
            CostSpec::Additive(c) => c,
            CostSpec::BudgetAdditive(c) => c,
            CostSpec::Coverage(c) => c,
            CostSpec::Xos(c) => c,
            CostSpec::Tree(c) => c,
            CostSpec::Hardness(c) => c,
            CostSpec::Projected(c) => c,
        }
    }
}

impl CostOracle for CostSpec {
    fn arity(&self) -> usize {
        self.as_oracle().arity()
    }

    fn cost_of(&self, set: &BoxSet) -> Rational {
        self.as_oracle().cost_of(set)
    }
}

macro_rules! spec_from {
    ($($t:ident => $v:ident),*) => {
        $(impl From<$t> for CostSpec {
            fn from(c: $t) -> Self {
                CostSpec::$v(c)
            }
        })*
    };
}

spec_from!(
    ExplicitCost => Explicit,
    AdditiveCost => Additive,
    BudgetAdditiveCost => BudgetAdditive,
    CoverageCost => Coverage,
    XosCost => Xos,
    TreeClosureCost => Tree,
    HardnessCost => Hardness,
    ProjectedCost => Projected
);

/// Applies `limits` to a named exhaustive check.
pub(crate) fn require_n(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::Capability { what, n, limit })
    } else {
        Ok(())
    }
}

pub(crate) fn default_limits() -> Limits {
    Limits::from_env()
}
