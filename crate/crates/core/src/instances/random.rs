//! Seeded random instance families with a guaranteed cost class.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClassTag, FiniteDistribution, Instance};
use crate::boxset::BoxSet;
use crate::cost::{
    validate_class, AdditiveCost, CostClass, CostSpec, CoverElement, CoverageCost, ExplicitCost,
    HardnessCost, TreeClosureCost,
};
use crate::error::{domain, Error, Result};
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    BernoulliCoverage,
    BernoulliTree,
    BernoulliHardness,
    BernoulliAdditive,
    GeneralCoverage,
    GeneralTree,
    Additive,
    ExplicitSubadditive,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::BernoulliCoverage,
        Family::BernoulliTree,
        Family::BernoulliHardness,
        Family::BernoulliAdditive,
        Family::GeneralCoverage,
        Family::GeneralTree,
        Family::Additive,
        Family::ExplicitSubadditive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::BernoulliCoverage => "bernoulli_coverage",
            Family::BernoulliTree => "bernoulli_tree",
            Family::BernoulliHardness => "bernoulli_hardness",
            Family::BernoulliAdditive => "bernoulli_additive",
            Family::GeneralCoverage => "general_coverage",
            Family::GeneralTree => "general_tree",
            Family::Additive => "additive",
            Family::ExplicitSubadditive => "explicit_subadditive",
        }
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(
            self,
            Family::BernoulliCoverage
                | Family::BernoulliTree
                | Family::BernoulliHardness
                | Family::BernoulliAdditive
        )
    }

    /// Class every member of the family belongs to.
    pub fn guaranteed_class(self) -> CostClass {
        match self {
            Family::ExplicitSubadditive => CostClass::Subadditive,
            _ => CostClass::Submodular,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown instance family {s:?}")))
    }
}

/// Shape knobs for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    /// Atoms per box in the general families.
    pub max_atoms: usize,
    /// Values are integers in `1..=max_value` (plus 0 for general boxes).
    pub max_value: i64,
    /// Costs are multiples of `1/cost_denominator` up to `max_cost`.
    pub max_cost: i64,
    pub cost_denominator: i64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_atoms: 3,
            max_value: 20,
            max_cost: 6,
            cost_denominator: 2,
        }
    }
}

pub const MAX_RANDOM_N: usize = 14;

pub fn random_instance(
    family: Family,
    n: usize,
    seed: u64,
    params: &RandomParams,
) -> Result<Instance> {
    if n > MAX_RANDOM_N {
        return Err(Error::Capability {
            what: "random instance generation",
            n,
            limit: MAX_RANDOM_N,
        });
    }
    if params.max_atoms == 0 || params.max_value < 1 || params.cost_denominator < 1 {
        return domain("random instance parameters must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes: Vec<FiniteDistribution> = (0..n)
        .map(|_| {
            if family.is_bernoulli() {
                random_bernoulli(&mut rng, params)
            } else {
                random_general(&mut rng, params)
            }
        })
        .collect();
    let cost: CostSpec = match family {
        Family::BernoulliCoverage | Family::GeneralCoverage => random_coverage(&mut rng, n, params)?.into(),
        Family::BernoulliTree | Family::GeneralTree => random_tree(&mut rng, n, params)?.into(),
        Family::BernoulliHardness => random_hardness(&mut rng, n)?.into(),
        Family::BernoulliAdditive | Family::Additive => {
            AdditiveCost::new((0..n).map(|_| random_cost(&mut rng, params)).collect())?.into()
        }
        Family::ExplicitSubadditive => random_subadditive(&mut rng, n, params)?.into(),
    };
    let tag = match family.guaranteed_class() {
        CostClass::Subadditive => ClassTag::Subadditive,
        _ => ClassTag::Submodular,
    };
    let inst = Instance::new(boxes, cost)?.with_class(tag);
    let check = validate_class(&inst.cost, family.guaranteed_class())?;
    if let Some(w) = check.witness {
        return Err(Error::Internal(format!(
            "{family} generator produced a cost outside its class: {w}"
        )));
    }
    Ok(inst)
}

fn random_cost(rng: &mut ChaCha8Rng, params: &RandomParams) -> Rational {
    let d = params.cost_denominator;
    ratio(rng.gen_range(0..=params.max_cost * d), d)
}

fn random_prob(rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.gen_range(2..=6);
    ratio(rng.gen_range(1..=den), den)
}

fn random_bernoulli(rng: &mut ChaCha8Rng, params: &RandomParams) -> FiniteDistribution {
    let v = int(rng.gen_range(1..=params.max_value));
    FiniteDistribution::bernoulli(v, random_prob(rng)).expect("p in (0, 1]")
}

fn random_general(rng: &mut ChaCha8Rng, params: &RandomParams) -> FiniteDistribution {
    let k = rng.gen_range(1..=params.max_atoms.min(params.max_value as usize + 1));
    let mut pool: Vec<i64> = (0..=params.max_value).collect();
    pool.shuffle(rng);
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: i64 = weights.iter().sum();
    let atoms = pool[..k]
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| (int(v), ratio(w, total)))
        .collect();
    FiniteDistribution::new(atoms).expect("weights normalize to 1")
}

fn random_coverage(rng: &mut ChaCha8Rng, n: usize, params: &RandomParams) -> Result<CoverageCost> {
    let count = rng.gen_range(1..=(2 * n).max(1));
    let elements = (0..count)
        .map(|_| {
            let covers: Vec<usize> = if n == 0 {
                Vec::new()
            } else {
                let size = rng.gen_range(1..=n.min(3));
                rand::seq::index::sample(rng, n, size).into_vec()
            };
            CoverElement {
                weight: random_cost(rng, params),
                covers,
            }
        })
        .collect();
    CoverageCost::new(n, elements)
}

fn random_tree(rng: &mut ChaCha8Rng, n: usize, params: &RandomParams) -> Result<TreeClosureCost> {
    // Node k + 1 attaches to an earlier node, so the graph is a tree.
    let parents = (0..n).map(|k| rng.gen_range(0..=k)).collect();
    let costs = (0..n).map(|_| random_cost(rng, params)).collect();
    TreeClosureCost::new(parents, costs)
}

fn random_hardness(rng: &mut ChaCha8Rng, n: usize) -> Result<HardnessCost> {
    if n < 2 {
        return domain("bernoulli_hardness needs n >= 2");
    }
    let alpha = rng.gen_range(2..=n);
    let beta = rng.gen_range(1..alpha);
    if rng.gen_bool(0.5) {
        HardnessCost::baseline(n, alpha, beta)
    } else {
        let r = rand::seq::index::sample(rng, n, alpha).into_vec();
        HardnessCost::planted(n, alpha, beta, BoxSet::from_indices(n, r)?)
    }
}

/// Nonempty sets get raw costs in `[1, 2]`, closed upward under max so the
/// table is monotone; any two nonempty costs then dominate any single one.
fn random_subadditive(
    rng: &mut ChaCha8Rng,
    n: usize,
    params: &RandomParams,
) -> Result<ExplicitCost> {
    let d = params.cost_denominator.max(1) * 2;
    let mut table: Vec<Rational> = (0..1usize << n)
        .map(|m| {
            if m == 0 {
                int(0)
            } else {
                ratio(rng.gen_range(d..=2 * d), d)
            }
        })
        .collect();
    for m in 1..1usize << n {
        for i in (0..n).filter(|i| m & (1 << i) != 0) {
            let below = table[m & !(1 << i)].clone();
            if below > table[m] {
                table[m] = below;
            }
        }
    }
    ExplicitCost::new(n, table)
}
