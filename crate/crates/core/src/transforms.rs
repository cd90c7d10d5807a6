//! Discretization with a tail cap, Bernoullification, the strategy
//! correspondence back to the original instance, and class-preservation checks.

use num_traits::{Signed, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::cost::{
    budget_additive_representation, check_coverage_certificate, check_xos_certificate,
    lift_coverage_certificate, lift_xos_certificate, validate_class_with, CostSpec, ProjectedCost,
    Witness,
};
use crate::error::{domain, Error, Result};
use crate::instances::{support_union, ClassTag, FiniteDistribution, Instance};
use crate::limits::Limits;
use crate::rational::{format_rational, parse_rational, serde_q, Rational};
use crate::solvers::{excess_inverse, optimal_thresholds_partial};
use crate::strategies::{eval_fixed_order, eval_impulsive, FixedOrderThresholds, ImpulsiveStrategy};

/// `ε` and the cap `κ_ε`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscretizationParams {
    #[serde(with = "serde_q")]
    pub epsilon: Rational,
    #[serde(with = "serde_q")]
    pub kappa: Rational,
}

impl DiscretizationParams {
    pub fn new(inst: &Instance, epsilon: Rational) -> Result<Self> {
        let kappa = kappa_epsilon(inst, &epsilon)?;
        Ok(DiscretizationParams { epsilon, kappa })
    }

    /// `ε·⌊min(v, κ)/ε⌋`
    pub fn map(&self, v: &Rational) -> Rational {
        let capped = if *v < self.kappa { v } else { &self.kappa };
        (capped / &self.epsilon).floor() * &self.epsilon
    }
}

/// Least `κ ≥ 0` with `Σ_i E[(V_i − κ)⁺] ≤ ε`, solved exactly on the merged
/// breakpoints of all boxes.
pub fn kappa_epsilon(inst: &Instance, epsilon: &Rational) -> Result<Rational> {
    if !epsilon.is_positive() {
        return domain(format!("epsilon must be positive, got {epsilon}"));
    }
    let mut atoms: Vec<(Rational, Rational)> = inst
        .boxes
        .iter()
        .flat_map(|d| d.atoms().iter().cloned())
        .collect();
    atoms.sort();
    let total: Rational = inst.boxes.iter().map(FiniteDistribution::expectation).sum();
    if total <= *epsilon {
        return Ok(Rational::zero());
    }
    Ok(excess_inverse(&atoms, epsilon))
}

/// Caps every value at `κ_ε` and floors it to the `ε` grid; the cost is kept.
pub fn discretize(inst: &Instance, epsilon: &Rational) -> Result<Instance> {
    let params = DiscretizationParams::new(inst, epsilon.clone())?;
    discretize_with(inst, &params)
}

pub fn discretize_with(inst: &Instance, params: &DiscretizationParams) -> Result<Instance> {
    let boxes = inst
        .boxes
        .iter()
        .map(|d| d.map_values(|v| params.map(v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        boxes,
        cost: inst.cost.clone(),
        class: inst.class,
    })
}

/// One lifted box: copy `(owner, grid)` of original box `owner` at support
/// value `value`, opened with weight `weight`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedCopy {
    pub owner: usize,
    /// Index of `value` in the support union of the original instance.
    pub grid: usize,
    pub value: Rational,
    pub weight: Rational,
}

/// Lifted box `k` is `pairs[k]`; copies with value or weight 0 are absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoullificationMap {
    pub pairs: Vec<LiftedCopy>,
}

impl BernoullificationMap {
    pub fn owners(&self) -> Vec<usize> {
        self.pairs.iter().map(|c| c.owner).collect()
    }
}

impl Serialize for BernoullificationMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            pairs: Pairs<'a>,
        }
        struct Pairs<'a>(&'a [LiftedCopy]);
        impl Serialize for Pairs<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.len()))?;
                for c in self.0 {
                    seq.serialize_element(&(
                        c.owner,
                        c.grid,
                        format_rational(&c.value),
                        format_rational(&c.weight),
                    ))?;
                }
                seq.end()
            }
        }
        Repr { pairs: Pairs(&self.pairs) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BernoullificationMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            pairs: Vec<(usize, usize, String, String)>,
        }
        let pairs = Repr::deserialize(d)?
            .pairs
            .into_iter()
            .map(|(owner, grid, v, w)| {
                Ok(LiftedCopy {
                    owner,
                    grid,
                    value: parse_rational(&v).map_err(de::Error::custom)?,
                    weight: parse_rational(&w).map_err(de::Error::custom)?,
                })
            })
            .collect::<std::result::Result<_, D::Error>>()?;
        Ok(BernoullificationMap { pairs })
    }
}

/// Replaces box `i` by independent Bernoulli copies, one per nonzero support
/// value `v`, with weight `P(V_i = v)/P(V_i ≤ v)`; the lifted cost charges
/// `c` of the set of owners. The maximum of box `i`'s copies has law `D_i`.
pub fn bernoullify(inst: &Instance) -> Result<(Instance, BernoullificationMap)> {
    let grid = support_union(&inst.boxes);
    let mut pairs = Vec::new();
    for (i, d) in inst.boxes.iter().enumerate() {
        let mut at_most = Rational::zero();
        for (v, p) in d.atoms() {
            at_most += p;
            if v.is_zero() || p.is_zero() {
                continue;
            }
            pairs.push(LiftedCopy {
                owner: i,
                grid: grid.binary_search(v).expect("value is on the grid"),
                value: v.clone(),
                weight: p / &at_most,
            });
        }
    }
    let boxes = pairs
        .iter()
        .map(|c| FiniteDistribution::bernoulli(c.value.clone(), c.weight.clone()))
        .collect::<Result<Vec<_>>>()?;
    let map = BernoullificationMap { pairs };
    let cost = ProjectedCost::new(inst.cost.clone(), map.owners())?;
    // Enumeration-decided classes survive the lift; certificate classes
    // describe a cost kind the lifted instance no longer has.
    let class = inst.class.filter(|t| t.validator().is_some());
    let lifted = Instance {
        boxes,
        cost: cost.into(),
        class,
    };
    Ok((lifted, map))
}

/// A pulled-back strategy and both utilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullBack {
    pub strategy: FixedOrderThresholds,
    #[serde(with = "serde_q")]
    pub original_utility: Rational,
    #[serde(with = "serde_q")]
    pub lifted_utility: Rational,
}

/// Opens original boxes in the order of their first copy in `lifted_pi`,
/// with optimal thresholds for that order; boxes `lifted_pi` never touches
/// are not opened. Fails if the result is worse than `lifted_pi` on the
/// lifted instance.
pub fn pull_back_strategy(
    original: &Instance,
    lifted: &Instance,
    map: &BernoullificationMap,
    lifted_pi: &ImpulsiveStrategy,
) -> Result<PullBack> {
    if lifted.n() != map.pairs.len() {
        return domain(format!(
            "map has {} copies but the lifted instance has {} boxes",
            map.pairs.len(),
            lifted.n()
        ));
    }
    if let Some(&k) = lifted_pi.order.iter().find(|&&k| k >= map.pairs.len()) {
        return domain(format!("lifted box {k} does not exist (dropped or out of range)"));
    }
    let lifted_utility = eval_impulsive(lifted, lifted_pi)?;
    let mut order: Vec<usize> = Vec::new();
    for &k in &lifted_pi.order {
        let owner = map.pairs[k].owner;
        if owner >= original.n() {
            return domain(format!("copy {k} belongs to box {owner}, n = {}", original.n()));
        }
        if !order.contains(&owner) {
            order.push(owner);
        }
    }
    let (strategy, _) = optimal_thresholds_partial(original, &order)?;
    let original_utility = eval_fixed_order(original, &strategy)?;
    if original_utility < lifted_utility {
        return Err(Error::Internal(format!(
            "pulled-back strategy earns {original_utility} < {lifted_utility} on the lifted instance"
        )));
    }
    Ok(PullBack {
        strategy,
        original_utility,
        lifted_utility,
    })
}

/// Outcome of checking one class on a Bernoullified cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreservationReport {
    pub class: ClassTag,
    pub lifted_boxes: usize,
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// Bernoullifies `inst` and checks that the lifted cost is still in `class`:
/// by enumeration for validator classes, by lifting the certificate for
/// coverage and XOS, and by the representability search for budget-additive.
pub fn check_preservation(inst: &Instance, class: ClassTag) -> Result<PreservationReport> {
    check_preservation_with(inst, class, &Limits::from_env())
}

pub fn check_preservation_with(
    inst: &Instance,
    class: ClassTag,
    limits: &Limits,
) -> Result<PreservationReport> {
    let (lifted, map) = bernoullify(inst)?;
    let owners = map.owners();
    let witness = match class {
        ClassTag::Coverage => {
            let CostSpec::Coverage(cert) = &inst.cost else {
                return domain(format!("coverage check needs a coverage cost, got {}", inst.cost.kind()));
            };
            check_coverage_certificate(&lifted.cost, &lift_coverage_certificate(cert, &owners)?)?
        }
        ClassTag::Xos => {
            let CostSpec::Xos(cert) = &inst.cost else {
                return domain(format!("XOS check needs an XOS cost, got {}", inst.cost.kind()));
            };
            check_xos_certificate(&lifted.cost, &lift_xos_certificate(cert, &owners)?)?
        }
        ClassTag::BudgetAdditive => match budget_additive_representation(&lifted.cost)? {
            Some(_) => None,
            None => Some(Witness::NotBudgetAdditive),
        },
        ClassTag::Additive | ClassTag::General => {
            return domain(format!("no preservation check for class {class}"));
        }
        _ => {
            let validator = class.validator().expect("remaining tags have validators");
            validate_class_with(&lifted.cost, validator, limits)?.witness
        }
    };
    Ok(PreservationReport {
        class,
        lifted_boxes: lifted.n(),
        pass: witness.is_none(),
        witness,
    })
}

/// `true` if `x` is an integer multiple of `eps`.
pub fn on_grid(x: &Rational, eps: &Rational) -> bool {
    (x / eps).is_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostOracle, CoverElement, CoverageCost, XosCost};
    use crate::instances::canonical;
    use crate::rational::{int, ratio};
    use crate::BoxSet;

    fn one_box(d: FiniteDistribution) -> Instance {
        Instance::new(vec![d], crate::cost::AdditiveCost::new(vec![int(1)]).unwrap()).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let half10 = one_box(FiniteDistribution::bernoulli(int(10), ratio(1, 2)).unwrap());
        assert_eq!(kappa_epsilon(&half10, &int(1)).unwrap(), int(8));
        assert_eq!(kappa_epsilon(&half10, &int(5)).unwrap(), int(0));
        assert_eq!(kappa_epsilon(&half10, &int(1000)).unwrap(), int(0));
        assert!(kappa_epsilon(&half10, &int(0)).is_err());
        // Two boxes: below 4 the tail sum is 7 − κ.
        let two = Instance::new(
            vec![
                FiniteDistribution::bernoulli(int(10), ratio(1, 2)).unwrap(),
                FiniteDistribution::bernoulli(int(4), ratio(1, 2)).unwrap(),
            ],
            crate::cost::AdditiveCost::new(vec![int(1), int(1)]).unwrap(),
        )
        .unwrap();
        assert_eq!(kappa_epsilon(&two, &int(4)).unwrap(), int(3));
    }

    #[test]
    fn discretize_examples() {
        let half10 = one_box(FiniteDistribution::bernoulli(int(10), ratio(1, 2)).unwrap());
        let eps = int(1);
        let d = discretize(&half10, &eps).unwrap();
        assert_eq!(d.boxes[0].atoms(), &[(int(0), ratio(1, 2)), (int(8), ratio(1, 2))]);
        // κ = 4 for ε = 3, so 10 ↦ 3.
        let d3 = discretize(&half10, &int(3)).unwrap();
        assert_eq!(d3.boxes[0].max_value(), &int(3));
        // κ = 599/50 caps the 12; the on-grid 10s below κ are unchanged.
        let e = canonical::example1();
        let d = discretize(&e, &ratio(1, 100)).unwrap();
        assert_eq!((&d.boxes[0], &d.boxes[2]), (&e.boxes[0], &e.boxes[2]));
        assert_eq!(d.boxes[1].max_value(), &ratio(599, 50));
    }

    #[test]
    fn bernoullify_weights() {
        let b = one_box(FiniteDistribution::bernoulli(int(7), ratio(2, 5)).unwrap());
        let (l, map) = bernoullify(&b).unwrap();
        assert_eq!(l.n(), 1);
        assert_eq!(map.pairs[0].weight, ratio(2, 5));
        let third = ratio(1, 3);
        let three = one_box(
            FiniteDistribution::new(vec![(int(0), third.clone()), (int(1), third.clone()), (int(2), third)]).unwrap(),
        );
        let (l, map) = bernoullify(&three).unwrap();
        assert_eq!(l.n(), 2);
        assert_eq!(
            map.pairs.iter().map(|c| c.weight.clone()).collect::<Vec<_>>(),
            vec![ratio(1, 2), ratio(1, 3)]
        );
        assert_eq!(FiniteDistribution::max_of(&l.boxes).unwrap(), three.boxes[0]);
    }

    #[test]
    fn map_json_shape() {
        let (_, map) = bernoullify(&canonical::subadditive4()).unwrap();
        let js = serde_json::to_string(&map).unwrap();
        assert_eq!(
            js,
            r#"{"pairs":[[0,2,"5/2","1/2"],[0,5,"100","1/3"],[1,1,"2","1"],[2,3,"3","1/2"],[3,4,"6","1/2"]]}"#
        );
        let back: BernoullificationMap = serde_json::from_str(&js).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn lifted_cost_projects() {
        let inst = canonical::subadditive4();
        let (l, map) = bernoullify(&inst).unwrap();
        let owners = map.owners();
        let n = l.n();
        for m in 0..1u64 << n {
            let s = BoxSet::from_mask(n, m);
            let proj = BoxSet::from_indices(4, s.iter().map(|k| owners[k])).unwrap();
            assert_eq!(l.cost.cost_of(&s), inst.cost.cost_of(&proj));
        }
    }

    #[test]
    fn pull_back_first_copy_order() {
        let inst = canonical::subadditive4();
        let (l, map) = bernoullify(&inst).unwrap();
        // Copies: 0 → (0: 5/2), 1 → (0: 100), 2 → box 1, 3 → box 2, 4 → box 3.
        assert_eq!(map.owners(), vec![0, 0, 1, 2, 3]);
        let pi = ImpulsiveStrategy::new(vec![3, 1, 0]);
        let pb = pull_back_strategy(&inst, &l, &map, &pi).unwrap();
        assert_eq!(&pb.strategy.sigma[..2], &[2, 0]);
        assert!(pb.original_utility >= pb.lifted_utility);
        let empty = pull_back_strategy(&inst, &l, &map, &ImpulsiveStrategy::empty()).unwrap();
        assert_eq!((empty.original_utility, empty.lifted_utility), (int(0), int(0)));
        assert!(pull_back_strategy(&inst, &l, &map, &ImpulsiveStrategy::new(vec![9])).is_err());
    }

    #[test]
    fn preservation_checks() {
        let cov = CoverageCost::new(
            2,
            vec![
                CoverElement { weight: int(1), covers: vec![0, 1] },
                CoverElement { weight: int(2), covers: vec![1] },
            ],
        )
        .unwrap();
        let d = FiniteDistribution::new(vec![(int(1), ratio(1, 2)), (int(3), ratio(1, 2))]).unwrap();
        let inst = Instance::new(vec![d.clone(), d.clone()], cov).unwrap();
        assert!(check_preservation(&inst, ClassTag::Coverage).unwrap().pass);
        assert!(check_preservation(&inst, ClassTag::Submodular).unwrap().pass);
        let xos = XosCost::new(2, vec![vec![int(1), int(0)], vec![int(0), int(2)]]).unwrap();
        let inst = Instance::new(vec![d.clone(), d], xos).unwrap();
        assert!(check_preservation(&inst, ClassTag::Xos).unwrap().pass);
        let ba = check_preservation(&canonical::budget_additive_pair_split(), ClassTag::BudgetAdditive).unwrap();
        assert_eq!((ba.pass, ba.lifted_boxes), (false, 6));
    }
}
