//! Named instances from the literature on combinatorial inspection costs.

use num_traits::One;

use super::{ClassTag, FiniteDistribution, Instance};
use crate::boxset::BoxSet;
use crate::cost::{
    xos_lift, BudgetAdditiveCost, CostOracle, ExplicitCost, HardnessCost, TreeClosureCost,
};
use crate::error::{domain, Error, Result};
use crate::hardness::HardnessParams;
use crate::rational::{int, ratio, Rational};

fn bern(v: Rational, p: Rational) -> FiniteDistribution {
    FiniteDistribution::bernoulli(v, p).expect("valid literal distribution")
}

/// Three boxes: `10` or `0` evenly, `12` or `0` evenly, and a sure `10`.
/// Opening boxes 1 and 2 together costs 20; every other set is free.
pub fn example1() -> Instance {
    let boxes = vec![
        bern(int(10), ratio(1, 2)),
        bern(int(12), ratio(1, 2)),
        FiniteDistribution::point(int(10)),
    ];
    let cost = ExplicitCost::from_fn(3, |s| {
        if s.contains(1) && s.contains(2) {
            int(20)
        } else {
            int(0)
        }
    })
    .expect("monotone table");
    Instance::new(boxes, cost).expect("arity 3")
}

/// Two boxes worth 2 with probability 1/3; any nonempty set costs 1.
pub fn unit_demand_pair() -> Instance {
    let boxes = vec![bern(int(2), ratio(1, 3)), bern(int(2), ratio(1, 3))];
    let cost = ExplicitCost::from_fn(2, |s| if s.is_empty() { int(0) } else { int(1) })
        .expect("monotone table");
    Instance::new(boxes, cost)
        .expect("arity 2")
        .with_class(ClassTag::MatroidRank)
}

/// Four boxes with a subadditive, non-submodular cost on which every
/// fixed-order strategy is strictly suboptimal. Box 0 is free given anything.
pub fn subadditive4() -> Instance {
    let third = ratio(1, 3);
    let boxes = vec![
        FiniteDistribution::new(vec![
            (int(100), third.clone()),
            (ratio(5, 2), third.clone()),
            (int(0), third),
        ])
        .expect("sums to 1"),
        FiniteDistribution::point(int(2)),
        bern(int(3), ratio(1, 2)),
        bern(int(6), ratio(1, 2)),
    ];
    let cost = ExplicitCost::from_fn(4, |s| {
        let (b1, b2, b3) = (s.contains(1), s.contains(2), s.contains(3));
        match (b1, b2, b3) {
            (false, false, false) => int(0),
            (true, true, _) => ratio(21, 10),
            (false, true, _) => ratio(11, 10),
            _ => int(1),
        }
    })
    .expect("monotone table");
    Instance::new(boxes, cost)
        .expect("arity 4")
        .with_class(ClassTag::Subadditive)
}

/// Which cost of the lower-bound family to attach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HardnessVariant {
    Baseline,
    /// Planted set `R`; `None` plants the first `α` boxes.
    Planted(Option<BoxSet>),
}

/// `n` boxes worth `M = 5β` with probability `1/α` each, with the baseline
/// or planted cost of the lower-bound family.
pub fn hardness(params: &HardnessParams, variant: HardnessVariant) -> Result<Instance> {
    let HardnessParams { n, alpha, beta } = *params;
    let cost = match variant {
        HardnessVariant::Baseline => HardnessCost::baseline(n, alpha, beta)?,
        HardnessVariant::Planted(r) => {
            let r = match r {
                Some(r) => r,
                None => BoxSet::from_indices(n, 0..alpha.min(n))?,
            };
            HardnessCost::planted(n, alpha, beta, r)?
        }
    };
    let dist = bern(params.m_value(), params.p());
    Instance::new(vec![dist; n], cost).map(|i| i.with_class(ClassTag::MatroidRank))
}

/// Prepends a box 0 with `V₀ = 2·b·(1 + n·c([n]) + max_i V_i)` for a fair
/// coin `b`, and lifts the cost to `g(S) = n·c([n])·1{S ≠ ∅} + c(S ∖ {0})`.
/// Original box `i` becomes box `i + 1`.
pub fn xos_lift_of(inst: &Instance) -> Result<Instance> {
    let n = inst.n();
    let top = int(n as i64) * inst.cost.eval(&BoxSet::full(n))?;
    let shift = Rational::one() + top;
    let max = FiniteDistribution::max_of(&inst.boxes)?;
    let half = ratio(1, 2);
    let mut atoms: Vec<(Rational, Rational)> = max
        .atoms()
        .iter()
        .map(|(v, p)| (int(2) * (&shift + v), p * &half))
        .collect();
    atoms.push((int(0), half));
    let mut boxes = vec![FiniteDistribution::new(atoms)?];
    boxes.extend(inst.boxes.iter().cloned());
    let cost = xos_lift(&inst.cost)?;
    Ok(Instance::new(boxes, cost)?.with_class(ClassTag::Xos))
}

/// Three boxes with two nonzero values each and `c(S) = min(|S|, 2)`; its
/// Bernoullification is not budget additive.
pub fn budget_additive_pair_split() -> Instance {
    let dist = FiniteDistribution::new(vec![(int(1), ratio(1, 2)), (int(2), ratio(1, 2))])
        .expect("sums to 1");
    let cost = BudgetAdditiveCost::new(vec![int(1); 3], int(2)).expect("valid");
    Instance::new(vec![dist; 3], cost)
        .expect("arity 3")
        .with_class(ClassTag::BudgetAdditive)
}

/// Path-and-branch precedence tree `0 → 1 → {2, 3}` with unit node costs
/// and Bernoulli boxes; its closure cost is gross substitutes.
pub fn tree_closure() -> Instance {
    let boxes = vec![
        bern(int(4), ratio(1, 2)),
        bern(int(9), ratio(1, 3)),
        bern(int(7), ratio(1, 2)),
    ];
    let cost = TreeClosureCost::new(vec![0, 1, 1], vec![int(1), int(1), int(1)]).expect("tree");
    Instance::new(boxes, cost)
        .expect("arity 3")
        .with_class(ClassTag::GrossSubstitutes)
}

/// Parses `example1`, `unit_demand_pair`, `subadditive4`,
/// `budget_additive_pair_split`, `tree_closure`, `xos_lift_of(NAME)` and
/// `hardness(n=N[,alpha=A,beta=B][,planted])`.
pub fn canonical(name: &str) -> Result<Instance> {
    let name = name.trim();
    if let Some(inner) = name
        .strip_prefix("xos_lift_of(")
        .and_then(|s| s.strip_suffix(')'))
    {
        return xos_lift_of(&canonical(inner)?);
    }
    if let Some(args) = name
        .strip_prefix("hardness(")
        .and_then(|s| s.strip_suffix(')'))
    {
        return parse_hardness(args);
    }
    match name {
        "example1" => Ok(example1()),
        "unit_demand_pair" => Ok(unit_demand_pair()),
        "subadditive4" => Ok(subadditive4()),
        "budget_additive_pair_split" => Ok(budget_additive_pair_split()),
        "tree_closure" => Ok(tree_closure()),
        _ => domain(format!("unknown canonical instance {name:?}")),
    }
}

fn parse_hardness(args: &str) -> Result<Instance> {
    let (mut n, mut alpha, mut beta, mut planted) = (None, None, None, false);
    for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad hardness argument {part:?}")))
        };
        match part.split_once('=') {
            Some(("n", v)) => n = Some(parse(v)?),
            Some(("alpha", v)) => alpha = Some(parse(v)?),
            Some(("beta", v)) => beta = Some(parse(v)?),
            None if part == "planted" => planted = true,
            None if part == "baseline" => planted = false,
            _ => return Err(Error::Parse(format!("bad hardness argument {part:?}"))),
        }
    }
    let n = n.ok_or_else(|| Error::Parse("hardness(...) needs n=N".into()))?;
    let params = match (alpha, beta) {
        (Some(a), Some(b)) => HardnessParams::with_overrides(n, a, b)?,
        (None, None) => HardnessParams::new(n)?,
        _ => return Err(Error::Parse("give both alpha and beta or neither".into())),
    };
    let variant = if planted {
        HardnessVariant::Planted(None)
    } else {
        HardnessVariant::Baseline
    };
    hardness(&params, variant)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, xs: &[usize]) -> BoxSet {
        BoxSet::from_indices(n, xs.iter().copied()).unwrap()
    }

    #[test]
    fn example1_costs() {
        let e = example1();
        assert_eq!(e.cost.eval(&BoxSet::full(3)).unwrap(), int(20));
        assert_eq!(e.cost.eval(&set(3, &[1, 2])).unwrap(), int(20));
        assert_eq!(e.cost.eval(&set(3, &[0, 2])).unwrap(), int(0));
    }

    #[test]
    fn unit_demand_values() {
        let u = unit_demand_pair();
        let b = u.bernoulli_boxes().unwrap();
        assert!(b.iter().all(|b| b.value == int(2) && b.prob == ratio(1, 3)));
        assert_eq!(u.cost.eval(&set(2, &[0])).unwrap(), int(1));
        assert_eq!(u.cost.eval(&BoxSet::full(2)).unwrap(), int(1));
    }

    #[test]
    fn xos_lift_of_example1_box_zero() {
        let l = xos_lift_of(&example1()).unwrap();
        assert_eq!(l.n(), 4);
        assert_eq!(
            l.boxes[0].atoms(),
            &[(int(0), ratio(1, 2)), (int(142), ratio(1, 4)), (int(146), ratio(1, 4))]
        );
        assert!(l.boxes[0].expectation() > l.cost.eval(&set(4, &[0])).unwrap());
    }

    #[test]
    fn hardness_at_scale() {
        let p = HardnessParams::new(100_000).unwrap();
        let inst = hardness(&p, HardnessVariant::Baseline).unwrap();
        assert_eq!(inst.n(), 100_000);
        let b = &inst.bernoulli_boxes().unwrap()[0];
        assert_eq!((b.value.clone(), b.prob.clone()), (int(135), ratio(1, 729)));
    }

    #[test]
    fn names_parse() {
        assert_eq!(canonical("example1").unwrap(), example1());
        assert_eq!(canonical("xos_lift_of(example1)").unwrap().n(), 4);
        let h = canonical("hardness(n=12, alpha=8, beta=3, planted)").unwrap();
        assert_eq!(h.n(), 12);
        assert!(canonical("nope").is_err());
        assert!(canonical("hardness(n=12, alpha=3, beta=3)").is_err());
    }
}
