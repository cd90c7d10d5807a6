//! Property tests against independent oracles: brute-force enumeration of
//! joint realizations, direct set-function evaluation, and counting.

use pandora_core::cost::{CostOracle, CostSpec, ExplicitCost, ProjectedCost, QueryCountingOracle};
use pandora_core::hardness::{
    hypergeometric_tail, symmetric_impulsive_utility, symmetric_impulsive_utility_exact,
    HardnessParams, SymmetricVariant,
};
use pandora_core::instances::random::{random_instance, Family, RandomParams};
use pandora_core::rational::{format_rational, int, parse_rational, ratio, to_f64};
use pandora_core::solvers::{
    optimal_adaptive, optimal_fixed_order, optimal_impulsive, optimal_thresholds, reservation_value,
    threshold_values,
};
use pandora_core::strategies::{
    dummy_mixture, eval_fixed_order, eval_impulsive, eval_policy, marginal_utility,
    FixedOrderThresholds, ImpulsiveStrategy, ImpulsiveWithDummies, MarginalUtilityContext, PolicyTree,
    UtilityKind,
};
use pandora_core::transforms::{discretize, kappa_epsilon};
use pandora_core::{BoxSet, FiniteDistribution, Instance, Rational, Threshold};
use proptest::prelude::*;
use proptest::sample::subsequence;

/// Every joint outcome of independent boxes with its probability.
fn realizations(boxes: &[FiniteDistribution]) -> Vec<(Vec<Rational>, Rational)> {
    let mut out = vec![(Vec::new(), Rational::from_integer(1.into()))];
    for d in boxes {
        out = out
            .into_iter()
            .flat_map(|(vals, p)| {
                d.atoms().iter().map(move |(v, pv)| {
                    let mut vals = vals.clone();
                    vals.push(v.clone());
                    (vals, &p * pv)
                })
            })
            .collect();
    }
    out
}

fn set(n: usize, items: &[usize]) -> BoxSet {
    BoxSet::from_indices(n, items.iter().copied()).unwrap()
}

fn zero() -> Rational {
    int(0)
}

/// Opens `order` until the first nonzero value.
fn simulate_impulsive(inst: &Instance, order: &[usize]) -> Rational {
    let n = inst.n();
    realizations(&inst.boxes)
        .into_iter()
        .map(|(vals, p)| {
            let mut opened = Vec::new();
            let mut got = zero();
            for &i in order {
                opened.push(i);
                if vals[i] != zero() {
                    got = vals[i].clone();
                    break;
                }
            }
            p * (got - inst.cost.eval(&set(n, &opened)).unwrap())
        })
        .sum()
}

fn simulate_fixed(inst: &Instance, s: &FixedOrderThresholds) -> Rational {
    let n = inst.n();
    realizations(&inst.boxes)
        .into_iter()
        .map(|(vals, p)| {
            let mut opened = Vec::new();
            let mut best = zero();
            for (&i, t) in s.sigma.iter().zip(&s.thresholds) {
                if t.halts_at(&best) {
                    break;
                }
                opened.push(i);
                best = best.max(vals[i].clone());
            }
            p * (best - inst.cost.eval(&set(n, &opened)).unwrap())
        })
        .sum()
}

fn simulate_tree(inst: &Instance, tree: &PolicyTree) -> Rational {
    let n = inst.n();
    realizations(&inst.boxes)
        .into_iter()
        .map(|(vals, p)| {
            let mut opened = Vec::new();
            let mut best = zero();
            let mut node = tree;
            while let PolicyTree::Open { box_index, children } = node {
                opened.push(*box_index);
                let v = &vals[*box_index];
                best = best.max(v.clone());
                node = &children[v];
            }
            p * (best - inst.cost.eval(&set(n, &opened)).unwrap())
        })
        .sum()
}

const BERNOULLI: [Family; 4] = [
    Family::BernoulliCoverage,
    Family::BernoulliTree,
    Family::BernoulliHardness,
    Family::BernoulliAdditive,
];

fn bernoulli_instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (0..BERNOULLI.len(), 1..=max_n, any::<u64>()).prop_map(|(f, n, seed)| {
        let family = BERNOULLI[f];
        let n = if family == Family::BernoulliHardness { n.max(2) } else { n };
        random_instance(family, n, seed, &RandomParams::default()).unwrap()
    })
}

fn any_instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (0..Family::ALL.len(), 1..=max_n, any::<u64>()).prop_map(|(f, n, seed)| {
        let family = Family::ALL[f];
        let n = if family == Family::BernoulliHardness { n.max(2) } else { n };
        random_instance(family, n, seed, &RandomParams::default()).unwrap()
    })
}

/// A random permutation of `0..n` from a shuffle key.
fn permutation(n: usize, keys: &[u32]) -> Vec<usize> {
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.sort_by_key(|&i| (keys[i % keys.len()].wrapping_mul(i as u32 + 7), i));
    sigma
}

/// Monotone normalized table `c(S) = max_{T ⊆ S} w(T)` with `w(∅) = 0`.
fn monotone_table(n: usize) -> impl Strategy<Value = ExplicitCost> {
    prop::collection::vec(0i64..12, 1 << n).prop_map(move |w| {
        let mut table: Vec<Rational> = w.iter().map(|&x| ratio(x, 2)).collect();
        table[0] = zero();
        for bit in 0..n {
            for m in 0..1usize << n {
                if m & (1 << bit) != 0 {
                    let sub = table[m ^ (1 << bit)].clone();
                    if sub > table[m] {
                        table[m] = sub;
                    }
                }
            }
        }
        ExplicitCost::new(n, table).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn impulsive_matches_enumeration(inst in bernoulli_instance(5), pick in subsequence((0..5usize).collect::<Vec<_>>(), 0..=5), keys in prop::collection::vec(any::<u32>(), 5)) {
        let pick: Vec<usize> = pick.into_iter().filter(|&i| i < inst.n()).collect();
        let mut order = pick.clone();
        order.sort_by_key(|&i| (keys[i], i));
        let pi = ImpulsiveStrategy::new(order.clone());
        prop_assert_eq!(eval_impulsive(&inst, &pi).unwrap(), simulate_impulsive(&inst, &order));
        let tree = PolicyTree::from_impulsive(inst.problem(), &pi).unwrap();
        prop_assert_eq!(eval_policy(&inst, &tree).unwrap(), simulate_impulsive(&inst, &order));
    }

    #[test]
    fn fixed_order_matches_enumeration(inst in any_instance(4), keys in prop::collection::vec(any::<u32>(), 4), ts in prop::collection::vec(prop::option::of(0i64..24), 4)) {
        let n = inst.n();
        let sigma = permutation(n, &keys);
        let thresholds = (0..n)
            .map(|k| ts[k].map_or(Threshold::Infinite, |t| Threshold::Finite(int(t))))
            .collect();
        let s = FixedOrderThresholds::new(sigma, thresholds).unwrap();
        let direct = simulate_fixed(&inst, &s);
        prop_assert_eq!(eval_fixed_order(&inst, &s).unwrap(), direct.clone());
        let tree = PolicyTree::from_fixed_order(inst.problem(), &s).unwrap();
        prop_assert_eq!(eval_policy(&inst, &tree).unwrap(), direct);
    }

    #[test]
    fn solvers_are_ordered_and_attained(inst in any_instance(4)) {
        let (adaptive, tree) = optimal_adaptive(&inst).unwrap();
        prop_assert_eq!(simulate_tree(&inst, &tree), adaptive.clone());
        prop_assert_eq!(eval_policy(&inst, &tree).unwrap(), adaptive.clone());
        let (fixed, fixed_u) = optimal_fixed_order(&inst).unwrap();
        prop_assert_eq!(simulate_fixed(&inst, &fixed), fixed_u.clone());
        prop_assert!(fixed_u <= adaptive);
        prop_assert!(fixed_u >= zero());
        if inst.is_bernoulli() {
            let (pi, imp) = optimal_impulsive(&inst).unwrap();
            prop_assert_eq!(simulate_impulsive(&inst, &pi.order), imp.clone());
            prop_assert!(imp <= fixed_u);
        }
    }

    #[test]
    fn optimal_thresholds_beat_any_thresholds(inst in any_instance(4), keys in prop::collection::vec(any::<u32>(), 4), ts in prop::collection::vec(prop::option::of(0i64..24), 4)) {
        let n = inst.n();
        let sigma = permutation(n, &keys);
        let (best, u) = optimal_thresholds(&inst, &sigma).unwrap();
        prop_assert_eq!(&best.sigma, &sigma);
        prop_assert_eq!(eval_fixed_order(&inst, &best).unwrap(), u.clone());
        let other = FixedOrderThresholds::new(
            sigma,
            (0..n).map(|k| ts[k].map_or(Threshold::Infinite, |t| Threshold::Finite(int(t)))).collect(),
        ).unwrap();
        prop_assert!(eval_fixed_order(&inst, &other).unwrap() <= u);
    }

    #[test]
    fn extra_utility_is_monotone_and_lipschitz(inst in any_instance(4), keys in prop::collection::vec(any::<u32>(), 4)) {
        let sigma = permutation(inst.n(), &keys);
        let (grid, rows) = threshold_values(&inst, &sigma).unwrap();
        prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        for row in &rows {
            prop_assert_eq!(row.len(), grid.len());
            for k in 0..grid.len() {
                prop_assert!(row[k] >= zero());
                if k + 1 < grid.len() {
                    let drop = &row[k] - &row[k + 1];
                    prop_assert!(drop >= zero());
                    prop_assert!(drop <= &grid[k + 1] - &grid[k]);
                }
            }
        }
        // Once f_i hits 0 it stays 0, so a single threshold describes the rule.
        for row in &rows {
            if let Some(k) = row.iter().position(|f| *f == zero()) {
                prop_assert!(row[k..].iter().all(|f| *f == zero()));
            }
        }
    }

    #[test]
    fn thresholds_json_round_trip(n in 1usize..6, keys in prop::collection::vec(any::<u32>(), 6), ts in prop::collection::vec(prop::option::of((-40i64..40, 1i64..7)), 6)) {
        let sigma = permutation(n, &keys);
        let thresholds = (0..n)
            .map(|k| ts[k].map_or(Threshold::Infinite, |(a, b)| Threshold::Finite(ratio(a, b))))
            .collect();
        let s = FixedOrderThresholds::new(sigma, thresholds).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: FixedOrderThresholds = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn policy_tree_json_round_trip(inst in any_instance(3)) {
        let (_, tree) = optimal_adaptive(&inst).unwrap();
        let back: PolicyTree = serde_json::from_str(&serde_json::to_string(&tree).unwrap()).unwrap();
        prop_assert_eq!(back, tree);
    }

    #[test]
    fn instance_json_round_trip(inst in any_instance(5)) {
        let back = Instance::from_json(&inst.to_json()).unwrap();
        let kept: Vec<usize> = (0..inst.n()).filter(|&i| !inst.boxes[i].is_degenerate()).collect();
        if kept.len() == inst.n() {
            prop_assert_eq!(back, inst);
        } else {
            // Constant-zero boxes are dropped and the cost restricted to the rest.
            prop_assert_eq!(back.n(), kept.len());
            for m in 0..1u64 << kept.len() {
                let s = BoxSet::from_mask(kept.len(), m);
                let image = BoxSet::from_indices(inst.n(), s.iter().map(|j| kept[j])).unwrap();
                prop_assert_eq!(back.cost.eval(&s).unwrap(), inst.cost.eval(&image).unwrap());
            }
            prop_assert_eq!(optimal_adaptive(&back).unwrap().0, optimal_adaptive(&inst).unwrap().0);
            prop_assert_eq!(Instance::from_json(&back.to_json()).unwrap(), back);
        }
    }

    #[test]
    fn rational_format_round_trip(a in -10_000i64..10_000, b in 1i64..5_000) {
        let x = ratio(a, b);
        prop_assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
    }

    #[test]
    fn dummy_mixture_is_consistent(inst in bernoulli_instance(5), keys in prop::collection::vec(any::<u32>(), 5), mask in any::<u8>()) {
        let n = inst.n();
        let order = permutation(n, &keys);
        let opened: Vec<usize> = order.iter().copied().filter(|&i| mask & (1 << i) != 0).collect();
        let s = ImpulsiveWithDummies::new(order, opened).unwrap();
        let mix = dummy_mixture(&inst, &s).unwrap();
        let total: Rational = mix.iter().map(|(_, p)| p.clone()).sum();
        prop_assert_eq!(total, int(1));
        let expected: Rational = mix.iter().map(|(pi, p)| p * eval_impulsive(&inst, pi).unwrap()).sum();
        let u = marginal_utility(UtilityKind::N, &inst, &s, &MarginalUtilityContext::none(n)).unwrap();
        prop_assert_eq!(u, expected);
    }

    #[test]
    fn utility_chain(inst in bernoulli_instance(5), keys in prop::collection::vec(any::<u32>(), 5), root in 0usize..5) {
        let n = inst.n();
        prop_assume!(n >= 2);
        let root = root % n;
        let order: Vec<usize> = permutation(n, &keys).into_iter().filter(|&i| i != root).collect();
        let s = ImpulsiveStrategy::new(order).all_opened();
        let ctx = MarginalUtilityContext::new(Some(root), BoxSet::empty(n));
        let un = marginal_utility(UtilityKind::N, &inst, &s, &ctx).unwrap();
        let uy = marginal_utility(UtilityKind::Y, &inst, &s, &ctx).unwrap();
        let um = marginal_utility(UtilityKind::M, &inst, &s, &ctx).unwrap();
        prop_assert!(um <= uy && uy <= un);
        let v_r = inst.boxes[root].as_bernoulli().unwrap().value;
        let p: Rational = {
            let q: Rational = s.order.iter().map(|&i| inst.boxes[i].as_bernoulli().unwrap().q()).product();
            int(1) - q
        };
        prop_assert_eq!(um, un - p * v_r);
    }

    #[test]
    fn counting_oracle_is_transparent(cost in monotone_table(4), queries in prop::collection::vec(0u64..16, 0..40)) {
        let counter = QueryCountingOracle::new(&cost);
        for (k, &m) in queries.iter().enumerate() {
            let s = BoxSet::from_mask(4, m);
            prop_assert_eq!(counter.eval(&s).unwrap(), cost.eval(&s).unwrap());
            prop_assert_eq!(counter.queries(), k as u64 + 1);
        }
    }

    #[test]
    fn projection_identity(cost in monotone_table(3), owners in prop::collection::vec(0usize..3, 1..6)) {
        let base = CostSpec::from(cost);
        let projected = ProjectedCost::new(base.clone(), owners.clone()).unwrap();
        let m = owners.len();
        for mask in 0..1u64 << m {
            let s = BoxSet::from_mask(m, mask);
            let image = BoxSet::from_indices(3, s.iter().map(|j| owners[j])).unwrap();
            prop_assert_eq!(projected.eval(&s).unwrap(), base.eval(&image).unwrap());
        }
        let identity = ProjectedCost::new(base.clone(), vec![0, 1, 2]).unwrap();
        for mask in 0..8 {
            let s = BoxSet::from_mask(3, mask);
            prop_assert_eq!(identity.eval(&s).unwrap(), base.eval(&s).unwrap());
        }
    }

    #[test]
    fn max_distribution_matches_enumeration(inst in any_instance(4)) {
        let max = FiniteDistribution::max_of(&inst.boxes).unwrap();
        for (v, p) in max.atoms() {
            let direct: Rational = realizations(&inst.boxes)
                .into_iter()
                .filter(|(vals, _)| vals.iter().max().unwrap() == v)
                .map(|(_, p)| p)
                .sum();
            prop_assert_eq!(p, &direct);
        }
        let total: Rational = max.atoms().iter().map(|(_, p)| p.clone()).sum();
        prop_assert_eq!(total, int(1));
    }

    #[test]
    fn reservation_value_solves_its_equation(inst in any_instance(3), c in 0i64..40) {
        let c = ratio(c, 4);
        for d in &inst.boxes {
            let z = reservation_value(d, &c).unwrap();
            prop_assert_eq!(d.excess(&z), c.clone());
        }
    }

    #[test]
    fn kappa_is_least_cap(inst in any_instance(4), eps in 1i64..40) {
        let eps = ratio(eps, 4);
        let kappa = kappa_epsilon(&inst, &eps).unwrap();
        let excess: Rational = inst.boxes.iter().map(|d| d.excess(&kappa)).sum();
        prop_assert!(excess <= eps);
        if kappa > zero() {
            prop_assert_eq!(excess, eps);
        }
    }

    #[test]
    fn discretization_sandwich(inst in any_instance(3), eps in 1i64..12) {
        let eps = ratio(eps, 2);
        let coarse = discretize(&inst, &eps).unwrap();
        let (a, _) = optimal_adaptive(&inst).unwrap();
        let (b, _) = optimal_adaptive(&coarse).unwrap();
        prop_assert!(b <= a);
        prop_assert!(a <= b + int(2) * eps);
    }

    #[test]
    fn cancellation_identity(cost in monotone_table(4), h in 0usize..4, l in 0usize..4, t in 0u64..16) {
        prop_assume!(h != l);
        let t = BoxSet::from_mask(4, t & !(1 << h) & !(1 << l));
        let c = |s: &BoxSet| cost.eval(s).unwrap();
        let lhs = (c(&t.with(l).with(h)) - c(&t.with(l))) - (c(&t.with(h).with(l)) - c(&t.with(h)));
        let rhs = (c(&t.with(h)) - c(&t)) - (c(&t.with(l)) - c(&t));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn symmetric_closed_form_matches_exact(n in 8usize..200, alpha in 3usize..40, beta in 1usize..10, s in 0usize..31, planted in any::<bool>()) {
        prop_assume!(beta < alpha && alpha <= n);
        let p = HardnessParams::with_overrides(n, alpha, beta).unwrap();
        let (variant, top) = if planted { (SymmetricVariant::PlantedSubsetR, alpha) } else { (SymmetricVariant::Baseline, n) };
        prop_assume!(s <= top);
        let f = symmetric_impulsive_utility(&p, s, variant).unwrap();
        let e = to_f64(&symmetric_impulsive_utility_exact(&p, s, variant).unwrap());
        prop_assert!((f - e).abs() <= 1e-9 * e.abs().max(1.0), "{} vs {}", f, e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn hypergeometric_tail_matches_counting(n in 2usize..12, r in 1usize..12, d in 1usize..12, k in 0usize..12) {
        prop_assume!(r <= n && d <= n);
        let planted = (1u32 << r) - 1;
        let mut hits = 0u64;
        let mut total = 0u64;
        for m in 0u32..1 << n {
            if m.count_ones() as usize == d {
                total += 1;
                hits += ((m & planted).count_ones() as usize > k) as u64;
            }
        }
        prop_assert_eq!(hypergeometric_tail(n, r, d, k), ratio(hits as i64, total as i64));
    }
}
