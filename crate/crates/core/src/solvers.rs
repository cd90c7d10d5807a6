//! Exact optimal solvers per strategy class and the adaptivity-gap report.
//!
//! Every solver materializes the cost table once (`2^n` oracle queries) and
//! works on bitmasks afterwards.

use std::cmp::Ordering;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{default_limits, require_n, CostSpec, CostTable};
use crate::error::{domain, Error, Result};
use crate::instances::{FiniteDistribution, Instance, Problem};
use crate::limits::Limits;
use crate::rational::{serde_q, serde_q_opt, Rational, Threshold};
use crate::strategies::{eval_fixed_order, FixedOrderThresholds, ImpulsiveStrategy, PolicyTree};

/// The support grid and, per box, each atom's grid index.
struct Grid {
    values: Vec<Rational>,
    atoms: Vec<Vec<(usize, Rational)>>,
}

impl Grid {
    fn new(boxes: &[FiniteDistribution]) -> Self {
        let values = crate::instances::support_union(boxes);
        let atoms = boxes
            .iter()
            .map(|d| {
                d.atoms()
                    .iter()
                    .map(|(v, p)| (values.binary_search(v).expect("on grid"), p.clone()))
                    .collect()
            })
            .collect();
        Grid { values, atoms }
    }

    fn zero(&self) -> usize {
        self.values
            .binary_search(&Rational::zero())
            .expect("grid contains 0")
    }
}

fn table_for(problem: Problem<'_>, what: &'static str, limit: usize) -> Result<CostTable> {
    require_n(what, problem.n(), limit)?;
    CostTable::build(problem.cost)
}

/// Backward induction over `(opened, best)`.
struct AdaptiveDp<'g> {
    grid: &'g Grid,
    table: CostTable,
    n: usize,
    /// Value and chosen box per state; `None` until computed.
    memo: Vec<Option<(Rational, Option<usize>)>>,
}

impl AdaptiveDp<'_> {
    fn slot(&self, mask: u32, best: usize) -> usize {
        mask as usize * self.grid.values.len() + best
    }

    fn value(&mut self, mask: u32, best: usize) -> Rational {
        let k = self.slot(mask, best);
        if let Some((v, _)) = &self.memo[k] {
            return v.clone();
        }
        let mut choice = None;
        let mut top = self.grid.values[best].clone();
        let mut top_open: Option<Rational> = None;
        for i in (0..self.n).filter(|i| mask & (1 << i) == 0) {
            let next = mask | (1 << i);
            let mut v = -self.table.marginal(i, mask);
            for (a, p) in self.grid.atoms[i].clone() {
                v += p * self.value(next, best.max(a));
            }
            if top_open.as_ref().is_none_or(|t| v > *t) {
                top_open = Some(v.clone());
                choice = Some(i);
            }
        }
        // Opening wins ties against halting.
        match top_open {
            Some(v) if v >= top => top = v,
            _ => choice = None,
        }
        self.memo[k] = Some((top.clone(), choice));
        top
    }

    fn tree(&self, mask: u32, best: usize) -> PolicyTree {
        let (_, choice) = self.memo[self.slot(mask, best)]
            .as_ref()
            .expect("state solved before its tree is built");
        match *choice {
            None => PolicyTree::Halt,
            Some(i) => PolicyTree::open(
                i,
                self.grid.atoms[i].iter().map(|(a, _)| {
                    (
                        self.grid.values[*a].clone(),
                        self.tree(mask | (1 << i), best.max(*a)),
                    )
                }),
            ),
        }
    }
}

/// Optimal expected utility over all adaptive strategies and a tree attaining
/// it. Ties prefer opening, then the lowest box index.
pub fn optimal_adaptive<'a>(problem: impl Into<Problem<'a>>) -> Result<(Rational, PolicyTree)> {
    optimal_adaptive_with(problem, &default_limits())
}

pub fn optimal_adaptive_with<'a>(
    problem: impl Into<Problem<'a>>,
    limits: &Limits,
) -> Result<(Rational, PolicyTree)> {
    let problem = problem.into();
    let table = table_for(problem, "adaptive dynamic program", limits.adaptive)?;
    let grid = Grid::new(problem.boxes);
    let n = problem.n();
    let mut dp = AdaptiveDp {
        memo: vec![None; (1usize << n) * grid.values.len()],
        grid: &grid,
        table,
        n,
    };
    let start = grid.zero();
    let utility = dp.value(0, start);
    let tree = dp.tree(0, start);
    Ok((utility, tree))
}

/// `f_i` on the grid for each round of `sigma`; `f_{n+1} = 0`.
fn threshold_rows(grid: &Grid, sigma: &[usize], marginals: &[Rational]) -> Vec<Vec<Rational>> {
    let g = grid.values.len();
    let mut rows = vec![vec![Rational::zero(); g]; sigma.len() + 1];
    for round in (0..sigma.len()).rev() {
        let i = sigma[round];
        rows[round] = (0..g)
            .map(|k| {
                let x = &grid.values[k];
                let mut cont = -marginals[round].clone();
                for (a, p) in &grid.atoms[i] {
                    let m = k.max(*a);
                    cont += p * (&grid.values[m] - x + &rows[round + 1][m]);
                }
                cont.max(Rational::zero())
            })
            .collect();
    }
    rows.pop();
    rows
}

fn threshold_dp(grid: &Grid, sigma: &[usize], marginals: &[Rational]) -> (Vec<Threshold>, Rational) {
    let rows = threshold_rows(grid, sigma, marginals);
    let thresholds = rows
        .iter()
        .map(|f| match f.iter().position(Zero::is_zero) {
            Some(k) => Threshold::Finite(grid.values[k].clone()),
            None => Threshold::Infinite,
        })
        .collect();
    let utility = rows
        .first()
        .map_or_else(Rational::zero, |f| f[grid.zero()].clone());
    (thresholds, utility)
}

fn prefix_marginals(table: &CostTable, sigma: &[usize]) -> Vec<Rational> {
    let mut mask = 0u32;
    sigma
        .iter()
        .map(|&i| {
            let m = table.marginal(i, mask);
            mask |= 1 << i;
            m
        })
        .collect()
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if sigma.len() != n {
        return domain(format!("sigma has {} entries, expected {n}", sigma.len()));
    }
    for &i in sigma {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return domain(format!("sigma {sigma:?} is not a permutation of 0..{n}"));
        }
    }
    Ok(())
}

/// Optimal thresholds for a fixed order `sigma`: `t_i` is the least grid
/// value where the extra utility `f_i` reaches 0.
pub fn optimal_thresholds<'a>(
    problem: impl Into<Problem<'a>>,
    sigma: &[usize],
) -> Result<(FixedOrderThresholds, Rational)> {
    let problem = problem.into();
    check_permutation(sigma, problem.n())?;
    optimal_thresholds_partial(problem, sigma)
}

/// Optimal thresholds for opening at most the boxes of `order`, in that
/// order. The remaining boxes are appended in index order with threshold 0,
/// so they are never opened.
pub fn optimal_thresholds_partial<'a>(
    problem: impl Into<Problem<'a>>,
    order: &[usize],
) -> Result<(FixedOrderThresholds, Rational)> {
    let problem = problem.into();
    let n = problem.n();
    let mut sigma = order.to_vec();
    sigma.extend((0..n).filter(|i| !order.contains(i)));
    check_permutation(&sigma, n)?;
    let table = CostTable::build(problem.cost)?;
    let grid = Grid::new(problem.boxes);
    let (mut thresholds, utility) = threshold_dp(&grid, order, &prefix_marginals(&table, order));
    thresholds.resize(n, Threshold::Finite(Rational::zero()));
    Ok((FixedOrderThresholds::new(sigma, thresholds)?, utility))
}

/// The grid and `f_i(x)` for every round, for inspection and tests.
pub fn threshold_values<'a>(
    problem: impl Into<Problem<'a>>,
    sigma: &[usize],
) -> Result<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let problem = problem.into();
    check_permutation(sigma, problem.n())?;
    let table = CostTable::build(problem.cost)?;
    let grid = Grid::new(problem.boxes);
    let rows = threshold_rows(&grid, sigma, &prefix_marginals(&table, sigma));
    Ok((grid.values, rows))
}

/// Best fixed order with optimal thresholds; ties go to the
/// lexicographically least order.
pub fn optimal_fixed_order<'a>(problem: impl Into<Problem<'a>>) -> Result<(FixedOrderThresholds, Rational)> {
    optimal_fixed_order_with(problem, &default_limits())
}

pub fn optimal_fixed_order_with<'a>(
    problem: impl Into<Problem<'a>>,
    limits: &Limits,
) -> Result<(FixedOrderThresholds, Rational)> {
    let problem = problem.into();
    let table = table_for(problem, "fixed-order enumeration", limits.fixed_order)?;
    let grid = Grid::new(problem.boxes);
    let n = problem.n();
    let orders: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let (sigma, thresholds, utility) = orders
        .into_par_iter()
        .map(|sigma| {
            let (t, u) = threshold_dp(&grid, &sigma, &prefix_marginals(&table, &sigma));
            (sigma, t, u)
        })
        .reduce_with(|a, b| match a.2.cmp(&b.2) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if a.0 <= b.0 {
                    a
                } else {
                    b
                }
            }
        })
        .expect("at least one permutation");
    Ok((FixedOrderThresholds::new(sigma, thresholds)?, utility))
}

/// Best impulsive strategy over all ordered subsets, including the empty one;
/// ties go to the lexicographically least sequence.
pub fn optimal_impulsive<'a>(problem: impl Into<Problem<'a>>) -> Result<(ImpulsiveStrategy, Rational)> {
    optimal_impulsive_with(problem, &default_limits())
}

pub fn optimal_impulsive_with<'a>(
    problem: impl Into<Problem<'a>>,
    limits: &Limits,
) -> Result<(ImpulsiveStrategy, Rational)> {
    let problem = problem.into();
    let boxes = problem.bernoulli_boxes()?;
    let table = table_for(problem, "impulsive enumeration", limits.impulsive)?;
    let gain: Vec<Rational> = boxes.iter().map(|b| &b.prob * &b.value).collect();
    let q: Vec<Rational> = boxes.iter().map(|b| b.q()).collect();

    struct Search<'s> {
        table: &'s CostTable,
        gain: &'s [Rational],
        q: &'s [Rational],
        order: Vec<usize>,
        best: (Vec<usize>, Rational),
    }

    impl Search<'_> {
        // Pre-order DFS over increasing indices visits sequences in
        // lexicographic order, so a strict improvement keeps the least one.
        fn dfs(&mut self, mask: u32, prefix_q: &Rational, utility: &Rational) {
            if *utility > self.best.1 {
                self.best = (self.order.clone(), utility.clone());
            }
            for j in 0..self.gain.len() {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let u = utility + prefix_q * (&self.gain[j] - self.table.marginal(j, mask));
                let pq = prefix_q * &self.q[j];
                self.order.push(j);
                self.dfs(mask | (1 << j), &pq, &u);
                self.order.pop();
            }
        }
    }

    let mut search = Search {
        table: &table,
        gain: &gain,
        q: &q,
        order: Vec::new(),
        best: (Vec::new(), Rational::zero()),
    };
    search.dfs(0, &Rational::one(), &Rational::zero());
    let (order, utility) = search.best;
    Ok((ImpulsiveStrategy::new(order), utility))
}

/// The `z` solving `E[(V − z)⁺] = c`, found exactly on the support
/// breakpoints. Below the smallest value the slope is 1, so a solution
/// always exists; `z < 0` means the box is never worth opening on its own.
/// For `c = 0` the solution set is `[v_max, ∞)` and `v_max` is returned.
pub fn reservation_value(dist: &FiniteDistribution, c: &Rational) -> Result<Rational> {
    if c.is_negative() {
        return domain(format!("reservation value needs c ≥ 0, got {c}"));
    }
    Ok(excess_inverse(dist.atoms(), c))
}

/// The solution `z` of `Σ p·(v − z)⁺ = c` for `c > 0`, or `v_max` for `c = 0`,
/// over atoms sorted by value (masses need not sum to 1). Below the
/// smallest value the slope is the total mass.
pub(crate) fn excess_inverse(atoms: &[(Rational, Rational)], c: &Rational) -> Rational {
    // Walk breakpoints from the top, tracking Σ p·(v − v_k)⁺ and the mass above v_k.
    let mut excess = Rational::zero();
    let mut above = Rational::zero();
    for k in (0..atoms.len()).rev() {
        let (v, p) = &atoms[k];
        if k + 1 < atoms.len() {
            excess += &above * (&atoms[k + 1].0 - v);
        }
        if excess >= *c {
            if above.is_zero() {
                return v.clone();
            }
            return v + (&excess - c) / &above;
        }
        above += p;
    }
    &atoms[0].0 - (c - excess) / above
}

/// Weitzman's index policy for additive costs: descending reservation value
/// (ties by index), halting once the best value reaches the next box's
/// reservation value clamped at 0.
pub fn weitzman(inst: &Instance) -> Result<(Rational, FixedOrderThresholds)> {
    let CostSpec::Additive(additive) = &inst.cost else {
        return domain(format!(
            "Weitzman's rule needs an additive cost, got {}",
            inst.cost.kind()
        ));
    };
    let z = inst
        .boxes
        .iter()
        .zip(additive.per_box())
        .map(|(d, c)| reservation_value(d, c))
        .collect::<Result<Vec<_>>>()?;
    let mut sigma: Vec<usize> = (0..inst.n()).collect();
    sigma.sort_by(|&a, &b| z[b].cmp(&z[a]).then(a.cmp(&b)));
    let thresholds = sigma
        .iter()
        .map(|&i| Threshold::Finite(z[i].clone().max(Rational::zero())))
        .collect();
    let strategy = FixedOrderThresholds::new(sigma, thresholds)?;
    let utility = eval_fixed_order(inst, &strategy)?;
    Ok((utility, strategy))
}

/// Whether one class's optimum strictly exceeds another's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrictGaps {
    pub adaptive_vs_fixed: bool,
    pub fixed_vs_impulsive: Option<bool>,
    pub adaptive_vs_impulsive: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    #[serde(with = "serde_q")]
    pub opt_adaptive: Rational,
    #[serde(with = "serde_q")]
    pub opt_fixed_order: Rational,
    #[serde(with = "serde_q_opt")]
    pub opt_impulsive: Option<Rational>,
    pub adaptive_policy: PolicyTree,
    pub fixed_order: FixedOrderThresholds,
    pub impulsive: Option<ImpulsiveStrategy>,
    pub strict_gap: StrictGaps,
}

pub fn adaptivity_gap<'a>(problem: impl Into<Problem<'a>>) -> Result<GapReport> {
    adaptivity_gap_with(problem, &default_limits())
}

/// Runs the adaptive and fixed-order solvers, plus the impulsive solver on
/// Bernoulli problems.
pub fn adaptivity_gap_with<'a>(problem: impl Into<Problem<'a>>, limits: &Limits) -> Result<GapReport> {
    let problem = problem.into();
    let (opt_adaptive, adaptive_policy) = optimal_adaptive_with(problem, limits)?;
    let (fixed_order, opt_fixed_order) = optimal_fixed_order_with(problem, limits)?;
    let impulsive = match problem.bernoulli_boxes() {
        Ok(_) => Some(optimal_impulsive_with(problem, limits)?),
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let strict_gap = StrictGaps {
        adaptive_vs_fixed: opt_adaptive > opt_fixed_order,
        fixed_vs_impulsive: impulsive.as_ref().map(|(_, u)| opt_fixed_order > *u),
        adaptive_vs_impulsive: impulsive.as_ref().map(|(_, u)| opt_adaptive > *u),
    };
    let (impulsive, opt_impulsive) = match impulsive {
        Some((s, u)) => (Some(s), Some(u)),
        None => (None, None),
    };
    Ok(GapReport {
        opt_adaptive,
        opt_fixed_order,
        opt_impulsive,
        adaptive_policy,
        fixed_order,
        impulsive,
        strict_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{AdditiveCost, ExplicitCost};
    use crate::instances::canonical;
    use crate::rational::{int, ratio};
    use crate::strategies::{eval_impulsive, eval_policy};

    fn single(dist: FiniteDistribution, c: i64) -> Instance {
        Instance::new(vec![dist], AdditiveCost::new(vec![int(c)]).unwrap()).unwrap()
    }

    #[test]
    fn example1_values_and_tree() {
        let e = canonical::example1();
        let (u, tree) = optimal_adaptive(&e).unwrap();
        assert_eq!(u, ratio(21, 2));
        let expected = PolicyTree::open(
            0,
            [
                (int(0), PolicyTree::open(2, [(int(10), PolicyTree::Halt)])),
                (int(10), PolicyTree::open(1, [(int(0), PolicyTree::Halt), (int(12), PolicyTree::Halt)])),
            ],
        );
        assert_eq!(tree, expected);
        assert_eq!(eval_policy(&e, &tree).unwrap(), u);
        let (_, fixed) = optimal_fixed_order(&e).unwrap();
        assert_eq!(fixed, int(10));
        let (s, u) = optimal_thresholds(&e, &[0, 1, 2]).unwrap();
        assert_eq!(u, ratio(17, 2));
        assert_eq!(eval_fixed_order(&e, &s).unwrap(), u);
    }

    #[test]
    fn single_box_cases() {
        let (u, _) = optimal_adaptive(&single(FiniteDistribution::point(int(5)), 3)).unwrap();
        assert_eq!(u, int(2));
        let half = single(FiniteDistribution::bernoulli(int(5), ratio(1, 2)).unwrap(), 1);
        let (_, u) = optimal_thresholds(&half, &[0]).unwrap();
        assert_eq!(u, ratio(3, 2));
    }

    #[test]
    fn free_boxes_open_everything() {
        let boxes = vec![
            FiniteDistribution::bernoulli(int(3), ratio(1, 2)).unwrap(),
            FiniteDistribution::bernoulli(int(5), ratio(1, 3)).unwrap(),
        ];
        let inst = Instance::new(boxes, AdditiveCost::new(vec![int(0), int(0)]).unwrap()).unwrap();
        let (u, tree) = optimal_adaptive(&inst).unwrap();
        // E[max] = 5/3 + (2/3)(3/2)
        assert_eq!(u, ratio(8, 3));
        assert_eq!(tree.depth(), 2);
    }

    #[test]
    fn unit_demand_pair_solvers() {
        let u = canonical::unit_demand_pair();
        let (pi, v) = optimal_impulsive(&u).unwrap();
        assert_eq!((pi.order.clone(), v.clone()), (vec![0, 1], ratio(1, 9)));
        assert_eq!(eval_impulsive(&u, &pi).unwrap(), v);
        let (s, f) = optimal_fixed_order(&u).unwrap();
        assert_eq!((s.sigma.clone(), f), (vec![0, 1], ratio(1, 9)));
        assert_eq!(optimal_adaptive(&u).unwrap().0, ratio(1, 9));
    }

    #[test]
    fn all_negative_margins_open_nothing() {
        let boxes = vec![FiniteDistribution::bernoulli(int(2), ratio(1, 8)).unwrap(); 3];
        let cost = ExplicitCost::from_fn(3, |s| if s.is_empty() { int(0) } else { int(1) }).unwrap();
        let inst = Instance::new(boxes, cost).unwrap();
        let (pi, u) = optimal_impulsive(&inst).unwrap();
        assert!(pi.order.is_empty());
        assert_eq!(u, int(0));
    }

    #[test]
    fn reservation_values() {
        let b = |v, p| FiniteDistribution::bernoulli(int(v), p).unwrap();
        assert_eq!(reservation_value(&b(2, ratio(1, 3)), &int(1)).unwrap(), ratio(-1, 3));
        assert_eq!(reservation_value(&FiniteDistribution::point(int(7)), &int(0)).unwrap(), int(7));
        assert_eq!(reservation_value(&b(10, ratio(1, 2)), &int(1)).unwrap(), int(8));
        let three = FiniteDistribution::new(vec![(int(0), ratio(1, 3)), (int(3), ratio(1, 3)), (int(9), ratio(1, 3))]).unwrap();
        // On [3, 9]: (9 − z)/3 = 1.
        assert_eq!(reservation_value(&three, &int(1)).unwrap(), int(6));
        // On [0, 3]: (9 − z)/3 + (3 − z)/3 = 3.
        assert_eq!(reservation_value(&three, &int(3)).unwrap(), ratio(3, 2));
        assert!(reservation_value(&three, &int(-1)).is_err());
    }

    #[test]
    fn weitzman_rules() {
        let b = FiniteDistribution::bernoulli(int(2), ratio(1, 3)).unwrap();
        let pair = Instance::new(vec![b.clone(), b], AdditiveCost::new(vec![int(1), int(1)]).unwrap()).unwrap();
        assert_eq!(weitzman(&pair).unwrap().0, int(0));
        assert!(weitzman(&canonical::unit_demand_pair()).is_err());
        let one = single(FiniteDistribution::bernoulli(int(10), ratio(1, 2)).unwrap(), 1);
        assert_eq!(weitzman(&one).unwrap().0, int(4));
    }

    #[test]
    fn subadditive4_gap() {
        let s = canonical::subadditive4();
        let r = adaptivity_gap(&s).unwrap();
        assert_eq!(r.opt_adaptive, ratio(4253, 120));
        assert_eq!(r.opt_fixed_order, ratio(1417, 40));
        assert!(r.strict_gap.adaptive_vs_fixed);
        assert_eq!(r.opt_impulsive, None);
    }

    #[test]
    fn xos_lift_gap() {
        let l = canonical::xos_lift_of(&canonical::example1()).unwrap();
        let r = adaptivity_gap(&l).unwrap();
        assert_eq!((r.opt_adaptive, r.opt_fixed_order), (ratio(69, 4), int(17)));
        assert!(r.strict_gap.adaptive_vs_fixed);
    }

    #[test]
    fn limits_are_enforced() {
        let e = canonical::example1();
        let tight = Limits::uniform(2);
        assert!(matches!(optimal_adaptive_with(&e, &tight), Err(Error::Capability { .. })));
        assert!(matches!(optimal_fixed_order_with(&e, &tight), Err(Error::Capability { .. })));
    }

    #[test]
    fn threshold_table_is_monotone_and_lipschitz() {
        let e = canonical::subadditive4();
        let (grid, rows) = threshold_values(&e, &[2, 0, 3, 1]).unwrap();
        for f in rows {
            for k in 1..grid.len() {
                assert!(f[k] <= f[k - 1]);
                assert!(&f[k - 1] - &f[k] <= &grid[k] - &grid[k - 1]);
            }
        }
    }
}
