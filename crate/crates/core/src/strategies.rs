//! Strategy representations and their exact expected utilities.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::boxset::BoxSet;
use crate::error::{domain, Error, Result};
use crate::instances::{Problem, WeightedBernoulli};
use crate::rational::{format_rational, parse_rational, pos, Rational, Threshold};

fn check_distinct(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n {
            return domain(format!("box {i} out of range for n = {n}"));
        }
        if std::mem::replace(&mut seen[i], true) {
            return domain(format!("box {i} appears twice in the strategy"));
        }
    }
    Ok(())
}

/// Opens `order` left to right and halts at the first non-zero value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ImpulsiveStrategy {
    pub order: Vec<usize>,
}

impl ImpulsiveStrategy {
    pub fn new(order: Vec<usize>) -> Self {
        ImpulsiveStrategy { order }
    }

    pub fn empty() -> Self {
        ImpulsiveStrategy::default()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_distinct(&self.order, n)
    }

    pub fn with_dummies(&self, opened: &[usize]) -> Result<ImpulsiveWithDummies> {
        ImpulsiveWithDummies::new(self.order.clone(), opened.to_vec())
    }

    pub fn all_opened(&self) -> ImpulsiveWithDummies {
        let mut opened = self.order.clone();
        opened.sort_unstable();
        ImpulsiveWithDummies {
            order: self.order.clone(),
            opened,
        }
    }
}

/// An impulsive order in which only the boxes of `opened` are really opened;
/// the others are dummy slots that halt with the box's probability.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImpulsiveWithDummies {
    pub order: Vec<usize>,
    pub opened: Vec<usize>,
}

impl ImpulsiveWithDummies {
    pub fn new(order: Vec<usize>, mut opened: Vec<usize>) -> Result<Self> {
        opened.sort_unstable();
        opened.dedup();
        if let Some(o) = opened.iter().find(|o| !order.contains(o)) {
            return domain(format!("opened box {o} is not in the order"));
        }
        Ok(ImpulsiveWithDummies { order, opened })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_distinct(&self.order, n)?;
        match self.opened.iter().find(|o| !self.order.contains(o)) {
            Some(o) => domain(format!("opened box {o} is not in the order")),
            None => Ok(()),
        }
    }

    pub fn is_opened(&self, i: usize) -> bool {
        self.opened.contains(&i)
    }

    /// `π_A` for `A ⊆ π`: the same order with only `A` opened.
    pub fn restrict(&self, opened: &[usize]) -> Result<Self> {
        ImpulsiveWithDummies::new(self.order.clone(), opened.to_vec())
    }

    /// The deterministic strategy when no dummy halts.
    pub fn opened_order(&self) -> ImpulsiveStrategy {
        ImpulsiveStrategy::new(
            self.order
                .iter()
                .copied()
                .filter(|&i| self.is_opened(i))
                .collect(),
        )
    }
}

/// Opens `sigma` in order, halting before round `i` iff the best value so far
/// is at least `thresholds[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedOrderThresholds {
    pub sigma: Vec<usize>,
    pub thresholds: Vec<Threshold>,
}

impl FixedOrderThresholds {
    pub fn new(sigma: Vec<usize>, thresholds: Vec<Threshold>) -> Result<Self> {
        if sigma.len() != thresholds.len() {
            return domain(format!(
                "{} boxes in sigma but {} thresholds",
                sigma.len(),
                thresholds.len()
            ));
        }
        Ok(FixedOrderThresholds { sigma, thresholds })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.sigma.len() != n {
            return domain(format!("sigma has {} boxes, expected a permutation of {n}", self.sigma.len()));
        }
        if self.thresholds.len() != n {
            return domain(format!("{} thresholds for {n} boxes", self.thresholds.len()));
        }
        check_distinct(&self.sigma, n)
    }
}

/// A deterministic adaptive strategy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyTree {
    Halt,
    /// Open `box_index`; continue with the child keyed by the observed value.
    Open {
        box_index: usize,
        children: BTreeMap<Rational, PolicyTree>,
    },
}

impl PolicyTree {
    pub fn open(box_index: usize, children: impl IntoIterator<Item = (Rational, PolicyTree)>) -> Self {
        PolicyTree::Open {
            box_index,
            children: children.into_iter().collect(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PolicyTree::Halt => 0,
            PolicyTree::Open { children, .. } => {
                1 + children.values().map(PolicyTree::depth).max().unwrap_or(0)
            }
        }
    }

    pub fn first_box(&self) -> Option<usize> {
        match self {
            PolicyTree::Halt => None,
            PolicyTree::Open { box_index, .. } => Some(*box_index),
        }
    }

    pub fn child(&self, value: &Rational) -> Option<&PolicyTree> {
        match self {
            PolicyTree::Halt => None,
            PolicyTree::Open { children, .. } => children.get(value),
        }
    }

    /// The tree that plays a fixed-order strategy on `problem`.
    pub fn from_fixed_order(problem: Problem<'_>, s: &FixedOrderThresholds) -> Result<Self> {
        s.validate(problem.n())?;
        Ok(Self::fixed_subtree(problem, s, 0, &Rational::zero()))
    }

    fn fixed_subtree(problem: Problem<'_>, s: &FixedOrderThresholds, round: usize, best: &Rational) -> Self {
        if round == s.sigma.len() || s.thresholds[round].halts_at(best) {
            return PolicyTree::Halt;
        }
        let i = s.sigma[round];
        PolicyTree::open(
            i,
            problem.boxes[i].atoms().iter().map(|(v, _)| {
                let next = best.max(v).clone();
                (v.clone(), Self::fixed_subtree(problem, s, round + 1, &next))
            }),
        )
    }

    /// The tree that plays an impulsive strategy on a Bernoulli problem.
    pub fn from_impulsive(problem: Problem<'_>, pi: &ImpulsiveStrategy) -> Result<Self> {
        pi.validate(problem.n())?;
        let boxes = problem.bernoulli_boxes()?;
        let mut tree = PolicyTree::Halt;
        for &i in pi.order.iter().rev() {
            let b = &boxes[i];
            let mut children = vec![(b.value.clone(), PolicyTree::Halt)];
            if b.prob < Rational::one() {
                children.push((Rational::zero(), tree));
            }
            tree = PolicyTree::open(i, children);
        }
        Ok(tree)
    }
}

impl Serialize for PolicyTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PolicyTree::Halt => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("halt", &true)?;
                m.end()
            }
            PolicyTree::Open {
                box_index,
                children,
            } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("open", box_index)?;
                m.serialize_entry("children", &ChildrenSer(children))?;
                m.end()
            }
        }
    }
}

/// Children in increasing value order.
struct ChildrenSer<'a>(&'a BTreeMap<Rational, PolicyTree>);

impl Serialize for ChildrenSer<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (v, t) in self.0 {
            m.serialize_entry(&format_rational(v), t)?;
        }
        m.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TreeRepr {
    Halt { halt: bool },
    Open {
        open: usize,
        children: HashMap<String, TreeRepr>,
    },
}

impl TryFrom<TreeRepr> for PolicyTree {
    type Error = Error;

    fn try_from(r: TreeRepr) -> Result<Self> {
        match r {
            TreeRepr::Halt { halt: true } => Ok(PolicyTree::Halt),
            TreeRepr::Halt { halt: false } => Err(Error::Parse("\"halt\" must be true".into())),
            TreeRepr::Open { open, children } => {
                let children = children
                    .into_iter()
                    .map(|(k, v)| Ok((parse_rational(&k)?, PolicyTree::try_from(v)?)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                Ok(PolicyTree::Open {
                    box_index: open,
                    children,
                })
            }
        }
    }
}

impl<'de> Deserialize<'de> for PolicyTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TreeRepr::deserialize(d)?;
        PolicyTree::try_from(repr).map_err(de::Error::custom)
    }
}

/// `p_(π)` and `q_(π)` of an impulsive strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltProbabilities {
    pub p: Rational,
    pub q: Rational,
}

/// `p` sums `q_(prefix)·p_j` over the opened slots (dummy slots only scale
/// the prefix factor); `q = 1 − p`. Without dummies `q` also equals `Π q_i`,
/// which is cross-checked.
pub fn pq_of<'a>(problem: impl Into<Problem<'a>>, s: &ImpulsiveWithDummies) -> Result<HaltProbabilities> {
    let problem = problem.into();
    s.validate(problem.n())?;
    let boxes = problem.bernoulli_boxes()?;
    let mut prefix = Rational::one();
    let mut p = Rational::zero();
    for &i in &s.order {
        if s.is_opened(i) {
            p += &prefix * &boxes[i].prob;
        }
        prefix *= boxes[i].q();
    }
    let q = Rational::one() - &p;
    if s.opened.len() == s.order.len() && q != prefix {
        return Err(Error::Internal(format!(
            "halt probability mismatch: 1 − Σ = {q}, Π q = {prefix}"
        )));
    }
    Ok(HaltProbabilities { p, q })
}

/// Which marginal utility: `g = id` (N), `(· − v_r)⁺` (Y) or `· − v_r` (M).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UtilityKind {
    N,
    Y,
    M,
}

/// Conditioning for marginal utilities: an optional root box `r` whose value
/// `v_r` was observed, and a set `T` of boxes already paid for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalUtilityContext {
    pub root: Option<usize>,
    pub given: BoxSet,
}

impl MarginalUtilityContext {
    pub fn none(n: usize) -> Self {
        MarginalUtilityContext {
            root: None,
            given: BoxSet::empty(n),
        }
    }

    pub fn new(root: Option<usize>, given: BoxSet) -> Self {
        MarginalUtilityContext { root, given }
    }

    /// `{r} ∪ T`
    fn base_set(&self) -> BoxSet {
        let mut b = self.given.clone();
        if let Some(r) = self.root {
            b.insert(r);
        }
        b
    }
}

/// `u_kind(π_P | T)` by the prefix expansion: each opened slot `j` adds
/// `q_(prefix)·(p_j·g(v_j) − c(j | {r} ∪ T ∪ earlier opened))`.
pub fn marginal_utility<'a>(
    kind: UtilityKind,
    problem: impl Into<Problem<'a>>,
    s: &ImpulsiveWithDummies,
    ctx: &MarginalUtilityContext,
) -> Result<Rational> {
    let problem = problem.into();
    let n = problem.n();
    s.validate(n)?;
    if ctx.given.arity() != n {
        return domain(format!("conditioning set over {} boxes, n = {n}", ctx.given.arity()));
    }
    let boxes = problem.bernoulli_boxes()?;
    let v_r = match ctx.root {
        Some(r) if r >= n => return domain(format!("root box {r} out of range")),
        Some(r) if s.order.contains(&r) => {
            return domain(format!("root box {r} appears in the strategy"))
        }
        Some(r) => boxes[r].value.clone(),
        None => Rational::zero(),
    };
    if let Some(&o) = s.opened.iter().find(|&&o| ctx.given.contains(o)) {
        return domain(format!("opened box {o} is in the conditioning set"));
    }
    let g = |v: &Rational| match kind {
        UtilityKind::N => v.clone(),
        UtilityKind::Y => pos(&(v - &v_r)),
        UtilityKind::M => v - &v_r,
    };
    let mut paid = ctx.base_set();
    let mut paid_cost = problem.cost.cost_of(&paid);
    let mut prefix = Rational::one();
    let mut total = Rational::zero();
    for &i in &s.order {
        let b = &boxes[i];
        if s.is_opened(i) {
            paid.insert(i);
            let next_cost = problem.cost.cost_of(&paid);
            let marginal = &next_cost - &paid_cost;
            paid_cost = next_cost;
            total += &prefix * (&b.prob * g(&b.value) - marginal);
        }
        prefix *= b.q();
    }
    Ok(total)
}

/// The distribution over deterministic impulsive strategies induced by the
/// dummy slots; equal strategies are merged, in order of first appearance.
pub fn dummy_mixture<'a>(
    problem: impl Into<Problem<'a>>,
    s: &ImpulsiveWithDummies,
) -> Result<Vec<(ImpulsiveStrategy, Rational)>> {
    let problem = problem.into();
    s.validate(problem.n())?;
    let boxes = problem.bernoulli_boxes()?;
    let mut out: Vec<(ImpulsiveStrategy, Rational)> = Vec::new();
    let mut push = |strategy: ImpulsiveStrategy, prob: Rational| {
        if prob.is_zero() {
            return;
        }
        match out.iter_mut().find(|(st, _)| *st == strategy) {
            Some((_, p)) => *p += prob,
            None => out.push((strategy, prob)),
        }
    };
    let mut survive = Rational::one();
    let mut opened = Vec::new();
    for &i in &s.order {
        if s.is_opened(i) {
            opened.push(i);
        } else {
            push(ImpulsiveStrategy::new(opened.clone()), &survive * &boxes[i].prob);
            survive *= boxes[i].q();
        }
    }
    push(ImpulsiveStrategy::new(opened), survive);
    Ok(out)
}

/// Expected value minus expected cost of an impulsive strategy.
pub fn eval_impulsive<'a>(problem: impl Into<Problem<'a>>, pi: &ImpulsiveStrategy) -> Result<Rational> {
    let problem = problem.into();
    marginal_utility(
        UtilityKind::N,
        problem,
        &pi.all_opened(),
        &MarginalUtilityContext::none(problem.n()),
    )
}

/// Forward recursion over the distribution of the running best value.
pub fn eval_fixed_order<'a>(problem: impl Into<Problem<'a>>, s: &FixedOrderThresholds) -> Result<Rational> {
    let problem = problem.into();
    s.validate(problem.n())?;
    let mut live: BTreeMap<Rational, Rational> = BTreeMap::from([(Rational::zero(), Rational::one())]);
    let mut value = Rational::zero();
    let mut cost = Rational::zero();
    let mut opened = BoxSet::empty(problem.n());
    let mut opened_cost = Rational::zero();
    for (round, &i) in s.sigma.iter().enumerate() {
        let t = &s.thresholds[round];
        let mut next: BTreeMap<Rational, Rational> = BTreeMap::new();
        let mut continuing = Rational::zero();
        for (best, p) in live {
            if t.halts_at(&best) {
                value += &best * &p;
                continue;
            }
            continuing += &p;
            for (v, pv) in problem.boxes[i].atoms() {
                let nb = if v > &best { v.clone() } else { best.clone() };
                *next.entry(nb).or_insert_with(Rational::zero) += &p * pv;
            }
        }
        if !continuing.is_zero() {
            opened.insert(i);
            let c = problem.cost.cost_of(&opened);
            cost += &continuing * (&c - &opened_cost);
            opened_cost = c;
        }
        live = next;
        if live.is_empty() {
            break;
        }
    }
    for (best, p) in live {
        value += best * p;
    }
    Ok(value - cost)
}

/// Expectation over the tree, weighting leaves by their path probability.
pub fn eval_policy<'a>(problem: impl Into<Problem<'a>>, tree: &PolicyTree) -> Result<Rational> {
    let problem = problem.into();
    let opened = BoxSet::empty(problem.n());
    walk(problem, tree, &opened, &Rational::zero(), &Rational::zero())
}

fn walk(
    problem: Problem<'_>,
    node: &PolicyTree,
    opened: &BoxSet,
    opened_cost: &Rational,
    best: &Rational,
) -> Result<Rational> {
    match node {
        PolicyTree::Halt => Ok(best.clone()),
        PolicyTree::Open {
            box_index,
            children,
        } => {
            let i = *box_index;
            if i >= problem.n() {
                return domain(format!("policy opens box {i}, n = {}", problem.n()));
            }
            if opened.contains(i) {
                return domain(format!("policy opens box {i} twice on one path"));
            }
            let next = opened.with(i);
            let next_cost = problem.cost.cost_of(&next);
            let marginal = &next_cost - opened_cost;
            let mut total = -marginal;
            for (v, p) in problem.boxes[i].atoms() {
                let child = children.get(v).ok_or_else(|| {
                    Error::Domain(format!("policy has no branch for value {v} of box {i}"))
                })?;
                let nb = if v > best { v } else { best };
                total += p * walk(problem, child, &next, &next_cost, nb)?;
            }
            Ok(total)
        }
    }
}

/// Bernoulli parameters of the boxes of `pi`, for callers that need them.
pub fn strategy_boxes<'a>(problem: Problem<'a>, pi: &ImpulsiveStrategy) -> Result<Vec<WeightedBernoulli>> {
    let boxes = problem.bernoulli_boxes()?;
    Ok(pi.order.iter().map(|&i| boxes[i].clone()).collect())
}
