//! The canonical instance corpus with expected solver outcomes, and seeded
//! randomized suites for the structural results.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxset::BoxSet;
use crate::cost::{
    check_xos_certificate, validate_class, CostClass, CostOracle, CostSpec, ExplicitCost,
    HardnessCost, XosCost,
};
use crate::error::{Error, Result};
use crate::hardness::{verify_family, FamilyVerdict, HardnessParams};
use crate::instances::canonical::{self, HardnessVariant};
use crate::instances::random::{random_instance, Family, RandomParams};
use crate::instances::{ClassTag, Instance};
use crate::rational::{format_rational, ratio, Rational};
use crate::solvers::{
    optimal_adaptive, optimal_fixed_order, optimal_impulsive, reservation_value, weitzman,
};
use crate::strategies::{
    dummy_mixture, marginal_utility, pq_of, ImpulsiveStrategy, ImpulsiveWithDummies,
    MarginalUtilityContext, PolicyTree, UtilityKind,
};
use crate::transforms::{bernoullify, check_preservation, discretize, pull_back_strategy};

/// Where an expected value comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    /// Stated in the literature.
    Published,
    /// Computed by an independent method, named here.
    Computed { oracle: &'static str },
    /// Immediate from the definitions.
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverClass {
    Adaptive,
    Fixed,
    Impulsive,
    Weitzman,
}

impl SolverClass {
    pub const ALL: [SolverClass; 4] = [
        SolverClass::Adaptive,
        SolverClass::Fixed,
        SolverClass::Impulsive,
        SolverClass::Weitzman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverClass::Adaptive => "adaptive",
            SolverClass::Fixed => "fixed",
            SolverClass::Impulsive => "impulsive",
            SolverClass::Weitzman => "weitzman",
        }
    }

    /// Optimal utility of this class on `inst`.
    pub fn solve(self, inst: &Instance) -> Result<Rational> {
        match self {
            SolverClass::Adaptive => optimal_adaptive(inst).map(|r| r.0),
            SolverClass::Fixed => optimal_fixed_order(inst).map(|r| r.1),
            SolverClass::Impulsive => optimal_impulsive(inst).map(|r| r.1),
            SolverClass::Weitzman => weitzman(inst).map(|r| r.0),
        }
    }
}

impl fmt::Display for SolverClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown solver class {s:?}")))
    }
}

/// One expected outcome on a corpus instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    Utility { solver: SolverClass, value: Rational },
    /// Adaptive optimum strictly above the fixed-order optimum.
    StrictGap,
    /// The adaptive solver returns exactly this tree.
    AdaptiveTree(PolicyTree),
    ClassPass(CostClass),
    ClassFail(CostClass),
    /// Weitzman's rule refuses the (non-additive) cost.
    WeitzmanRejected,
    /// Every box has a negative reservation value at this per-box cost.
    NegativeReservation(Rational),
    /// The XOS clauses reproduce `n·c([n])·1{S ≠ ∅} + c(S ∖ {0})` for the
    /// named base instance.
    XosLiftOf(&'static str),
    /// Bernoullification leaves the class.
    PreservationFails(ClassTag),
    /// The lower-bound family check passes at these parameters.
    FamilyPasses(HardnessParams),
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Utility { solver, .. } => write!(f, "{solver} utility"),
            Check::StrictGap => f.write_str("adaptive > fixed"),
            Check::AdaptiveTree(_) => f.write_str("optimal adaptive tree"),
            Check::ClassPass(c) => write!(f, "cost is {}", c.name()),
            Check::ClassFail(c) => write!(f, "cost is not {}", c.name()),
            Check::WeitzmanRejected => f.write_str("weitzman rejects the cost"),
            Check::NegativeReservation(c) => write!(f, "reservation values < 0 at cost {c}"),
            Check::XosLiftOf(base) => write!(f, "xos clauses reproduce the lift of {base}"),
            Check::PreservationFails(c) => write!(f, "bernoullified cost is not {c}"),
            Check::FamilyPasses(p) => write!(f, "lower-bound family at n = {}", p.n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expectation {
    pub check: Check,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub instance: Instance,
    pub expected: Vec<Expectation>,
}

fn expect(check: Check, provenance: Provenance) -> Expectation {
    Expectation { check, provenance }
}

fn computed(oracle: &'static str) -> Provenance {
    Provenance::Computed { oracle }
}

fn utility(solver: SolverClass, value: Rational) -> Check {
    Check::Utility { solver, value }
}

const PY_DP: &str = "independent Python dynamic program over (opened, best)";
const PY_PERM: &str = "independent Python threshold recursion over all orders";
const PY_SEQ: &str = "independent Python enumeration of ordered subsets";

/// The corpus; `include_large` adds the `n = 100000` lower-bound family.
pub fn corpus(include_large: bool) -> Result<Vec<CorpusEntry>> {
    use SolverClass::*;
    let int = |v: i64| Rational::from_integer(v.into());
    let example1_tree = PolicyTree::open(
        0,
        [
            (int(0), PolicyTree::open(2, [(int(10), PolicyTree::Halt)])),
            (
                int(10),
                PolicyTree::open(1, [(int(0), PolicyTree::Halt), (int(12), PolicyTree::Halt)]),
            ),
        ],
    );
    let small = HardnessParams::with_overrides(12, 8, 3)?;
    let mut entries = vec![
        CorpusEntry {
            name: "example1",
            instance: canonical::example1(),
            expected: vec![
                expect(utility(Adaptive, ratio(21, 2)), computed(PY_DP)),
                expect(utility(Fixed, int(10)), computed(PY_PERM)),
                expect(Check::StrictGap, computed(PY_DP)),
                expect(Check::AdaptiveTree(example1_tree), Provenance::Published),
                expect(Check::ClassFail(CostClass::Subadditive), Provenance::Trivial),
            ],
        },
        CorpusEntry {
            name: "unit_demand_pair",
            instance: canonical::unit_demand_pair(),
            expected: vec![
                expect(utility(Impulsive, ratio(1, 9)), Provenance::Published),
                expect(utility(Adaptive, ratio(1, 9)), computed(PY_DP)),
                expect(utility(Fixed, ratio(1, 9)), computed(PY_PERM)),
                expect(Check::NegativeReservation(int(1)), Provenance::Published),
                expect(Check::WeitzmanRejected, Provenance::Trivial),
                expect(Check::ClassPass(CostClass::MatroidRank), Provenance::Published),
            ],
        },
        CorpusEntry {
            name: "subadditive4",
            instance: canonical::subadditive4(),
            expected: vec![
                expect(utility(Adaptive, ratio(4253, 120)), computed(PY_DP)),
                expect(utility(Fixed, ratio(1417, 40)), computed(PY_PERM)),
                expect(Check::StrictGap, Provenance::Published),
                expect(Check::ClassPass(CostClass::Subadditive), Provenance::Published),
                expect(Check::ClassFail(CostClass::Submodular), Provenance::Published),
            ],
        },
        CorpusEntry {
            name: "xos_lift_of(example1)",
            instance: canonical::xos_lift_of(&canonical::example1())?,
            expected: vec![
                expect(utility(Adaptive, ratio(69, 4)), computed(PY_DP)),
                expect(utility(Fixed, int(17)), computed(PY_PERM)),
                expect(Check::StrictGap, Provenance::Published),
                expect(Check::XosLiftOf("example1"), Provenance::Published),
            ],
        },
        CorpusEntry {
            name: "tree_closure",
            instance: canonical::tree_closure(),
            expected: vec![
                expect(Check::ClassPass(CostClass::GrossSubstitutes), Provenance::Published),
                expect(utility(Adaptive, ratio(10, 3)), computed(PY_DP)),
                expect(utility(Fixed, ratio(10, 3)), computed(PY_PERM)),
                expect(utility(Impulsive, ratio(10, 3)), computed(PY_SEQ)),
            ],
        },
        CorpusEntry {
            name: "budget_additive_pair_split",
            instance: canonical::budget_additive_pair_split(),
            expected: vec![expect(
                Check::PreservationFails(ClassTag::BudgetAdditive),
                Provenance::Published,
            )],
        },
        CorpusEntry {
            name: "hardness(n=12, alpha=8, beta=3)",
            instance: canonical::hardness(&small, HardnessVariant::Baseline)?,
            expected: vec![expect(Check::ClassPass(CostClass::MatroidRank), Provenance::Published)],
        },
    ];
    if include_large {
        let params = HardnessParams::new(100_000)?;
        entries.push(CorpusEntry {
            name: "hardness(n=100000)",
            instance: canonical::hardness(&params, HardnessVariant::Planted(None))?,
            expected: vec![expect(Check::FamilyPasses(params), Provenance::Published)],
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub provenance: Provenance,
    pub pass: bool,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub pass: bool,
    pub entries: Vec<EntryReport>,
}

fn show<T: fmt::Display>(r: &Result<T>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

/// `(pass, expected, got)`
fn run_check(inst: &Instance, check: &Check) -> (bool, String, String) {
    match check {
        Check::Utility { solver, value } => {
            let got = solver.solve(inst);
            (got.as_ref().ok() == Some(value), format_rational(value), show(&got))
        }
        Check::StrictGap => {
            let gap = optimal_adaptive(inst)
                .and_then(|(a, _)| Ok((a, optimal_fixed_order(inst)?.1)));
            match gap {
                Ok((a, f)) => (a > f, "adaptive > fixed".into(), format!("{a} vs {f}")),
                Err(e) => (false, "adaptive > fixed".into(), format!("error: {e}")),
            }
        }
        Check::AdaptiveTree(tree) => {
            let expected = serde_json::to_string(tree).expect("trees serialize");
            match optimal_adaptive(inst) {
                Ok((_, got)) => (
                    got == *tree,
                    expected,
                    serde_json::to_string(&got).expect("trees serialize"),
                ),
                Err(e) => (false, expected, format!("error: {e}")),
            }
        }
        Check::ClassPass(class) | Check::ClassFail(class) => {
            let want = matches!(check, Check::ClassPass(_));
            match validate_class(&inst.cost, *class) {
                Ok(v) => {
                    let got = match &v.witness {
                        None => "pass".to_string(),
                        Some(w) => format!("fail: {w}"),
                    };
                    (v.pass == want, if want { "pass" } else { "fail" }.into(), got)
                }
                Err(e) => (false, "validation".into(), format!("error: {e}")),
            }
        }
        Check::WeitzmanRejected => match weitzman(inst) {
            Err(Error::Domain(msg)) => (true, "domain error".into(), msg),
            other => (false, "domain error".into(), show(&other.map(|r| r.0))),
        },
        Check::NegativeReservation(c) => {
            let z: Result<Vec<Rational>> =
                inst.boxes.iter().map(|d| reservation_value(d, c)).collect();
            match z {
                Ok(z) => (
                    z.iter().all(Signed::is_negative),
                    "all < 0".into(),
                    z.iter().map(format_rational).collect::<Vec<_>>().join(", "),
                ),
                Err(e) => (false, "all < 0".into(), format!("error: {e}")),
            }
        }
        Check::XosLiftOf(base) => {
            let outcome = (|| {
                let CostSpec::Xos(cert) = &inst.cost else {
                    return Err(Error::Domain(format!("cost kind is {}", inst.cost.kind())));
                };
                let base = canonical::canonical(base)?;
                let n = base.n();
                let top = Rational::from_integer((n as i64).into()) * base.cost.eval(&BoxSet::full(n))?;
                let g = ExplicitCost::from_fn(n + 1, |s| {
                    if s.is_empty() {
                        return Rational::zero();
                    }
                    let rest = BoxSet::from_indices(n, s.iter().filter(|&i| i > 0).map(|i| i - 1))
                        .expect("indices in range");
                    &top + base.cost.cost_of(&rest)
                })?;
                check_xos_certificate(&g, cert)
            })();
            match outcome {
                Ok(None) => (true, "consistent".into(), "consistent".into()),
                Ok(Some(w)) => (false, "consistent".into(), w.to_string()),
                Err(e) => (false, "consistent".into(), format!("error: {e}")),
            }
        }
        Check::PreservationFails(class) => match check_preservation(inst, *class) {
            Ok(r) => (!r.pass, "not preserved".into(), if r.pass { "preserved" } else { "not preserved" }.into()),
            Err(e) => (false, "not preserved".into(), format!("error: {e}")),
        },
        Check::FamilyPasses(params) => match verify_family(params) {
            Ok(r) => (
                r.verdict == FamilyVerdict::Pass,
                "pass".into(),
                format!(
                    "{:?}: max baseline {:.6}, planted {:.6} ≥ {:.6}",
                    r.verdict, r.max_baseline_utility, r.planted_utility, r.planted_lower_bound
                ),
            ),
            Err(e) => (false, "pass".into(), format!("error: {e}")),
        },
    }
}

pub fn run_entry(entry: &CorpusEntry) -> EntryReport {
    let checks: Vec<CheckReport> = entry
        .expected
        .iter()
        .map(|e| {
            let (pass, expected, got) = run_check(&entry.instance, &e.check);
            CheckReport {
                check: e.check.to_string(),
                provenance: e.provenance.clone(),
                pass,
                expected,
                got,
            }
        })
        .collect();
    EntryReport {
        name: entry.name.to_string(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

/// Re-derives every corpus expectation; entries run in parallel and are
/// reported in corpus order.
pub fn run_corpus(include_large: bool) -> Result<CorpusReport> {
    let entries: Vec<EntryReport> = corpus(include_large)?.par_iter().map(run_entry).collect();
    Ok(CorpusReport {
        pass: entries.iter().all(|e| e.pass),
        entries,
    })
}

/// A randomized property suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Impulsive optimum equals adaptive optimum for submodular Bernoulli instances.
    ImpulsiveOptimality,
    /// Fixed-order optimum equals adaptive optimum for submodular instances.
    FixedOrderOptimality,
    /// `u_N(π) ≤ u_N(π_A | B) + u_N(π_B)` for submodular costs.
    DummySplit,
    /// `c(h | T+ℓ) − c(ℓ | T+h) = c(h | T) − c(ℓ | T)` for any cost.
    Cancellation,
    /// Bernoullification keeps each cost class.
    Preservation,
    /// `u_M ≤ u_Y ≤ u_N`, `u_M = u_N − p·v_r` and dummy-mixture consistency.
    Chain,
    /// Discretization within `2ε` and Bernoullification exact at the optimum.
    Transforms,
    /// Weitzman's rule is optimal for additive costs.
    Weitzman,
}

impl Theorem {
    pub const ALL: [Theorem; 8] = [
        Theorem::ImpulsiveOptimality,
        Theorem::FixedOrderOptimality,
        Theorem::DummySplit,
        Theorem::Cancellation,
        Theorem::Preservation,
        Theorem::Chain,
        Theorem::Transforms,
        Theorem::Weitzman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::ImpulsiveOptimality => "impulsive_optimality",
            Theorem::FixedOrderOptimality => "fixed_order_optimality",
            Theorem::DummySplit => "dummy_split",
            Theorem::Cancellation => "cancellation",
            Theorem::Preservation => "preservation",
            Theorem::Chain => "chain",
            Theorem::Transforms => "transforms",
            Theorem::Weitzman => "weitzman",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Theorem::ImpulsiveOptimality => 200,
            Theorem::FixedOrderOptimality | Theorem::Transforms | Theorem::Weitzman => 100,
            Theorem::DummySplit | Theorem::Chain => 500,
            Theorem::Cancellation => 1000,
            Theorem::Preservation => 60,
        }
    }
}

impl Serialize for Theorem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    /// Accepts the names above and the short ids `T31`, `T44`, `L35`.
    fn from_str(s: &str) -> Result<Self> {
        const SHORT: [(&str, Theorem); 3] = [
            ("T31", Theorem::ImpulsiveOptimality),
            ("T44", Theorem::FixedOrderOptimality),
            ("L35", Theorem::DummySplit),
        ];
        Self::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .or_else(|| SHORT.iter().find(|(id, _)| id.eq_ignore_ascii_case(s)).map(|(_, t)| *t))
            .ok_or_else(|| Error::Parse(format!("unknown theorem suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub reason: String,
    pub instance: Option<Instance>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub theorem: Theorem,
    pub trials: usize,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.failed == 0
    }
}

pub const MAX_SUITE_TRIALS: usize = 100_000;

/// Runs `trials` independent trials; trial `t` draws from stream `t` of a
/// ChaCha8 generator seeded with `seed`, so reports depend only on the seed.
pub fn run_theorem_suite(theorem: Theorem, trials: usize, seed: u64) -> Result<SuiteReport> {
    if trials > MAX_SUITE_TRIALS {
        return Err(Error::Capability {
            what: "theorem suite trials",
            n: trials,
            limit: MAX_SUITE_TRIALS,
        });
    }
    let outcomes: Vec<Option<Counterexample>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut inst = None;
            let result = run_trial(theorem, t, &mut rng, &mut inst);
            match result {
                Ok(()) => None,
                Err(reason) => Some(Counterexample {
                    trial: t,
                    reason,
                    instance: inst,
                }),
            }
        })
        .collect();
    let counterexamples: Vec<Counterexample> = outcomes.into_iter().flatten().collect();
    Ok(SuiteReport {
        theorem,
        trials,
        seed,
        passed: trials - counterexamples.len(),
        failed: counterexamples.len(),
        counterexamples,
    })
}

type Trial = std::result::Result<(), String>;

fn err<E: fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Trial {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_trial(theorem: Theorem, t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    match theorem {
        Theorem::ImpulsiveOptimality => trial_impulsive_optimality(t, rng, slot),
        Theorem::FixedOrderOptimality => trial_fixed_order_optimality(t, rng, slot),
        Theorem::DummySplit => trial_dummy_split(t, rng, slot),
        Theorem::Cancellation => trial_cancellation(rng, slot),
        Theorem::Preservation => trial_preservation(t, rng, slot),
        Theorem::Chain => trial_chain(rng, slot),
        Theorem::Transforms => trial_transforms(t, rng, slot),
        Theorem::Weitzman => trial_weitzman(t, rng, slot),
    }
}

const SUBMODULAR_BERNOULLI: [Family; 3] = [
    Family::BernoulliCoverage,
    Family::BernoulliTree,
    Family::BernoulliHardness,
];

fn draw(
    family: Family,
    n: usize,
    rng: &mut ChaCha8Rng,
    params: &RandomParams,
    slot: &mut Option<Instance>,
) -> std::result::Result<Instance, String> {
    let n = if family == Family::BernoulliHardness { n.max(2) } else { n };
    let inst = random_instance(family, n, rng.gen(), params).map_err(err)?;
    *slot = Some(inst.clone());
    Ok(inst)
}

fn submodular_check(inst: &Instance) -> Trial {
    let v = validate_class(&inst.cost, CostClass::Submodular).map_err(err)?;
    ensure(v.pass, || format!("generator produced a non-submodular cost: {:?}", v.witness))
}

fn trial_impulsive_optimality(t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let n = rng.gen_range(1..=6);
    let inst = draw(SUBMODULAR_BERNOULLI[t % 3], n, rng, &RandomParams::default(), slot)?;
    submodular_check(&inst)?;
    let (_, imp) = optimal_impulsive(&inst).map_err(err)?;
    let (ada, _) = optimal_adaptive(&inst).map_err(err)?;
    ensure(imp == ada, || format!("impulsive {imp} ≠ adaptive {ada}"))
}

fn trial_fixed_order_optimality(t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let family = [Family::GeneralCoverage, Family::GeneralTree][t % 2];
    let n = rng.gen_range(1..=5);
    let inst = draw(family, n, rng, &RandomParams::default(), slot)?;
    submodular_check(&inst)?;
    let (_, fixed) = optimal_fixed_order(&inst).map_err(err)?;
    let (ada, _) = optimal_adaptive(&inst).map_err(err)?;
    ensure(fixed == ada, || format!("fixed {fixed} ≠ adaptive {ada}"))
}

/// A random ordered subset of `0..n`.
fn random_order(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let k = rng.gen_range(0..=n);
    all.truncate(k);
    all
}

/// A box outside `order`, or none, with equal odds when one exists.
fn random_root(rng: &mut ChaCha8Rng, n: usize, order: &[usize]) -> Option<usize> {
    let free: Vec<usize> = (0..n).filter(|i| !order.contains(i)).collect();
    if free.is_empty() || rng.gen_bool(0.5) {
        None
    } else {
        free.choose(rng).copied()
    }
}

fn trial_dummy_split(t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let n = rng.gen_range(2..=6);
    let inst = draw(SUBMODULAR_BERNOULLI[t % 3], n, rng, &RandomParams::default(), slot)?;
    let order = random_order(rng, n);
    let root = random_root(rng, n, &order);
    let (a, b): (Vec<usize>, Vec<usize>) = order.iter().partition(|_| rng.gen_bool(0.5));
    let pi = ImpulsiveStrategy::new(order.clone()).all_opened();
    let pi_a = ImpulsiveWithDummies::new(order.clone(), a).map_err(err)?;
    let pi_b = ImpulsiveWithDummies::new(order.clone(), b.clone()).map_err(err)?;
    let none = MarginalUtilityContext::new(root, BoxSet::empty(n));
    let given_b = MarginalUtilityContext::new(root, BoxSet::from_indices(n, b).map_err(err)?);
    let u = |s: &ImpulsiveWithDummies, ctx: &MarginalUtilityContext| {
        marginal_utility(UtilityKind::N, &inst, s, ctx).map_err(err)
    };
    let lhs = u(&pi, &none)?;
    let rhs = u(&pi_a, &given_b)? + u(&pi_b, &none)?;
    let p = |s: &ImpulsiveWithDummies| pq_of(&inst, s).map(|pq| pq.p).map_err(err);
    let (p_all, p_a, p_b) = (p(&pi)?, p(&pi_a)?, p(&pi_b)?);
    ensure(&p_a + &p_b == p_all, || format!("p split {p_a} + {p_b} ≠ {p_all}"))?;
    ensure(lhs <= rhs, || {
        format!("u_N(π) = {lhs} > {rhs} for π = {order:?}, A = {:?}, root {root:?}", pi_a.opened)
    })
}

fn trial_cancellation(rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let family = *Family::ALL.choose(rng).expect("nonempty");
    let n = rng.gen_range(2..=8);
    let inst = draw(family, n, rng, &RandomParams::default(), slot)?;
    let n = inst.n();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let (h, l) = (idx[0], idx[1]);
    let t = BoxSet::from_indices(n, idx[2..].iter().copied().filter(|_| rng.gen_bool(0.5)))
        .map_err(err)?;
    let c = |s: &BoxSet| inst.cost.cost_of(s);
    let (th, tl, thl) = (t.with(h), t.with(l), t.with(h).with(l));
    let lhs = (c(&thl) - c(&tl)) - (c(&thl) - c(&th));
    let rhs = (c(&th) - c(&t)) - (c(&tl) - c(&t));
    ensure(lhs == rhs, || format!("h = {h}, ℓ = {l}, T = {:?}: {lhs} ≠ {rhs}", t.to_vec()))
}

/// `m` random clauses with nonnegative per-box weights.
fn random_xos(rng: &mut ChaCha8Rng, n: usize) -> Result<XosCost> {
    let m = rng.gen_range(1..=3);
    let clauses = (0..m)
        .map(|_| (0..n).map(|_| ratio(rng.gen_range(0..=6), 2)).collect())
        .collect();
    XosCost::new(n, clauses)
}

fn trial_preservation(t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    const CLASSES: [ClassTag; 6] = [
        ClassTag::Submodular,
        ClassTag::Coverage,
        ClassTag::Xos,
        ClassTag::Subadditive,
        ClassTag::MatroidRank,
        ClassTag::GrossSubstitutes,
    ];
    let class = CLASSES[t % CLASSES.len()];
    // Up to 3 nonzero atoms per box keeps the lifted instance within the
    // enumeration bounds (10 boxes for gross substitutes, 14 otherwise).
    let n = match class {
        ClassTag::GrossSubstitutes => rng.gen_range(1..=3),
        _ => rng.gen_range(1..=4),
    };
    let params = RandomParams::default();
    let base = match class {
        ClassTag::Submodular | ClassTag::Coverage => Family::GeneralCoverage,
        ClassTag::GrossSubstitutes => Family::GeneralTree,
        ClassTag::Subadditive => Family::ExplicitSubadditive,
        _ => Family::GeneralCoverage,
    };
    let mut inst = draw(base, n, rng, &params, slot)?;
    match class {
        ClassTag::Xos => inst.cost = random_xos(rng, n).map_err(err)?.into(),
        ClassTag::MatroidRank => {
            let alpha = rng.gen_range(1..=n);
            let beta = rng.gen_range(0..alpha);
            inst.cost = if rng.gen_bool(0.5) {
                HardnessCost::baseline(n, alpha, beta)
            } else {
                let mut r: Vec<usize> = (0..n).collect();
                r.shuffle(rng);
                r.truncate(alpha);
                HardnessCost::planted(n, alpha, beta, BoxSet::from_indices(n, r).map_err(err)?)
            }
            .map_err(err)?
            .into();
        }
        _ => {}
    }
    inst.class = None;
    *slot = Some(inst.clone());
    if let Some(v) = class.validator() {
        let before = validate_class(&inst.cost, v).map_err(err)?;
        ensure(before.pass, || format!("original cost is not {class}: {:?}", before.witness))?;
    }
    let r = check_preservation(&inst, class).map_err(err)?;
    ensure(r.pass, || format!("bernoullified cost leaves {class}: {:?}", r.witness))
}

fn trial_chain(rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let family = *[
        Family::BernoulliCoverage,
        Family::BernoulliTree,
        Family::BernoulliHardness,
        Family::BernoulliAdditive,
    ]
    .choose(rng)
    .expect("nonempty");
    let n = rng.gen_range(1..=6);
    let inst = draw(family, n, rng, &RandomParams::default(), slot)?;
    let n = inst.n();
    let order = random_order(rng, n);
    let opened: Vec<usize> = order.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
    let s = ImpulsiveWithDummies::new(order.clone(), opened.clone()).map_err(err)?;
    let root = random_root(rng, n, &order);
    let given = BoxSet::from_indices(
        n,
        (0..n).filter(|i| !opened.contains(i) && Some(*i) != root && rng.gen_bool(0.4)),
    )
    .map_err(err)?;
    let ctx = MarginalUtilityContext::new(root, given);
    let u = |k, s: &ImpulsiveWithDummies| marginal_utility(k, &inst, s, &ctx).map_err(err);
    let (un, uy, um) = (u(UtilityKind::N, &s)?, u(UtilityKind::Y, &s)?, u(UtilityKind::M, &s)?);
    ensure(um <= uy && uy <= un, || format!("chain fails: u_M {um}, u_Y {uy}, u_N {un}"))?;
    let v_r = match root {
        Some(r) => inst.bernoulli_boxes().map_err(err)?[r].value.clone(),
        None => Rational::zero(),
    };
    let p = pq_of(&inst, &s).map_err(err)?.p;
    ensure(um == &un - &p * &v_r, || format!("u_M {um} ≠ u_N − p·v_r = {}", &un - &p * &v_r))?;
    let mixture = dummy_mixture(&inst, &s).map_err(err)?;
    let total: Rational = mixture.iter().map(|(_, q)| q.clone()).sum();
    ensure(total == Rational::from_integer(1.into()), || format!("mixture mass {total}"))?;
    for kind in [UtilityKind::N, UtilityKind::Y, UtilityKind::M] {
        let mut mixed = Rational::zero();
        for (det, q) in &mixture {
            mixed += q * u(kind, &det.all_opened())?;
        }
        let direct = u(kind, &s)?;
        ensure(mixed == direct, || format!("{kind:?}: mixture {mixed} ≠ direct {direct}"))?;
    }
    Ok(())
}

fn trial_transforms(t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let family = [
        Family::GeneralCoverage,
        Family::GeneralTree,
        Family::Additive,
        Family::ExplicitSubadditive,
    ][t % 4];
    let n = rng.gen_range(1..=3);
    let inst = draw(family, n, rng, &RandomParams::default(), slot)?;
    let eps = [ratio(1, 3), ratio(1, 2), ratio(1, 1), ratio(5, 2)]
        .choose(rng)
        .expect("nonempty")
        .clone();
    let opt = optimal_adaptive(&inst).map_err(err)?.0;
    let disc = discretize(&inst, &eps).map_err(err)?;
    let opt_eps = optimal_adaptive(&disc).map_err(err)?.0;
    let two_eps = &eps * Rational::from_integer(2.into());
    ensure(opt_eps <= opt && opt <= &opt_eps + &two_eps, || {
        format!("ε = {eps}: discretized optimum {opt_eps} vs original {opt}")
    })?;
    let (lifted, map) = bernoullify(&inst).map_err(err)?;
    let opt_lift = optimal_adaptive(&lifted).map_err(err)?.0;
    ensure(opt_lift == opt, || format!("bernoullified optimum {opt_lift} ≠ {opt}"))?;
    let lifted_pi = ImpulsiveStrategy::new(random_order(rng, lifted.n()));
    pull_back_strategy(&inst, &lifted, &map, &lifted_pi).map_err(err)?;
    Ok(())
}

fn trial_weitzman(t: usize, rng: &mut ChaCha8Rng, slot: &mut Option<Instance>) -> Trial {
    let family = [Family::Additive, Family::BernoulliAdditive][t % 2];
    let n = rng.gen_range(1..=6);
    let inst = draw(family, n, rng, &RandomParams::default(), slot)?;
    let (w, _) = weitzman(&inst).map_err(err)?;
    let (ada, _) = optimal_adaptive(&inst).map_err(err)?;
    ensure(w == ada, || format!("weitzman {w} ≠ adaptive {ada}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_corpus_passes() {
        let report = run_corpus(false).unwrap();
        for e in &report.entries {
            for c in &e.checks {
                assert!(c.pass, "{}: {} expected {} got {}", e.name, c.check, c.expected, c.got);
            }
        }
        assert!(report.pass);
    }

    #[test]
    fn suites_are_deterministic() {
        for th in Theorem::ALL {
            let a = run_theorem_suite(th, 6, 9).unwrap();
            let b = run_theorem_suite(th, 6, 9).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            assert!(a.pass(), "{th}: {:?}", a.counterexamples);
        }
    }

    #[test]
    fn names_round_trip() {
        for th in Theorem::ALL {
            assert_eq!(th.name().parse::<Theorem>().unwrap(), th);
        }
        for c in SolverClass::ALL {
            assert_eq!(c.name().parse::<SolverClass>().unwrap(), c);
        }
    }
}
