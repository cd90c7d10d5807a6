//! Exhaustive class validators over small ground sets.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{default_limits, require_n, CostOracle, CostTable, CoverageCost, XosCost};
use crate::boxset::BoxSet;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::rational::{serde_q, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostClass {
    MonotoneNormalized,
    Submodular,
    Subadditive,
    MatroidRank,
    GrossSubstitutes,
}

impl CostClass {
    pub const ALL: [CostClass; 5] = [
        CostClass::MonotoneNormalized,
        CostClass::Submodular,
        CostClass::Subadditive,
        CostClass::MatroidRank,
        CostClass::GrossSubstitutes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostClass::MonotoneNormalized => "monotone_normalized",
            CostClass::Submodular => "submodular",
            CostClass::Subadditive => "subadditive",
            CostClass::MatroidRank => "matroid_rank",
            CostClass::GrossSubstitutes => "gross_substitutes",
        }
    }
}

impl fmt::Display for CostClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CostClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown cost class {s:?}")))
    }
}

/// A concrete violation found by a validator.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Witness {
    NotNormalized {
        #[serde(with = "serde_q")]
        value: Rational,
    },
    NotMonotone {
        smaller: BoxSet,
        larger: BoxSet,
        #[serde(with = "serde_q")]
        smaller_cost: Rational,
        #[serde(with = "serde_q")]
        larger_cost: Rational,
    },
    /// `c(x | a) < c(x | b)` with `a ⊆ b`.
    NotSubmodular {
        x: usize,
        a: BoxSet,
        b: BoxSet,
        #[serde(with = "serde_q")]
        marginal_a: Rational,
        #[serde(with = "serde_q")]
        marginal_b: Rational,
    },
    /// `c(a ∪ b) > c(a) + c(b)`.
    NotSubadditive {
        a: BoxSet,
        b: BoxSet,
        #[serde(with = "serde_q")]
        cost_a: Rational,
        #[serde(with = "serde_q")]
        cost_b: Rational,
        #[serde(with = "serde_q")]
        cost_union: Rational,
    },
    NotIntegral {
        set: BoxSet,
        #[serde(with = "serde_q")]
        value: Rational,
    },
    RankAboveSize {
        set: BoxSet,
        #[serde(with = "serde_q")]
        value: Rational,
    },
    /// The triple multiset at `(s, i, j, k)` has a unique maximum.
    UniqueMax {
        s: BoxSet,
        i: usize,
        j: usize,
        k: usize,
        #[serde(serialize_with = "ser_q3")]
        terms: [Rational; 3],
    },
    CertificateMismatch {
        set: BoxSet,
        #[serde(with = "serde_q")]
        value: Rational,
        #[serde(with = "serde_q")]
        certified: Rational,
    },
    /// A budget-additive representation exists: `c(S) = min(budget, Σ a_i)`.
    BudgetAdditive {
        #[serde(serialize_with = "ser_qvec")]
        per_box: Vec<Rational>,
        #[serde(with = "serde_q")]
        budget: Rational,
    },
    /// No `min(B, Σ a_i)` reproduces the table; `a_i = c({i})` is forced and
    /// every table value was tried as `B`.
    NotBudgetAdditive,
}

fn ser_q3<S: serde::Serializer>(xs: &[Rational; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

fn ser_qvec<S: serde::Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::NotNormalized { value } => write!(f, "c(∅) = {value} ≠ 0"),
            Witness::NotMonotone {
                smaller,
                larger,
                smaller_cost,
                larger_cost,
            } => write!(
                f,
                "c({smaller:?}) = {smaller_cost} > c({larger:?}) = {larger_cost}"
            ),
            Witness::NotSubmodular {
                x,
                a,
                b,
                marginal_a,
                marginal_b,
            } => write!(
                f,
                "c({x} | {a:?}) = {marginal_a} < c({x} | {b:?}) = {marginal_b}"
            ),
            Witness::NotSubadditive {
                a,
                b,
                cost_a,
                cost_b,
                cost_union,
            } => write!(
                f,
                "c({a:?} ∪ {b:?}) = {cost_union} > {cost_a} + {cost_b}"
            ),
            Witness::NotIntegral { set, value } => write!(f, "c({set:?}) = {value} is not an integer"),
            Witness::RankAboveSize { set, value } => {
                write!(f, "c({set:?}) = {value} exceeds |{set:?}|")
            }
            Witness::UniqueMax { s, i, j, k, terms } => write!(
                f,
                "S = {s:?}, (i, j, k) = ({i}, {j}, {k}): unique max in [{}, {}, {}]",
                terms[0], terms[1], terms[2]
            ),
            Witness::CertificateMismatch {
                set,
                value,
                certified,
            } => write!(f, "c({set:?}) = {value} but the certificate gives {certified}"),
            Witness::BudgetAdditive { per_box, budget } => {
                let a: Vec<String> = per_box.iter().map(|x| x.to_string()).collect();
                write!(f, "c(S) = min({budget}, Σ a_i) with a = [{}]", a.join(", "))
            }
            Witness::NotBudgetAdditive => f.write_str("no budget-additive representation exists"),
        }
    }
}

/// Outcome of a class check: `witness` is `None` on pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub class: CostClass,
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl Validation {
    fn from_witness(class: CostClass, witness: Option<Witness>) -> Self {
        Validation {
            class,
            pass: witness.is_none(),
            witness,
        }
    }
}

pub fn validate_class(oracle: &dyn CostOracle, class: CostClass) -> Result<Validation> {
    validate_class_with(oracle, class, &default_limits())
}

pub fn validate_class_with(
    oracle: &dyn CostOracle,
    class: CostClass,
    limits: &Limits,
) -> Result<Validation> {
    let n = oracle.arity();
    let limit = match class {
        CostClass::GrossSubstitutes => limits.gross_substitutes,
        _ => limits.class_check,
    };
    require_n("exhaustive class validation", n, limit)?;
    let table = CostTable::build(oracle)?;
    let witness = match class {
        CostClass::MonotoneNormalized => monotone_normalized(&table),
        CostClass::Submodular => monotone_normalized(&table).or_else(|| submodular(&table)),
        CostClass::Subadditive => monotone_normalized(&table).or_else(|| subadditive(&table)),
        CostClass::MatroidRank => monotone_normalized(&table)
            .or_else(|| rank_bounds(&table))
            .or_else(|| submodular(&table)),
        CostClass::GrossSubstitutes => monotone_normalized(&table)
            .or_else(|| submodular(&table))
            .or_else(|| unique_max(&table)),
    };
    Ok(Validation::from_witness(class, witness))
}

fn set(n: usize, mask: u32) -> BoxSet {
    BoxSet::from_mask(n, mask as u64)
}

fn monotone_normalized(t: &CostTable) -> Option<Witness> {
    let n = t.arity();
    if !t.get(0).is_zero() {
        return Some(Witness::NotNormalized {
            value: t.get(0).clone(),
        });
    }
    for m in 0..1u32 << n {
        for i in (0..n).filter(|i| m & (1 << i) == 0) {
            let up = m | (1 << i);
            if t.get(up) < t.get(m) {
                return Some(Witness::NotMonotone {
                    smaller: set(n, m),
                    larger: set(n, up),
                    smaller_cost: t.get(m).clone(),
                    larger_cost: t.get(up).clone(),
                });
            }
        }
    }
    None
}

/// Local form: `c(x | A) ≥ c(x | A ∪ {y})` for all `A` and `x ≠ y ∉ A`,
/// which is equivalent to the `A ⊆ B` form by telescoping.
fn submodular(t: &CostTable) -> Option<Witness> {
    let n = t.arity();
    for a in 0..1u32 << n {
        for x in (0..n).filter(|x| a & (1 << x) == 0) {
            let mx = t.marginal(x, a);
            for y in (0..n).filter(|&y| y != x && a & (1 << y) == 0) {
                let b = a | (1 << y);
                let mxb = t.marginal(x, b);
                if mxb > mx {
                    return Some(Witness::NotSubmodular {
                        x,
                        a: set(n, a),
                        b: set(n, b),
                        marginal_a: mx,
                        marginal_b: mxb,
                    });
                }
            }
        }
    }
    None
}

/// Disjoint pairs suffice once monotonicity holds.
fn subadditive(t: &CostTable) -> Option<Witness> {
    let n = t.arity();
    for u in 1..1u32 << n {
        let low = u & u.wrapping_neg();
        let rest = u & !low;
        // a ranges over subsets of u containing its lowest element, b = u \ a.
        let mut sub = rest;
        loop {
            let a = sub | low;
            let b = u & !a;
            if b != 0 && t.get(u) > &(t.get(a) + t.get(b)) {
                return Some(Witness::NotSubadditive {
                    a: set(n, a),
                    b: set(n, b),
                    cost_a: t.get(a).clone(),
                    cost_b: t.get(b).clone(),
                    cost_union: t.get(u).clone(),
                });
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    None
}

fn rank_bounds(t: &CostTable) -> Option<Witness> {
    let n = t.arity();
    for m in 0..1u32 << n {
        let v = t.get(m);
        if !v.is_integer() {
            return Some(Witness::NotIntegral {
                set: set(n, m),
                value: v.clone(),
            });
        }
        if v > &Rational::from_integer(m.count_ones().into()) {
            return Some(Witness::RankAboveSize {
                set: set(n, m),
                value: v.clone(),
            });
        }
    }
    None
}

fn unique_max(t: &CostTable) -> Option<Witness> {
    let n = t.arity();
    let f = |mask: u32, s: u32| t.get(mask | s) - t.get(s);
    for s in 0..1u32 << n {
        let free: Vec<usize> = (0..n).filter(|i| s & (1 << i) == 0).collect();
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate().skip(a + 1) {
                for &k in free.iter().skip(b + 1) {
                    let (bi, bj, bk) = (1 << i, 1 << j, 1 << k);
                    let terms = [
                        f(bi | bj, s) + f(bk, s),
                        f(bi, s) + f(bj | bk, s),
                        f(bj, s) + f(bi | bk, s),
                    ];
                    let max = terms.iter().max().expect("three terms");
                    if terms.iter().filter(|x| *x == max).count() == 1 {
                        return Some(Witness::UniqueMax {
                            s: set(n, s),
                            i,
                            j,
                            k,
                            terms,
                        });
                    }
                }
            }
        }
    }
    None
}

fn check_certificate(
    oracle: &dyn CostOracle,
    certificate: &dyn CostOracle,
    limits: &Limits,
) -> Result<Option<Witness>> {
    let n = oracle.arity();
    if certificate.arity() != n {
        return Err(Error::Domain(format!(
            "certificate arity {} does not match oracle arity {n}",
            certificate.arity()
        )));
    }
    require_n("certificate check", n, limits.class_check)?;
    for m in 0..1u64 << n {
        let s = BoxSet::from_mask(n, m);
        let value = oracle.cost_of(&s);
        let certified = certificate.cost_of(&s);
        if value != certified {
            return Ok(Some(Witness::CertificateMismatch {
                set: s,
                value,
                certified,
            }));
        }
    }
    Ok(None)
}

/// `oracle(S) = max_t a^t(S)` for every `S`.
pub fn check_xos_certificate(oracle: &dyn CostOracle, cert: &XosCost) -> Result<Option<Witness>> {
    check_certificate(oracle, cert, &default_limits())
}

/// `oracle(S) = Σ_e w(e)·1{S ∩ g(e) ≠ ∅}` for every `S`.
pub fn check_coverage_certificate(
    oracle: &dyn CostOracle,
    cert: &CoverageCost,
) -> Result<Option<Witness>> {
    check_certificate(oracle, cert, &default_limits())
}

/// Searches for `a, B` with `c(S) = min(B, Σ_{i∈S} a_i)` for all `S`.
///
/// Singletons force `a_i = c({i})` up to replacing `a_i ≥ B` by `B`, which
/// changes no value, and `B` must be a table value (`c([n])` when the cap is
/// inactive), so scanning the distinct table values is exhaustive.
pub fn budget_additive_representation(oracle: &dyn CostOracle) -> Result<Option<Witness>> {
    let n = oracle.arity();
    require_n("budget-additive search", n, default_limits().class_check)?;
    let table = CostTable::build(oracle)?;
    let a: Vec<Rational> = (0..n).map(|i| table.get(1 << i).clone()).collect();
    let mut candidates: Vec<Rational> = table.values().to_vec();
    candidates.sort();
    candidates.dedup();
    // Per-mask additive sums, built incrementally from the lowest set bit.
    let mut sums = vec![Rational::zero(); 1 << n];
    for m in 1..1usize << n {
        let low = m.trailing_zeros() as usize;
        sums[m] = &sums[m & (m - 1)] + &a[low];
    }
    for budget in candidates {
        let fits = (0..1usize << n)
            .all(|m| table.get(m as u32) == &sums[m].clone().min(budget.clone()));
        if fits {
            return Ok(Some(Witness::BudgetAdditive { per_box: a, budget }));
        }
    }
    Ok(None)
}
