use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rational::{format_rational, parse_rational, pos, Rational};

/// A finite-support law on `Q≥0`: distinct sorted values with positive
/// probabilities summing to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct FiniteDistribution {
    atoms: Vec<(Rational, Rational)>,
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    atoms: Vec<(String, String)>,
}

impl FiniteDistribution {
    /// Sorts atoms, merges repeated values and drops zero-probability atoms.
    pub fn new(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (v, p) in atoms {
            if v.is_negative() {
                return domain(format!("negative box value {v}"));
            }
            if p.is_negative() {
                return domain(format!("negative probability {p}"));
            }
            *merged.entry(v).or_insert_with(Rational::zero) += p;
        }
        merged.retain(|_, p| !p.is_zero());
        let total: Rational = merged.values().sum();
        if !total.is_one() {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(FiniteDistribution {
            atoms: merged.into_iter().collect(),
        })
    }

    pub fn point(v: Rational) -> Self {
        FiniteDistribution::new(vec![(v, Rational::one())]).expect("point mass")
    }

    /// `v` with probability `p`, else 0.
    pub fn bernoulli(v: Rational, p: Rational) -> Result<Self> {
        if p > Rational::one() {
            return domain(format!("probability {p} exceeds 1"));
        }
        let q = Rational::one() - &p;
        FiniteDistribution::new(vec![(Rational::zero(), q), (v, p)])
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn values(&self) -> impl Iterator<Item = &Rational> {
        self.atoms.iter().map(|(v, _)| v)
    }

    pub fn max_value(&self) -> &Rational {
        &self.atoms.last().expect("non-empty support").0
    }

    pub fn expectation(&self) -> Rational {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    /// `E[(V − x)⁺]`
    pub fn excess(&self, x: &Rational) -> Rational {
        self.atoms.iter().map(|(v, p)| pos(&(v - x)) * p).sum()
    }

    /// `P(V > x)`
    pub fn prob_above(&self, x: &Rational) -> Rational {
        self.atoms.iter().filter(|(v, _)| v > x).map(|(_, p)| p).sum()
    }

    /// `P(V ≤ x)`
    pub fn prob_at_most(&self, x: &Rational) -> Rational {
        self.atoms.iter().filter(|(v, _)| v <= x).map(|(_, p)| p).sum()
    }

    /// Constant zero; such a box never contributes value.
    pub fn is_degenerate(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].0.is_zero()
    }

    /// The `(v, p)` form if the support is `{0, v}` or `{v}` with `v > 0`.
    pub fn as_bernoulli(&self) -> Option<WeightedBernoulli> {
        match self.atoms.as_slice() {
            [(v, p)] if v.is_positive() => Some(WeightedBernoulli {
                value: v.clone(),
                prob: p.clone(),
            }),
            [(z, _), (v, p)] if z.is_zero() => Some(WeightedBernoulli {
                value: v.clone(),
                prob: p.clone(),
            }),
            _ => None,
        }
    }

    /// Pushes the law forward through `f`, merging collisions.
    pub fn map_values(&self, f: impl Fn(&Rational) -> Rational) -> Result<Self> {
        FiniteDistribution::new(self.atoms.iter().map(|(v, p)| (f(v), p.clone())).collect())
    }

    /// Law of the maximum of independent draws.
    pub fn max_of(dists: &[FiniteDistribution]) -> Result<Self> {
        let mut values: Vec<&Rational> = dists.iter().flat_map(|d| d.values()).collect();
        values.sort();
        values.dedup();
        if values.is_empty() {
            return Ok(FiniteDistribution::point(Rational::zero()));
        }
        let mut atoms = Vec::with_capacity(values.len());
        let mut below = Rational::zero();
        for v in values {
            let cdf: Rational = dists.iter().map(|d| d.prob_at_most(v)).product();
            atoms.push((v.clone(), &cdf - &below));
            below = cdf;
        }
        FiniteDistribution::new(atoms)
    }
}

impl From<FiniteDistribution> for DistributionRepr {
    fn from(d: FiniteDistribution) -> Self {
        DistributionRepr {
            atoms: d
                .atoms
                .iter()
                .map(|(v, p)| (format_rational(v), format_rational(p)))
                .collect(),
        }
    }
}

impl TryFrom<DistributionRepr> for FiniteDistribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        let atoms = r
            .atoms
            .iter()
            .map(|(v, p)| Ok((parse_rational(v)?, parse_rational(p)?)))
            .collect::<Result<Vec<_>>>()?;
        FiniteDistribution::new(atoms)
    }
}

/// Value `v > 0` with probability `p ∈ (0, 1]`, else 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightedBernoulli {
    pub value: Rational,
    pub prob: Rational,
}

impl WeightedBernoulli {
    pub fn new(value: Rational, prob: Rational) -> Result<Self> {
        if !value.is_positive() || !prob.is_positive() || prob > Rational::one() {
            return domain(format!(
                "weighted Bernoulli needs v > 0 and p in (0, 1], got v = {value}, p = {prob}"
            ));
        }
        Ok(WeightedBernoulli { value, prob })
    }

    pub fn q(&self) -> Rational {
        Rational::one() - &self.prob
    }

    pub fn distribution(&self) -> FiniteDistribution {
        FiniteDistribution::bernoulli(self.value.clone(), self.prob.clone())
            .expect("valid Bernoulli parameters")
    }
}
