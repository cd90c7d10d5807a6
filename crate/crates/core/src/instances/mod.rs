//! Box distributions and problem instances.

pub mod canonical;
mod distribution;
pub mod random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use distribution::{FiniteDistribution, WeightedBernoulli};

use crate::cost::{validate_class, CostClass, CostOracle, CostSpec, ProjectedCost};
use crate::error::{domain, Error, Result};
use crate::limits::Limits;
use crate::rational::Rational;

/// Declared cost class of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    MonotoneNormalized,
    Submodular,
    Subadditive,
    MatroidRank,
    GrossSubstitutes,
    Xos,
    Coverage,
    Additive,
    BudgetAdditive,
    General,
}

impl ClassTag {
    const NAMES: [(ClassTag, &'static str); 10] = [
        (ClassTag::MonotoneNormalized, "monotone_normalized"),
        (ClassTag::Submodular, "submodular"),
        (ClassTag::Subadditive, "subadditive"),
        (ClassTag::MatroidRank, "matroid_rank"),
        (ClassTag::GrossSubstitutes, "gross_substitutes"),
        (ClassTag::Xos, "xos"),
        (ClassTag::Coverage, "coverage"),
        (ClassTag::Additive, "additive"),
        (ClassTag::BudgetAdditive, "budget_additive"),
        (ClassTag::General, "general"),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES
            .iter()
            .find(|(t, _)| *t == self)
            .map(|(_, n)| *n)
            .expect("every tag is named")
    }

    /// The validator that decides this tag, if it is decided by enumeration.
    pub fn validator(self) -> Option<CostClass> {
        match self {
            ClassTag::MonotoneNormalized => Some(CostClass::MonotoneNormalized),
            ClassTag::Submodular => Some(CostClass::Submodular),
            ClassTag::Subadditive => Some(CostClass::Subadditive),
            ClassTag::MatroidRank => Some(CostClass::MatroidRank),
            ClassTag::GrossSubstitutes => Some(CostClass::GrossSubstitutes),
            _ => None,
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(t, _)| *t)
            .ok_or_else(|| Error::Parse(format!("unknown class tag {s:?}")))
    }
}

/// `n` boxes and a cost oracle of arity `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub boxes: Vec<FiniteDistribution>,
    pub cost: CostSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassTag>,
}

impl Instance {
    pub fn new(boxes: Vec<FiniteDistribution>, cost: impl Into<CostSpec>) -> Result<Self> {
        let cost = cost.into();
        if cost.arity() != boxes.len() {
            return domain(format!(
                "{} boxes but cost arity {}",
                boxes.len(),
                cost.arity()
            ));
        }
        Ok(Instance {
            boxes,
            cost,
            class: None,
        })
    }

    pub fn with_class(mut self, class: ClassTag) -> Self {
        self.class = Some(class);
        self
    }

    pub fn n(&self) -> usize {
        self.boxes.len()
    }

    pub fn support_union(&self) -> Vec<Rational> {
        support_union(&self.boxes)
    }

    pub fn bernoulli_boxes(&self) -> Result<Vec<WeightedBernoulli>> {
        bernoulli_boxes(&self.boxes)
    }

    pub fn is_bernoulli(&self) -> bool {
        self.boxes.iter().all(|d| d.as_bernoulli().is_some())
    }

    /// Checks the declared class: enumeration-decided tags are validated when
    /// `n` is within bounds; certificate tags require the matching cost kind.
    pub fn check_declared_class(&self, limits: &Limits) -> Result<()> {
        let Some(tag) = self.class else {
            return Ok(());
        };
        if let Some(class) = tag.validator() {
            let limit = match class {
                CostClass::GrossSubstitutes => limits.gross_substitutes,
                _ => limits.class_check,
            };
            if self.n() <= limit {
                let v = validate_class(&self.cost, class)?;
                if let Some(w) = v.witness {
                    return domain(format!("declared class {tag} fails: {w}"));
                }
            }
            return Ok(());
        }
        let kind = self.cost.kind();
        let ok = match tag {
            ClassTag::Xos => kind == "xos",
            ClassTag::Coverage => kind == "coverage",
            ClassTag::Additive => kind == "additive",
            ClassTag::BudgetAdditive => kind == "budget_additive",
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            domain(format!("declared class {tag} needs a {tag} cost, got {kind}"))
        }
    }

    /// Parses instance JSON. Constant-zero boxes are dropped with a warning
    /// (the cost is restricted to the remaining boxes); the declared class is
    /// re-validated.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Instance = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("{e}"))
        })?;
        if raw.cost.arity() != raw.boxes.len() {
            return domain(format!(
                "{} boxes but cost arity {}",
                raw.boxes.len(),
                raw.cost.arity()
            ));
        }
        let kept: Vec<usize> = (0..raw.n())
            .filter(|&i| !raw.boxes[i].is_degenerate())
            .collect();
        let inst = if kept.len() == raw.n() {
            raw
        } else {
            for i in (0..raw.n()).filter(|i| !kept.contains(i)) {
                log::warn!("dropping box {i}: its value is constantly 0");
            }
            let boxes = kept.iter().map(|&i| raw.boxes[i].clone()).collect();
            let cost = ProjectedCost::new(raw.cost, kept)?;
            Instance {
                boxes,
                cost: cost.into(),
                class: raw.class,
            }
        };
        inst.check_declared_class(&Limits::from_env())?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem {
            boxes: &self.boxes,
            cost: &self.cost,
        }
    }
}

/// Borrowed view used by evaluators and solvers; the cost can be any oracle,
/// e.g. a query-counting wrapper around an instance's own cost.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub boxes: &'a [FiniteDistribution],
    pub cost: &'a dyn CostOracle,
}

impl<'a> Problem<'a> {
    pub fn new(boxes: &'a [FiniteDistribution], cost: &'a dyn CostOracle) -> Result<Self> {
        if boxes.len() != cost.arity() {
            return domain(format!("{} boxes but cost arity {}", boxes.len(), cost.arity()));
        }
        Ok(Problem { boxes, cost })
    }

    pub fn n(&self) -> usize {
        self.boxes.len()
    }

    pub fn support_union(&self) -> Vec<Rational> {
        support_union(self.boxes)
    }

    pub fn bernoulli_boxes(&self) -> Result<Vec<WeightedBernoulli>> {
        bernoulli_boxes(self.boxes)
    }
}

impl<'a> From<&'a Instance> for Problem<'a> {
    fn from(inst: &'a Instance) -> Self {
        inst.problem()
    }
}

/// Sorted distinct support values of all boxes, with 0 always present.
pub fn support_union(boxes: &[FiniteDistribution]) -> Vec<Rational> {
    let mut values: Vec<Rational> = boxes.iter().flat_map(|d| d.values().cloned()).collect();
    values.push(Rational::from_integer(0.into()));
    values.sort();
    values.dedup();
    values
}

fn bernoulli_boxes(boxes: &[FiniteDistribution]) -> Result<Vec<WeightedBernoulli>> {
    boxes
        .iter()
        .enumerate()
        .map(|(i, d)| {
            d.as_bernoulli()
                .ok_or_else(|| Error::Domain(format!("box {i} is not a weighted Bernoulli box")))
        })
        .collect()
}
