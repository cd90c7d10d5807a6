//! XOS certificates for derived cost functions.

use num_traits::Zero;

use super::{
    default_limits, require_n, validate_class, CostClass, CostOracle, CoverElement, CoverageCost,
    XosCost,
};
use crate::boxset::BoxSet;
use crate::error::{domain, Error, Result};
use crate::rational::{int, Rational};

/// Lifts `f` on `[n]` to `g(S) = n·f(X)·1{S ≠ ∅} + f(S ∩ X)` on `{0} ∪ X`.
///
/// Box 0 of the result is the new box; box `i + 1` is box `i` of `f`. The
/// result carries one clause `a^S` per `S ⊆ X`: `a^∅` puts `n·f(X)` on box
/// 0, and `a^S` spreads `n·f(X) + f(S)` evenly over `S`.
pub fn xos_lift(f: &dyn CostOracle) -> Result<XosCost> {
    let n = f.arity();
    require_n("XOS lift", n, default_limits().class_check)?;
    let check = validate_class(f, CostClass::MonotoneNormalized)?;
    if let Some(w) = check.witness {
        return domain(format!("XOS lift needs a monotone normalized function: {w}"));
    }
    let top = int(n as i64) * f.cost_of(&BoxSet::full(n));
    let mut clauses = Vec::with_capacity(1 << n);
    for mask in 0..1u64 << n {
        let s = BoxSet::from_mask(n, mask);
        let mut a = vec![Rational::zero(); n + 1];
        if s.is_empty() {
            a[0] = top.clone();
        } else {
            let share = (&top + f.cost_of(&s)) / int(s.len() as i64);
            for i in s.iter() {
                a[i + 1] = share.clone();
            }
        }
        clauses.push(a);
    }
    XosCost::new(n + 1, clauses)
}

/// Coverage certificate for a cost on copies: `g'(e) = g(e) × copies`.
pub fn lift_coverage_certificate(cert: &CoverageCost, owners: &[usize]) -> Result<CoverageCost> {
    check_owners(cert.arity(), owners)?;
    let elements = cert
        .elements()
        .iter()
        .map(|e| CoverElement {
            weight: e.weight.clone(),
            covers: (0..owners.len())
                .filter(|&k| e.covers.contains(&owners[k]))
                .collect(),
        })
        .collect();
    CoverageCost::new(owners.len(), elements)
}

/// XOS certificate for a cost on copies: one clause `a^{t,r}` per original
/// clause `t` and choice `r` of one copy per original box, with
/// `a^{t,r}(k) = a^t(owner(k))·1{r picks k}`.
pub fn lift_xos_certificate(cert: &XosCost, owners: &[usize]) -> Result<XosCost> {
    const MAX_CLAUSES: usize = 1 << 20;
    let n = cert.arity();
    check_owners(n, owners)?;
    let copies: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..owners.len()).filter(|&k| owners[k] == i).collect())
        .collect();
    let choices = copies
        .iter()
        .filter(|c| !c.is_empty())
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .and_then(|r| r.checked_mul(cert.clauses().len().max(1)));
    match choices {
        Some(total) if total <= MAX_CLAUSES => {}
        _ => {
            return Err(Error::Capability {
                what: "lifted XOS certificate",
                n: owners.len(),
                limit: MAX_CLAUSES,
            })
        }
    }
    let boxes_with_copies: Vec<usize> = (0..n).filter(|&i| !copies[i].is_empty()).collect();
    let mut clauses = Vec::new();
    for a in cert.clauses() {
        let mut pick = vec![0usize; boxes_with_copies.len()];
        loop {
            let mut lifted = vec![Rational::zero(); owners.len()];
            for (slot, &i) in boxes_with_copies.iter().enumerate() {
                lifted[copies[i][pick[slot]]] = a[i].clone();
            }
            clauses.push(lifted);
            // Odometer over the copy choices.
            let mut slot = 0;
            while slot < pick.len() {
                pick[slot] += 1;
                if pick[slot] < copies[boxes_with_copies[slot]].len() {
                    break;
                }
                pick[slot] = 0;
                slot += 1;
            }
            if slot == pick.len() {
                break;
            }
        }
    }
    XosCost::new(owners.len(), clauses)
}

fn check_owners(n: usize, owners: &[usize]) -> Result<()> {
    match owners.iter().find(|&&o| o >= n) {
        Some(o) => domain(format!("copy owner {o} out of range for {n} boxes")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{check_xos_certificate, marginal_cost, ExplicitCost, ProjectedCost};

    fn example1_cost() -> ExplicitCost {
        ExplicitCost::from_fn(3, |s| {
            if s.contains(1) && s.contains(2) {
                int(20)
            } else {
                int(0)
            }
        })
        .unwrap()
    }

    #[test]
    fn example1_lift_values() {
        let g = xos_lift(&example1_cost()).unwrap();
        assert_eq!(g.eval(&BoxSet::from_indices(4, [0]).unwrap()).unwrap(), int(60));
        assert_eq!(g.eval(&BoxSet::from_indices(4, [0, 2, 3]).unwrap()).unwrap(), int(80));
    }

    #[test]
    fn lift_marginal_is_the_original() {
        let f = example1_cost();
        let g = xos_lift(&f).unwrap();
        let zero_box = BoxSet::from_indices(4, [0]).unwrap();
        for mask in 0..8u64 {
            let s = BoxSet::from_mask(3, mask);
            let lifted = BoxSet::from_indices(4, s.iter().map(|i| i + 1)).unwrap();
            assert_eq!(marginal_cost(&g, &lifted, &zero_box).unwrap(), f.cost_of(&s));
        }
    }

    #[test]
    fn lift_of_zero_is_zero() {
        let f = ExplicitCost::from_fn(2, |_| Rational::zero()).unwrap();
        let g = xos_lift(&f).unwrap();
        assert!((0..8u64).all(|m| g.cost_of(&BoxSet::from_mask(3, m)).is_zero()));
    }

    #[test]
    fn non_monotone_is_rejected() {
        struct Bad;
        impl CostOracle for Bad {
            fn arity(&self) -> usize {
                1
            }
            fn cost_of(&self, s: &BoxSet) -> Rational {
                if s.is_empty() {
                    int(1)
                } else {
                    int(0)
                }
            }
        }
        assert!(matches!(xos_lift(&Bad), Err(Error::Domain(_))));
    }

    #[test]
    fn lifted_xos_certificate_matches_projection() {
        let cert = XosCost::new(2, vec![vec![int(1), int(2)], vec![int(3), int(0)]]).unwrap();
        let owners = vec![0, 0, 1, 1, 1];
        let lifted = lift_xos_certificate(&cert, &owners).unwrap();
        assert_eq!(lifted.clauses().len(), 2 * 2 * 3);
        let proj = ProjectedCost::new(cert.into(), owners).unwrap();
        assert_eq!(check_xos_certificate(&proj, &lifted).unwrap(), None);
    }
}
