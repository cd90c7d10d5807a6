//! The lower-bound family `c₀(S) = min(|S|, α)`, `c_R(S) = min(|S|, α, β + |S ∖ R|)`:
//! parameters, closed-form utilities of symmetric impulsive strategies, the
//! family check, and the query-distinguishing experiment.
//!
//! Closed forms run in `f64` (tolerance 1e-9 relative); everything else in
//! the crate is exact.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxset::BoxSet;
use crate::cost::{with_counter, CostOracle, HardnessCost};
use crate::error::{domain, Error, Result};
use crate::rational::{int, ratio, Rational};

pub const REGIME_BANNER: &str = "The asymptotic regime in which the union bound over polynomially \
many queries becomes small needs astronomically large n and is not reproducible at desk scale; \
this experiment measures the per-query building blocks only.";

pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HardnessParams {
    pub n: usize,
    pub alpha: usize,
    pub beta: usize,
}

impl HardnessParams {
    /// `α = ⌈ln n·√n / 5⌉`, `β = ⌈ln² n / 5⌉`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return domain(format!("hardness parameters need n >= 3, got {n}"));
        }
        let ln = (n as f64).ln();
        let alpha = checked_ceil(ln * (n as f64).sqrt() / 5.0, "α")?;
        let beta = checked_ceil(ln * ln / 5.0, "β")?;
        Self::with_overrides(n, alpha, beta)
    }

    pub fn with_overrides(n: usize, alpha: usize, beta: usize) -> Result<Self> {
        if beta >= alpha {
            return domain(format!("hardness parameters need β < α, got α = {alpha}, β = {beta}"));
        }
        if alpha > n {
            return domain(format!("hardness parameters need α <= n, got α = {alpha}, n = {n}"));
        }
        Ok(HardnessParams { n, alpha, beta })
    }

    /// `M = 5β`
    pub fn m(&self) -> usize {
        5 * self.beta
    }

    pub fn m_value(&self) -> Rational {
        int(self.m() as i64)
    }

    /// `p = 1/α`
    pub fn p(&self) -> Rational {
        ratio(1, self.alpha as i64)
    }

    /// Both case inequalities of the family argument need `α > 20β` and `α > 26β`.
    pub fn regime_reached(&self) -> bool {
        self.alpha > 26 * self.beta
    }
}

/// Ceiling that refuses values too close to an integer to round reliably.
fn checked_ceil(x: f64, what: &str) -> Result<usize> {
    let nearest = x.round();
    if (x - nearest).abs() <= FLOAT_TOLERANCE * x.abs().max(1.0) {
        return Err(Error::Internal(format!(
            "{what} = {x} is within rounding error of an integer; its ceiling is ambiguous"
        )));
    }
    Ok(x.ceil() as usize)
}

/// Which symmetric impulsive strategy is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricVariant {
    /// Any `s` boxes under `c₀`: the `i`-th opening costs 1 while `i ≤ α`.
    Baseline,
    /// `s ≤ α` boxes inside `R` under `c_R`: the `i`-th opening costs 1 while `i ≤ β`.
    PlantedSubsetR,
}

impl SymmetricVariant {
    fn cap(self, params: &HardnessParams) -> usize {
        match self {
            SymmetricVariant::Baseline => params.alpha,
            SymmetricVariant::PlantedSubsetR => params.beta,
        }
    }

    fn check(self, params: &HardnessParams, s: usize) -> Result<()> {
        let limit = match self {
            SymmetricVariant::Baseline => params.n,
            SymmetricVariant::PlantedSubsetR => params.alpha,
        };
        if s > limit {
            return domain(format!("symmetric strategy of size {s} exceeds {limit}"));
        }
        Ok(())
    }
}

/// Kahan–Neumaier compensated sum.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Expected utility `M(1 − q^s) − Σ_{i=1}^{min(s, cap)} q^{i−1}` of opening `s`
/// symmetric boxes until the first success, `q = 1 − 1/α`.
pub fn symmetric_impulsive_utility(
    params: &HardnessParams,
    s: usize,
    variant: SymmetricVariant,
) -> Result<f64> {
    variant.check(params, s)?;
    let mut scan = SymmetricScan::new(params, variant);
    let mut u = 0.0;
    for _ in 0..s {
        u = scan.step();
    }
    Ok(u)
}

/// Exact rational version of [`symmetric_impulsive_utility`].
pub fn symmetric_impulsive_utility_exact(
    params: &HardnessParams,
    s: usize,
    variant: SymmetricVariant,
) -> Result<Rational> {
    variant.check(params, s)?;
    let q = Rational::one() - params.p();
    let cap = variant.cap(params);
    let mut q_pow = Rational::one();
    let mut cost = Rational::zero();
    for i in 1..=s {
        if i <= cap {
            cost += &q_pow;
        }
        q_pow *= &q;
    }
    Ok(params.m_value() * (Rational::one() - q_pow) - cost)
}

/// Utilities for `s = 1, 2, …` in one pass.
struct SymmetricScan {
    q: f64,
    m: f64,
    cap: usize,
    s: usize,
    q_pow: f64,
    cost: Neumaier,
}

impl SymmetricScan {
    fn new(params: &HardnessParams, variant: SymmetricVariant) -> Self {
        SymmetricScan {
            q: 1.0 - 1.0 / params.alpha as f64,
            m: params.m() as f64,
            cap: variant.cap(params),
            s: 0,
            q_pow: 1.0,
            cost: Neumaier::default(),
        }
    }

    fn step(&mut self) -> f64 {
        self.s += 1;
        if self.s <= self.cap {
            self.cost.add(self.q_pow);
        }
        self.q_pow *= self.q;
        self.m * (1.0 - self.q_pow) - self.cost.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofCase {
    /// `s ≥ α`, bound `M − α/4`.
    AtLeastAlpha,
    /// `21β ≤ s < α`, bound `−β/4`.
    Middle,
    /// `0 < s < 21β`, bound `(s/α)(26β − α)`.
    Small,
    /// `s = 0`, utility 0.
    Empty,
}

impl ProofCase {
    pub fn of(params: &HardnessParams, s: usize) -> Self {
        if s == 0 {
            ProofCase::Empty
        } else if s >= params.alpha {
            ProofCase::AtLeastAlpha
        } else if s >= 21 * params.beta {
            ProofCase::Middle
        } else {
            ProofCase::Small
        }
    }

    pub fn bound(self, params: &HardnessParams, s: usize) -> f64 {
        let (a, b) = (params.alpha as f64, params.beta as f64);
        match self {
            ProofCase::AtLeastAlpha => params.m() as f64 - a / 4.0,
            ProofCase::Middle => -b / 4.0,
            ProofCase::Small => (s as f64 / a) * (26.0 * b - a),
            ProofCase::Empty => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub case: ProofCase,
    pub s_min: usize,
    pub s_max: usize,
    /// Largest baseline utility over the range.
    pub max_utility: f64,
    pub max_utility_at: usize,
    /// Smallest `bound(s) − utility(s)`; negative means the case bound fails.
    pub min_margin: f64,
    pub min_margin_at: usize,
    /// Largest case bound over the range; every bound is `≤ 0` in the regime.
    pub max_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyVerdict {
    Pass,
    FamilyViolation,
    RegimeNotReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub params: HardnessParams,
    pub m: usize,
    pub regime_reached: bool,
    pub verdict: FamilyVerdict,
    /// Max over `s ≥ 1`; opening nothing always yields 0.
    pub max_baseline_utility: f64,
    pub max_baseline_at: usize,
    /// Sizes with strictly positive baseline utility (first 32 only).
    pub positive_baseline_sizes: Vec<usize>,
    pub planted_utility: f64,
    /// `5β(1 − 1/e) − β`
    pub planted_lower_bound: f64,
    pub cases: Vec<CaseSummary>,
    /// Largest `|float − exact|` over `s ≤ 30`, both variants.
    pub exact_cross_check_error: f64,
    pub symmetry_note: &'static str,
}

pub const SYMMETRY_NOTE: &str = "All boxes are i.i.d. and c₀ depends on |S| only, so an optimal \
strategy for the baseline instance is impulsive and its utility depends only on the number s \
of boxes it is willing to open; scanning s = 0..n covers every strategy.";

/// Scans every symmetric strategy size on the baseline instance and the
/// planted strategy that opens exactly `R`.
pub fn verify_family(params: &HardnessParams) -> Result<FamilyReport> {
    let n = params.n;
    let mut summaries: Vec<CaseSummary> = Vec::new();
    let mut record = |case: ProofCase, s: usize, u: f64, bound: f64| {
        let margin = bound - u;
        match summaries.iter_mut().find(|c| c.case == case) {
            Some(c) => {
                c.s_min = c.s_min.min(s);
                c.s_max = c.s_max.max(s);
                if u > c.max_utility {
                    c.max_utility = u;
                    c.max_utility_at = s;
                }
                if margin < c.min_margin {
                    c.min_margin = margin;
                    c.min_margin_at = s;
                }
                c.max_bound = c.max_bound.max(bound);
            }
            None => summaries.push(CaseSummary {
                case,
                s_min: s,
                s_max: s,
                max_utility: u,
                max_utility_at: s,
                min_margin: margin,
                min_margin_at: s,
                max_bound: bound,
            }),
        }
    };

    record(ProofCase::Empty, 0, 0.0, 0.0);
    // Max over non-empty strategies; the empty one is the trivial 0 above.
    let (mut best, mut best_at) = (f64::NEG_INFINITY, 0usize);
    let mut positive = Vec::new();
    let mut scan = SymmetricScan::new(params, SymmetricVariant::Baseline);
    for s in 1..=n {
        let u = scan.step();
        let case = ProofCase::of(params, s);
        record(case, s, u, case.bound(params, s));
        if u > best {
            best = u;
            best_at = s;
        }
        if u > 0.0 && positive.len() < 32 {
            positive.push(s);
        }
    }

    let planted = symmetric_impulsive_utility(params, params.alpha, SymmetricVariant::PlantedSubsetR)?;
    let beta = params.beta as f64;
    let planted_lower_bound = 5.0 * beta * (1.0 - (-1.0f64).exp()) - beta;

    let mut cross = 0.0f64;
    for variant in [SymmetricVariant::Baseline, SymmetricVariant::PlantedSubsetR] {
        let top = match variant {
            SymmetricVariant::Baseline => n,
            SymmetricVariant::PlantedSubsetR => params.alpha,
        };
        for s in 0..=top.min(30) {
            let f = symmetric_impulsive_utility(params, s, variant)?;
            let e = symmetric_impulsive_utility_exact(params, s, variant)?
                .to_f64()
                .unwrap_or(f64::NAN);
            cross = cross.max((f - e).abs() / e.abs().max(1.0));
        }
    }

    let regime = params.regime_reached();
    let violation = !positive.is_empty() || planted <= 0.0;
    let verdict = if !regime {
        FamilyVerdict::RegimeNotReached
    } else if violation {
        FamilyVerdict::FamilyViolation
    } else {
        FamilyVerdict::Pass
    };
    summaries.sort_by_key(|c| c.s_min);
    Ok(FamilyReport {
        params: *params,
        m: params.m(),
        regime_reached: regime,
        verdict,
        max_baseline_utility: best,
        max_baseline_at: best_at,
        positive_baseline_sizes: positive,
        planted_utility: planted,
        planted_lower_bound,
        cases: summaries,
        exact_cross_check_error: cross,
        symmetry_note: SYMMETRY_NOTE,
    })
}

/// `P(X > k)` for `X ~ Hypergeometric(population, successes, draws)`, exact.
pub fn hypergeometric_tail(population: usize, successes: usize, draws: usize, k: usize) -> Rational {
    let big = |x: usize| BigInt::from(x);
    let total = binomial(big(population), big(draws));
    let hi = successes.min(draws);
    let mut num = BigInt::zero();
    for x in (k + 1)..=hi {
        if draws - x > population - successes {
            continue;
        }
        num += binomial(big(successes), big(x)) * binomial(big(population - successes), big(draws - x));
    }
    Rational::new(num, total)
}

/// The query algorithm replayed against each planted cost.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryAlgorithm {
    /// `count` independent uniform `α`-subsets, drawn once from the seed.
    RandomUniformAlphaSets { count: usize },
    /// Caller-provided non-adaptive query list.
    Fixed(Vec<BoxSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishConfig {
    pub params: HardnessParams,
    pub algorithm: QueryAlgorithm,
    pub budget: u64,
    pub trials: u64,
    pub seed: u64,
    /// Extra thresholds `k` for which `P(|S ∩ R| > k)` is estimated besides `β`.
    pub extra_thresholds: Vec<usize>,
}

pub const MAX_BUDGET: u64 = 1_000_000;
pub const MAX_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub threshold: usize,
    pub query_size: usize,
    pub hits: u64,
    pub samples: u64,
    pub empirical: f64,
    pub exact: f64,
    pub standard_error: f64,
    /// `|empirical − exact|` in units of the standard error at `exact`.
    pub z: f64,
    pub within_3_se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguishReport {
    pub banner: &'static str,
    pub params: HardnessParams,
    pub queries_per_trial: usize,
    pub budget: u64,
    pub trials: u64,
    pub seed: u64,
    pub distinguishing_trials: u64,
    pub aborted_trials: u64,
    pub empirical_rate: f64,
    /// `queries × P(|S ∩ R| > β)` for `α`-sized queries.
    pub union_bound: f64,
    /// Every completed trial's counter equals the number of issued queries.
    pub query_count_exact: bool,
    pub total_queries: u64,
    pub tail_checks: Vec<TailCheck>,
}

struct TrialOutcome {
    distinguished: bool,
    aborted: bool,
    count_exact: bool,
    queries: u64,
    first_intersection: Option<usize>,
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Replays a fixed query list against `c_R` for independently planted `R`
/// and records whether any answer differs from `c₀`.
pub fn distinguish_experiment(cfg: &DistinguishConfig) -> Result<DistinguishReport> {
    let p = cfg.params;
    if cfg.budget > MAX_BUDGET {
        return domain(format!("budget {} exceeds {MAX_BUDGET}", cfg.budget));
    }
    if cfg.trials > MAX_TRIALS {
        return domain(format!("trials {} exceeds {MAX_TRIALS}", cfg.trials));
    }
    let queries: Vec<BoxSet> = match &cfg.algorithm {
        QueryAlgorithm::RandomUniformAlphaSets { count } => {
            let mut rng = trial_rng(cfg.seed, 0);
            (0..*count)
                .map(|_| {
                    let idx = rand::seq::index::sample(&mut rng, p.n, p.alpha).into_vec();
                    BoxSet::from_indices(p.n, idx)
                })
                .collect::<Result<_>>()?
        }
        QueryAlgorithm::Fixed(list) => {
            if let Some(bad) = list.iter().find(|s| s.arity() != p.n) {
                return domain(format!("query over {} boxes, n = {}", bad.arity(), p.n));
            }
            list.clone()
        }
    };
    let baseline = HardnessCost::baseline(p.n, p.alpha, p.beta)?;
    let answers0: Vec<Rational> = queries.iter().map(|s| baseline.cost_of(s)).collect();
    let probe = queries.first().cloned();

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let mut rng = trial_rng(cfg.seed, t + 1);
            let r_idx = rand::seq::index::sample(&mut rng, p.n, p.alpha).into_vec();
            let r = BoxSet::from_indices(p.n, r_idx)?;
            let first_intersection = probe.as_ref().map(|s| s.intersection_count(&r));
            let oracle = with_counter(HardnessCost::planted(p.n, p.alpha, p.beta, r)?);
            let mut distinguished = false;
            let mut aborted = false;
            let mut issued = 0u64;
            for (s, a0) in queries.iter().zip(&answers0) {
                if oracle.queries() >= cfg.budget {
                    aborted = true;
                    break;
                }
                issued += 1;
                if &oracle.eval(s)? != a0 {
                    distinguished = true;
                }
            }
            Ok(TrialOutcome {
                distinguished,
                aborted,
                count_exact: oracle.queries() == issued,
                queries: oracle.queries(),
                first_intersection,
            })
        })
        .collect::<Result<_>>()?;

    let completed = outcomes.iter().filter(|o| !o.aborted).count() as u64;
    let distinguishing = outcomes.iter().filter(|o| !o.aborted && o.distinguished).count() as u64;
    let aborted = cfg.trials - completed;
    let tail_beta = hypergeometric_tail(p.n, p.alpha, p.alpha, p.beta)
        .to_f64()
        .unwrap_or(f64::NAN);

    let mut tail_checks = Vec::new();
    if let Some(s) = &probe {
        let mut thresholds = vec![p.beta];
        thresholds.extend(cfg.extra_thresholds.iter().copied().filter(|&k| k != p.beta));
        for k in thresholds {
            let hits = outcomes
                .iter()
                .filter(|o| o.first_intersection.is_some_and(|x| x > k))
                .count() as u64;
            let samples = cfg.trials;
            let exact = hypergeometric_tail(p.n, p.alpha, s.len(), k)
                .to_f64()
                .unwrap_or(f64::NAN);
            let empirical = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
            let se = if samples == 0 {
                f64::INFINITY
            } else {
                (exact * (1.0 - exact) / samples as f64).sqrt()
            };
            let diff = (empirical - exact).abs();
            let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            tail_checks.push(TailCheck {
                threshold: k,
                query_size: s.len(),
                hits,
                samples,
                empirical,
                exact,
                standard_error: se,
                z,
                within_3_se: diff <= 3.0 * se,
            });
        }
    }

    Ok(DistinguishReport {
        banner: REGIME_BANNER,
        params: p,
        queries_per_trial: queries.len(),
        budget: cfg.budget,
        trials: cfg.trials,
        seed: cfg.seed,
        distinguishing_trials: distinguishing,
        aborted_trials: aborted,
        empirical_rate: if completed == 0 { 0.0 } else { distinguishing as f64 / completed as f64 },
        union_bound: (queries.len() as f64 * tail_beta).min(1.0),
        query_count_exact: outcomes.iter().all(|o| o.count_exact),
        total_queries: outcomes.iter().map(|o| o.queries).sum(),
        tail_checks,
    })
}

/// Result of comparing `c₀` and `c_R` on every subset for fixed `R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub params: HardnessParams,
    pub planted: BoxSet,
    pub subsets: u64,
    pub disagreements: u64,
    /// Sets with `|S ∩ R| ≤ β` on which the costs differ (must be 0).
    pub low_intersection_disagreements: u64,
    /// Sets where disagreement differs from `β + |S ∖ R| < min(|S|, α)` (must be 0).
    pub characterization_failures: u64,
    /// Sets where "agree ⟺ |S ∩ R| ≤ β" fails; 0 whenever `n < 2α − β`.
    pub iff_failures: u64,
    pub iff_expected: bool,
}

impl AgreementReport {
    pub fn pass(&self) -> bool {
        self.low_intersection_disagreements == 0
            && self.characterization_failures == 0
            && (!self.iff_expected || self.iff_failures == 0)
    }
}

/// Exhaustive over all `2^n` subsets, `n ≤ 20`.
pub fn agreement_check(params: &HardnessParams, planted: &BoxSet) -> Result<AgreementReport> {
    let n = params.n;
    if n > 20 {
        return Err(Error::Capability {
            what: "exhaustive agreement check",
            n,
            limit: 20,
        });
    }
    let c0 = HardnessCost::baseline(n, params.alpha, params.beta)?;
    let cr = HardnessCost::planted(n, params.alpha, params.beta, planted.clone())?;
    let mut report = AgreementReport {
        params: *params,
        planted: planted.clone(),
        subsets: 1 << n,
        disagreements: 0,
        low_intersection_disagreements: 0,
        characterization_failures: 0,
        iff_failures: 0,
        iff_expected: n + params.beta < 2 * params.alpha,
    };
    for m in 0..1u64 << n {
        let s = BoxSet::from_mask(n, m);
        let differ = c0.count_cost(&s) != cr.count_cost(&s);
        let inter = s.intersection_count(planted);
        let outside = s.len() - inter;
        let predicted = params.beta + outside < s.len().min(params.alpha);
        report.disagreements += differ as u64;
        report.low_intersection_disagreements += (differ && inter <= params.beta) as u64;
        report.characterization_failures += (differ != predicted) as u64;
        report.iff_failures += (differ != (inter > params.beta)) as u64;
    }
    Ok(report)
}

/// Uniform random `α`-subset, for callers that need a planted set.
pub fn random_planted(params: &HardnessParams, rng: &mut impl Rng) -> BoxSet {
    let idx = rand::seq::index::sample(rng, params.n, params.alpha).into_vec();
    BoxSet::from_indices(params.n, idx).expect("indices below n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_at_known_sizes() {
        let p = HardnessParams::new(100_000).unwrap();
        assert_eq!((p.alpha, p.beta, p.m()), (729, 27, 135));
        assert!(p.alpha > 20 * p.beta);
        let p = HardnessParams::new(4096).unwrap();
        assert_eq!((p.alpha, p.beta), (107, 14));
        assert!(HardnessParams::new(100).unwrap().alpha == 10);
        assert!(HardnessParams::new(12).is_err());
    }

    #[test]
    fn empty_strategy_is_worth_zero() {
        let p = HardnessParams::new(100_000).unwrap();
        assert_eq!(symmetric_impulsive_utility(&p, 0, SymmetricVariant::Baseline).unwrap(), 0.0);
    }

    #[test]
    fn float_matches_exact_for_small_sizes() {
        let p = HardnessParams::with_overrides(40, 12, 3).unwrap();
        for s in 0..=12 {
            for v in [SymmetricVariant::Baseline, SymmetricVariant::PlantedSubsetR] {
                let f = symmetric_impulsive_utility(&p, s, v).unwrap();
                let e = symmetric_impulsive_utility_exact(&p, s, v).unwrap().to_f64().unwrap();
                assert!((f - e).abs() <= 1e-12 * e.abs().max(1.0), "s = {s}");
            }
        }
    }

    #[test]
    fn small_n_is_flagged() {
        let r = verify_family(&HardnessParams::new(100).unwrap()).unwrap();
        assert_eq!(r.verdict, FamilyVerdict::RegimeNotReached);
    }

    #[test]
    fn hypergeometric_small_case() {
        // N = 5, K = 2, draws = 2: P(X > 0) = 1 − C(3,2)/C(5,2) = 7/10.
        assert_eq!(hypergeometric_tail(5, 2, 2, 0), ratio(7, 10));
        assert_eq!(hypergeometric_tail(5, 2, 2, 2), Rational::zero());
    }

    #[test]
    fn agreement_on_small_instances() {
        let p = HardnessParams::with_overrides(12, 8, 3).unwrap();
        let r = BoxSet::from_indices(12, 0..8).unwrap();
        let rep = agreement_check(&p, &r).unwrap();
        assert!(rep.iff_expected && rep.pass(), "{rep:?}");
        let p = HardnessParams::with_overrides(16, 5, 2).unwrap();
        let r = BoxSet::from_indices(16, [1, 4, 6, 9, 15]).unwrap();
        let rep = agreement_check(&p, &r).unwrap();
        assert!(!rep.iff_expected && rep.pass() && rep.iff_failures > 0);
    }

    #[test]
    fn querying_r_itself_distinguishes() {
        let p = HardnessParams::with_overrides(10, 4, 1).unwrap();
        let cfg = DistinguishConfig {
            params: p,
            algorithm: QueryAlgorithm::Fixed(vec![BoxSet::full(10)]),
            budget: 10,
            trials: 50,
            seed: 3,
            extra_thresholds: vec![],
        };
        let rep = distinguish_experiment(&cfg).unwrap();
        // The full set meets every R in α > β elements but costs α under both.
        assert_eq!(rep.distinguishing_trials, 0);
        assert!(rep.query_count_exact);
        assert_eq!(rep.total_queries, 50);
    }

    #[test]
    fn r_itself_is_a_distinguishing_query() {
        let p = HardnessParams::with_overrides(6, 3, 1).unwrap();
        let r = BoxSet::from_indices(6, [0, 1, 2]).unwrap();
        let c0 = HardnessCost::baseline(6, 3, 1).unwrap();
        let cr = HardnessCost::planted(6, 3, 1, r.clone()).unwrap();
        assert_eq!((c0.count_cost(&r), cr.count_cost(&r)), (p.alpha, p.beta));
    }

    #[test]
    fn budget_overrun_aborts() {
        let p = HardnessParams::with_overrides(10, 4, 1).unwrap();
        let cfg = DistinguishConfig {
            params: p,
            algorithm: QueryAlgorithm::RandomUniformAlphaSets { count: 5 },
            budget: 3,
            trials: 10,
            seed: 1,
            extra_thresholds: vec![],
        };
        let rep = distinguish_experiment(&cfg).unwrap();
        assert_eq!(rep.aborted_trials, 10);
        assert_eq!(rep.total_queries, 30);
    }
}
