//! The ten acceptance criteria, run in order with their time limits. Each
//! prints one PASS/FAIL line; the test fails if any criterion does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use pandora_core::corpus::{run_entry, run_theorem_suite, CorpusEntry, Check, Provenance, Theorem};
use pandora_core::cost::{validate_class, AdditiveCost, CostClass};
use pandora_core::hardness::{
    agreement_check, distinguish_experiment, hypergeometric_tail, random_planted, verify_family,
    DistinguishConfig, FamilyVerdict, HardnessParams, QueryAlgorithm,
};
use pandora_core::instances::canonical;
use pandora_core::rational::{int, ratio, to_f64};
use pandora_core::solvers::{
    adaptivity_gap, optimal_adaptive, optimal_fixed_order, optimal_impulsive, reservation_value,
    weitzman,
};
use pandora_core::strategies::PolicyTree;
use pandora_core::transforms::check_preservation;
use pandora_core::instances::ClassTag;
use pandora_core::Instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

fn suite(theorem: Theorem, trials: usize) {
    let r = run_theorem_suite(theorem, trials, SEED).unwrap();
    assert_eq!(r.trials, trials);
    assert!(
        r.pass(),
        "{theorem}: {}/{} passed; first counterexample: {:?}",
        r.passed,
        trials,
        r.counterexamples.first()
    );
    println!("    {theorem}: {}/{} exact", r.passed, trials);
}

fn example1() {
    let e = canonical::example1();
    let (adaptive, tree) = optimal_adaptive(&e).unwrap();
    let (_, fixed) = optimal_fixed_order(&e).unwrap();
    assert_eq!(adaptive, ratio(21, 2));
    assert_eq!(fixed, int(10));
    assert!(adaptive > fixed);
    // Open box 0; on 10 open box 1; on 0 open box 2; then stop.
    assert_eq!(tree.first_box(), Some(0));
    assert_eq!(tree.child(&int(10)).and_then(PolicyTree::first_box), Some(1));
    assert_eq!(tree.child(&int(0)).and_then(PolicyTree::first_box), Some(2));
    for (v, next) in [(int(10), int(12)), (int(10), int(0)), (int(0), int(10))] {
        let leaf = tree.child(&v).and_then(|t| t.child(&next)).unwrap();
        assert_eq!(leaf, &PolicyTree::Halt);
    }
}

fn unit_demand() {
    let u = canonical::unit_demand_pair();
    let (pi, value) = optimal_impulsive(&u).unwrap();
    assert_eq!(pi.order, vec![0, 1]);
    // 2 · P(some box is 2) − 1
    let hit = 1.0 - (2.0f64 / 3.0).powi(2);
    assert_eq!(value, int(2) * ratio(5, 9) - int(1));
    assert!((to_f64(&value) - (2.0 * hit - 1.0)).abs() < 1e-12);
    for d in &u.boxes {
        assert!(reservation_value(d, &int(1)).unwrap() < int(0));
    }
    let additive = Instance::new(u.boxes.clone(), AdditiveCost::new(vec![int(1), int(1)]).unwrap()).unwrap();
    let (w, s) = weitzman(&additive).unwrap();
    assert_eq!(w, int(0));
    assert!(s.thresholds.iter().all(|t| t.halts_at(&int(0))));
}

fn gap_witnesses() {
    let lift = canonical::xos_lift_of(&canonical::example1()).unwrap();
    let r = adaptivity_gap(&lift).unwrap();
    assert!(r.strict_gap.adaptive_vs_fixed, "{} vs {}", r.opt_adaptive, r.opt_fixed_order);
    let entry = CorpusEntry {
        name: "xos_lift_of(example1)",
        instance: lift,
        expected: vec![pandora_core::corpus::Expectation {
            check: Check::XosLiftOf("example1"),
            provenance: Provenance::Published,
        }],
    };
    let cert = run_entry(&entry);
    assert!(cert.pass, "{:?}", cert.checks);

    let s4 = canonical::subadditive4();
    let r = adaptivity_gap(&s4).unwrap();
    assert!(r.strict_gap.adaptive_vs_fixed, "{} vs {}", r.opt_adaptive, r.opt_fixed_order);
    assert!(validate_class(&s4.cost, CostClass::Subadditive).unwrap().pass);
    assert!(!validate_class(&s4.cost, CostClass::Submodular).unwrap().pass);
}

fn transforms() {
    suite(Theorem::Transforms, 100);
    suite(Theorem::Preservation, 60);
    let split = canonical::budget_additive_pair_split();
    let r = check_preservation(&split, ClassTag::BudgetAdditive).unwrap();
    assert!(!r.pass);
    assert_eq!(r.lifted_boxes, 6);
}

fn hardness_family() {
    let p = HardnessParams::new(100_000).unwrap();
    assert_eq!((p.alpha, p.beta, p.m()), (729, 27, 135));
    let r = verify_family(&p).unwrap();
    assert_eq!(r.verdict, FamilyVerdict::Pass);
    assert!(r.max_baseline_utility < 0.0, "{}", r.max_baseline_utility);
    // Independent evaluation of the planted utility M(1 − q^α) − Σ_{i<β} q^i.
    let q = 1.0 - 1.0 / p.alpha as f64;
    let m = p.m() as f64;
    let planted = m * (1.0 - q.powi(p.alpha as i32)) - (0..p.beta).map(|i| q.powi(i as i32)).sum::<f64>();
    let bound = m * (1.0 - (-1.0f64).exp()) - p.beta as f64;
    assert!((r.planted_utility - planted).abs() < 1e-6, "{} vs {planted}", r.planted_utility);
    assert!((r.planted_lower_bound - bound).abs() < 1e-6);
    assert!(r.planted_utility >= bound && bound > 58.33);
    assert!(r.exact_cross_check_error < 1e-9);
    println!("    planted {:.6} ≥ bound {:.6}; max baseline {:.6}", r.planted_utility, bound, r.max_baseline_utility);
}

fn distinguishing() {
    let params = HardnessParams::new(4096).unwrap();
    assert_eq!((params.alpha, params.beta), (107, 14));
    let queries = 8;
    let trials = 10_000;
    let cfg = DistinguishConfig {
        params,
        algorithm: QueryAlgorithm::RandomUniformAlphaSets { count: queries },
        budget: queries as u64,
        trials,
        seed: SEED,
        extra_thresholds: vec![3],
    };
    let r = distinguish_experiment(&cfg).unwrap();
    assert!(r.banner.contains("not reproducible"));
    println!("    {}", r.banner);
    assert!(r.query_count_exact);
    assert_eq!(r.total_queries, (trials - r.aborted_trials) * queries as u64);
    for t in &r.tail_checks {
        let exact = to_f64(&hypergeometric_tail(params.n, params.alpha, params.alpha, t.threshold));
        assert!((t.exact - exact).abs() < 1e-12);
        assert!(t.within_3_se, "{t:?}");
        println!(
            "    P(|S∩R| > {}): empirical {:.5}, exact {:.5}, z = {:.2}",
            t.threshold, t.empirical, t.exact, t.z
        );
    }
    assert!(r.tail_checks.iter().any(|t| t.threshold == params.beta));
    let small = HardnessParams::with_overrides(12, 8, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..4 {
        let planted = random_planted(&small, &mut rng);
        let a = agreement_check(&small, &planted).unwrap();
        assert!(a.iff_expected && a.pass() && a.iff_failures == 0, "{a:?}");
        assert!(a.disagreements > 0);
    }
}

struct Criterion {
    id: usize,
    what: &'static str,
    limit: Duration,
    run: fn(),
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { id: 1, what: "example1: adaptive 21/2, fixed 10, optimal tree shape", limit: Duration::from_secs(1), run: example1 },
        Criterion { id: 2, what: "unit-demand pair: impulsive 1/9, negative reservation values", limit: Duration::from_secs(1), run: unit_demand },
        Criterion { id: 3, what: "impulsive = adaptive on 200 submodular Bernoulli instances", limit: Duration::from_secs(120), run: || suite(Theorem::ImpulsiveOptimality, 200) },
        Criterion { id: 4, what: "fixed order = adaptive on 100 submodular instances", limit: Duration::from_secs(300), run: || suite(Theorem::FixedOrderOptimality, 100) },
        Criterion { id: 5, what: "strict adaptivity gaps on the XOS lift and subadditive4", limit: Duration::from_secs(30), run: gap_witnesses },
        Criterion { id: 6, what: "dummy-split inequality (500) and cancellation identity (1000)", limit: Duration::from_secs(60), run: || { suite(Theorem::DummySplit, 500); suite(Theorem::Cancellation, 1000) } },
        Criterion { id: 7, what: "discretization, Bernoullification and class preservation", limit: Duration::from_secs(300), run: transforms },
        Criterion { id: 8, what: "Weitzman = adaptive on 100 additive instances", limit: Duration::from_secs(60), run: || suite(Theorem::Weitzman, 100) },
        Criterion { id: 9, what: "lower-bound family at n = 100000", limit: Duration::from_secs(60), run: hardness_family },
        Criterion { id: 10, what: "distinguishing machinery at n = 4096 and exhaustive agreement", limit: Duration::from_secs(120), run: distinguishing },
    ];
    let mut failed = Vec::new();
    for c in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run));
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = outcome.is_ok() && in_time;
        let note = match (&outcome, in_time) {
            (Err(_), _) => " (assertion failed)".to_string(),
            (Ok(()), false) => format!(" (over the {:?} limit)", c.limit),
            _ => String::new(),
        };
        println!(
            "criterion {:>2}: {} {} [{:.2?}]{note}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.what,
            elapsed
        );
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
