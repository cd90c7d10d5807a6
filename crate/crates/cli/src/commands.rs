use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use pandora_core::corpus::{run_corpus, run_theorem_suite, SolverClass, Theorem};
use pandora_core::cost::{budget_additive_representation, validate_class_with, CostClass, QueryCountingOracle};
use pandora_core::hardness::{
    agreement_check, distinguish_experiment, random_planted, symmetric_impulsive_utility,
    symmetric_impulsive_utility_exact, verify_family, DistinguishConfig, FamilyVerdict,
    HardnessParams, QueryAlgorithm, SymmetricVariant,
};
use pandora_core::instances::canonical::canonical;
use pandora_core::rational::{format_rational, parse_rational, Rational};
use pandora_core::solvers::{
    adaptivity_gap_with, optimal_adaptive_with, optimal_fixed_order_with, optimal_impulsive_with,
    weitzman,
};
use pandora_core::transforms::{bernoullify, check_preservation_with, DiscretizationParams, discretize_with};
use pandora_core::{Error, Instance, Limits, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::digest;
use crate::{Command, CorpusCommand, HardnessArgs, HardnessCommand, InstanceArgs, TransformCommand};

/// Results of a command that ran to completion.
pub struct Done {
    pub digest: Option<String>,
    pub results: Value,
    pub queries: Option<u64>,
    pub pass: bool,
}

pub enum Outcome {
    Report(Done),
    /// Printed verbatim (instance JSON).
    Raw(String),
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
}

impl Failure {
    /// 1 for failed internal checks, 2 for bad input, 3 for size bounds.
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Capability { .. }) => 3,
            Failure::Core(Error::Internal(_)) => 1,
            Failure::Core(Error::Domain(_) | Error::Parse(_)) | Failure::Io(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Core(Error::Capability { .. }) => "capability",
            Failure::Core(Error::Internal(_)) => "internal",
            Failure::Core(Error::Domain(_)) => "domain",
            Failure::Core(Error::Parse(_)) => "parse",
            Failure::Io(_) => "io",
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => f.write_str(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn q(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

pub fn load_instance(input: &InstanceArgs) -> Run<Instance> {
    if let Some(name) = &input.canonical {
        return Ok(canonical(name)?);
    }
    let path = input.file.as_deref().expect("clap requires one input");
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Io(format!("reading standard input: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))?
    };
    Ok(Instance::from_json(&text)?)
}

fn write_instance(inst: &Instance, path: &Path) -> Run<()> {
    fs::write(path, inst.to_json() + "\n").map_err(|e| Failure::Io(format!("writing {}: {e}", path.display())))
}

/// The instance as it will read back from its own JSON (constant-zero boxes
/// dropped), so emitted files reload unchanged.
fn normalized(inst: Instance) -> Run<Instance> {
    Ok(Instance::from_json(&inst.to_json())?)
}

fn hardness_params(args: &HardnessArgs) -> Run<HardnessParams> {
    Ok(match (args.alpha, args.beta) {
        (Some(a), Some(b)) => HardnessParams::with_overrides(args.n, a, b)?,
        _ => HardnessParams::new(args.n)?,
    })
}

pub fn run(command: &Command) -> Run<Outcome> {
    let limits = Limits::from_env();
    let done = match command {
        Command::Solve { input, class } => solve(&load_instance(input)?, *class, &limits)?,
        Command::Gap { input } => {
            let inst = load_instance(input)?;
            let counter = QueryCountingOracle::new(&inst.cost);
            let r = adaptivity_gap_with(Problem::new(&inst.boxes, &counter)?, &limits)?;
            Done {
                digest: Some(digest(&inst)),
                results: to_value(&r),
                queries: Some(counter.queries()),
                pass: true,
            }
        }
        Command::Validate { input, class } => validate(&load_instance(input)?, class, &limits)?,
        Command::Transform(t) => transform(t, &limits)?,
        Command::Hardness(h) => hardness(h)?,
        Command::Corpus(CorpusCommand::Run { large }) => {
            let r = run_corpus(*large)?;
            Done {
                digest: None,
                results: to_value(&r),
                queries: None,
                pass: r.pass,
            }
        }
        Command::Verify { theorem, trials, seed } => verify(theorem, *trials, *seed)?,
        Command::Canonical { name, output } => {
            let inst = canonical(name)?;
            match output {
                None => return Ok(Outcome::Raw(inst.to_json())),
                Some(path) => {
                    write_instance(&inst, path)?;
                    Done {
                        digest: Some(digest(&inst)),
                        results: json!({ "name": name, "written": path.display().to_string() }),
                        queries: None,
                        pass: true,
                    }
                }
            }
        }
    };
    Ok(Outcome::Report(done))
}

fn solve(inst: &Instance, class: SolverClass, limits: &Limits) -> Run<Done> {
    let counter = QueryCountingOracle::new(&inst.cost);
    let problem = Problem::new(&inst.boxes, &counter)?;
    let (utility, strategy, queries) = match class {
        SolverClass::Adaptive => {
            let (u, tree) = optimal_adaptive_with(problem, limits)?;
            (u, to_value(&tree), Some(counter.queries()))
        }
        SolverClass::Fixed => {
            let (s, u) = optimal_fixed_order_with(problem, limits)?;
            (u, to_value(&s), Some(counter.queries()))
        }
        SolverClass::Impulsive => {
            let (s, u) = optimal_impulsive_with(problem, limits)?;
            (u, to_value(&s), Some(counter.queries()))
        }
        // Reads the per-box costs directly rather than through the oracle.
        SolverClass::Weitzman => {
            let (u, s) = weitzman(inst)?;
            (u, to_value(&s), None)
        }
    };
    Ok(Done {
        digest: Some(digest(inst)),
        results: json!({ "class": class.name(), "utility": q(&utility), "strategy": strategy }),
        queries,
        pass: true,
    })
}

fn validate(inst: &Instance, class: &str, limits: &Limits) -> Run<Done> {
    let counter = QueryCountingOracle::new(&inst.cost);
    let (results, pass) = if class == "budget_additive" {
        let rep = budget_additive_representation(&counter)?;
        let pass = rep.is_some();
        (json!({ "class": class, "pass": pass, "representation": rep }), pass)
    } else {
        let class = CostClass::from_str(class)?;
        let v = validate_class_with(&counter, class, limits)?;
        (to_value(&v), v.pass)
    };
    Ok(Done {
        digest: Some(digest(inst)),
        results,
        queries: Some(counter.queries()),
        pass,
    })
}

fn transform(t: &TransformCommand, limits: &Limits) -> Run<Done> {
    match t {
        TransformCommand::Discretize { input, epsilon, output } => {
            let inst = load_instance(input)?;
            let epsilon = parse_rational(epsilon)?;
            let params = DiscretizationParams::new(&inst, epsilon)?;
            let out = normalized(discretize_with(&inst, &params)?)?;
            if let Some(path) = output {
                write_instance(&out, path)?;
            }
            Ok(Done {
                digest: Some(digest(&inst)),
                results: json!({
                    "params": to_value(&params),
                    "output_digest": digest(&out),
                    "instance": to_value(&out),
                }),
                queries: None,
                pass: true,
            })
        }
        TransformCommand::Bernoullify { input, output } => {
            let inst = load_instance(input)?;
            let (lifted, map) = bernoullify(&inst)?;
            let lifted = normalized(lifted)?;
            if let Some(path) = output {
                write_instance(&lifted, path)?;
            }
            Ok(Done {
                digest: Some(digest(&inst)),
                results: json!({
                    "map": to_value(&map),
                    "output_digest": digest(&lifted),
                    "instance": to_value(&lifted),
                }),
                queries: None,
                pass: true,
            })
        }
        TransformCommand::Preserve { input, class } => {
            let inst = load_instance(input)?;
            let r = check_preservation_with(&inst, *class, limits)?;
            Ok(Done {
                digest: Some(digest(&inst)),
                results: to_value(&r),
                queries: None,
                pass: r.pass,
            })
        }
    }
}

fn hardness(h: &HardnessCommand) -> Run<Done> {
    let done = |results: Value, queries: Option<u64>, pass: bool| Done {
        digest: None,
        results,
        queries,
        pass,
    };
    match h {
        HardnessCommand::Family { params } => {
            let r = verify_family(&hardness_params(params)?)?;
            let pass = r.verdict == FamilyVerdict::Pass;
            Ok(done(to_value(&r), None, pass))
        }
        HardnessCommand::Utility { params, s, variant } => {
            let p = hardness_params(params)?;
            let v = match variant.as_str() {
                "baseline" => SymmetricVariant::Baseline,
                "planted" => SymmetricVariant::PlantedSubsetR,
                other => {
                    return Err(Error::Parse(format!("unknown variant {other:?} (baseline or planted)")).into())
                }
            };
            let u = symmetric_impulsive_utility(&p, *s, v)?;
            let exact = if *s <= 30 {
                q(&symmetric_impulsive_utility_exact(&p, *s, v)?)
            } else {
                Value::Null
            };
            Ok(done(
                json!({ "params": to_value(&p), "s": s, "variant": variant, "utility": u, "exact": exact }),
                None,
                true,
            ))
        }
        HardnessCommand::Distinguish { params, queries, trials, seed, thresholds } => {
            let cfg = DistinguishConfig {
                params: hardness_params(params)?,
                algorithm: QueryAlgorithm::RandomUniformAlphaSets { count: *queries },
                budget: *queries as u64,
                trials: *trials,
                seed: *seed,
                extra_thresholds: thresholds.clone(),
            };
            let r = distinguish_experiment(&cfg)?;
            let pass = r.query_count_exact && r.tail_checks.iter().all(|t| t.within_3_se);
            Ok(done(to_value(&r), Some(r.total_queries), pass))
        }
        HardnessCommand::Agree { params, plants, seed } => {
            let p = hardness_params(params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let reports = (0..*plants)
                .map(|_| agreement_check(&p, &random_planted(&p, &mut rng)))
                .collect::<Result<Vec<_>, _>>()?;
            let pass = reports.iter().all(|r| r.pass());
            let queries = reports.iter().map(|r| 2 * r.subsets).sum();
            Ok(done(json!({ "reports": to_value(&reports) }), Some(queries), pass))
        }
    }
}

fn verify(theorem: &str, trials: Option<usize>, seed: u64) -> Run<Done> {
    let suites: Vec<Theorem> = if theorem.eq_ignore_ascii_case("all") {
        Theorem::ALL.to_vec()
    } else {
        vec![Theorem::from_str(theorem)?]
    };
    let reports = suites
        .into_iter()
        .map(|t| run_theorem_suite(t, trials.unwrap_or_else(|| t.default_trials()), seed))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = reports.iter().all(|r| r.pass());
    Ok(Done {
        digest: None,
        results: json!({ "suites": to_value(&reports) }),
        queries: None,
        pass,
    })
}
