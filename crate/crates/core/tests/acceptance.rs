//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails.

mod support;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use invforge::analysis::{all_loops, replace_all, replace_nth, LoopId};
use invforge::frontend::{alpha_key, parse_expr, parse_program, pretty_print, print_expr, Expr, Program};
use invforge::verifier::fixpoint::declared;
use invforge::verifier::{
    default_procedures, infer, CandidateStatus, Checker, FixpointOutcome, InferConfig, Solver, SolverConfig,
    SolverVerdict, VcKind, DEFAULT_BUDGET,
};
use invforge::weakening::{generate_candidates, HeuristicLevel};

type Outcome = Result<String, String>;

fn solver(budget: Duration) -> Solver {
    Solver::new(SolverConfig { budget, ..SolverConfig::default() })
}

fn corpus_program(name: &str) -> Program {
    support::load(&support::corpus_dir().join(format!("{name}.ivl")))
}

fn key(src: &str) -> String {
    alpha_key(&parse_expr(src).unwrap())
}

fn verified_key(program: &Program, procedure: &str, target: &str) -> Outcome {
    let report = infer(program, procedure, &InferConfig::default(), &solver(DEFAULT_BUDGET)).map_err(|e| e.to_string())?;
    let want = key(target);
    let found = report.verified().find(|c| alpha_key(&c.formula) == want);
    match found {
        Some(c) => Ok(format!("`{}` verified at {} loop(s), {:.1}s", c.formula, c.loops.len(), report.wall_seconds)),
        None => Err(format!("`{target}` not among {} verified candidates", report.verified().count())),
    }
}

/// Runs the fixpoint for one formula placed at every loop, assuming the
/// declared invariants, as inference does for each candidate.
fn check_everywhere(program: &Program, procedure: &str, formula: &Expr, budget: Duration) -> Result<FixpointOutcome, String> {
    let proc = program.procedure(procedure).unwrap();
    let loops = all_loops(program, proc).map_err(|e| e.to_string())?;
    let solver = solver(budget);
    let checker = Checker { program, proc, loops: &loops, solver: &solver, base: declared(&loops) };
    checker.fixpoint(&checker.everywhere(formula), "acceptance").map_err(|e| e.to_string())
}

fn find_candidate(program: &Program, procedure: &str, level: HeuristicLevel, target: &str) -> Result<Expr, String> {
    let proc = program.procedure(procedure).unwrap();
    let want = key(target);
    generate_candidates(program, proc, &level)
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|c| c.key() == want)
        .map(|c| c.formula)
        .ok_or_else(|| format!("`{target}` is not generated"))
}

fn criterion_1() -> Outcome {
    verified_key(&corpus_program("max_v1"), "max", "forall j: int :: 1 <= j && j <= i ==> A[j] <= Result")
}

fn criterion_2() -> Outcome {
    verified_key(&corpus_program("max_v2"), "max_v2", "forall j: int :: 1 <= j && j <= i - 1 ==> A[j] <= m")
}

fn criterion_3() -> Outcome {
    let p = corpus_program("partition");
    let two = "(forall k: int :: 1 <= k && k < low_index - 1 + 1 ==> A[k] <= pivot) \
               && (forall k: int :: high_index < k && k <= n ==> A[k] >= pivot)";
    let f = find_candidate(&p, "partition", HeuristicLevel::preset(4), two)?;
    let out = check_everywhere(&p, "partition", &f, DEFAULT_BUDGET)?;
    if out.surviving.len() != 3 {
        return Err(format!("two-variable conjunction survives at {} of 3 loops", out.surviving.len()));
    }
    let dropped = "forall k: int :: high_index < k && k <= n ==> A[k] >= pivot";
    let f = find_candidate(&p, "partition", HeuristicLevel::default(), dropped)?;
    let out = check_everywhere(&p, "partition", &f, DEFAULT_BUDGET)?;
    if out.surviving.is_empty() {
        return Err("term-dropped conjunct not verified at the default level".into());
    }
    Ok(format!(
        "two-variable conjunction kept at 3/3 loops; `{dropped}` verified at {} loop(s)",
        out.surviving.len()
    ))
}

fn criterion_4() -> Outcome {
    let p = corpus_program("flip");
    let report = infer(&p, "flip", &InferConfig::default(), &solver(DEFAULT_BUDGET)).map_err(|e| e.to_string())?;
    let find = |src: &str| report.candidates.iter().find(|c| alpha_key(&c.formula) == key(src));
    let weak = find("x >= -1").ok_or("`x >= -1` is not generated")?;
    let refuted = weak
        .checks
        .iter()
        .any(|c| c.kind == VcKind::Consecution && matches!(c.verdict, SolverVerdict::Invalid { .. }));
    if weak.status != CandidateStatus::Rejected || !refuted {
        return Err(format!("`x >= -1` is {:?}, consecution refuted: {refuted}", weak.status));
    }
    let strong = find("x >= -1 && x <= 1").ok_or("`x >= -1 && x <= 1` is not generated")?;
    if strong.status != CandidateStatus::Verified {
        return Err(format!("`x >= -1 && x <= 1` is {:?}", strong.status));
    }
    Ok("`x >= -1` rejected by a consecution counterexample; `x >= -1 && x <= 1` verified".into())
}

fn criterion_5() -> Outcome {
    let p = corpus_program("square_root");
    let level = HeuristicLevel { target_uncoupling: true, ..HeuristicLevel::default() };
    let f = find_candidate(&p, "square_root", level, "Result * y == a")?;
    let out = check_everywhere(&p, "square_root", &f, DEFAULT_BUDGET)?;
    if !out.surviving.is_empty() {
        return Err("`Result * y == a` was verified".into());
    }
    if !out.saw_unknown() {
        return Err("`Result * y == a` was refuted rather than left unknown".into());
    }
    Ok(format!("`Result * y == a` generated and unknown at the {}s budget", DEFAULT_BUDGET.as_secs()))
}

fn criterion_6() -> Outcome {
    let mut programs = support::corpus();
    for f in ["two_loops.ivl", "triple_nested.ivl"] {
        programs.push((f.to_string(), support::load(&support::fixture(f))));
    }
    let mut checked = 0;
    let mut total = 0;
    for (name, program) in &programs {
        for proc in program.procedures.iter().filter(|p| p.body.is_some()) {
            for (level, split) in (0..=HeuristicLevel::MAX_PRESET).flat_map(|l| [(l, false), (l, true)]) {
                let level = HeuristicLevel { target_uncoupling: split, ..HeuristicLevel::preset(level) };
                let engine = generate_candidates(program, proc, &level).map_err(|e| e.to_string())?;
                let keys: BTreeSet<String> = engine.iter().map(|c| c.key()).collect();
                let oracle = support::oracle::enumerate(program, proc, &level);
                if keys != oracle || engine.len() != oracle.len() {
                    let missing = oracle.difference(&keys).count();
                    let extra = keys.difference(&oracle).count();
                    return Err(format!(
                        "{name}/{} at {level:?}: engine {} vs oracle {} ({missing} missing, {extra} extra)",
                        proc.name,
                        engine.len(),
                        oracle.len()
                    ));
                }
                checked += 1;
                total += engine.len();
            }
        }
    }
    Ok(format!("{checked} procedure/level pairs agree, {total} candidates in all"))
}

/// Budget used when collecting the invariants to execute.
const CROSS_CHECK_BUDGET: Duration = Duration::from_secs(2);
const CROSS_CHECK_LIMIT: usize = 1_000_000;

fn criterion_7() -> Outcome {
    let solver = solver(CROSS_CHECK_BUDGET);
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut exec_time = Duration::ZERO;
    for (name, program) in support::corpus() {
        for proc in default_procedures(&program) {
            let report = infer(&program, &proc.name, &InferConfig::default(), &solver).map_err(|e| e.to_string())?;
            let invariants: Vec<(LoopId, Expr)> = report
                .verified()
                .flat_map(|c| c.loops.iter().map(|l| (l.clone(), c.formula.clone())))
                .collect();
            let start = Instant::now();
            let cc = support::bounded::cross_check(&program, proc, &invariants, CROSS_CHECK_LIMIT, 7);
            exec_time += start.elapsed();
            lines.push(format!(
                "{name}/{}: {} invariant instances, {} inputs ({}), {} evaluations decided, {} undecided",
                proc.name,
                invariants.len(),
                cc.inputs,
                if cc.exhaustive { "exhaustive" } else { "sampled" },
                cc.decided,
                cc.undecided
            ));
            failures.extend(cc.violations.iter().map(|v| format!("{name}/{}: {v}", proc.name)));
        }
    }
    for l in &lines {
        println!("    {l}");
    }
    if !failures.is_empty() {
        return Err(format!("{} violation(s), first: {}", failures.len(), failures[0]));
    }
    if exec_time > Duration::from_secs(300) {
        return Err(format!("execution took {:.0}s", exec_time.as_secs_f64()));
    }
    Ok(format!("no violations; execution took {:.1}s", exec_time.as_secs_f64()))
}

fn criterion_8() -> Outcome {
    let body = parse_expr("forall j: int :: low <= j && j <= high ==> A[j] <= m").unwrap();
    let (j, h) = (Expr::var("j"), Expr::var("h"));
    let all = print_expr(&replace_all(&body, &j, &h).map_err(|e| e.to_string())?);
    let fourth = print_expr(&replace_nth(&body, &j, &h, 4).map_err(|e| e.to_string())?);
    let want_all = "forall h: int :: low <= h && h <= high ==> A[h] <= m";
    let want_fourth = "forall j: int :: low <= j && j <= high ==> A[h] <= m";
    if all != want_all || fourth != want_fourth {
        return Err(format!("got `{all}` and `{fourth}`"));
    }
    Ok(format!("`{all}` / `{fourth}`"))
}

fn criterion_9() -> Outcome {
    let p = support::load(&support::fixture("two_loops.ivl"));
    let proc = &p.procedures[0];
    let out = check_everywhere(&p, &proc.name, &proc.ensures[0], DEFAULT_BUDGET)?;
    let loops = all_loops(&p, proc).unwrap();
    let (first, second) = (&loops[0].id, &loops[1].id);
    if out.rounds.len() != 2 {
        return Err(format!("{} rounds", out.rounds.len()));
    }
    for w in out.rounds.windows(2) {
        let expect: Vec<LoopId> = w[0].live.iter().filter(|l| !w[0].removed.contains(l)).cloned().collect();
        if w[1].live != expect || w[1].live.len() >= w[0].live.len() {
            return Err("live set did not shrink by exactly the removed instances".into());
        }
    }
    if out.rounds[0].removed != [first.clone()] || !out.rounds[1].removed.is_empty() {
        return Err(format!("removed per round: {:?}", out.rounds.iter().map(|r| &r.removed).collect::<Vec<_>>()));
    }
    let surviving: Vec<usize> = out.surviving.clone();
    if surviving != [1] {
        return Err(format!("surviving instances {surviving:?}"));
    }
    Ok(format!("2 rounds; {first} removed in round 1, {second} survives"))
}

fn criterion_10() -> Outcome {
    let mut files = 0;
    for (name, program) in support::corpus() {
        let again = parse_program(&pretty_print(&program)).map_err(|e| format!("{name}: {e}"))?;
        if again != program {
            return Err(format!("{name} changes under print and parse"));
        }
        files += 1;
    }
    for seed in 0..500 {
        let p = support::gen::program(seed);
        let text = pretty_print(&p);
        let parsed = parse_program(&text).map_err(|e| format!("random program {seed}: {e}\n{text}"))?;
        let again = parse_program(&pretty_print(&parsed)).map_err(|e| format!("random program {seed}: {e}"))?;
        if parsed != p || again != parsed {
            return Err(format!("random program {seed} changes under print and parse"));
        }
    }
    Ok(format!("{files} corpus files and 500 random programs"))
}

/// Criteria known not to be attainable in this environment. Empty when
/// everything passes.
const EXPECTED_FAILURES: &[usize] = &[];

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("max v1 relaxation invariant", criterion_1),
        ("max v2 aged invariant", criterion_2),
        ("partition uncoupling and term dropping", criterion_3),
        ("inductiveness discriminates x >= -1", criterion_4),
        ("square_root product candidate stays unknown", criterion_5),
        ("candidate sets match the brute-force oracle", criterion_6),
        ("bounded execution finds no violated invariant", criterion_7),
        ("replace examples", criterion_8),
        ("two-loop fixpoint", criterion_9),
        ("parse/print round trip", criterion_10),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let n = k + 1;
        if filter.is_some_and(|f| f != n) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match &result {
            Ok(detail) => println!("PASS criterion {n}: {title} ({detail}) [{secs:.1}s]"),
            Err(why) => println!("FAIL criterion {n}: {title} ({why}) [{secs:.1}s]"),
        }
        if result.is_err() != EXPECTED_FAILURES.contains(&n) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
