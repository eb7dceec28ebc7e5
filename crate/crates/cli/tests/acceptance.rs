//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use genplan_core::abstraction::{check_completeness, check_soundness, parse_actions, FamilyModel, DEFAULT_CAP};
use genplan_core::bundled;
use genplan_core::executor::{default_step_cap, Runner, STEP_CAP_PROBE};
use genplan_core::generators::family;
use genplan_core::pipeline::{run_example, solve_qnp, Options};
use genplan_core::planner::{check_termination, simulate, PolicyTable, Termination};
use genplan_core::projection::{booleanize, parse_qnp};
use genplan_core::{Atom, FeatureSet, Instance, Literal, Signature, State, Strategy, Trajectory};

fn verdict(n: u32, title: &str, checks: &[(&str, bool)]) {
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect();
    if failed.is_empty() {
        println!("criterion {n} ({title}): PASS");
    } else {
        println!("criterion {n} ({title}): FAIL [{}]", failed.join(", "));
    }
    assert!(failed.is_empty(), "criterion {n} failed: {failed:?}");
}

fn genplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genplan"))
        .args(args)
        .output()
        .expect("genplan runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Published rules as (literals, action). A rule may leave features
/// unmentioned; it then covers every valuation agreeing on the rest.
type Published<'a> = &'a [(&'a str, &'a str)];

/// Every policy entry falls under exactly one published rule with the same
/// action, and every published rule is used.
fn agrees_with(policy: &PolicyTable, sig: &Signature, published: Published) -> bool {
    let rules: Vec<(Vec<Literal>, &str)> = published
        .iter()
        .map(|(lits, a)| {
            let lits = lits.split_whitespace().map(|t| Literal::parse(t, sig).unwrap()).collect();
            (lits, *a)
        })
        .collect();
    let mut used = BTreeSet::new();
    for (v, action) in policy.iter() {
        let hits: Vec<usize> = rules
            .iter()
            .enumerate()
            .filter(|(_, (lits, a))| *a == action && lits.iter().all(|l| l.satisfied_by(v)))
            .map(|(i, _)| i)
            .collect();
        if hits.len() != 1 {
            println!("  entry `{}` matches {} published rules", policy.rule_text(v), hits.len());
            return false;
        }
        used.insert(hits[0]);
    }
    if used.len() != rules.len() {
        println!("  {} of {} published rules have no policy entry", rules.len() - used.len(), rules.len());
        return false;
    }
    true
}

struct Solved {
    policy: PolicyTable,
    features: FeatureSet,
    actions: Vec<genplan_core::AbstractAction>,
    elapsed: Duration,
}

/// Loads an example's inputs and runs the planner, timing both.
fn solve_example(name: &str) -> Solved {
    let start = Instant::now();
    let e = bundled::example(name).unwrap();
    let loaded = e.load().unwrap();
    let sol = solve_qnp(&loaded.qnp).unwrap().expect("solvable");
    let elapsed = start.elapsed();
    println!("  {name}: {} rules in {:.1} ms", sol.policy.len(), elapsed.as_secs_f64() * 1000.0);
    Solved {
        policy: sol.policy,
        features: loaded.features,
        actions: loaded.actions,
        elapsed,
    }
}

const STRATEGIES: [Strategy; 5] = [
    Strategy::First,
    Strategy::Random(1),
    Strategy::Random(2),
    Strategy::Random(3),
    Strategy::Adversarial,
];

/// Runs the policy on every instance under `strategies`, returning the
/// instance index with each trajectory.
fn execute(s: &Solved, instances: &[Instance], strategies: &[Strategy]) -> Vec<(usize, Trajectory)> {
    let runner = Runner {
        policy: &s.policy,
        actions: &s.actions,
        features: &s.features,
    };
    instances
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, inst)| {
            let b = s.features.bind(inst).unwrap();
            let cap = default_step_cap(inst, STEP_CAP_PROBE, DEFAULT_CAP);
            strategies
                .iter()
                .map(|&st| (i, runner.run(inst, &b, st, cap, None).unwrap()))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn atoms(inst: &Instance, s: &State) -> Vec<Atom> {
    inst.sorted_atoms(s)
}

fn coordinates(a: &Atom) -> (i64, i64) {
    (a.args[0].parse().unwrap(), a.args[1].parse().unwrap())
}

/// |x* - x| + |y* - y| read off the `at` atoms of the start and goal.
fn manhattan(inst: &Instance) -> usize {
    let start = atoms(inst, inst.init()).into_iter().find(|a| a.predicate == "at").unwrap();
    let goal = inst.goal_atoms().find(|a| a.predicate == "at").unwrap();
    let (sx, sy) = coordinates(&start);
    let (gx, gy) = coordinates(goal);
    ((sx - gx).abs() + (sy - gy).abs()) as usize
}

#[test]
fn criterion_1_qclear_pipeline() {
    let s = solve_example("qclear");
    let published: Published = &[("!H nx>0", "pick-above-x"), ("H nx>0", "put-aside")];
    let rules_match = agrees_with(&s.policy, s.features.signature(), published);
    let policy_path = scratch("qclear.policy");
    let demo = genplan(&["demo", "qclear", "--policy-out", policy_path.to_str().unwrap()]);
    let written = std::fs::read_to_string(&policy_path).unwrap_or_default();
    let solve = genplan(&["solve", "--problem", "qclear"]);
    verdict(
        1,
        "qclear pipeline",
        &[
            ("two published rules", rules_match && s.policy.len() == 2),
            ("under 1 s", s.elapsed < Duration::from_secs(1)),
            ("demo exits 0", demo.status.code() == Some(0)),
            ("demo policy file", PolicyTable::parse(&written).is_ok_and(|p| p.entries == s.policy.entries)),
            ("solve exits 0", solve.status.code() == Some(0)),
        ],
    );
}

#[test]
fn criterion_2_qmove() {
    let s = solve_example("qmove");
    let published: Published = &[("dX>0 dY>0", "move-in-row"), ("dX=0 dY>0", "move-in-column")];
    let rules_match = agrees_with(&s.policy, s.features.signature(), published);
    let instances = family("qmove_le6").unwrap().instances;
    let runs = execute(&s, &instances, &STRATEGIES);
    let exact = runs
        .iter()
        .filter(|(i, t)| t.succeeded() && t.steps.len() == manhattan(&instances[*i]))
        .count();
    println!("  {exact}/{} runs reach the goal in exactly dX+dY steps", runs.len());
    verdict(
        2,
        "qmove",
        &[
            ("published two-rule policy", rules_match),
            ("exact step counts on all runs", exact == runs.len()),
            ("under 1 s", s.elapsed < Duration::from_secs(1)),
        ],
    );
}

#[test]
fn criterion_3_qslide() {
    let s = solve_example("qslide");
    let published: Published = &[("db>0 dt>0", "move-blank"), ("db=0 dt>0", "move-tile")];
    let rules_match = agrees_with(&s.policy, s.features.signature(), published);
    let instances = family("qslide_3x3").unwrap().instances;
    let runs = execute(&s, &instances, &[Strategy::First, Strategy::Random(1)]);
    let dt = s.features.signature().index("dt").unwrap();
    let ok = runs
        .iter()
        .filter(|(i, t)| {
            let inst = &instances[*i];
            let b = s.features.bind(inst).unwrap();
            t.succeeded() && s.features.valuation(inst, &t.last, &b).unwrap().0[dt] == 0
        })
        .count();
    println!("  {} instances, {ok}/{} runs end with dt=0", instances.len(), runs.len());
    verdict(
        3,
        "qslide",
        &[
            ("published two-rule policy", rules_match),
            ("at least 500 instances", instances.len() >= 500),
            ("all runs reach dt=0", ok == runs.len()),
            ("under 1 s", s.elapsed < Duration::from_secs(1)),
        ],
    );
}

#[test]
fn criterion_4_qon() {
    let s = solve_example("qon");
    let published: Published = &[
        ("!X !H !onxy nx>0 ny>0", "pick-above-x"),
        ("!X H !onxy nx>0 ny>0", "put-other-aside"),
        ("!X H !onxy nx=0 ny>0", "put-other-aside"),
        ("!X !H !onxy nx=0 ny>0", "pick-above-y"),
        ("!X H !onxy nx=0 ny=0", "put-other-aside"),
        ("!X !H !onxy nx=0 ny=0", "pick-x"),
        ("X !H !onxy nx=0 ny=0", "put-x-on-y"),
    ];
    let rules_match = agrees_with(&s.policy, s.features.signature(), published);
    let instances = family("qon_le5").unwrap().instances;
    let runs = execute(&s, &instances, &STRATEGIES);
    let ok = runs
        .iter()
        .filter(|(i, t)| {
            let inst = &instances[*i];
            let goal = inst.goal_atoms().next().unwrap();
            t.succeeded() && atoms(inst, &t.last).contains(goal)
        })
        .count();
    println!("  {ok}/{} runs end with on(x,y)", runs.len());
    verdict(
        4,
        "qon",
        &[
            ("published seven-rule policy", rules_match && s.policy.len() == 7),
            ("all runs reach on(x,y)", ok == runs.len()),
            ("under 1 s", s.elapsed < Duration::from_secs(1)),
        ],
    );
}

/// One tower containing every block, arm empty; returns the bottom block.
fn single_tower_bottom(inst: &Instance, s: &State) -> Option<String> {
    let atoms = atoms(inst, s);
    let on_table: Vec<&Atom> = atoms.iter().filter(|a| a.predicate == "ontable").collect();
    let armempty = atoms.iter().any(|a| a.predicate == "armempty");
    (armempty && on_table.len() == 1).then(|| on_table[0].args[0].clone())
}

#[test]
fn criterion_5_qtower() {
    let s = solve_example("qtower");
    let published: Published = &[
        ("!X !H mx>0", "pick-other"),
        ("!X H mx>0", "put-above-x"),
        ("!X H mx=0", "put-above-x"),
    ];
    let rules_match = agrees_with(&s.policy, s.features.signature(), published);
    let instances = family("qtower_le5").unwrap().instances;
    let runs = execute(&s, &instances, &STRATEGIES);
    let towers = runs
        .iter()
        .filter(|(i, t)| t.succeeded() && single_tower_bottom(&instances[*i], &t.last).is_some())
        .count();
    println!("  {towers}/{} runs build a single tower", runs.len());

    let b = solve_example("qtower_bottom");
    let differs = b.policy.entries != s.policy.entries;
    let instances = family("qtower_bottom_le5").unwrap().instances;
    let runs_b = execute(&b, &instances, &STRATEGIES);
    let bottom = runs_b
        .iter()
        .filter(|(i, t)| {
            let inst = &instances[*i];
            let x = inst.params().get("x").unwrap();
            t.succeeded() && single_tower_bottom(inst, &t.last).as_deref() == Some(x)
        })
        .count();
    println!("  {bottom}/{} runs of the bottom variant end with x under every block", runs_b.len());
    verdict(
        5,
        "qtower",
        &[
            ("published three-rule policy", rules_match && s.policy.len() == 3),
            ("all runs build one tower", towers == runs.len()),
            ("bottom variant policy differs", differs),
            ("bottom variant puts x at the bottom", bottom == runs_b.len()),
            ("under 2 s", s.elapsed < Duration::from_secs(2) && b.elapsed < Duration::from_secs(2)),
        ],
    );
}

#[test]
fn criterion_6_soundness_and_completeness() {
    let start = Instant::now();
    let instances = family("qclear_le4").unwrap().instances;

    let f1 = FeatureSet::parse(bundled::features("qclear").unwrap()).unwrap();
    let two = parse_actions(bundled::actions("two_action_set").unwrap(), f1.signature()).unwrap();
    let m1 = FamilyModel::build("qclear_le4", instances.clone(), &f1, DEFAULT_CAP).unwrap();
    let two_sound = two.iter().all(|a| check_soundness(a, &m1).is_verified());
    let incomplete = check_completeness(&two, &m1);
    let by_name = |n: &str| instances.iter().find(|i| i.name() == n).unwrap();
    let pickup_witness = incomplete.witnesses.iter().any(|w| {
        let Some(action) = w.action.as_deref() else { return false };
        let Some(block) = action.strip_prefix("Pickup(").and_then(|r| r.strip_suffix(')')) else {
            return false;
        };
        let x = f1.bind(by_name(&w.instance)).unwrap().get("x").unwrap().to_string();
        block == x || w.state.contains(&format!("ontable({block})"))
    });

    let f2 = FeatureSet::parse(bundled::features("afprime").unwrap()).unwrap();
    let eight = parse_actions(bundled::actions("afprime").unwrap(), f2.signature()).unwrap();
    let m2 = FamilyModel::build("qclear_le4", instances.clone(), &f2, DEFAULT_CAP).unwrap();
    let eight_sound = eight.iter().all(|a| check_soundness(a, &m2).is_verified());
    let complete = check_completeness(&eight, &m2);
    let elapsed = start.elapsed();
    println!("  enumeration and checks took {:.1} s", elapsed.as_secs_f64());

    let cli = genplan(&["check-complete", "--actions", "two_action_set", "--family", "qclear_le4"]);
    let cli_text = String::from_utf8_lossy(&cli.stdout);
    verdict(
        6,
        "soundness and completeness",
        &[
            ("two actions sound", two_sound),
            ("two actions incomplete", !incomplete.is_verified() && incomplete.witnesses.len() > 0),
            ("pickup witness", pickup_witness),
            ("eight actions sound", eight.len() == 8 && eight_sound),
            ("eight actions complete", complete.is_verified()),
            ("under 60 s", elapsed < Duration::from_secs(60)),
            ("cli exits 1 with pickup witness", cli.status.code() == Some(1) && cli_text.contains("Pickup(")),
        ],
    );
}

#[test]
fn criterion_7_policies_solve_their_families() {
    let mut checks = Vec::new();
    for e in bundled::EXAMPLES {
        let run = run_example(e, &Options::default()).unwrap();
        let premises = run.soundness.iter().all(|(_, v)| v.is_verified()) && run.interface.is_verified();
        let zero = run.executions_ok()
            && run
                .executions
                .iter()
                .all(|(_, r)| r.failed() == 0 && r.tracking_violations == 0);
        for (fam, r) in &run.executions {
            println!(
                "  {}: {fam} {}/{} runs succeeded (verdicts {})",
                e.name,
                r.succeeded,
                r.runs,
                if premises { "verified" } else { "not all verified" }
            );
        }
        checks.push((e.name, run.solved() && zero));
    }
    verdict(7, "policies solve their families", &checks);
}

const LOOPING: &str = "\
qnp loop
bool p
num n
init !p n>0
goal n=0
abstract a pre: !p n>0 eff: p n--
abstract b pre: p eff: !p n++
";

const LOOPING_POLICY: &str = "\
policy loop
bool p
num n
when !p n>0 do a
when p n>0 do b
when p n=0 do b
";

#[test]
fn criterion_8_termination() {
    let mut checks = Vec::new();
    for e in bundled::EXAMPLES {
        let q = e.load().unwrap().qnp;
        let p = solve_qnp(&q).unwrap().unwrap().policy;
        let sim = simulate(&p, &q, 10, 3).unwrap();
        println!("  {}: {} states explored, longest run {}", e.name, sim.explored, sim.longest);
        checks.push((e.name, sim.all_runs_reach_goal()));
    }
    let q = parse_qnp(LOOPING).unwrap();
    let looping = PolicyTable::parse(LOOPING_POLICY).unwrap();
    let lasso = match check_termination(&looping, &booleanize(&q)).unwrap() {
        Termination::Nonterminating { lasso, .. } => {
            println!("  inc/dec policy rejected: {}", lasso.display(&q.sig));
            !lasso.cycle.is_empty()
        }
        Termination::Terminating { .. } => false,
    };
    checks.push(("inc/dec cycle rejected with lasso", lasso));
    checks.push(("inc/dec cycle fails simulation", !simulate(&looping, &q, 10, 3).unwrap().all_runs_reach_goal()));
    verdict(8, "termination", &checks);
}

#[test]
fn criterion_9_determinism() {
    let results: Vec<(&str, bool)> = bundled::EXAMPLES
        .par_iter()
        .map(|e| {
            let outputs: Vec<(Vec<u8>, Vec<u8>, Option<i32>)> = (0..2)
                .map(|k| {
                    let pol = scratch(&format!("{}-{k}.policy", e.name));
                    let rep = scratch(&format!("{}-{k}.report", e.name));
                    let out = genplan(&[
                        "demo",
                        e.name,
                        "--policy-out",
                        pol.to_str().unwrap(),
                        "--report",
                        rep.to_str().unwrap(),
                    ]);
                    (std::fs::read(&pol).unwrap_or_default(), std::fs::read(&rep).unwrap_or_default(), out.status.code())
                })
                .collect();
            let same = outputs[0] == outputs[1] && !outputs[0].0.is_empty() && !outputs[0].1.is_empty();
            (e.name, same)
        })
        .collect();
    verdict(9, "determinism", &results);
}
