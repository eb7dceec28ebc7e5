//! End-to-end runs of the bundled examples: verify the abstraction, solve the
//! boolean projection, simulate, and execute on concrete families.

use std::time::Instant;

use crate::abstraction::{check_completeness, check_soundness, FamilyModel, Verdict, DEFAULT_CAP};
use crate::bundled::{self, Example};
use crate::error::Result;
use crate::executor::{verify_generalized, ExecutionReport};
use crate::generators::family;
use crate::planner::{qualitative_solve, simulate, strong_cyclic_solve, PolicyTable, QualitativeSolution, Unsolvable};
use crate::projection::{booleanize, check_qplus_condition, compile_dnf, print_fond, print_qnp, QnpProblem, QplusCheck};
use crate::report::{digest, Report};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    /// Reachable-state cap per instance for the bounded checks.
    pub cap: usize,
    pub delta_cap: u64,
    /// Counter ceiling in the numerical simulation.
    pub sim_cap: u64,
    pub trials: usize,
    pub step_cap: Option<usize>,
    pub timings: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            cap: DEFAULT_CAP,
            delta_cap: 3,
            sim_cap: 10,
            trials: 3,
            step_cap: None,
            timings: false,
        }
    }
}

/// Booleanizes and searches for a terminating strong-cyclic policy.
pub fn solve_qnp(q: &QnpProblem) -> Result<std::result::Result<QualitativeSolution, Unsolvable>> {
    qualitative_solve(&booleanize(q))
}

#[derive(Debug, Clone)]
pub struct ExampleRun {
    pub report: Report,
    pub policy: Option<PolicyTable>,
    pub qnp: QnpProblem,
    pub soundness: Vec<(String, Verdict)>,
    pub completeness: Verdict,
    pub interface: Verdict,
    pub qplus: QplusCheck,
    pub simulation_ok: bool,
    pub executions: Vec<(String, ExecutionReport)>,
    /// Phase name and wall time in milliseconds.
    pub timings: Vec<(String, f64)>,
}

impl ExampleRun {
    pub fn solved(&self) -> bool {
        self.policy.is_some()
    }

    pub fn executions_ok(&self) -> bool {
        self.executions.iter().all(|(_, r)| r.all_succeeded())
    }

    /// Solved, simulated and executed without failures.
    pub fn success(&self) -> bool {
        self.solved() && self.simulation_ok && self.executions_ok()
    }

    pub fn policy_text(&self) -> String {
        self.policy.as_ref().map(PolicyTable::print).unwrap_or_default()
    }
}

struct Clock {
    timings: Vec<(String, f64)>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Clock {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        self.timings
            .push((phase.to_string(), (now - self.last).as_secs_f64() * 1000.0));
        self.last = now;
    }
}

pub fn verdict_line(v: &Verdict) -> String {
    let mut s = format!("{} instances={} states={}", v.status, v.instances, v.states);
    if v.counterexamples > 0 {
        s.push_str(&format!(" counterexamples={}", v.counterexamples));
    }
    s
}

pub fn run_example(e: &Example, opts: &Options) -> Result<ExampleRun> {
    let mut clock = Clock::new();
    let loaded = e.load()?;
    let f = &loaded.features;
    let mut report = Report::new();
    report.push("command", "name", format!("demo {}", e.name));
    report.push("inputs", "example", e.name);
    report.push("inputs", "features", format!("bundled:{} {}", e.features, digest(e.features_text())));
    report.push("inputs", "actions", format!("bundled:{} {}", e.actions, digest(e.actions_text())));
    report.push("inputs", "formulas", format!("bundled:{} {}", e.formulas, digest(e.formulas_text())));
    report.push("inputs", "check-family", e.check_family);
    report.push("inputs", "cap", opts.cap);
    report.push("inputs", "delta-cap", opts.delta_cap);
    report.push("inputs", "simulation-cap", opts.sim_cap);
    report.push("inputs", "trials", opts.trials);
    report.push(
        "inputs",
        "step-cap",
        opts.step_cap.map_or("default".to_string(), |c| c.to_string()),
    );

    let fam = family(e.check_family)?;
    let model = FamilyModel::build(e.check_family, fam.instances, f, opts.cap)?;
    clock.lap("enumerate");
    let soundness: Vec<(String, Verdict)> = loaded
        .actions
        .iter()
        .map(|a| (a.name.clone(), check_soundness(a, &model)))
        .collect();
    let completeness = check_completeness(&loaded.actions, &model);
    let interface = crate::projection::verify_interface_soundness(&loaded.qnp.init, &loaded.qnp.goal, &model);
    clock.lap("verify");
    for (name, v) in &soundness {
        report.push("verdicts", format!("sound.{name}"), verdict_line(v));
    }
    report.push("verdicts", "complete", verdict_line(&completeness));
    report.push("verdicts", "interface", verdict_line(&interface));
    let mut witness_lines: Vec<(String, String)> = Vec::new();
    for (name, v) in soundness
        .iter()
        .map(|(n, v)| (format!("sound.{n}"), v))
        .chain([("complete".to_string(), &completeness), ("interface".to_string(), &interface)])
    {
        for (i, w) in v.witnesses.iter().enumerate() {
            witness_lines.push((format!("{name}.{}", i + 1), w.to_string()));
        }
    }

    let qnp = loaded.qnp.clone();
    let fond = booleanize(&qnp);
    let qplus = check_qplus_condition(&qnp);
    let compiled = compile_dnf(&fond)?;
    report.push("projection", "qnp", digest(&print_qnp(&qnp)));
    report.push("projection", "fond", digest(&print_fond(&fond)));
    report.push(
        "projection",
        "qplus",
        match &qplus {
            QplusCheck::Identity => "identity".to_string(),
            QplusCheck::NeedsTranslation(ev) => format!("needs-translation: {}", ev.join("; ")),
        },
    );
    report.push(
        "projection",
        "compiled-solvable",
        if strong_cyclic_solve(&compiled)?.is_ok() { "yes" } else { "no" },
    );

    let solution = qualitative_solve(&fond)?;
    clock.lap("solve");
    let mut policy = None;
    let mut simulation_ok = false;
    let mut executions = Vec::new();
    match solution {
        Err(u) => {
            report.push("policy", "status", format!("unsolvable: {u}"));
        }
        Ok(sol) => {
            let mut p = sol.policy.clone();
            p.stats.insert("problem".into(), digest(&print_fond(&fond)));
            report.push("policy", "status", "solved");
            report.push("policy", "rules", p.len());
            report.push("policy", "rounds", sol.rounds);
            let cert: Vec<String> = sol.certificate.iter().map(|s| qnp.sig.name(s.var).to_string()).collect();
            report.push("policy", "termination", format!("terminating sieve=[{}]", cert.join(" ")));
            for (i, line) in p.rules_text().lines().enumerate() {
                report.push("policy", format!("rule.{}", i + 1), line);
            }

            let sim = simulate(&p, &qnp, opts.sim_cap, opts.delta_cap)?;
            clock.lap("simulate");
            simulation_ok = sim.all_runs_reach_goal();
            report.push("simulation", "result", if simulation_ok { "all-runs-reach-goal" } else { "failed" });
            report.push("simulation", "initial", sim.initial);
            report.push("simulation", "explored", sim.explored);
            report.push("simulation", "stuck", sim.stuck.len());
            report.push("simulation", "cycle", if sim.cycle.is_some() { "yes" } else { "no" });
            report.push("simulation", "longest", sim.longest);
            report.push("simulation", "bound", sim.bound);

            for ex in e.executions {
                let fam = family(ex.family)?;
                let r = verify_generalized(&p, &loaded.actions, &fam.instances, f, ex.strategies, opts.trials, opts.step_cap)?;
                clock.lap(&format!("execute.{}", ex.family));
                report.push("execution", format!("{}.instances", ex.family), r.instances);
                for (strategy, tally) in &r.by_strategy {
                    report.push(
                        "execution",
                        format!("{}.{strategy}", ex.family),
                        format!("{}/{}", tally.succeeded, tally.runs),
                    );
                }
                report.push("execution", format!("{}.max-steps", ex.family), r.max_steps);
                report.push("execution", format!("{}.tracking-violations", ex.family), r.tracking_violations);
                for (i, t) in r.failures.iter().enumerate() {
                    witness_lines.push((
                        format!("execution.{}.{}", ex.family, i + 1),
                        format!("{} {} {} after {} steps", t.instance, t.strategy, t.outcome, t.steps.len()),
                    ));
                }
                executions.push((ex.family.to_string(), r));
            }
            policy = Some(p);
        }
    }

    let run = ExampleRun {
        report: Report::new(),
        policy,
        qnp,
        soundness,
        completeness,
        interface,
        qplus,
        simulation_ok,
        executions,
        timings: clock.timings,
    };
    report.push("result", "success", run.success());
    for (k, v) in witness_lines {
        report.push("witnesses", k, v);
    }
    if opts.timings {
        for (phase, ms) in &run.timings {
            report.push("timings", format!("{phase}-ms"), format!("{ms:.1}"));
        }
    }
    Ok(ExampleRun { report, ..run })
}

/// Re-runs an example from the inputs recorded in a report.
pub fn rerun_from_report(report: &Report) -> Result<ExampleRun> {
    let get = |k: &str| {
        report
            .get("inputs", k)
            .ok_or_else(|| crate::error::Error::Invalid(format!("report lacks input `{k}`")))
    };
    let e = bundled::example(get("example")?)?;
    let num = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|_| crate::error::Error::Invalid(format!("input `{k}` is not a number")))
    };
    let opts = Options {
        cap: num("cap")? as usize,
        delta_cap: num("delta-cap")?,
        sim_cap: num("simulation-cap")?,
        trials: num("trials")? as usize,
        step_cap: match get("step-cap")? {
            "default" => None,
            _ => Some(num("step-cap")? as usize),
        },
        timings: report.section("timings").is_some(),
    };
    run_example(e, &opts)
}
