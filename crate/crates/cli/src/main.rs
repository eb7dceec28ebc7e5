use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use genplan_core::abstraction::{check_completeness, check_soundness, parse_actions, FamilyModel, DEFAULT_CAP};
use genplan_core::bundled;
use genplan_core::executor::{default_step_cap, run_policy, verify_generalized, STEP_CAP_PROBE};
use genplan_core::generators::{family, FAMILY_NAMES};
use genplan_core::pipeline::{run_example, solve_qnp, verdict_line, Options};
use genplan_core::planner::{qualitative_solve, PolicyTable};
use genplan_core::projection::{
    booleanize, build_projection, parse_fond, parse_formulas, parse_qnp, print_fond, print_qnp,
    verify_interface_soundness, FondProblem,
};
use genplan_core::report::digest;
use genplan_core::{parse_instance, Error, FeatureSet, Instance, Report, Result, Strategy, Verdict};

#[derive(Parser)]
#[command(name = "genplan", version, about = "Generalized planning with feature abstractions")]
struct Cli {
    /// Write the run report to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that abstract actions are sound over an instance family.
    CheckSound(CheckArgs),
    /// Check that an action set is complete over an instance family.
    CheckComplete(CheckArgs),
    /// Check that the initial and goal formulas match the family's instances.
    CheckInterface(InterfaceArgs),
    /// Print the numerical projection.
    Project(ProjectArgs),
    /// Print the boolean FOND projection.
    Booleanize(ProblemArgs),
    /// Compute a terminating strong-cyclic policy.
    Solve(SolveArgs),
    /// Execute a policy on one instance.
    Run(RunArgs),
    /// Execute a policy on every instance of a family.
    Verify(VerifyArgs),
    /// Run a bundled example end to end.
    Demo(DemoArgs),
}

#[derive(Args)]
struct FeatureArgs {
    /// Feature file or bundled feature set; defaults to the one paired with --actions.
    #[arg(long)]
    features: Option<String>,
    /// Abstract action file or bundled action set.
    #[arg(long)]
    actions: String,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inputs: FeatureArgs,
    /// Bundled family name, glob over family names, or glob over instance files.
    #[arg(long)]
    family: String,
    /// Restrict the soundness check to one action.
    #[arg(long)]
    action: Option<String>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct InterfaceArgs {
    #[arg(long)]
    features: String,
    /// Formula file (`init` and `goal` lines) or bundled name.
    #[arg(long)]
    formulas: String,
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    inputs: FeatureArgs,
    #[arg(long)]
    formulas: String,
    /// Name of the printed problem.
    #[arg(long, default_value = "projection")]
    name: String,
}

#[derive(Args)]
struct ProblemArgs {
    /// QNP or FOND file, bundled problem, or bundled example name.
    #[arg(long)]
    problem: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Write the policy file here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyArgs {
    /// Policy file, or a bundled example name to solve on the fly.
    #[arg(long)]
    policy: String,
    #[command(flatten)]
    inputs: FeatureArgs,
    #[arg(long)]
    step_cap: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    /// Instance file.
    #[arg(long)]
    instance: PathBuf,
    /// `first`, `random:<seed>` or `adversarial`.
    #[arg(long, default_value = "first")]
    strategy: Strategy,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    family: String,
    /// Repeatable; defaults to first, random:1 and adversarial.
    #[arg(long)]
    strategy: Vec<Strategy>,
    /// Runs per instance for each random strategy.
    #[arg(long, default_value_t = 3)]
    trials: usize,
}

#[derive(Args)]
struct DemoArgs {
    /// One of the bundled examples.
    example: String,
    /// Write the policy file here.
    #[arg(long)]
    policy_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, default_value_t = 3)]
    delta_cap: u64,
    #[arg(long, default_value_t = 10)]
    sim_cap: u64,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long)]
    step_cap: Option<usize>,
}

/// Text of a file, or of the bundled entry with that name.
fn resolve(arg: &str, kind: &str, bundled: fn(&str) -> Option<&'static str>) -> Result<(String, String)> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: arg.to_string(),
            message: e.to_string(),
        })?;
        return Ok((arg.to_string(), text));
    }
    bundled(arg)
        .map(|t| (format!("bundled:{arg}"), t.to_string()))
        .ok_or_else(|| Error::InvalidParams(format!("no {kind} file or bundled {kind} named `{arg}`")))
}

fn with_context(source: &str, e: Error) -> Error {
    match e {
        Error::Io { .. } => e,
        Error::Syntax { line, column, message } => Error::Syntax {
            line,
            column,
            message: format!("{source}: {message}"),
        },
        other => other,
    }
}

struct Inputs {
    features: FeatureSet,
    actions: Vec<genplan_core::AbstractAction>,
}

fn default_features(actions: &str) -> &str {
    match actions {
        "two_action_set" => "qclear",
        other => other,
    }
}

fn load_inputs(args: &FeatureArgs, report: &mut Report) -> Result<Inputs> {
    let features_arg = match &args.features {
        Some(f) => f.as_str(),
        None if bundled::actions(&args.actions).is_some() => default_features(&args.actions),
        None => return Err(Error::InvalidParams("--features is required with an action file".into())),
    };
    let (fsrc, ftext) = resolve(features_arg, "features", bundled::features)?;
    let (asrc, atext) = resolve(&args.actions, "actions", bundled::actions)?;
    report.push("inputs", "features", format!("{fsrc} {}", digest(&ftext)));
    report.push("inputs", "actions", format!("{asrc} {}", digest(&atext)));
    let features = FeatureSet::parse(&ftext).map_err(|e| with_context(&fsrc, e))?;
    let actions = parse_actions(&atext, features.signature()).map_err(|e| with_context(&asrc, e))?;
    Ok(Inputs { features, actions })
}

fn load_family(arg: &str, report: &mut Report) -> Result<Vec<Instance>> {
    report.push("inputs", "family", arg);
    if FAMILY_NAMES.iter().any(|(n, _)| *n == arg) {
        return Ok(family(arg)?.instances);
    }
    let pattern = glob::Pattern::new(arg).map_err(|e| Error::InvalidParams(format!("bad glob `{arg}`: {e}")))?;
    let mut instances = Vec::new();
    for (name, _) in FAMILY_NAMES {
        if pattern.matches(name) {
            instances.extend(family(name)?.instances);
        }
    }
    let paths = glob::glob(arg).map_err(|e| Error::InvalidParams(format!("bad glob `{arg}`: {e}")))?;
    for path in paths.flatten() {
        let shown = path.display().to_string();
        let text = fs::read_to_string(&path).map_err(|e| Error::Io {
            path: shown.clone(),
            message: e.to_string(),
        })?;
        report.push("inputs", "instance", format!("{shown} {}", digest(&text)));
        instances.push(parse_instance(&text).map_err(|e| with_context(&shown, e))?);
    }
    if instances.is_empty() {
        return Err(Error::InvalidParams(format!("`{arg}` matches no family and no instance file")));
    }
    Ok(instances)
}

fn push_verdict(report: &mut Report, key: &str, v: &Verdict) {
    report.push("verdicts", key, verdict_line(v));
    for (i, w) in v.witnesses.iter().enumerate() {
        report.push("witnesses", format!("{key}.{}", i + 1), w);
    }
}

fn load_problem(arg: &str, report: &mut Report) -> Result<FondProblem> {
    if let Ok(e) = bundled::example(arg) {
        if !Path::new(arg).is_file() {
            report.push("inputs", "example", arg);
            return Ok(booleanize(&e.load()?.qnp));
        }
    }
    let (src, text) = resolve(arg, "problem", bundled::problem)?;
    report.push("inputs", "problem", format!("{src} {}", digest(&text)));
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with(';'))
        .unwrap_or("");
    let parsed = if first.starts_with("fond") {
        parse_fond(&text)
    } else {
        parse_qnp(&text).map(|q| booleanize(&q))
    };
    parsed.map_err(|e| with_context(&src, e))
}

fn load_policy(arg: &str, report: &mut Report) -> Result<PolicyTable> {
    if !Path::new(arg).is_file() {
        if let Ok(e) = bundled::example(arg) {
            report.push("inputs", "policy", format!("solved:{arg}"));
            return match solve_qnp(&e.load()?.qnp)? {
                Ok(s) => Ok(s.policy),
                Err(u) => Err(Error::Invalid(format!("example `{arg}` is unsolvable: {u}"))),
            };
        }
    }
    let (src, text) = resolve(arg, "policy", |_| None)?;
    report.push("inputs", "policy", format!("{src} {}", digest(&text)));
    PolicyTable::parse(&text).map_err(|e| with_context(&src, e))
}

/// Result of a command: exit status and text for standard output, which
/// defaults to the report.
struct Done {
    success: bool,
    stdout: Option<String>,
}

fn execute(cli: &Cli, report: &mut Report) -> Result<Done> {
    match &cli.command {
        Command::CheckSound(args) => {
            report.push("command", "name", "check-sound");
            let inputs = load_inputs(&args.inputs, report)?;
            let instances = load_family(&args.family, report)?;
            report.push("inputs", "cap", args.cap);
            let model = FamilyModel::build(&args.family, instances, &inputs.features, args.cap)?;
            let mut ok = true;
            let mut any = false;
            for a in &inputs.actions {
                if args.action.as_ref().is_some_and(|n| *n != a.name) {
                    continue;
                }
                any = true;
                let v = check_soundness(a, &model);
                ok &= v.is_verified();
                push_verdict(report, &format!("sound.{}", a.name), &v);
            }
            if !any {
                return Err(Error::InvalidParams("no action matches --action".into()));
            }
            Ok(Done { success: ok, stdout: None })
        }
        Command::CheckComplete(args) => {
            report.push("command", "name", "check-complete");
            let inputs = load_inputs(&args.inputs, report)?;
            let instances = load_family(&args.family, report)?;
            report.push("inputs", "cap", args.cap);
            let model = FamilyModel::build(&args.family, instances, &inputs.features, args.cap)?;
            let v = check_completeness(&inputs.actions, &model);
            push_verdict(report, "complete", &v);
            Ok(Done { success: v.is_verified(), stdout: None })
        }
        Command::CheckInterface(args) => {
            report.push("command", "name", "check-interface");
            let (fsrc, ftext) = resolve(&args.features, "features", bundled::features)?;
            let (gsrc, gtext) = resolve(&args.formulas, "formulas", bundled::formulas)?;
            report.push("inputs", "features", format!("{fsrc} {}", digest(&ftext)));
            report.push("inputs", "formulas", format!("{gsrc} {}", digest(&gtext)));
            let features = FeatureSet::parse(&ftext).map_err(|e| with_context(&fsrc, e))?;
            let (init, goal) = parse_formulas(&gtext, features.signature()).map_err(|e| with_context(&gsrc, e))?;
            let instances = load_family(&args.family, report)?;
            report.push("inputs", "cap", args.cap);
            let model = FamilyModel::build(&args.family, instances, &features, args.cap)?;
            let v = verify_interface_soundness(&init, &goal, &model);
            push_verdict(report, "interface", &v);
            Ok(Done { success: v.is_verified(), stdout: None })
        }
        Command::Project(args) => {
            report.push("command", "name", "project");
            let inputs = load_inputs(&args.inputs, report)?;
            let (gsrc, gtext) = resolve(&args.formulas, "formulas", bundled::formulas)?;
            report.push("inputs", "formulas", format!("{gsrc} {}", digest(&gtext)));
            let sig = inputs.features.signature();
            let (init, goal) = parse_formulas(&gtext, sig).map_err(|e| with_context(&gsrc, e))?;
            let q = build_projection(&args.name, sig, inputs.actions, init, goal)?;
            let text = print_qnp(&q);
            report.push("output", "qnp", digest(&text));
            Ok(Done { success: true, stdout: Some(text) })
        }
        Command::Booleanize(args) => {
            report.push("command", "name", "booleanize");
            let fond = load_problem(&args.problem, report)?;
            let text = print_fond(&fond);
            report.push("output", "fond", digest(&text));
            Ok(Done { success: true, stdout: Some(text) })
        }
        Command::Solve(args) => {
            report.push("command", "name", "solve");
            let fond = load_problem(&args.problem.problem, report)?;
            match qualitative_solve(&fond)? {
                Ok(sol) => {
                    let text = sol.policy.print();
                    report.push("policy", "status", "solved");
                    report.push("policy", "rules", sol.policy.len());
                    report.push("policy", "digest", digest(&text));
                    let stdout = match &args.output {
                        Some(path) => {
                            write(path, &text)?;
                            Some(String::new())
                        }
                        None => Some(text),
                    };
                    Ok(Done { success: true, stdout })
                }
                Err(u) => {
                    report.push("policy", "status", format!("unsolvable: {u}"));
                    for (i, s) in u.states.iter().enumerate() {
                        report.push("witnesses", format!("state.{}", i + 1), s.display(&fond.sig));
                    }
                    Ok(Done { success: false, stdout: None })
                }
            }
        }
        Command::Run(args) => {
            report.push("command", "name", "run");
            let policy = load_policy(&args.policy.policy, report)?;
            let inputs = load_inputs(&args.policy.inputs, report)?;
            let shown = args.instance.display().to_string();
            let text = fs::read_to_string(&args.instance).map_err(|e| Error::Io {
                path: shown.clone(),
                message: e.to_string(),
            })?;
            report.push("inputs", "instance", format!("{shown} {}", digest(&text)));
            let inst = parse_instance(&text).map_err(|e| with_context(&shown, e))?;
            let binding = inputs.features.bind(&inst)?;
            let cap = args
                .policy
                .step_cap
                .unwrap_or_else(|| default_step_cap(&inst, STEP_CAP_PROBE, DEFAULT_CAP));
            report.push("inputs", "strategy", args.strategy);
            report.push("inputs", "step-cap", cap);
            let t = run_policy(&policy, &inputs.actions, &inst, &inputs.features, &binding, args.strategy, cap)?;
            report.push("execution", "outcome", t.outcome);
            report.push("execution", "steps", t.steps.len());
            report.push("execution", "tracking-violations", t.tracking_violations.len());
            Ok(Done {
                success: t.succeeded(),
                stdout: Some(t.dump(&inst, &inputs.features)),
            })
        }
        Command::Verify(args) => {
            report.push("command", "name", "verify");
            let policy = load_policy(&args.policy.policy, report)?;
            let inputs = load_inputs(&args.policy.inputs, report)?;
            let instances = load_family(&args.family, report)?;
            let strategies = if args.strategy.is_empty() {
                vec![Strategy::First, Strategy::Random(1), Strategy::Adversarial]
            } else {
                args.strategy.clone()
            };
            let shown: Vec<String> = strategies.iter().map(ToString::to_string).collect();
            report.push("inputs", "strategies", shown.join(" "));
            report.push("inputs", "trials", args.trials);
            let r = verify_generalized(
                &policy,
                &inputs.actions,
                &instances,
                &inputs.features,
                &strategies,
                args.trials,
                args.policy.step_cap,
            )?;
            report.push("execution", "instances", r.instances);
            report.push("execution", "runs", r.runs);
            report.push("execution", "succeeded", r.succeeded);
            report.push("execution", "max-steps", r.max_steps);
            report.push("execution", "tracking-violations", r.tracking_violations);
            for (outcome, n) in &r.by_outcome {
                report.push("execution", format!("outcome.{outcome}"), n);
            }
            for (i, t) in r.failures.iter().enumerate() {
                report.push(
                    "witnesses",
                    format!("run.{}", i + 1),
                    format!("{} {} {} after {} steps", t.instance, t.strategy, t.outcome, t.steps.len()),
                );
            }
            Ok(Done { success: r.all_succeeded(), stdout: None })
        }
        Command::Demo(args) => {
            let example = bundled::example(&args.example)?;
            let opts = Options {
                cap: args.cap,
                delta_cap: args.delta_cap,
                sim_cap: args.sim_cap,
                trials: args.trials,
                step_cap: args.step_cap,
                timings: cli.timings,
            };
            let run = run_example(example, &opts)?;
            if let (Some(path), Some(policy)) = (&args.policy_out, &run.policy) {
                write(path, &policy.print())?;
            }
            *report = run.report.clone();
            Ok(Done { success: run.success(), stdout: None })
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = std::time::Instant::now();
    let mut report = Report::new();
    let done = match execute(&cli, &mut report) {
        Ok(done) => done,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    report.push("result", "exit", if done.success { 0 } else { 1 });
    if cli.timings && report.section("timings").is_none() {
        report.push("timings", "total-ms", format!("{:.1}", start.elapsed().as_secs_f64() * 1000.0));
    }
    print!("{}", done.stdout.unwrap_or_else(|| report.to_string()));
    if let Some(path) = &cli.report {
        if let Err(e) = write(path, &report.to_string()) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(if done.success { 0 } else { 1 })
}
