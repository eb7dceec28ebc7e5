//! Running abstract policies on concrete instances.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::abstraction::{effects_match, AbstractAction};
use crate::error::{Error, Result};
use crate::features::{BoolValuation, FeatureSet};
use crate::pattern::Binding;
use crate::planner::PolicyTable;
use crate::projection::booleanize_action;
use crate::strips::{Instance, State};

/// How a concrete action is chosen among those an abstract action represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    First,
    Random(u64),
    /// The successor farthest from the goal, by exact concrete distance.
    Adversarial,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::First => f.write_str("first"),
            Strategy::Random(seed) => write!(f, "random:{seed}"),
            Strategy::Adversarial => f.write_str("adversarial"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Strategy::First),
            "adversarial" => Ok(Strategy::Adversarial),
            "random" => Ok(Strategy::Random(0)),
            _ => s
                .strip_prefix("random:")
                .and_then(|n| n.parse().ok())
                .map(Strategy::Random)
                .ok_or_else(|| Error::Invalid(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    GoalReached,
    PolicyUndefined,
    Inapplicable,
    StepCap,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::GoalReached => "goal-reached",
            Outcome::PolicyUndefined => "policy-undefined",
            Outcome::Inapplicable => "inapplicable",
            Outcome::StepCap => "step-cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: State,
    pub valuation: BoolValuation,
    pub abstract_action: String,
    /// Index into the instance's ground actions.
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub instance: String,
    pub strategy: Strategy,
    pub steps: Vec<Step>,
    pub last: State,
    pub last_valuation: BoolValuation,
    pub outcome: Outcome,
    /// Steps whose successor valuation is not an outcome of the boolean
    /// action chosen by the policy.
    pub tracking_violations: Vec<usize>,
}

impl Trajectory {
    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::GoalReached && self.tracking_violations.is_empty()
    }

    pub fn dump(&self, inst: &Instance, f: &FeatureSet) -> String {
        let sig = f.signature();
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "step {i}: {} | {} -> {}\n",
                s.valuation.display(sig),
                s.abstract_action,
                inst.actions()[s.action].label()
            ));
        }
        out.push_str(&format!("outcome: {}\n", self.outcome));
        out
    }
}

/// Ground actions represented by `abs` at `s`, in declaration order.
pub fn instantiate(abs: &AbstractAction, inst: &Instance, s: &State, f: &FeatureSet, b: &Binding) -> Result<Vec<usize>> {
    let before = f.valuation(inst, s, b)?;
    if !abs.applicable(before.to_boolean(f.signature())) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (k, t) in inst.successors(s) {
        let after = f.valuation(inst, &t, b)?;
        if effects_match(abs, f.signature(), &before, &after) {
            out.push(k);
        }
    }
    Ok(out)
}

/// Exact distances to the goal over the reachable states of an instance.
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    dist: std::collections::HashMap<State, usize>,
}

impl DistanceOracle {
    pub fn new(inst: &Instance, cap: usize) -> Self {
        let reach = inst.reachable_states(cap);
        let n = reach.len();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in reach.states.iter().enumerate() {
            for (_, t) in inst.successors(s) {
                if let Some(j) = reach.position(&t) {
                    preds[j].push(i);
                }
            }
        }
        let mut d = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for (i, s) in reach.states.iter().enumerate() {
            if inst.is_goal(s) {
                d[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &preds[j] {
                if d[i] == usize::MAX {
                    d[i] = d[j] + 1;
                    queue.push_back(i);
                }
            }
        }
        DistanceOracle {
            dist: reach.states.into_iter().zip(d).collect(),
        }
    }

    /// `usize::MAX` for states that cannot reach the goal or were not explored.
    pub fn distance(&self, s: &State) -> usize {
        self.dist.get(s).copied().unwrap_or(usize::MAX)
    }
}

/// Everything needed to run one policy on one instance.
pub struct Runner<'a> {
    pub policy: &'a PolicyTable,
    pub actions: &'a [AbstractAction],
    pub features: &'a FeatureSet,
}

impl Runner<'_> {
    pub fn run(
        &self,
        inst: &Instance,
        binding: &Binding,
        strategy: Strategy,
        step_cap: usize,
        oracle: Option<&DistanceOracle>,
    ) -> Result<Trajectory> {
        let mut rng = match strategy {
            Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let owned;
        let oracle = match (strategy, oracle) {
            (Strategy::Adversarial, None) => {
                owned = DistanceOracle::new(inst, crate::abstraction::DEFAULT_CAP);
                Some(&owned)
            }
            (_, o) => o,
        };
        let mut s = inst.init().clone();
        let mut steps = Vec::new();
        let mut tracking_violations = Vec::new();
        let mut v = self.features.boolean_valuation(inst, &s, binding)?;
        let outcome = loop {
            if inst.is_goal(&s) {
                break Outcome::GoalReached;
            }
            if steps.len() >= step_cap {
                break Outcome::StepCap;
            }
            let Some(name) = self.policy.get(v) else {
                break Outcome::PolicyUndefined;
            };
            let abs = self
                .actions
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| Error::Invalid(format!("policy uses unknown action `{name}`")))?;
            let options = instantiate(abs, inst, &s, self.features, binding)?;
            if options.is_empty() {
                break Outcome::Inapplicable;
            }
            let k = match strategy {
                Strategy::First => options[0],
                Strategy::Random(_) => options[rng.as_mut().unwrap().gen_range(0..options.len())],
                Strategy::Adversarial => {
                    let oracle = oracle.unwrap();
                    let mut best = options[0];
                    let mut best_d = None;
                    for &k in &options {
                        let d = oracle.distance(&inst.apply(&s, &inst.actions()[k])?);
                        if best_d.is_none_or(|b| d > b) {
                            best = k;
                            best_d = Some(d);
                        }
                    }
                    best
                }
            };
            let next = inst.apply(&s, &inst.actions()[k])?;
            let next_v = self.features.boolean_valuation(inst, &next, binding)?;
            if !booleanize_action(abs).successors(v).contains(&next_v) {
                tracking_violations.push(steps.len());
            }
            steps.push(Step {
                state: s,
                valuation: v,
                abstract_action: name.to_string(),
                action: k,
            });
            s = next;
            v = next_v;
        };
        Ok(Trajectory {
            instance: inst.name().to_string(),
            strategy,
            steps,
            last: s,
            last_valuation: v,
            outcome,
            tracking_violations,
        })
    }
}

pub fn run_policy(
    policy: &PolicyTable,
    actions: &[AbstractAction],
    inst: &Instance,
    f: &FeatureSet,
    b: &Binding,
    strategy: Strategy,
    step_cap: usize,
) -> Result<Trajectory> {
    if step_cap == 0 {
        return Err(Error::InvalidParams("step cap must be at least 1".into()));
    }
    Runner {
        policy,
        actions,
        features: f,
    }
    .run(inst, b, strategy, step_cap, None)
}

/// Ten times the reachable-state count, probing at most `probe` states;
/// ten times `cap` when the probe is truncated.
pub fn default_step_cap(inst: &Instance, probe: usize, cap: usize) -> usize {
    let r = inst.reachable_states(probe.min(cap));
    if r.truncated {
        10 * cap
    } else {
        10 * r.len()
    }
}

/// States probed when estimating default step caps.
pub const STEP_CAP_PROBE: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyTally {
    pub runs: usize,
    pub succeeded: usize,
}

/// Aggregate of many policy runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionReport {
    pub instances: usize,
    pub runs: usize,
    pub succeeded: usize,
    pub tracking_violations: usize,
    pub max_steps: usize,
    pub by_strategy: BTreeMap<String, StrategyTally>,
    pub by_outcome: BTreeMap<String, usize>,
    /// The first failing trajectories, in family order.
    pub failures: Vec<Trajectory>,
}

const KEPT_FAILURES: usize = 8;

impl ExecutionReport {
    fn empty() -> Self {
        ExecutionReport {
            instances: 0,
            runs: 0,
            succeeded: 0,
            tracking_violations: 0,
            max_steps: 0,
            by_strategy: BTreeMap::new(),
            by_outcome: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn add(&mut self, t: Trajectory) {
        self.runs += 1;
        self.max_steps = self.max_steps.max(t.steps.len());
        self.tracking_violations += t.tracking_violations.len();
        *self.by_outcome.entry(t.outcome.to_string()).or_default() += 1;
        let key = match t.strategy {
            Strategy::Random(_) => "random".to_string(),
            s => s.to_string(),
        };
        let tally = self.by_strategy.entry(key).or_insert(StrategyTally { runs: 0, succeeded: 0 });
        tally.runs += 1;
        if t.succeeded() {
            tally.succeeded += 1;
            self.succeeded += 1;
        } else if self.failures.len() < KEPT_FAILURES {
            self.failures.push(t);
        }
    }

    pub fn failed(&self) -> usize {
        self.runs - self.succeeded
    }

    pub fn all_succeeded(&self) -> bool {
        self.failed() == 0
    }
}

/// Seed for the `trial`-th random run on the `index`-th instance.
fn run_seed(seed: u64, trial: usize, index: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((trial as u64) << 32)
        .wrapping_add(index as u64)
}

/// Runs the policy on every instance with every strategy; random strategies
/// run `trials` times with derived seeds. `step_cap` of `None` uses
/// [`default_step_cap`].
pub fn verify_generalized(
    policy: &PolicyTable,
    actions: &[AbstractAction],
    family: &[Instance],
    f: &FeatureSet,
    strategies: &[Strategy],
    trials: usize,
    step_cap: Option<usize>,
) -> Result<ExecutionReport> {
    let runner = Runner {
        policy,
        actions,
        features: f,
    };
    let per_instance: Vec<Result<Vec<Trajectory>>> = family
        .par_iter()
        .enumerate()
        .map(|(index, inst)| {
            let b = f.bind(inst)?;
            let cap = step_cap.unwrap_or_else(|| default_step_cap(inst, STEP_CAP_PROBE, crate::abstraction::DEFAULT_CAP));
            let oracle = strategies
                .contains(&Strategy::Adversarial)
                .then(|| DistanceOracle::new(inst, crate::abstraction::DEFAULT_CAP));
            let mut out = Vec::new();
            for &strategy in strategies {
                match strategy {
                    Strategy::Random(seed) => {
                        for trial in 0..trials.max(1) {
                            let s = Strategy::Random(run_seed(seed, trial, index));
                            out.push(runner.run(inst, &b, s, cap, None)?);
                        }
                    }
                    _ => out.push(runner.run(inst, &b, strategy, cap, oracle.as_ref())?),
                }
            }
            Ok(out)
        })
        .collect();
    let mut report = ExecutionReport::empty();
    for r in per_instance {
        report.instances += 1;
        for t in r? {
            report.add(t);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::parse_actions;
    use crate::generators::clear_instance;

    const FEATURES: &str = "goal-pattern clear($x)\nfeature H bool atom(holding(_))\nfeature nx num count-above($x)\n";
    const ACTIONS: &str = "abstract pick-above-x pre: !H nx>0 eff: H nx--\nabstract put-aside pre: H eff: !H\n";
    const POLICY: &str = "policy qclear\nbool H\nnum nx\nwhen !H nx>0 do pick-above-x\nwhen H nx>0 do put-aside\n";

    fn setup() -> (FeatureSet, Vec<AbstractAction>, PolicyTable) {
        let f = FeatureSet::parse(FEATURES).unwrap();
        let a = parse_actions(ACTIONS, f.signature()).unwrap();
        (f, a, PolicyTable::parse(POLICY).unwrap())
    }

    #[test]
    fn instantiate_put_aside() {
        let (f, a, _) = setup();
        // a-b-c tower, d on the table; after Unstack(c,b) the arm holds c.
        let inst = clear_instance(4, &vec![vec![0, 1, 2], vec![3]], 0).unwrap();
        let b = f.bind(&inst).unwrap();
        let un = inst.actions().iter().position(|g| g.label() == "Unstack(c,b)").unwrap();
        let s = inst.apply(inst.init(), &inst.actions()[un]).unwrap();
        let labels: Vec<String> = instantiate(&a[1], &inst, &s, &f, &b)
            .unwrap()
            .into_iter()
            .map(|k| inst.actions()[k].label())
            .collect();
        assert_eq!(labels, vec!["Putdown(c)", "Stack(c,d)"]);
        assert!(instantiate(&a[0], &inst, &s, &f, &b).unwrap().is_empty());
        let top = instantiate(&a[0], &inst, inst.init(), &f, &b).unwrap();
        assert_eq!(top, vec![un]);
    }

    #[test]
    fn three_above_takes_five_steps() {
        let (f, a, p) = setup();
        let inst = clear_instance(5, &vec![vec![0, 1, 2, 3], vec![4]], 0).unwrap();
        let b = f.bind(&inst).unwrap();
        let t = run_policy(&p, &a, &inst, &f, &b, Strategy::First, 100).unwrap();
        assert_eq!(t.outcome, Outcome::GoalReached);
        // pick, put, pick, put, pick: x is clear once the last block is held.
        assert_eq!(t.steps.len(), 2 * 3 - 1);
        assert!(t.tracking_violations.is_empty());
        let dump = t.dump(&inst, &f);
        assert!(dump.starts_with("step 0: {!H, nx>0} | pick-above-x -> Unstack(d,c)\n"), "{dump}");
        assert!(dump.ends_with("outcome: goal-reached\n"));
        assert_eq!(run_policy(&p, &a, &inst, &f, &b, Strategy::First, 100).unwrap(), t);
    }

    #[test]
    fn goal_at_start_is_empty_trajectory() {
        let (f, a, p) = setup();
        let inst = clear_instance(2, &vec![vec![0, 1]], 1).unwrap();
        let b = f.bind(&inst).unwrap();
        let t = run_policy(&p, &a, &inst, &f, &b, Strategy::Adversarial, 10).unwrap();
        assert_eq!(t.outcome, Outcome::GoalReached);
        assert!(t.steps.is_empty());
    }

    #[test]
    fn unsound_action_shows_up_as_inapplicable() {
        let f = FeatureSet::parse(FEATURES).unwrap();
        // Without nx>0 the action is applied where nothing is above x.
        let a = parse_actions("abstract pick-above-x pre: !H eff: H nx--\nabstract put-aside pre: H eff: !H\n", f.signature()).unwrap();
        let p = PolicyTable::parse("policy q\nbool H\nnum nx\nwhen !H nx=0 do pick-above-x\n").unwrap();
        let inst = crate::generators::blocksworld("u", 2, &vec![vec![0], vec![1]])
            .unwrap()
            .goal([crate::strips::Atom::new("holding", ["a"])])
            .goal_count(crate::pattern::AtomPattern::parse("clear(_)").unwrap(), 0)
            .param("x", "a")
            .build()
            .unwrap();
        let f2 = FeatureSet::new(f.features().cloned().collect(), Vec::new()).unwrap();
        let report = verify_generalized(&p, &a, &[inst], &f2, &[Strategy::First], 1, Some(10)).unwrap();
        assert_eq!(report.failed(), 1);
        assert_eq!(report.failures[0].outcome, Outcome::Inapplicable);
    }

    #[test]
    fn strategies_parse() {
        assert_eq!("random:7".parse::<Strategy>().unwrap(), Strategy::Random(7));
        assert_eq!("adversarial".parse::<Strategy>().unwrap(), Strategy::Adversarial);
        assert!("best".parse::<Strategy>().is_err());
        assert_eq!(Strategy::Random(3).to_string(), "random:3");
    }

    #[test]
    fn adversarial_prefers_longest_detour() {
        let (f, a, p) = setup();
        let inst = clear_instance(4, &vec![vec![0, 1], vec![2], vec![3]], 0).unwrap();
        let b = f.bind(&inst).unwrap();
        let t = run_policy(&p, &a, &inst, &f, &b, Strategy::Adversarial, 50).unwrap();
        assert_eq!(t.outcome, Outcome::GoalReached);
        // b is unstacked, so x is clear right away.
        assert_eq!(t.steps.len(), 1);
        let r = verify_generalized(&p, &a, &[inst], &f, &[Strategy::First, Strategy::Random(1), Strategy::Adversarial], 3, None).unwrap();
        assert_eq!(r.runs, 5);
        assert!(r.all_succeeded());
    }
}
