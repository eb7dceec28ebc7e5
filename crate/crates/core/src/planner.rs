//! Strong-cyclic policy synthesis over boolean FOND problems, termination
//! checking, and qualitative solutions.
//!
//! Policies are stored as
//!
//! ```text
//! policy qclear
//! bool H
//! num nx
//! stat states 4
//! when !H nx>0 do pick-above-x
//! when H nx>0 do put-aside
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::abstraction::Literal;
use crate::error::{Error, Result};
use crate::features::{BoolValuation, FeatureValuation, Signature};
use crate::projection::{parse_header, print_header, qnp_successors, FondProblem, QnpProblem};
use crate::syntax;

/// Largest proposition count the explicit planner accepts.
pub const MAX_PROPS: usize = 20;

/// Partial map from boolean valuations to action names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTable {
    pub name: String,
    pub sig: Signature,
    pub entries: BTreeMap<u64, String>,
    pub stats: BTreeMap<String, String>,
}

impl PolicyTable {
    pub fn new(name: impl Into<String>, sig: Signature) -> Self {
        PolicyTable {
            name: name.into(),
            sig,
            entries: BTreeMap::new(),
            stats: BTreeMap::new(),
        }
    }

    pub fn get(&self, v: BoolValuation) -> Option<&str> {
        self.entries.get(&v.0).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BoolValuation, &str)> {
        self.entries.iter().map(|(&v, a)| (BoolValuation(v), a.as_str()))
    }

    pub fn rule_text(&self, v: BoolValuation) -> String {
        (0..self.sig.len())
            .map(|var| Literal::new(var, v.get(var)).display(&self.sig))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The rules only, without name, signature or statistics.
    pub fn rules_text(&self) -> String {
        self.iter()
            .map(|(v, a)| format!("when {} do {a}\n", self.rule_text(v)))
            .collect()
    }

    pub fn print(&self) -> String {
        let mut out = String::new();
        print_header(&mut out, "policy", &self.name, &self.sig);
        for (k, v) in &self.stats {
            out.push_str(&format!("stat {k} {v}\n"));
        }
        out.push_str(&self.rules_text());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines = syntax::lines(text)?;
        let (head, rest) = parse_header(&lines, "policy")?;
        let mut p = PolicyTable::new(head.name, head.sig);
        for line in rest {
            let toks = line.rest();
            match line.keyword() {
                "stat" => {
                    let [k, v] = toks else {
                        return Err(line.error_at_end("expected `stat <key> <value>`"));
                    };
                    p.stats.insert(k.text.to_string(), v.text.to_string());
                }
                "when" => {
                    let Some(d) = toks.iter().position(|t| t.text == "do") else {
                        return Err(line.error_at_end("expected `do <action>`"));
                    };
                    let [action] = &toks[d + 1..] else {
                        return Err(line.error_at_end("expected one action after `do`"));
                    };
                    let mut v = BoolValuation(0);
                    let mut seen = BTreeSet::new();
                    for t in &toks[..d] {
                        let l = Literal::parse(t.text, &p.sig)?;
                        if !seen.insert(l.var) {
                            return Err(line.error(t, "variable assigned twice"));
                        }
                        v = v.with(l.var, l.holds);
                    }
                    if seen.len() != p.sig.len() {
                        return Err(line.error(&line.tokens[0], "rule must assign every variable"));
                    }
                    if p.entries.insert(v.0, action.text.to_string()).is_some() {
                        return Err(line.error(&line.tokens[0], "duplicate rule"));
                    }
                }
                other => return Err(line.error(&line.tokens[0], format!("unexpected `{other}`"))),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for PolicyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rules_text())
    }
}

/// The planner could not find a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unsolvable {
    pub reason: String,
    /// Initial states from which the goal cannot be guaranteed.
    pub states: Vec<BoolValuation>,
}

impl fmt::Display for Unsolvable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

/// (state, action index) pairs excluded from the search.
pub type Forbidden = BTreeSet<(u64, usize)>;

fn check_size(fond: &FondProblem) -> Result<()> {
    if fond.sig.len() > MAX_PROPS {
        return Err(Error::Invalid(format!(
            "{} propositions exceed the planner limit of {MAX_PROPS}",
            fond.sig.len()
        )));
    }
    Ok(())
}

pub fn strong_cyclic_solve(fond: &FondProblem) -> Result<std::result::Result<PolicyTable, Unsolvable>> {
    strong_cyclic_solve_with(fond, &Forbidden::new())
}

/// Explicit fixpoint over all 2^|props| states. States that cannot reach the
/// goal with actions whose outcomes all stay inside the candidate set are
/// removed until nothing changes; the policy then takes, in every state, the
/// first declared action that moves one layer closer to the goal.
pub fn strong_cyclic_solve_with(
    fond: &FondProblem,
    forbidden: &Forbidden,
) -> Result<std::result::Result<PolicyTable, Unsolvable>> {
    check_size(fond)?;
    let n_states = 1usize << fond.sig.len();
    let goal: Vec<bool> = (0..n_states).map(|s| fond.goal.satisfied_by(BoolValuation(s as u64))).collect();

    // Applicable, non-forbidden actions and their successors per state.
    let options: Vec<Vec<(usize, Vec<u64>)>> = (0..n_states)
        .map(|s| {
            let v = BoolValuation(s as u64);
            if goal[s] {
                return Vec::new();
            }
            fond.actions
                .iter()
                .enumerate()
                .filter(|(k, a)| a.applicable(v) && !forbidden.contains(&(s as u64, *k)))
                .map(|(k, a)| (k, a.successors(v).into_iter().map(|t| t.0).collect()))
                .collect()
        })
        .collect();

    let mut good = vec![true; n_states];
    let mut dist = vec![usize::MAX; n_states];
    let mut iterations = 0;
    loop {
        iterations += 1;
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        for s in 0..n_states {
            if goal[s] && good[s] {
                dist[s] = 0;
            }
        }
        let safe = |s: usize, succ: &[u64]| good[s] && succ.iter().all(|&t| good[t as usize]);
        let mut layer = 0;
        loop {
            layer += 1;
            let next: Vec<usize> = (0..n_states)
                .filter(|&s| dist[s] == usize::MAX)
                .filter(|&s| {
                    options[s]
                        .iter()
                        .any(|(_, succ)| safe(s, succ) && succ.iter().any(|&t| dist[t as usize] < layer))
                })
                .collect();
            if next.is_empty() {
                break;
            }
            for s in next {
                dist[s] = layer;
            }
        }
        let reached: Vec<bool> = dist.iter().map(|&d| d != usize::MAX).collect();
        if reached == good {
            break;
        }
        good = reached;
    }

    let inits = fond.initial_states();
    let bad: Vec<BoolValuation> = inits.iter().copied().filter(|v| !good[v.0 as usize]).collect();
    if !bad.is_empty() {
        return Ok(Err(Unsolvable {
            reason: format!("{} initial state(s) cannot reach the goal", bad.len()),
            states: bad,
        }));
    }

    let choice = |s: usize| -> Option<usize> {
        options[s]
            .iter()
            .find(|(_, succ)| {
                succ.iter().all(|&t| good[t as usize]) && succ.iter().any(|&t| dist[t as usize] < dist[s])
            })
            .map(|(k, _)| *k)
    };

    let mut policy = PolicyTable::new(fond.name.clone(), fond.sig.clone());
    let mut seen = vec![false; n_states];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for v in &inits {
        let s = v.0 as usize;
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if goal[s] {
            continue;
        }
        let k = choice(s).expect("every good non-goal state has a progressing action");
        policy.entries.insert(s as u64, fond.actions[k].name.clone());
        for t in fond.actions[k].successors(BoolValuation(s as u64)) {
            let t = t.0 as usize;
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    policy.stats.insert("states".into(), n_states.to_string());
    policy.stats.insert("fixpoint-iterations".into(), iterations.to_string());
    policy.stats.insert("reachable".into(), seen.iter().filter(|&&b| b).count().to_string());
    Ok(Ok(policy))
}

/// Edge of a policy graph: the chosen action's `outcome` leads `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyEdge {
    pub from: usize,
    pub action: usize,
    pub outcome: usize,
    pub to: usize,
    pub inc: Vec<usize>,
    pub dec: Vec<usize>,
}

/// States reachable under a policy and the transitions between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyGraph {
    pub nodes: Vec<BoolValuation>,
    pub edges: Vec<PolicyEdge>,
    pub inits: Vec<usize>,
}

impl PolicyGraph {
    pub fn build(policy: &PolicyTable, fond: &FondProblem) -> Result<Self> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut queue = VecDeque::new();
        let mut inits = Vec::new();
        let mut intern = |v: BoolValuation, nodes: &mut Vec<BoolValuation>, queue: &mut VecDeque<usize>| {
            *index.entry(v.0).or_insert_with(|| {
                nodes.push(v);
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            })
        };
        for v in fond.initial_states() {
            let i = intern(v, &mut nodes, &mut queue);
            inits.push(i);
        }
        while let Some(i) = queue.pop_front() {
            let v = nodes[i];
            if fond.goal.satisfied_by(v) {
                continue;
            }
            let Some(name) = policy.get(v) else { continue };
            let k = fond
                .action(name)
                .ok_or_else(|| Error::Invalid(format!("policy uses unknown action `{name}`")))?;
            let a = &fond.actions[k];
            if !a.applicable(v) {
                return Err(Error::Invalid(format!("{name} is not applicable in {}", policy.rule_text(v))));
            }
            for (o, t) in a.successors(v).into_iter().enumerate() {
                let j = intern(t, &mut nodes, &mut queue);
                edges.push(PolicyEdge {
                    from: i,
                    action: k,
                    outcome: o,
                    to: j,
                    inc: a.inc.clone(),
                    dec: a.dec.clone(),
                });
            }
        }
        Ok(PolicyGraph { nodes, edges, inits })
    }
}

/// One round of the sieve: decrement edges of `var` removed from a component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SieveStep {
    pub var: usize,
    pub component: Vec<BoolValuation>,
    pub removed: usize,
}

/// A finite prefix from an initial state followed by a closed walk. Each
/// element is a state and the action taken there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<(BoolValuation, String)>,
    pub cycle: Vec<(BoolValuation, String)>,
}

impl Lasso {
    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Lasso, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let step = |(v, a): &(BoolValuation, String)| format!("{} {a}", v.display(self.1));
                let prefix: Vec<String> = self.0.prefix.iter().map(step).collect();
                let cycle: Vec<String> = self.0.cycle.iter().map(step).collect();
                write!(f, "prefix [{}] cycle [{}]", prefix.join(" ; "), cycle.join(" ; "))
            }
        }
        D(self, sig)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    Terminating { certificate: Vec<SieveStep> },
    Nonterminating { lasso: Lasso, component: Vec<BoolValuation> },
}

impl Termination {
    pub fn is_terminating(&self) -> bool {
        matches!(self, Termination::Terminating { .. })
    }
}

/// SCC sieve: in each cyclic component, delete the decrement edges of some
/// variable that is never incremented there; terminating once acyclic.
pub fn check_termination(policy: &PolicyTable, fond: &FondProblem) -> Result<Termination> {
    let g = PolicyGraph::build(policy, fond)?;
    let mut active = vec![true; g.edges.len()];
    let mut certificate = Vec::new();
    loop {
        let mut dg: DiGraph<(), usize> = DiGraph::with_capacity(g.nodes.len(), g.edges.len());
        for _ in &g.nodes {
            dg.add_node(());
        }
        for (e, edge) in g.edges.iter().enumerate() {
            if active[e] {
                dg.add_edge(NodeIndex::new(edge.from), NodeIndex::new(edge.to), e);
            }
        }
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&dg)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                c.sort_unstable();
                c
            })
            .collect();
        comps.sort();
        let mut changed = false;
        for comp in comps {
            let member: BTreeSet<usize> = comp.iter().copied().collect();
            let inside: Vec<usize> = (0..g.edges.len())
                .filter(|&e| active[e] && member.contains(&g.edges[e].from) && member.contains(&g.edges[e].to))
                .collect();
            if inside.is_empty() {
                continue;
            }
            let incremented: BTreeSet<usize> = inside.iter().flat_map(|&e| g.edges[e].inc.iter().copied()).collect();
            let candidate = fond
                .sig
                .numericals()
                .find(|n| !incremented.contains(n) && inside.iter().any(|&e| g.edges[e].dec.contains(n)));
            match candidate {
                Some(n) => {
                    let mut removed = 0;
                    for &e in &inside {
                        if g.edges[e].dec.contains(&n) {
                            active[e] = false;
                            removed += 1;
                        }
                    }
                    certificate.push(SieveStep {
                        var: n,
                        component: comp.iter().map(|&i| g.nodes[i]).collect(),
                        removed,
                    });
                    changed = true;
                }
                None => {
                    let lasso = build_lasso(&g, &inside, &comp, fond);
                    return Ok(Termination::Nonterminating {
                        lasso,
                        component: comp.iter().map(|&i| g.nodes[i]).collect(),
                    });
                }
            }
        }
        if !changed {
            return Ok(Termination::Terminating { certificate });
        }
    }
}

/// Shortest path of edge indices from `src` to `dst` using `allowed` edges.
fn path(g: &PolicyGraph, allowed: &[usize], src: usize, dst: usize) -> Option<Vec<usize>> {
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([src]);
    let mut seen = BTreeSet::from([src]);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            let mut out = Vec::new();
            let mut cur = dst;
            while cur != src {
                let e = prev[&cur];
                out.push(e);
                cur = g.edges[e].from;
            }
            out.reverse();
            return Some(out);
        }
        for &e in allowed {
            if g.edges[e].from == u && seen.insert(g.edges[e].to) {
                prev.insert(g.edges[e].to, e);
                queue.push_back(g.edges[e].to);
            }
        }
    }
    None
}

/// Prefix from an initial state to the component, then a closed walk that
/// uses every remaining edge of the component, so every variable decremented
/// on the cycle is also incremented on it.
fn build_lasso(g: &PolicyGraph, inside: &[usize], comp: &[usize], fond: &FondProblem) -> Lasso {
    let all: Vec<usize> = (0..g.edges.len()).collect();
    let entry = comp[0];
    let prefix_edges = g
        .inits
        .iter()
        .filter_map(|&i| path(g, &all, i, entry))
        .min_by_key(Vec::len)
        .unwrap_or_default();
    let mut walk = Vec::new();
    let mut at = entry;
    for &e in inside {
        if walk.contains(&e) {
            continue;
        }
        walk.extend(path(g, inside, at, g.edges[e].from).unwrap_or_default());
        walk.push(e);
        at = g.edges[e].to;
    }
    walk.extend(path(g, inside, at, entry).unwrap_or_default());
    let label = |e: &usize| (g.nodes[g.edges[*e].from], fond.actions[g.edges[*e].action].name.clone());
    Lasso {
        prefix: prefix_edges.iter().map(label).collect(),
        cycle: walk.iter().map(label).collect(),
    }
}

/// A terminating strong-cyclic policy with its sieve certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualitativeSolution {
    pub policy: PolicyTable,
    pub certificate: Vec<SieveStep>,
    pub rounds: usize,
    pub forbidden: Forbidden,
}

/// Repeatedly solves, checks termination and forbids one (state, action)
/// pair of the offending cycle until the policy terminates.
pub fn qualitative_solve(fond: &FondProblem) -> Result<std::result::Result<QualitativeSolution, Unsolvable>> {
    check_size(fond)?;
    let budget = (1usize << fond.sig.len()) * fond.actions.len().max(1);
    let mut forbidden = Forbidden::new();
    for round in 1..=budget {
        let mut policy = match strong_cyclic_solve_with(fond, &forbidden)? {
            Ok(p) => p,
            Err(u) => return Ok(Err(u)),
        };
        match check_termination(&policy, fond)? {
            Termination::Terminating { certificate } => {
                policy.stats.insert("qualitative-rounds".into(), round.to_string());
                policy.stats.insert("forbidden-pairs".into(), forbidden.len().to_string());
                return Ok(Ok(QualitativeSolution {
                    policy,
                    certificate,
                    rounds: round,
                    forbidden,
                }));
            }
            Termination::Nonterminating { lasso, .. } => {
                let cycle_decs: BTreeSet<usize> = lasso
                    .cycle
                    .iter()
                    .flat_map(|(_, a)| fond.actions[fond.action(a).unwrap()].dec.iter().copied())
                    .collect();
                let pick = lasso
                    .cycle
                    .iter()
                    .find(|(_, a)| fond.actions[fond.action(a).unwrap()].inc.iter().any(|n| cycle_decs.contains(n)))
                    .or_else(|| lasso.cycle.first())
                    .expect("a nonterminating policy has a nonempty cycle");
                forbidden.insert((pick.0 .0, fond.action(&pick.1).unwrap()));
            }
        }
    }
    Ok(Err(Unsolvable {
        reason: format!("no terminating policy within {budget} rounds"),
        states: Vec::new(),
    }))
}

/// Outcome of a bounded numerical simulation of a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub explored: usize,
    pub initial: usize,
    /// Non-goal states where the policy is undefined or inapplicable.
    pub stuck: Vec<FeatureValuation>,
    /// A cycle among non-goal states, if any.
    pub cycle: Option<Vec<FeatureValuation>>,
    /// Longest run to the goal, when there is no cycle.
    pub longest: usize,
    pub bound: usize,
}

impl Simulation {
    pub fn all_runs_reach_goal(&self) -> bool {
        self.stuck.is_empty() && self.cycle.is_none() && self.longest <= self.bound
    }
}

/// Explores every run of `policy` on the numerical problem from initial
/// valuations with counters in 1..=cap, steps of 1..=delta_cap, and counters
/// clamped to `cap`.
pub fn simulate(policy: &PolicyTable, q: &QnpProblem, cap: u64, delta_cap: u64) -> Result<Simulation> {
    let sig = &q.sig;
    let nums: Vec<usize> = sig.numericals().collect();
    let mut starts = Vec::new();
    for b in 0..1u64 << sig.len() {
        let v = BoolValuation(b);
        if !q.init.satisfied_by(v) {
            continue;
        }
        let mut vals: Vec<Vec<u64>> = vec![(0..sig.len()).map(|i| u64::from(v.get(i) && !sig.is_numeric(i))).collect()];
        for &n in &nums {
            let range: Vec<u64> = if v.get(n) { vec![0] } else { (1..=cap).collect() };
            vals = vals
                .into_iter()
                .flat_map(|p| {
                    range.iter().map(move |&x| {
                        let mut p = p.clone();
                        p[n] = x;
                        p
                    })
                })
                .collect();
        }
        starts.extend(vals.into_iter().map(FeatureValuation));
    }

    let mut index: HashMap<FeatureValuation, usize> = HashMap::new();
    let mut nodes: Vec<FeatureValuation> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut is_goal: Vec<bool> = Vec::new();
    let mut stuck = Vec::new();
    let mut queue = VecDeque::new();
    for s in &starts {
        if !index.contains_key(s) {
            index.insert(s.clone(), nodes.len());
            nodes.push(s.clone());
            queue.push_back(nodes.len() - 1);
        }
    }
    while let Some(i) = queue.pop_front() {
        let s = nodes[i].clone();
        let v = s.to_boolean(sig);
        let goal = q.goal.satisfied_by(v);
        if succ.len() <= i {
            succ.resize(i + 1, Vec::new());
            is_goal.resize(i + 1, false);
        }
        is_goal[i] = goal;
        if goal {
            continue;
        }
        let action = policy.get(v).and_then(|name| q.actions.iter().find(|a| a.name == name));
        let Some(a) = action.filter(|a| a.applicable(v)) else {
            stuck.push(s);
            continue;
        };
        let mut out = Vec::new();
        for mut t in qnp_successors(q, &s, a, delta_cap)? {
            for &n in &nums {
                t.0[n] = t.0[n].min(cap);
            }
            let j = match index.get(&t) {
                Some(&j) => j,
                None => {
                    index.insert(t.clone(), nodes.len());
                    nodes.push(t);
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            out.push(j);
        }
        out.sort_unstable();
        out.dedup();
        succ[i] = out;
    }
    succ.resize(nodes.len(), Vec::new());
    is_goal.resize(nodes.len(), false);

    // Iterative DFS: cycle detection and longest path to a sink.
    let mut color = vec![0u8; nodes.len()];
    let mut depth = vec![0usize; nodes.len()];
    let mut parent = vec![usize::MAX; nodes.len()];
    let mut cycle = None;
    'outer: for root in 0..nodes.len() {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&w) = succ[u].get(*next) {
                *next += 1;
                match color[w] {
                    0 => {
                        color[w] = 1;
                        parent[w] = u;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut c = vec![nodes[w].clone()];
                        let mut x = u;
                        while x != w {
                            c.push(nodes[x].clone());
                            x = parent[x];
                        }
                        c[1..].reverse();
                        cycle = Some(c);
                        break 'outer;
                    }
                    _ => {}
                }
            } else {
                color[u] = 2;
                depth[u] = succ[u].iter().map(|&w| depth[w] + 1).max().unwrap_or(0);
                stack.pop();
            }
        }
    }
    let longest = if cycle.is_some() {
        0
    } else {
        starts.iter().map(|s| depth[index[s]]).max().unwrap_or(0)
    };
    let bound = (1usize << sig.len()) * (cap as usize + 1) * nums.len().max(1);
    Ok(Simulation {
        explored: nodes.len(),
        initial: starts.len(),
        stuck,
        cycle,
        longest,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{booleanize, compile_dnf, parse_fond, parse_qnp};

    const QCLEAR: &str = "\
qnp qclear
bool H
num nx
init !H nx>0
goal nx=0
abstract pick-above-x pre: !H nx>0 eff: H nx--
abstract put-aside pre: H eff: !H
";

    const LOOPING: &str = "\
qnp loop
bool p
num n
init !p n>0
goal n=0
abstract a pre: !p n>0 eff: p n--
abstract b pre: p eff: !p n++
";

    #[test]
    fn qclear_policy() {
        let q = parse_qnp(QCLEAR).unwrap();
        let f = booleanize(&q);
        let p = strong_cyclic_solve(&f).unwrap().unwrap();
        assert_eq!(
            p.rules_text(),
            "when !H nx>0 do pick-above-x\nwhen H nx>0 do put-aside\n"
        );
        match check_termination(&p, &f).unwrap() {
            Termination::Terminating { certificate } => {
                assert_eq!(certificate.len(), 1);
                assert_eq!(certificate[0].var, 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(PolicyTable::parse(&p.print()).unwrap(), p);
    }

    #[test]
    fn goal_at_init_gives_empty_policy() {
        let f = parse_fond("fond e\nbool p\ninit p\ngoal p\naction a pre: p effect: !p\n").unwrap();
        let p = strong_cyclic_solve(&f).unwrap().unwrap();
        assert!(p.is_empty());
        assert!(check_termination(&p, &f).unwrap().is_terminating());
    }

    #[test]
    fn unsolvable_reports_initial_states() {
        let f = parse_fond("fond u\nbool p q\ninit !p !q\ngoal q\naction a pre: !p effect: p\n").unwrap();
        let u = strong_cyclic_solve(&f).unwrap().unwrap_err();
        assert_eq!(u.states, vec![BoolValuation(0)]);
    }

    #[test]
    fn dead_end_outcome_is_avoided() {
        // `risky` may fall into the dead end `d`; `safe` takes two steps.
        let text = "\
fond r
bool g d m
init !g !d !m
goal g
action risky pre: !g !d !m effect: g | d
action safe pre: !g !d !m effect: m
action finish pre: m !g effect: g
";
        let f = parse_fond(text).unwrap();
        let p = strong_cyclic_solve(&f).unwrap().unwrap();
        assert_eq!(p.get(BoolValuation(0)), Some("safe"));
    }

    #[test]
    fn inc_dec_cycle_is_nonterminating() {
        let q = parse_qnp(LOOPING).unwrap();
        let f = booleanize(&q);
        let p = strong_cyclic_solve(&f).unwrap().unwrap();
        match check_termination(&p, &f).unwrap() {
            Termination::Nonterminating { lasso, .. } => {
                let actions: BTreeSet<&str> = lasso.cycle.iter().map(|(_, a)| a.as_str()).collect();
                assert_eq!(actions, BTreeSet::from(["a", "b"]));
                assert!(lasso.prefix.is_empty());
                assert_eq!(lasso.cycle[0].0, BoolValuation(0));
            }
            other => panic!("{other:?}"),
        }
        assert!(qualitative_solve(&f).unwrap().is_err());
        let sim = simulate(&p, &q, 10, 3).unwrap();
        assert!(sim.cycle.is_some());
    }

    #[test]
    fn acyclic_policy_has_empty_certificate() {
        let f = parse_fond("fond a\nbool p q\ninit !p !q\ngoal q\naction a pre: !p effect: p\naction b pre: p effect: q\n").unwrap();
        let p = strong_cyclic_solve(&f).unwrap().unwrap();
        assert_eq!(
            check_termination(&p, &f).unwrap(),
            Termination::Terminating { certificate: Vec::new() }
        );
    }

    #[test]
    fn compiled_goal_preserves_solvability() {
        let text = "fond g\nbool p q r\ninit !p !q !r\ngoal p | q\naction a pre: !r effect: r\naction b pre: r effect: q\n";
        let f = parse_fond(text).unwrap();
        let c = compile_dnf(&f).unwrap();
        assert!(strong_cyclic_solve(&f).unwrap().is_ok());
        assert!(strong_cyclic_solve(&c).unwrap().is_ok());
        let dead = parse_fond("fond d\nbool p q r\ninit !p !q !r\ngoal p | q\naction a pre: !r effect: r\n").unwrap();
        assert!(strong_cyclic_solve(&dead).unwrap().is_err());
        assert!(strong_cyclic_solve(&compile_dnf(&dead).unwrap()).unwrap().is_err());
    }

    #[test]
    fn qclear_simulation_reaches_goal() {
        let q = parse_qnp(QCLEAR).unwrap();
        let p = strong_cyclic_solve(&booleanize(&q)).unwrap().unwrap();
        let sim = simulate(&p, &q, 10, 3).unwrap();
        assert!(sim.all_runs_reach_goal(), "{sim:?}");
        assert_eq!(sim.initial, 10);
        // Ten blocks above x, one block per pick/put pair.
        assert_eq!(sim.longest, 19);
    }

    #[test]
    fn policy_parse_rejects_partial_rules() {
        let text = "policy p\nbool H\nnum nx\nwhen H do a\n";
        assert!(PolicyTable::parse(text).is_err());
    }
}
