//! Text format for instances.
//!
//! ```text
//! instance bw3
//! domain blocksworld
//! objects a b c
//! init on(b,a) on(c,b) clear(c) ontable(a) armempty
//! goal clear(a)
//! schema Pickup(x) pre: clear(x) ontable(x) armempty add: holding(x) del: clear(x) ontable(x) armempty
//! action Noop() pre: add: del:
//! ```
//!
//! Optional lines: `predicates on/2 clear/1`, `goal-count <pattern> <n>`
//! (exact number of matching atoms in goal states) and `param <x> <object>`
//! (explicit goal-parameter binding). Schema parameters are grounded over
//! pairwise-distinct declared objects.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{ActionSpec, Atom, Instance, InstanceBuilder};
use crate::error::{Error, Result};
use crate::pattern::AtomPattern;
use crate::syntax::{self, is_symbol, split_call, Line, Token};

struct Located<T> {
    value: T,
    line: usize,
    column: usize,
}

enum ActionLine {
    Ground(Located<ActionSpec>),
    Schema(Located<ActionSpec>),
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let lines = syntax::lines(text)?;
    let mut name = String::new();
    let mut domain = String::new();
    let mut objects: Vec<String> = Vec::new();
    let mut builder = InstanceBuilder::default();
    let mut located_atoms: Vec<Located<Atom>> = Vec::new();
    let mut init = Vec::new();
    let mut goal = Vec::new();
    let mut action_lines = Vec::new();
    let mut params = Vec::new();

    for line in &lines {
        match line.keyword() {
            "instance" => name = single_symbol(line)?.to_string(),
            "domain" => domain = single_symbol(line)?.to_string(),
            "objects" => {
                for tok in line.rest() {
                    if !is_symbol(tok.text) {
                        return Err(line.error(tok, format!("invalid object name `{}`", tok.text)));
                    }
                    objects.push(tok.text.to_string());
                }
            }
            "predicates" => {
                for tok in line.rest() {
                    let (pred, arity) = tok
                        .text
                        .split_once('/')
                        .and_then(|(p, n)| Some((p, n.parse::<usize>().ok()?)))
                        .ok_or_else(|| line.error(tok, "expected `name/arity`"))?;
                    builder = builder.predicate(pred, arity);
                }
            }
            "init" => {
                for tok in line.rest() {
                    let atom = parse_atom(line, tok)?;
                    located_atoms.push(locate(line, tok, atom.clone()));
                    init.push(atom);
                }
            }
            "goal" => {
                for tok in line.rest() {
                    let atom = parse_atom(line, tok)?;
                    located_atoms.push(locate(line, tok, atom.clone()));
                    goal.push(atom);
                }
            }
            "goal-count" => {
                let rest = line.rest();
                if rest.len() != 2 {
                    return Err(line.error_at_end("expected `goal-count <pattern> <n>`"));
                }
                let pattern = AtomPattern::parse(rest[0].text)
                    .map_err(|e| line.error(&rest[0], e.to_string()))?;
                let count = rest[1]
                    .text
                    .parse()
                    .map_err(|_| line.error(&rest[1], "expected a count"))?;
                builder = builder.goal_count(pattern, count);
            }
            "param" => {
                let rest = line.rest();
                if rest.len() != 2 {
                    return Err(line.error_at_end("expected `param <name> <object>`"));
                }
                params.push((rest[0], rest[1], line.number));
            }
            "action" => {
                let spec = parse_action_body(line)?;
                action_lines.push(ActionLine::Ground(locate(line, &line.tokens[0], spec)));
            }
            "schema" => {
                let spec = parse_action_body(line)?;
                action_lines.push(ActionLine::Schema(locate(line, &line.tokens[0], spec)));
            }
            other => {
                return Err(line.error(&line.tokens[0], format!("unknown keyword `{other}`")));
            }
        }
    }

    let declared: BTreeSet<&str> = objects.iter().map(String::as_str).collect();
    let undeclared = |obj: &str, line: usize, column: usize| Error::UndeclaredObject {
        object: obj.to_string(),
        line,
        column,
    };
    for loc in &located_atoms {
        if let Some(arg) = loc.value.args.iter().find(|a| !declared.contains(a.as_str())) {
            return Err(undeclared(arg, loc.line, loc.column));
        }
    }
    for (param, obj, number) in &params {
        if !declared.contains(obj.text) {
            return Err(undeclared(obj.text, *number, obj.column));
        }
        builder = builder.param(param.text, obj.text);
    }

    let mut actions = Vec::new();
    for al in action_lines {
        match al {
            ActionLine::Ground(loc) => {
                let spec = &loc.value;
                let all = spec.pre.iter().chain(&spec.add).chain(&spec.del);
                for arg in spec.args.iter().map(String::as_str).chain(all.flat_map(|a| a.args.iter().map(String::as_str))) {
                    if !declared.contains(arg) {
                        return Err(undeclared(arg, loc.line, loc.column));
                    }
                }
                actions.push(loc.value);
            }
            ActionLine::Schema(loc) => ground_schema(&loc, &objects, &declared, &mut actions)?,
        }
    }

    builder
        .name(name)
        .objects(objects.iter().cloned())
        .init(init)
        .goal(goal)
        .actions(actions)
        .domain(domain)
        .build()
}

fn locate<T>(line: &Line<'_>, tok: &Token<'_>, value: T) -> Located<T> {
    Located {
        value,
        line: line.number,
        column: tok.column,
    }
}

fn single_symbol<'a>(line: &Line<'a>) -> Result<&'a str> {
    match line.rest() {
        [tok] if is_symbol(tok.text) => Ok(tok.text),
        [tok, ..] => Err(line.error(tok, "expected a single symbol")),
        [] => Err(line.error_at_end("expected a symbol")),
    }
}

pub(crate) fn parse_atom(line: &Line<'_>, tok: &Token<'_>) -> Result<Atom> {
    let (head, args) =
        split_call(tok.text).ok_or_else(|| line.error(tok, format!("malformed atom `{}`", tok.text)))?;
    if !is_symbol(head) || args.iter().any(|a| !is_symbol(a)) {
        return Err(line.error(tok, format!("malformed atom `{}`", tok.text)));
    }
    Ok(Atom::new(head, args))
}

fn parse_action_body(line: &Line<'_>) -> Result<ActionSpec> {
    let rest = line.rest();
    let head_tok = rest
        .first()
        .ok_or_else(|| line.error_at_end("expected an action name"))?;
    let (name, args) = split_call(head_tok.text)
        .filter(|(h, a)| is_symbol(h) && a.iter().all(|x| is_symbol(x)))
        .ok_or_else(|| line.error(head_tok, "expected `name(args)`"))?;
    let mut spec = ActionSpec {
        name: name.to_string(),
        args: args.into_iter().map(str::to_string).collect(),
        pre: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };
    let mut section: Option<&str> = None;
    let mut seen = BTreeSet::new();
    for tok in &rest[1..] {
        match tok.text {
            "pre:" | "add:" | "del:" => {
                if !seen.insert(tok.text) {
                    return Err(line.error(tok, format!("duplicate section `{}`", tok.text)));
                }
                section = Some(tok.text);
            }
            _ => {
                let atom = parse_atom(line, tok)?;
                match section {
                    Some("pre:") => spec.pre.push(atom),
                    Some("add:") => spec.add.push(atom),
                    Some("del:") => spec.del.push(atom),
                    _ => return Err(line.error(tok, "expected `pre:`, `add:` or `del:`")),
                }
            }
        }
    }
    Ok(spec)
}

fn ground_schema(
    loc: &Located<ActionSpec>,
    objects: &[String],
    declared: &BTreeSet<&str>,
    out: &mut Vec<ActionSpec>,
) -> Result<()> {
    let schema = &loc.value;
    let vars = &schema.args;
    let var_set: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
    if var_set.len() != vars.len() {
        return Err(Error::syntax(loc.line, loc.column, "repeated schema parameter"));
    }
    for atom in schema.pre.iter().chain(&schema.add).chain(&schema.del) {
        for arg in &atom.args {
            if !var_set.contains(arg.as_str()) && !declared.contains(arg.as_str()) {
                return Err(Error::UndeclaredObject {
                    object: arg.clone(),
                    line: loc.line,
                    column: loc.column,
                });
            }
        }
    }
    for assignment in injective_assignments(vars.len(), objects.len()) {
        let subst = |atom: &Atom| -> Atom {
            let args = atom.args.iter().map(|a| match vars.iter().position(|v| v == a) {
                Some(i) => objects[assignment[i]].clone(),
                None => a.clone(),
            });
            Atom::new(&atom.predicate, args)
        };
        out.push(ActionSpec {
            name: schema.name.clone(),
            args: assignment.iter().map(|&i| objects[i].clone()).collect(),
            pre: schema.pre.iter().map(subst).collect(),
            add: schema.add.iter().map(subst).collect(),
            del: schema.del.iter().map(subst).collect(),
        });
    }
    Ok(())
}

/// All length-`k` sequences of distinct indices below `n`, lexicographically.
fn injective_assignments(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, n: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in 0..n {
            if !current.contains(&i) {
                current.push(i);
                rec(k, n, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(k, n, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Renders an instance in the text format; schemas appear fully grounded.
pub fn print_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let join = |atoms: &mut dyn Iterator<Item = String>| atoms.collect::<Vec<_>>().join(" ");
    if !inst.name().is_empty() {
        let _ = writeln!(out, "instance {}", inst.name());
    }
    if !inst.domain().is_empty() {
        let _ = writeln!(out, "domain {}", inst.domain());
    }
    let _ = writeln!(out, "objects {}", inst.objects().join(" "));
    if let Some(preds) = inst.declared_predicates() {
        let decl: Vec<String> = preds.iter().map(|(p, n)| format!("{p}/{n}")).collect();
        let _ = writeln!(out, "predicates {}", decl.join(" "));
    }
    let init = inst.sorted_atoms(inst.init());
    let _ = writeln!(out, "init {}", join(&mut init.iter().map(ToString::to_string)));
    let goal: BTreeSet<&Atom> = inst.goal_atoms().collect();
    let _ = writeln!(out, "goal {}", join(&mut goal.iter().map(ToString::to_string)));
    for cg in inst.goal_counts() {
        let _ = writeln!(out, "goal-count {} {}", cg.pattern, cg.count);
    }
    for (p, o) in inst.params().iter() {
        let _ = writeln!(out, "param {p} {o}");
    }
    for a in inst.actions() {
        let list = |set: &super::AtomSet| {
            let atoms: BTreeSet<&Atom> = set.iter().map(|id| inst.atom(id)).collect();
            atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        };
        let head = format!("{}({})", a.name, a.args.join(","));
        let _ = writeln!(
            out,
            "action {head} pre: {} add: {} del: {}",
            list(&a.pre),
            list(&a.add),
            list(&a.del)
        );
    }
    out
}
