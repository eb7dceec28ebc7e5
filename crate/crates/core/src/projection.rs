//! Numerical projections (QNPs), their boolean FOND counterparts, and the
//! transformations between them.
//!
//! ```text
//! qnp qclear
//! bool H
//! num nx
//! init !H nx>0
//! goal nx=0
//! abstract pick-above-x pre: !H nx>0 eff: H nx--
//! abstract put-aside pre: H eff: !H
//! ```
//!
//! The FOND form replaces `eff:` by outcome lists:
//!
//! ```text
//! action pick-above-x pre: !H nx>0 effect: H nx>0 | H nx=0
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::abstraction::{
    effects_match, holds_all, parse_abstract_line, validate_abstract_action, AbstractAction, EffectKind,
    FamilyModel, Literal, Verdict, Witness,
};
use crate::error::{Error, Result};
use crate::features::{BoolValuation, FeatureValuation, Signature};
use crate::syntax::{self, Line, Token};

/// Disjunction of conjunctions. A single empty term is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    pub terms: Vec<Vec<Literal>>,
}

impl Formula {
    pub fn conj(lits: Vec<Literal>) -> Self {
        Formula { terms: vec![lits] }
    }

    pub fn truth() -> Self {
        Formula { terms: vec![Vec::new()] }
    }

    pub fn dnf(terms: Vec<Vec<Literal>>) -> Self {
        Formula { terms }
    }

    pub fn satisfied_by(&self, v: BoolValuation) -> bool {
        self.terms.iter().any(|t| holds_all(t, v))
    }

    /// Every term is free of complementary literals.
    pub fn is_consistent(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.iter().all(|l| !t.contains(&l.negated())))
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        self.terms.iter().flatten().map(|l| l.var).collect()
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Formula, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let terms: Vec<String> = self.0.terms.iter().map(|t| term_text(t, self.1)).collect();
                f.write_str(&terms.join(" | "))
            }
        }
        D(self, sig)
    }

    /// Parses `<lits> | <lits> ...` from tokens; `true` stands for an empty term.
    pub(crate) fn parse_tokens(line: &Line<'_>, toks: &[Token<'_>], sig: &Signature) -> Result<Self> {
        let mut terms = vec![Vec::new()];
        for tok in toks {
            match tok.text {
                "|" => terms.push(Vec::new()),
                "true" => {}
                text => {
                    let lit = Literal::parse(text, sig)?;
                    terms.last_mut().unwrap().push(lit);
                }
            }
        }
        let f = Formula { terms };
        if !f.is_consistent() {
            return Err(line.error(&toks[0], "term contains a literal and its negation"));
        }
        Ok(f)
    }

    pub fn parse(text: &str, sig: &Signature) -> Result<Self> {
        let wrapped = format!("formula {text}");
        let lines = syntax::lines(&wrapped)?;
        match lines.as_slice() {
            [] => Ok(Formula::truth()),
            [line] => Formula::parse_tokens(line, line.rest(), sig),
            _ => Err(Error::Invalid("formula must be on one line".into())),
        }
    }
}

fn term_text(term: &[Literal], sig: &Signature) -> String {
    if term.is_empty() {
        "true".into()
    } else {
        term.iter().map(|l| l.display(sig)).collect::<Vec<_>>().join(" ")
    }
}

/// The numerical projection Q_F = ⟨V_F, I_F, G_F, A_F⟩.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QnpProblem {
    pub name: String,
    pub sig: Signature,
    pub init: Formula,
    pub goal: Formula,
    pub actions: Vec<AbstractAction>,
}

fn check_vars(sig: &Signature, vars: impl IntoIterator<Item = usize>) -> Result<()> {
    match vars.into_iter().find(|&v| v >= sig.len()) {
        Some(v) => Err(Error::UnknownFeature(format!("#{v}"))),
        None => Ok(()),
    }
}

pub fn build_projection(
    name: impl Into<String>,
    sig: &Signature,
    actions: Vec<AbstractAction>,
    init: Formula,
    goal: Formula,
) -> Result<QnpProblem> {
    check_vars(sig, init.vars().into_iter().chain(goal.vars()))?;
    for a in &actions {
        check_vars(sig, a.pre.iter().map(|l| l.var).chain(a.eff.iter().map(|e| e.var)))?;
        let violations = validate_abstract_action(a, sig);
        if let Some(v) = violations.first() {
            return Err(Error::Invalid(format!("action {}: {v}", a.name)));
        }
    }
    if init.terms.is_empty() || goal.terms.is_empty() {
        return Err(Error::Invalid("formulas need at least one term".into()));
    }
    Ok(QnpProblem {
        name: name.into(),
        sig: sig.clone(),
        init,
        goal,
        actions,
    })
}

/// `init` and `goal` lines over a given signature.
pub fn parse_formulas(text: &str, sig: &Signature) -> Result<(Formula, Formula)> {
    let mut init = None;
    let mut goal = None;
    for line in syntax::lines(text)? {
        let slot = match line.keyword() {
            "init" => &mut init,
            "goal" => &mut goal,
            other => return Err(line.error(&line.tokens[0], format!("unknown keyword `{other}`"))),
        };
        if slot.is_some() {
            return Err(line.error(&line.tokens[0], "repeated formula"));
        }
        *slot = Some(Formula::parse_tokens(&line, line.rest(), sig)?);
    }
    Ok((init.unwrap_or_else(Formula::truth), goal.unwrap_or_else(Formula::truth)))
}

pub(crate) struct Header {
    pub name: String,
    pub sig: Signature,
}

/// Reads the `qnp|fond`, `bool` and `num` lines, returning the remaining ones.
pub(crate) fn parse_header<'a>(lines: &'a [Line<'a>], keyword: &str) -> Result<(Header, &'a [Line<'a>])> {
    let mut name = None;
    let mut bools = Vec::new();
    let mut nums = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        match line.keyword() {
            k if k == keyword => {
                let tok = line.rest().first().ok_or_else(|| line.error_at_end("expected a name"))?;
                name = Some(tok.text.to_string());
            }
            "bool" => bools.extend(line.rest().iter().map(|t| t.text)),
            "num" => nums.extend(line.rest().iter().map(|t| t.text)),
            _ => break,
        }
        i += 1;
    }
    let name = name.ok_or_else(|| Error::syntax(1, 1, format!("expected `{keyword} <name>`")))?;
    let sig = Signature::new(bools, nums)?;
    Ok((Header { name, sig }, &lines[i..]))
}

pub fn parse_qnp(text: &str) -> Result<QnpProblem> {
    let lines = syntax::lines(text)?;
    let (head, rest) = parse_header(&lines, "qnp")?;
    let mut init = None;
    let mut goal = None;
    let mut actions: Vec<AbstractAction> = Vec::new();
    for line in rest {
        match line.keyword() {
            "init" => init = Some(Formula::parse_tokens(line, line.rest(), &head.sig)?),
            "goal" => goal = Some(Formula::parse_tokens(line, line.rest(), &head.sig)?),
            "abstract" => {
                let a = parse_abstract_line(line, &head.sig)?;
                if actions.iter().any(|b| b.name == a.name) {
                    return Err(line.error(&line.tokens[1], format!("duplicate action `{}`", a.name)));
                }
                actions.push(a);
            }
            other => return Err(line.error(&line.tokens[0], format!("unexpected `{other}`"))),
        }
    }
    build_projection(
        head.name,
        &head.sig,
        actions,
        init.unwrap_or_else(Formula::truth),
        goal.unwrap_or_else(Formula::truth),
    )
}

pub(crate) fn print_header(out: &mut String, keyword: &str, name: &str, sig: &Signature) {
    out.push_str(&format!("{keyword} {name}\n"));
    let bools: Vec<&str> = sig.booleans().map(|v| sig.name(v)).collect();
    let nums: Vec<&str> = sig.numericals().map(|v| sig.name(v)).collect();
    if !bools.is_empty() {
        out.push_str(&format!("bool {}\n", bools.join(" ")));
    }
    if !nums.is_empty() {
        out.push_str(&format!("num {}\n", nums.join(" ")));
    }
}

pub fn print_qnp(q: &QnpProblem) -> String {
    let mut out = String::new();
    print_header(&mut out, "qnp", &q.name, &q.sig);
    out.push_str(&format!("init {}\n", q.init.display(&q.sig)));
    out.push_str(&format!("goal {}\n", q.goal.display(&q.sig)));
    for a in &q.actions {
        out.push_str(&format!("{}\n", a.display(&q.sig)));
    }
    out
}

/// A FOND action: one or more outcomes, each a conjunction of literals made
/// true. `inc`/`dec` record which numerical symbols stem from n↑ and n↓.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FondAction {
    pub name: String,
    pub pre: Vec<Literal>,
    pub outcomes: Vec<Vec<Literal>>,
    pub inc: Vec<usize>,
    pub dec: Vec<usize>,
}

impl FondAction {
    pub fn applicable(&self, v: BoolValuation) -> bool {
        holds_all(&self.pre, v)
    }

    pub fn apply(&self, v: BoolValuation, outcome: usize) -> BoolValuation {
        self.outcomes[outcome]
            .iter()
            .fold(v, |acc, l| acc.with(l.var, l.holds))
    }

    /// Successors in outcome order.
    pub fn successors(&self, v: BoolValuation) -> Vec<BoolValuation> {
        (0..self.outcomes.len()).map(|o| self.apply(v, o)).collect()
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a FondAction, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let pre: Vec<String> = self.0.pre.iter().map(|l| l.display(self.1)).collect();
                let outs: Vec<String> = self.0.outcomes.iter().map(|o| term_text(o, self.1)).collect();
                write!(f, "action {} pre: {} effect: {}", self.0.name, pre.join(" "), outs.join(" | "))
            }
        }
        D(self, sig)
    }
}

/// The boolean projection Q′_F: propositions are the boolean features and one
/// `n=0` symbol per numerical feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FondProblem {
    pub name: String,
    pub sig: Signature,
    pub init: Formula,
    pub goal: Formula,
    pub actions: Vec<FondAction>,
}

impl FondProblem {
    pub fn action(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    /// Initial states: every valuation satisfying some init term.
    pub fn initial_states(&self) -> Vec<BoolValuation> {
        let n = self.sig.len();
        (0..1u64 << n)
            .map(BoolValuation)
            .filter(|&v| self.init.satisfied_by(v))
            .collect()
    }
}

/// Derives inc/dec sets from outcome lists, as produced by [`booleanize`].
fn derive_counters(sig: &Signature, outcomes: &[Vec<Literal>]) -> (Vec<usize>, Vec<usize>) {
    let mut inc = Vec::new();
    let mut dec = Vec::new();
    for n in sig.numericals() {
        let values: BTreeSet<bool> = outcomes
            .iter()
            .filter_map(|o| o.iter().find(|l| l.var == n).map(|l| l.holds))
            .collect();
        let everywhere = outcomes.iter().all(|o| o.iter().any(|l| l.var == n));
        if values.len() == 2 {
            dec.push(n);
        } else if everywhere && values.contains(&false) {
            inc.push(n);
        }
    }
    (inc, dec)
}

pub fn parse_fond(text: &str) -> Result<FondProblem> {
    let lines = syntax::lines(text)?;
    let (head, rest) = parse_header(&lines, "fond")?;
    let sig = head.sig;
    let mut init = Formula::truth();
    let mut goal = Formula::truth();
    let mut actions: Vec<FondAction> = Vec::new();
    for line in rest {
        match line.keyword() {
            "init" => init = Formula::parse_tokens(line, line.rest(), &sig)?,
            "goal" => goal = Formula::parse_tokens(line, line.rest(), &sig)?,
            "action" => {
                let toks = line.rest();
                let name = toks.first().ok_or_else(|| line.error_at_end("expected an action name"))?;
                let pre_at = toks.iter().position(|t| t.text == "pre:");
                let eff_at = toks.iter().position(|t| t.text == "effect:");
                let (Some(p), Some(e)) = (pre_at, eff_at) else {
                    return Err(line.error(name, "expected `pre:` and `effect:`"));
                };
                if p != 1 || e < p {
                    return Err(line.error(name, "expected `pre:` before `effect:`"));
                }
                let pre = toks[p + 1..e]
                    .iter()
                    .map(|t| Literal::parse(t.text, &sig))
                    .collect::<Result<Vec<_>>>()?;
                let outcomes = if e + 1 < toks.len() {
                    Formula::parse_tokens(line, &toks[e + 1..], &sig)?.terms
                } else {
                    vec![Vec::new()]
                };
                let (inc, dec) = derive_counters(&sig, &outcomes);
                if actions.iter().any(|a| a.name == name.text) {
                    return Err(line.error(name, format!("duplicate action `{}`", name.text)));
                }
                actions.push(FondAction {
                    name: name.text.to_string(),
                    pre,
                    outcomes,
                    inc,
                    dec,
                });
            }
            other => return Err(line.error(&line.tokens[0], format!("unexpected `{other}`"))),
        }
    }
    Ok(FondProblem {
        name: head.name,
        sig,
        init,
        goal,
        actions,
    })
}

pub fn print_fond(p: &FondProblem) -> String {
    let mut out = String::new();
    print_header(&mut out, "fond", &p.name, &p.sig);
    out.push_str(&format!("init {}\n", p.init.display(&p.sig)));
    out.push_str(&format!("goal {}\n", p.goal.display(&p.sig)));
    for a in &p.actions {
        out.push_str(&format!("{}\n", a.display(&p.sig)));
    }
    out
}

/// Replaces n↑ by the deterministic effect `n>0` and n↓ by `n>0 | n=0`.
/// Several decrements yield the product of their outcomes.
pub fn booleanize_action(a: &AbstractAction) -> FondAction {
    let mut outcomes: Vec<Vec<Literal>> = vec![Vec::new()];
    for e in &a.eff {
        match e.kind {
            EffectKind::Set(v) => outcomes.iter_mut().for_each(|o| o.push(Literal::new(e.var, v))),
            EffectKind::Inc => outcomes.iter_mut().for_each(|o| o.push(Literal::new(e.var, false))),
            EffectKind::Dec => {
                outcomes = outcomes
                    .into_iter()
                    .flat_map(|o| {
                        [false, true].map(|zero| {
                            let mut o = o.clone();
                            o.push(Literal::new(e.var, zero));
                            o
                        })
                    })
                    .collect();
            }
        }
    }
    FondAction {
        name: a.name.clone(),
        pre: a.pre.clone(),
        outcomes,
        inc: a.increments().collect(),
        dec: a.decrements().collect(),
    }
}

pub fn booleanize(q: &QnpProblem) -> FondProblem {
    FondProblem {
        name: q.name.clone(),
        sig: q.sig.clone(),
        init: q.init.clone(),
        goal: q.goal.clone(),
        actions: q.actions.iter().map(booleanize_action).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QplusCheck {
    /// Q⁺_F can be taken to be Q′_F.
    Identity,
    /// Variables decremented by some action and incremented elsewhere.
    NeedsTranslation(Vec<String>),
}

impl QplusCheck {
    pub fn is_identity(&self) -> bool {
        matches!(self, QplusCheck::Identity)
    }
}

/// Literals guaranteed after `a`: deterministic effects plus untouched
/// preconditions.
fn guaranteed_after(a: &AbstractAction) -> Vec<Literal> {
    let mut out: Vec<Literal> = a
        .pre
        .iter()
        .filter(|l| a.effect_on(l.var).is_none())
        .copied()
        .collect();
    for e in &a.eff {
        match e.kind {
            EffectKind::Set(v) => out.push(Literal::new(e.var, v)),
            EffectKind::Inc => out.push(Literal::new(e.var, false)),
            EffectKind::Dec => {}
        }
    }
    out
}

/// Increments are harmless when they achieve the goal, or when the action
/// requires `n=0` for the incremented `n`.
pub fn check_qplus_condition(q: &QnpProblem) -> QplusCheck {
    let decremented: BTreeSet<usize> = q.actions.iter().flat_map(|a| a.decrements()).collect();
    let mut evidence = Vec::new();
    for a in &q.actions {
        let after = guaranteed_after(a);
        let achieves_goal = q.goal.terms.iter().any(|t| t.iter().all(|l| after.contains(l)));
        for n in a.increments() {
            if !decremented.contains(&n) || achieves_goal || a.pre.contains(&Literal::new(n, true)) {
                continue;
            }
            let by: Vec<&str> = q
                .actions
                .iter()
                .filter(|b| b.decrements().any(|m| m == n))
                .map(|b| b.name.as_str())
                .collect();
            evidence.push(format!(
                "{} increments {} which {} decrements",
                a.name,
                q.sig.name(n),
                by.join(", ")
            ));
        }
    }
    if evidence.is_empty() {
        QplusCheck::Identity
    } else {
        QplusCheck::NeedsTranslation(evidence)
    }
}

/// Auxiliary proposition introduced for multi-term goals.
pub const GOAL_PROP: &str = "goal-reached";

/// Reduces a multi-term goal to a single auxiliary atom reached by one action
/// per goal term. Multi-term inits are kept as several initial states.
pub fn compile_dnf(p: &FondProblem) -> Result<FondProblem> {
    if p.goal.terms.len() <= 1 {
        return Ok(p.clone());
    }
    let nb = p.sig.num_booleans();
    let mut bools: Vec<String> = p.sig.booleans().map(|v| p.sig.name(v).to_string()).collect();
    let mut name = GOAL_PROP.to_string();
    while p.sig.index(&name).is_some() {
        name.push('_');
    }
    bools.push(name);
    let nums: Vec<String> = p.sig.numericals().map(|v| p.sig.name(v).to_string()).collect();
    let sig = Signature::new(bools, nums)?;
    let shift = |v: usize| if v >= nb { v + 1 } else { v };
    let lits = |ls: &[Literal]| -> Vec<Literal> { ls.iter().map(|l| Literal::new(shift(l.var), l.holds)).collect() };
    let goal_lit = Literal::new(nb, true);

    let mut actions: Vec<FondAction> = p
        .actions
        .iter()
        .map(|a| FondAction {
            name: a.name.clone(),
            pre: lits(&a.pre),
            outcomes: a.outcomes.iter().map(|o| lits(o)).collect(),
            inc: a.inc.iter().map(|&v| shift(v)).collect(),
            dec: a.dec.iter().map(|&v| shift(v)).collect(),
        })
        .collect();
    for (k, term) in p.goal.terms.iter().enumerate() {
        let mut pre = lits(term);
        pre.push(goal_lit.negated());
        actions.push(FondAction {
            name: format!("reach-goal-{}", k + 1),
            pre,
            outcomes: vec![vec![goal_lit]],
            inc: Vec::new(),
            dec: Vec::new(),
        });
    }
    let init = Formula::dnf(
        p.init
            .terms
            .iter()
            .map(|t| {
                let mut t = lits(t);
                t.push(goal_lit.negated());
                t
            })
            .collect(),
    );
    Ok(FondProblem {
        name: p.name.clone(),
        sig,
        init,
        goal: Formula::conj(vec![goal_lit]),
        actions,
    })
}

/// F̄(ā, s̄) with step sizes 1..=delta_cap; decrements never go below zero.
pub fn qnp_successors(
    q: &QnpProblem,
    s: &FeatureValuation,
    a: &AbstractAction,
    delta_cap: u64,
) -> Result<Vec<FeatureValuation>> {
    if !a.applicable(s.to_boolean(&q.sig)) {
        return Err(Error::Inapplicable(a.name.clone()));
    }
    let mut options: Vec<Vec<u64>> = s.0.iter().map(|&x| vec![x]).collect();
    for e in &a.eff {
        let x = s.0[e.var];
        options[e.var] = match e.kind {
            EffectKind::Set(v) => vec![u64::from(v)],
            EffectKind::Inc => (1..=delta_cap).map(|d| x + d).collect(),
            EffectKind::Dec => (1..=delta_cap.min(x)).map(|d| x - d).collect(),
        };
    }
    let mut out = vec![Vec::with_capacity(options.len())];
    for opts in &options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    let set: BTreeSet<Vec<u64>> = out.into_iter().collect();
    Ok(set.into_iter().map(FeatureValuation).collect())
}

/// Checks that every instance starts in I_F and that every reachable state
/// satisfying G_F is a goal state.
pub fn verify_interface_soundness(init: &Formula, goal: &Formula, model: &FamilyModel) -> Verdict {
    let sig = model.features.signature();
    model.verdict(|m| {
        let mut out = Vec::new();
        let witness = |i: usize, detail: &str| Witness {
            instance: m.instance.name().to_string(),
            state: m.instance.render_state(&m.states[i]),
            valuation: m.valuations[i].display(sig).to_string(),
            action: None,
            detail: detail.to_string(),
        };
        if !init.satisfied_by(m.booleans[0]) {
            out.push(witness(0, "initial state violates the initial formula"));
        }
        for i in 0..m.states.len() {
            if goal.satisfied_by(m.booleans[i]) && !m.goal[i] {
                out.push(witness(i, "satisfies the goal formula but is not a goal state"));
            }
        }
        out
    })
}

/// Whether φ_F(s) → φ_F(t) is a transition of `a` in the projection.
pub fn projects_transition(q: &QnpProblem, a: &AbstractAction, s: &FeatureValuation, t: &FeatureValuation) -> bool {
    a.applicable(s.to_boolean(&q.sig)) && effects_match(a, &q.sig, s, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const QCLEAR: &str = "\
qnp qclear
bool H
num nx
init !H nx>0
goal nx=0
abstract pick-above-x pre: !H nx>0 eff: H nx--
abstract put-aside pre: H eff: !H
";

    #[test]
    fn qnp_round_trip() {
        let q = parse_qnp(QCLEAR).unwrap();
        assert_eq!(q.actions.len(), 2);
        assert_eq!(print_qnp(&q), QCLEAR);
        assert_eq!(parse_qnp(&print_qnp(&q)).unwrap(), q);
    }

    #[test]
    fn booleanize_qclear() {
        let q = parse_qnp(QCLEAR).unwrap();
        let f = booleanize(&q);
        let text = print_fond(&f);
        assert!(text.contains("action pick-above-x pre: !H nx>0 effect: H nx>0 | H nx=0"), "{text}");
        assert!(text.contains("action put-aside pre: H effect: !H"), "{text}");
        assert_eq!(parse_fond(&text).unwrap(), f);
        assert_eq!(f.actions[0].dec, vec![1]);
        assert!(f.actions[0].inc.is_empty());
    }

    #[test]
    fn booleanize_keeps_actions_and_preconditions() {
        let q = parse_qnp(QCLEAR).unwrap();
        let f = booleanize(&q);
        assert_eq!(f.actions.len(), q.actions.len());
        for (a, b) in q.actions.iter().zip(&f.actions) {
            assert_eq!(a.pre, b.pre);
            assert_eq!(a.name, b.name);
        }
    }

    #[test]
    fn qplus_identity_without_increments() {
        let q = parse_qnp(QCLEAR).unwrap();
        assert!(check_qplus_condition(&q).is_identity());
    }

    #[test]
    fn qplus_flags_increment_off_goal() {
        let text = "qnp c\nbool p\nnum n\ninit !p n>0\ngoal n=0\nabstract a pre: !p n>0 eff: p n--\nabstract b pre: p eff: !p n++\n";
        let q = parse_qnp(text).unwrap();
        match check_qplus_condition(&q) {
            QplusCheck::NeedsTranslation(ev) => assert!(ev[0].contains("b increments n"), "{ev:?}"),
            QplusCheck::Identity => panic!("expected needs-translation"),
        }
    }

    #[test]
    fn successors_of_decrement() {
        let q = parse_qnp(QCLEAR).unwrap();
        let s = FeatureValuation(vec![0, 3]);
        let next = qnp_successors(&q, &s, &q.actions[0], 3).unwrap();
        let expected: Vec<FeatureValuation> = [vec![1, 0], vec![1, 1], vec![1, 2]].into_iter().map(FeatureValuation).collect();
        assert_eq!(next, expected);
        let one = qnp_successors(&q, &FeatureValuation(vec![0, 1]), &q.actions[0], 3).unwrap();
        assert_eq!(one, vec![FeatureValuation(vec![1, 0])]);
        let b = qnp_successors(&q, &FeatureValuation(vec![1, 2]), &q.actions[1], 3).unwrap();
        assert_eq!(b, vec![FeatureValuation(vec![0, 2])]);
        assert!(matches!(
            qnp_successors(&q, &FeatureValuation(vec![1, 2]), &q.actions[0], 3),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn compile_multi_term_goal() {
        let text = "fond g\nbool p q\ninit !p !q\ngoal p | q\naction a pre: !p effect: p\n";
        let f = parse_fond(text).unwrap();
        let c = compile_dnf(&f).unwrap();
        assert_eq!(c.actions.len(), 3);
        assert_eq!(c.goal.terms.len(), 1);
        assert_eq!(c.sig.name(2), GOAL_PROP);
        let single = parse_fond("fond s\nbool p\ninit !p\ngoal p\naction a pre: !p effect: p\n").unwrap();
        assert_eq!(compile_dnf(&single).unwrap(), single);
    }

    #[test]
    fn multi_term_init_yields_several_states() {
        let text = "fond m\nnum dX dY\ninit dX=0 dY=0 | dX=0 dY>0 | dX>0 dY=0 | dX>0 dY>0\ngoal dX=0 dY=0\n";
        let f = parse_fond(text).unwrap();
        assert_eq!(f.initial_states().len(), 4);
    }

    #[test]
    fn unknown_feature_in_formula() {
        let sig = Signature::new(["H"], ["nx"]).unwrap();
        assert!(matches!(Formula::parse("Z", &sig), Err(Error::UnknownFeature(_))));
        let f = Formula::parse("H | nx=0", &sig).unwrap();
        assert_eq!(f.terms.len(), 2);
        assert!(Formula::parse("H !H", &sig).is_err());
    }

    fn arb_action(nb: usize, nn: usize) -> impl Strategy<Value = AbstractAction> {
        let n = nb + nn;
        (
            prop::collection::vec(prop::option::of(any::<bool>()), n),
            prop::collection::vec(0u8..4, n),
        )
            .prop_map(move |(pre, eff)| {
                let mut a = AbstractAction::new("a", Vec::new(), Vec::new());
                for (v, p) in pre.iter().enumerate() {
                    if let Some(h) = p {
                        a.pre.push(Literal::new(v, *h));
                    }
                }
                for (v, &k) in eff.iter().enumerate() {
                    if v < nb {
                        match k {
                            1 => a.eff.push(crate::abstraction::Effect::set(v, true)),
                            2 => a.eff.push(crate::abstraction::Effect::set(v, false)),
                            _ => {}
                        }
                    } else {
                        match k {
                            1 => a.eff.push(crate::abstraction::Effect::inc(v)),
                            2 => {
                                a.pre.retain(|l| l.var != v);
                                a.pre.push(Literal::new(v, false));
                                a.eff.push(crate::abstraction::Effect::dec(v));
                            }
                            _ => {}
                        }
                    }
                }
                a
            })
    }

    proptest! {
        #[test]
        fn projection_commutes_with_transitions(
            a in arb_action(2, 2),
            bools in prop::collection::vec(0u64..2, 2),
            nums in prop::collection::vec(0u64..5, 2),
        ) {
            let sig = Signature::new(["p", "q"], ["m", "n"]).unwrap();
            let q = build_projection("r", &sig, vec![a.clone()], Formula::truth(), Formula::truth()).unwrap();
            let s = FeatureValuation(bools.into_iter().chain(nums).collect());
            let sb = s.to_boolean(&sig);
            prop_assume!(a.applicable(sb));
            let fa = booleanize_action(&a);
            prop_assert!(fa.applicable(sb));
            let outs = fa.successors(sb);
            for t in qnp_successors(&q, &s, &a, 3).unwrap() {
                prop_assert!(outs.contains(&t.to_boolean(&sig)));
                prop_assert!(projects_transition(&q, &a, &s, &t));
            }
        }
    }
}
