//! Abstract actions ⟨Pre; Eff⟩, the represents relation, and bounded
//! soundness/completeness verification by enumeration.
//!
//! Action files hold one action per line:
//!
//! ```text
//! abstract pick-above-x pre: !H nx>0 eff: H nx--
//! abstract put-aside    pre: H       eff: !H
//! ```

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{literal_text, BoolValuation, FeatureSet, FeatureValuation, Signature};
use crate::pattern::Binding;
use crate::strips::{GroundAction, Instance, State};
use crate::syntax::{self, Line};

/// Default number of reachable states explored per instance.
pub const DEFAULT_CAP: usize = 200_000;

/// `p` / `!p` for a boolean variable, `n=0` / `n>0` for a numerical one:
/// `holds` is the truth of `p` or of `n=0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: usize,
    pub holds: bool,
}

impl Literal {
    pub fn new(var: usize, holds: bool) -> Self {
        Literal { var, holds }
    }

    pub fn satisfied_by(self, v: BoolValuation) -> bool {
        v.get(self.var) == self.holds
    }

    pub fn negated(self) -> Self {
        Literal {
            var: self.var,
            holds: !self.holds,
        }
    }

    pub fn display(self, sig: &Signature) -> String {
        literal_text(sig, self.var, self.holds)
    }

    pub fn parse(text: &str, sig: &Signature) -> Result<Self> {
        let lookup = |name: &str| sig.index(name).ok_or_else(|| Error::UnknownFeature(name.to_string()));
        let (name, holds, numeric) = if let Some(n) = text.strip_suffix("=0") {
            (n, true, true)
        } else if let Some(n) = text.strip_suffix(">0") {
            (n, false, true)
        } else if let Some(p) = text.strip_prefix('!') {
            (p, false, false)
        } else {
            (text, true, false)
        };
        let var = lookup(name)?;
        if sig.is_numeric(var) != numeric {
            return Err(Error::KindMismatch(name.to_string()));
        }
        Ok(Literal { var, holds })
    }
}

/// Conjunction of literals satisfied by a valuation.
pub fn holds_all(lits: &[Literal], v: BoolValuation) -> bool {
    lits.iter().all(|l| l.satisfied_by(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EffectKind {
    Set(bool),
    /// n↑
    Inc,
    /// n↓
    Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Effect {
    pub var: usize,
    pub kind: EffectKind,
}

impl Effect {
    pub fn set(var: usize, value: bool) -> Self {
        Effect {
            var,
            kind: EffectKind::Set(value),
        }
    }

    pub fn inc(var: usize) -> Self {
        Effect {
            var,
            kind: EffectKind::Inc,
        }
    }

    pub fn dec(var: usize) -> Self {
        Effect {
            var,
            kind: EffectKind::Dec,
        }
    }

    pub fn display(self, sig: &Signature) -> String {
        let name = sig.name(self.var);
        match self.kind {
            EffectKind::Set(true) => name.to_string(),
            EffectKind::Set(false) => format!("!{name}"),
            EffectKind::Inc => format!("{name}++"),
            EffectKind::Dec => format!("{name}--"),
        }
    }

    pub fn parse(text: &str, sig: &Signature) -> Result<Self> {
        let lookup = |name: &str| sig.index(name).ok_or_else(|| Error::UnknownFeature(name.to_string()));
        let (name, kind) = if let Some(n) = text.strip_suffix("++") {
            (n, EffectKind::Inc)
        } else if let Some(n) = text.strip_suffix("--") {
            (n, EffectKind::Dec)
        } else if let Some(p) = text.strip_prefix('!') {
            (p, EffectKind::Set(false))
        } else {
            (text, EffectKind::Set(true))
        };
        let var = lookup(name)?;
        let numeric_effect = !matches!(kind, EffectKind::Set(_));
        if sig.is_numeric(var) != numeric_effect {
            return Err(Error::KindMismatch(name.to_string()));
        }
        Ok(Effect { var, kind })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractAction {
    pub name: String,
    pub pre: Vec<Literal>,
    pub eff: Vec<Effect>,
}

impl AbstractAction {
    pub fn new(name: impl Into<String>, pre: Vec<Literal>, eff: Vec<Effect>) -> Self {
        AbstractAction {
            name: name.into(),
            pre,
            eff,
        }
    }

    pub fn applicable(&self, v: BoolValuation) -> bool {
        holds_all(&self.pre, v)
    }

    pub fn effect_on(&self, var: usize) -> Option<EffectKind> {
        self.eff.iter().find(|e| e.var == var).map(|e| e.kind)
    }

    pub fn increments(&self) -> impl Iterator<Item = usize> + '_ {
        self.eff.iter().filter(|e| e.kind == EffectKind::Inc).map(|e| e.var)
    }

    pub fn decrements(&self) -> impl Iterator<Item = usize> + '_ {
        self.eff.iter().filter(|e| e.kind == EffectKind::Dec).map(|e| e.var)
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a AbstractAction, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let pre: Vec<String> = self.0.pre.iter().map(|l| l.display(self.1)).collect();
                let eff: Vec<String> = self.0.eff.iter().map(|e| e.display(self.1)).collect();
                write!(f, "abstract {} pre: {} eff: {}", self.0.name, pre.join(" "), eff.join(" "))
            }
        }
        D(self, sig)
    }
}

/// Parses an `abstract` line (the keyword already checked by the caller).
pub(crate) fn parse_abstract_line(line: &Line<'_>, sig: &Signature) -> Result<AbstractAction> {
    let rest = line.rest();
    let name_tok = rest.first().ok_or_else(|| line.error_at_end("expected an action name"))?;
    if !syntax::is_symbol(name_tok.text) {
        return Err(line.error(name_tok, "invalid action name"));
    }
    let mut pre = Vec::new();
    let mut eff = Vec::new();
    let mut section = None;
    for tok in &rest[1..] {
        match tok.text {
            "pre:" if section.is_none() => section = Some(0),
            "eff:" if section == Some(0) || section.is_none() => section = Some(1),
            _ => match section {
                Some(0) => pre.push(Literal::parse(tok.text, sig).map_err(|e| located(line, tok, e))?),
                Some(1) => eff.push(Effect::parse(tok.text, sig).map_err(|e| located(line, tok, e))?),
                _ => return Err(line.error(tok, "expected `pre:` then `eff:`")),
            },
        }
    }
    Ok(AbstractAction::new(name_tok.text, pre, eff))
}

fn located(line: &Line<'_>, tok: &syntax::Token<'_>, e: Error) -> Error {
    match e {
        Error::UnknownFeature(_) | Error::KindMismatch(_) => e,
        other => line.error(tok, other.to_string()),
    }
}

pub fn parse_actions(text: &str, sig: &Signature) -> Result<Vec<AbstractAction>> {
    let mut out: Vec<AbstractAction> = Vec::new();
    for line in syntax::lines(text)? {
        if line.keyword() != "abstract" {
            return Err(line.error(&line.tokens[0], format!("unknown keyword `{}`", line.keyword())));
        }
        let a = parse_abstract_line(&line, sig)?;
        if out.iter().any(|b| b.name == a.name) {
            return Err(line.error(&line.tokens[1], format!("duplicate action `{}`", a.name)));
        }
        out.push(a);
    }
    Ok(out)
}

pub fn print_actions(actions: &[AbstractAction], sig: &Signature) -> String {
    actions.iter().map(|a| format!("{}\n", a.display(sig))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `n--` without `n>0` in the precondition.
    DecWithoutPositive(String),
    KindMismatch(String),
    DuplicateLiteral(String),
    DuplicateEffect(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DecWithoutPositive(n) => write!(f, "{n}-- requires {n}>0 in the precondition"),
            Violation::KindMismatch(n) => write!(f, "{n} is used with the wrong kind"),
            Violation::DuplicateLiteral(n) => write!(f, "more than one precondition on {n}"),
            Violation::DuplicateEffect(n) => write!(f, "more than one effect on {n}"),
        }
    }
}

/// Well-formedness; an empty result means the action is valid.
pub fn validate_abstract_action(a: &AbstractAction, sig: &Signature) -> Vec<Violation> {
    let mut out = Vec::new();
    let name = |v: usize| sig.names().get(v).cloned().unwrap_or_else(|| format!("#{v}"));
    for (i, l) in a.pre.iter().enumerate() {
        if l.var >= sig.len() {
            out.push(Violation::KindMismatch(name(l.var)));
        } else if a.pre[..i].iter().any(|m| m.var == l.var) {
            out.push(Violation::DuplicateLiteral(name(l.var)));
        }
    }
    for (i, e) in a.eff.iter().enumerate() {
        if e.var >= sig.len() || sig.is_numeric(e.var) == matches!(e.kind, EffectKind::Set(_)) {
            out.push(Violation::KindMismatch(name(e.var)));
            continue;
        }
        if a.eff[..i].iter().any(|f| f.var == e.var) {
            out.push(Violation::DuplicateEffect(name(e.var)));
        }
        if e.kind == EffectKind::Dec && !a.pre.contains(&Literal::new(e.var, false)) {
            out.push(Violation::DecWithoutPositive(name(e.var)));
        }
    }
    out
}

/// Conditions 2a–2c on a single transition, given the feature valuations
/// before and after. Only the sign of numerical changes matters.
pub fn effects_match(a: &AbstractAction, sig: &Signature, before: &FeatureValuation, after: &FeatureValuation) -> bool {
    for var in 0..sig.len() {
        let (x, y) = (before.0[var], after.0[var]);
        let declared = a.effect_on(var);
        let ok = if sig.is_numeric(var) {
            match declared {
                Some(EffectKind::Inc) => y > x,
                Some(EffectKind::Dec) => y < x,
                _ => y == x,
            }
        } else {
            match declared {
                Some(EffectKind::Set(v)) => (y != 0) == v,
                _ => x == y,
            }
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Whether `abs` represents the ground action `a` at state `s`.
pub fn represents(
    abs: &AbstractAction,
    a: &GroundAction,
    inst: &Instance,
    s: &State,
    f: &FeatureSet,
    b: &Binding,
) -> Result<bool> {
    if !inst.is_applicable(s, a) {
        return Ok(false);
    }
    let before = f.valuation(inst, s, b)?;
    if !abs.applicable(before.to_boolean(f.signature())) {
        return Ok(false);
    }
    let after = f.valuation(inst, &inst.apply(s, a)?, b)?;
    Ok(effects_match(abs, f.signature(), &before, &after))
}

/// Feature-level view of one instance's reachable state space.
#[derive(Debug, Clone)]
pub struct InstanceModel {
    pub instance: Instance,
    pub binding: Binding,
    pub states: Vec<State>,
    /// Valuations of `states`, followed by those of successors outside the
    /// (truncated) reachable set.
    pub valuations: Vec<FeatureValuation>,
    pub booleans: Vec<BoolValuation>,
    /// Per state: (ground action index, index into `valuations`).
    pub transitions: Vec<Vec<(usize, usize)>>,
    pub goal: Vec<bool>,
    pub truncated: bool,
}

impl InstanceModel {
    pub fn build(instance: Instance, f: &FeatureSet, cap: usize) -> Result<Self> {
        let binding = f.bind(&instance)?;
        let reach = instance.reachable_states(cap);
        let sig = f.signature();
        let mut valuations = Vec::with_capacity(reach.len());
        for s in &reach.states {
            valuations.push(f.valuation(&instance, s, &binding)?);
        }
        let mut transitions = Vec::with_capacity(reach.len());
        for s in &reach.states {
            let mut out = Vec::new();
            for (k, t) in instance.successors(s) {
                let j = match reach.position(&t) {
                    Some(j) => j,
                    None => {
                        valuations.push(f.valuation(&instance, &t, &binding)?);
                        valuations.len() - 1
                    }
                };
                out.push((k, j));
            }
            transitions.push(out);
        }
        let booleans = valuations.iter().map(|v| v.to_boolean(sig)).collect();
        let goal = reach.states.iter().map(|s| instance.is_goal(s)).collect();
        Ok(InstanceModel {
            binding,
            goal,
            truncated: reach.truncated,
            states: reach.states,
            valuations,
            booleans,
            transitions,
            instance,
        })
    }

    fn witness(&self, state: usize, action: Option<usize>, sig: &Signature, detail: String) -> Witness {
        Witness {
            instance: self.instance.name().to_string(),
            state: self.instance.render_state(&self.states[state]),
            valuation: self.valuations[state].display(sig).to_string(),
            action: action.map(|k| self.instance.actions()[k].label()),
            detail,
        }
    }
}

/// Instance models of a family, sharing one feature set.
#[derive(Debug, Clone)]
pub struct FamilyModel {
    pub name: String,
    pub features: FeatureSet,
    pub cap: usize,
    pub instances: Vec<InstanceModel>,
}

impl FamilyModel {
    pub fn build(name: impl Into<String>, family: Vec<Instance>, f: &FeatureSet, cap: usize) -> Result<Self> {
        let instances = family
            .into_par_iter()
            .map(|inst| InstanceModel::build(inst, f, cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(FamilyModel {
            name: name.into(),
            features: f.clone(),
            cap,
            instances,
        })
    }

    pub fn truncated(&self) -> bool {
        self.instances.iter().any(|m| m.truncated)
    }

    pub fn state_count(&self) -> usize {
        self.instances.iter().map(|m| m.states.len()).sum()
    }

    /// Runs `check` on every instance in parallel and merges in order.
    pub(crate) fn verdict(&self, check: impl Fn(&InstanceModel) -> Vec<Witness> + Sync) -> Verdict {
        self.instances
            .par_iter()
            .map(|m| Verdict::from_instance(check(m), m.truncated, m.states.len()))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Verdict::empty(), Verdict::merge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Verified,
    Refuted,
    InconclusiveTruncated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Verified => "verified",
            Status::Refuted => "refuted",
            Status::InconclusiveTruncated => "inconclusive-truncated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    pub instance: String,
    pub state: String,
    pub valuation: String,
    pub action: Option<String>,
    pub detail: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.instance, self.state, self.valuation)?;
        if let Some(a) = &self.action {
            write!(f, " action {a}")?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Outcome of a bounded check over a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    /// The first counterexamples found, in family order.
    pub witnesses: Vec<Witness>,
    /// Counterexamples found in total (witnesses beyond the kept ones).
    pub counterexamples: usize,
    pub truncated: bool,
    pub instances: usize,
    pub states: usize,
}

const KEPT_WITNESSES: usize = 8;

impl Verdict {
    pub fn empty() -> Self {
        Verdict {
            status: Status::Verified,
            witnesses: Vec::new(),
            counterexamples: 0,
            truncated: false,
            instances: 0,
            states: 0,
        }
    }

    fn from_instance(witnesses: Vec<Witness>, truncated: bool, states: usize) -> Self {
        let mut v = Verdict {
            status: Status::Verified,
            counterexamples: witnesses.len(),
            witnesses,
            truncated,
            instances: 1,
            states,
        };
        v.witnesses.truncate(KEPT_WITNESSES);
        v.status = v.derive_status();
        v
    }

    fn derive_status(&self) -> Status {
        if self.counterexamples > 0 {
            Status::Refuted
        } else if self.truncated {
            Status::InconclusiveTruncated
        } else {
            Status::Verified
        }
    }

    /// Associative combination: refuted dominates, then truncation.
    pub fn merge(mut self, other: Verdict) -> Verdict {
        self.witnesses.extend(other.witnesses);
        self.witnesses.truncate(KEPT_WITNESSES);
        self.counterexamples += other.counterexamples;
        self.truncated |= other.truncated;
        self.instances += other.instances;
        self.states += other.states;
        self.status = self.derive_status();
        self
    }

    pub fn is_verified(&self) -> bool {
        self.status == Status::Verified
    }
}

/// Soundness of one abstract action over a family model.
pub fn check_soundness(abs: &AbstractAction, model: &FamilyModel) -> Verdict {
    let sig = model.features.signature();
    model.verdict(|m| {
        let mut out = Vec::new();
        for (i, succ) in m.transitions.iter().enumerate() {
            if !abs.applicable(m.booleans[i]) {
                continue;
            }
            let before = &m.valuations[i];
            if !succ.iter().any(|&(_, j)| effects_match(abs, sig, before, &m.valuations[j])) {
                out.push(m.witness(i, None, sig, format!("no concrete action is represented by {}", abs.name)));
            }
        }
        out
    })
}

/// Completeness of an action set over a family model.
pub fn check_completeness(actions: &[AbstractAction], model: &FamilyModel) -> Verdict {
    let sig = model.features.signature();
    model.verdict(|m| {
        let mut out = Vec::new();
        for (i, succ) in m.transitions.iter().enumerate() {
            let before = &m.valuations[i];
            let v = m.booleans[i];
            for &(k, j) in succ {
                let covered = actions
                    .iter()
                    .any(|a| a.applicable(v) && effects_match(a, sig, before, &m.valuations[j]));
                if !covered {
                    let detail = format!("successor {}", m.valuations[j].display(sig));
                    out.push(m.witness(i, Some(k), sig, detail));
                }
            }
        }
        out
    })
}

/// The feature-effect signature of a transition: exactly the changes made.
pub fn effect_signature(sig: &Signature, before: &FeatureValuation, after: &FeatureValuation) -> Vec<Effect> {
    let mut eff = Vec::new();
    for var in 0..sig.len() {
        let (x, y) = (before.0[var], after.0[var]);
        if sig.is_numeric(var) {
            if y > x {
                eff.push(Effect::inc(var));
            } else if y < x {
                eff.push(Effect::dec(var));
            }
        } else if x != y {
            eff.push(Effect::set(var, y != 0));
        }
    }
    eff
}
