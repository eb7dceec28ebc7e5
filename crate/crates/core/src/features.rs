//! Boolean and numerical features, their evaluation, and goal binding.
//!
//! Feature-set files:
//!
//! ```text
//! goal-pattern clear($x)
//! feature H  bool atom(holding(_))
//! feature nx num  count-above($x)
//! ```
//!
//! Expressions: `atom(<pattern>)`, `not <bool-expr>`, `count(<pattern>)`,
//! `count-above($x)`, `count-other($x)`, `manhattan(<pattern>, $c1, ...)`
//! (the pattern captures one coordinate per `$c` with `@`), and
//! `blank-detour($t, $tx, $ty)`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::pattern::{AtomPattern, Binding, PatternArg};
use crate::strips::{Atom, Instance, State};
use crate::syntax::{self, split_call};

/// Largest number of features a signature may hold.
pub const MAX_FEATURES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Boolean,
    Numerical,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Boolean => "bool",
            FeatureKind::Numerical => "num",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Atom(AtomPattern),
    Not(Box<Expr>),
    Count(AtomPattern),
    /// Blocks transitively above the block bound to the parameter.
    CountAbove(String),
    /// Blocks neither in the parameter block's tower nor held.
    CountOther(String),
    Manhattan { pattern: AtomPattern, coords: Vec<String> },
    /// Blank moves needed before the tile can step toward its target.
    BlankDetour { tile: String, tx: String, ty: String },
}

fn param_arg(text: &str) -> Option<String> {
    text.strip_prefix('$')
        .filter(|p| syntax::is_symbol(p))
        .map(str::to_string)
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let text = text.trim();
        let bad = |msg: &str| Error::Invalid(format!("feature expression `{text}`: {msg}"));
        if let Some(rest) = text.strip_prefix("not ") {
            let inner = Expr::parse(rest)?;
            if inner.kind() != FeatureKind::Boolean {
                return Err(bad("`not` needs a boolean operand"));
            }
            return Ok(Expr::Not(Box::new(inner)));
        }
        let (head, args) = split_call(text).ok_or_else(|| bad("malformed call"))?;
        let params = |n: usize| -> Result<Vec<String>> {
            if args.len() != n {
                return Err(bad(&format!("expected {n} argument(s)")));
            }
            args.iter()
                .map(|a| param_arg(a).ok_or_else(|| bad("arguments must be parameters `$p`")))
                .collect()
        };
        let single_pattern = || -> Result<AtomPattern> {
            match args.as_slice() {
                [p] => AtomPattern::parse(p),
                _ => Err(bad("expected one atom pattern")),
            }
        };
        match head {
            "atom" => {
                let p = single_pattern()?;
                if p.captures() > 0 {
                    return Err(bad("`@` is only meaningful in manhattan"));
                }
                Ok(Expr::Atom(p))
            }
            "count" => Ok(Expr::Count(single_pattern()?)),
            "count-above" => Ok(Expr::CountAbove(params(1)?.remove(0))),
            "count-other" => Ok(Expr::CountOther(params(1)?.remove(0))),
            "manhattan" => {
                let (first, rest) = args.split_first().ok_or_else(|| bad("missing pattern"))?;
                let pattern = AtomPattern::parse(first)?;
                let coords = rest
                    .iter()
                    .map(|a| param_arg(a).ok_or_else(|| bad("coordinates must be parameters `$p`")))
                    .collect::<Result<Vec<_>>>()?;
                if coords.is_empty() || pattern.captures() != coords.len() {
                    return Err(bad("need one `@` capture per coordinate parameter"));
                }
                Ok(Expr::Manhattan { pattern, coords })
            }
            "blank-detour" => {
                let mut p = params(3)?;
                let ty = p.pop().unwrap();
                let tx = p.pop().unwrap();
                let tile = p.pop().unwrap();
                Ok(Expr::BlankDetour { tile, tx, ty })
            }
            _ => Err(bad("unknown function")),
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Expr::Atom(_) | Expr::Not(_) => FeatureKind::Boolean,
            _ => FeatureKind::Numerical,
        }
    }

    /// Goal parameters mentioned by the expression.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            Expr::Atom(p) | Expr::Count(p) => out.extend(p.params().map(str::to_string)),
            Expr::Not(e) => out = e.params(),
            Expr::CountAbove(x) | Expr::CountOther(x) => {
                out.insert(x.clone());
            }
            Expr::Manhattan { pattern, coords } => {
                out.extend(pattern.params().map(str::to_string));
                out.extend(coords.iter().cloned());
            }
            Expr::BlankDetour { tile, tx, ty } => {
                out.extend([tile.clone(), tx.clone(), ty.clone()]);
            }
        }
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Atom(p) => write!(f, "atom({p})"),
            Expr::Not(e) => write!(f, "not {e}"),
            Expr::Count(p) => write!(f, "count({p})"),
            Expr::CountAbove(x) => write!(f, "count-above(${x})"),
            Expr::CountOther(x) => write!(f, "count-other(${x})"),
            Expr::Manhattan { pattern, coords } => {
                write!(f, "manhattan({pattern}")?;
                for c in coords {
                    write!(f, ", ${c}")?;
                }
                write!(f, ")")
            }
            Expr::BlankDetour { tile, tx, ty } => write!(f, "blank-detour(${tile}, ${tx}, ${ty})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Feature {
    pub name: String,
    pub expr: Expr,
}

impl Feature {
    pub fn new(name: impl Into<String>, expr: Expr) -> Self {
        Feature {
            name: name.into(),
            expr,
        }
    }

    pub fn kind(&self) -> FeatureKind {
        self.expr.kind()
    }

    /// φ_p as 0/1 for booleans, φ_n for numericals.
    pub fn evaluate(&self, inst: &Instance, state: &State, binding: &Binding) -> Result<u64> {
        eval(&self.expr, inst, state, binding).map_err(|e| match e {
            Error::FeatureDomain { message, .. } => Error::FeatureDomain {
                feature: self.name.clone(),
                message,
            },
            other => other,
        })
    }
}

/// Ordered feature names: booleans first, then numericals. Variable `i` of
/// a valuation refers to `names[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    names: Vec<String>,
    booleans: usize,
}

impl Signature {
    pub fn new<S: Into<String>>(
        booleans: impl IntoIterator<Item = S>,
        numericals: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let mut names: Vec<String> = booleans.into_iter().map(Into::into).collect();
        let nb = names.len();
        names.extend(numericals.into_iter().map(Into::into));
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Invalid("duplicate feature name".into()));
        }
        if names.len() > MAX_FEATURES {
            return Err(Error::Invalid(format!(
                "at most {MAX_FEATURES} features are supported"
            )));
        }
        if let Some(bad) = names.iter().find(|n| !syntax::is_symbol(n)) {
            return Err(Error::Invalid(format!("invalid feature name `{bad}`")));
        }
        Ok(Signature {
            names,
            booleans: nb,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn kind(&self, var: usize) -> FeatureKind {
        if var < self.booleans {
            FeatureKind::Boolean
        } else {
            FeatureKind::Numerical
        }
    }

    pub fn is_numeric(&self, var: usize) -> bool {
        var >= self.booleans
    }

    pub fn booleans(&self) -> impl Iterator<Item = usize> {
        0..self.booleans
    }

    pub fn numericals(&self) -> impl Iterator<Item = usize> {
        self.booleans..self.names.len()
    }

    pub fn num_booleans(&self) -> usize {
        self.booleans
    }

    pub fn num_numericals(&self) -> usize {
        self.names.len() - self.booleans
    }

    /// Number of boolean valuations, 2^|F|.
    pub fn valuation_count(&self) -> u64 {
        1u64 << self.names.len()
    }
}

/// Boolean valuation φ_B: bit `i` is the truth of `p` for a boolean feature
/// and of `n=0` for a numerical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BoolValuation(pub u64);

impl BoolValuation {
    pub fn get(self, var: usize) -> bool {
        self.0 >> var & 1 == 1
    }

    pub fn with(self, var: usize, value: bool) -> Self {
        if value {
            BoolValuation(self.0 | 1 << var)
        } else {
            BoolValuation(self.0 & !(1 << var))
        }
    }

    pub fn display(self, sig: &Signature) -> ValuationDisplay<'_> {
        ValuationDisplay { val: self, sig }
    }
}

pub struct ValuationDisplay<'a> {
    val: BoolValuation,
    sig: &'a Signature,
}

impl fmt::Display for ValuationDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.sig.len())
            .map(|v| literal_text(self.sig, v, self.val.get(v)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `p`, `!p`, `n=0` or `n>0`.
pub fn literal_text(sig: &Signature, var: usize, holds: bool) -> String {
    let name = sig.name(var);
    match (sig.is_numeric(var), holds) {
        (false, true) => name.to_string(),
        (false, false) => format!("!{name}"),
        (true, true) => format!("{name}=0"),
        (true, false) => format!("{name}>0"),
    }
}

/// Feature valuation φ_F: 0/1 for booleans, counts for numericals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureValuation(pub Vec<u64>);

impl FeatureValuation {
    pub fn to_boolean(&self, sig: &Signature) -> BoolValuation {
        let mut bits = 0u64;
        for (v, &x) in self.0.iter().enumerate() {
            let bit = if sig.is_numeric(v) { x == 0 } else { x != 0 };
            if bit {
                bits |= 1 << v;
            }
        }
        BoolValuation(bits)
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a FeatureValuation, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let parts: Vec<String> = self
                    .0
                     .0
                    .iter()
                    .enumerate()
                    .map(|(v, &x)| {
                        if self.1.is_numeric(v) {
                            format!("{}={x}", self.1.name(v))
                        } else {
                            literal_text(self.1, v, x != 0)
                        }
                    })
                    .collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
        D(self, sig)
    }
}

/// F = ⟨B, N⟩ plus the generic goal used to bind parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    booleans: Vec<Feature>,
    numericals: Vec<Feature>,
    goal_pattern: Vec<AtomPattern>,
    signature: Signature,
}

impl FeatureSet {
    pub fn new(features: Vec<Feature>, goal_pattern: Vec<AtomPattern>) -> Result<Self> {
        let (booleans, numericals): (Vec<Feature>, Vec<Feature>) = features
            .into_iter()
            .partition(|f| f.kind() == FeatureKind::Boolean);
        let signature = Signature::new(
            booleans.iter().map(|f| f.name.clone()),
            numericals.iter().map(|f| f.name.clone()),
        )?;
        Ok(FeatureSet {
            booleans,
            numericals,
            goal_pattern,
            signature,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        let mut goal_pattern = Vec::new();
        for line in syntax::lines(text)? {
            match line.keyword() {
                "goal-pattern" => {
                    for tok in line.rest() {
                        let p = AtomPattern::parse(tok.text).map_err(|e| line.error(tok, e.to_string()))?;
                        goal_pattern.push(p);
                    }
                }
                "feature" => {
                    let rest = line.rest();
                    if rest.len() < 3 {
                        return Err(line.error_at_end("expected `feature <name> bool|num <expr>`"));
                    }
                    let name = rest[0].text;
                    if !syntax::is_symbol(name) {
                        return Err(line.error(&rest[0], "invalid feature name"));
                    }
                    let kind = match rest[1].text {
                        "bool" => FeatureKind::Boolean,
                        "num" => FeatureKind::Numerical,
                        _ => return Err(line.error(&rest[1], "expected `bool` or `num`")),
                    };
                    let text: Vec<&str> = rest[2..].iter().map(|t| t.text).collect();
                    let expr = Expr::parse(&text.join(" ")).map_err(|e| line.error(&rest[2], e.to_string()))?;
                    if expr.kind() != kind {
                        return Err(Error::KindMismatch(name.to_string()));
                    }
                    if features.iter().any(|f: &Feature| f.name == name) {
                        return Err(line.error(&rest[0], format!("duplicate feature `{name}`")));
                    }
                    features.push(Feature::new(name, expr));
                }
                other => return Err(line.error(&line.tokens[0], format!("unknown keyword `{other}`"))),
            }
        }
        let set = FeatureSet::new(features, goal_pattern)?;
        Ok(set)
    }

    pub fn print(&self) -> String {
        let mut out = String::new();
        if !self.goal_pattern.is_empty() {
            let pats: Vec<String> = self.goal_pattern.iter().map(ToString::to_string).collect();
            out.push_str(&format!("goal-pattern {}\n", pats.join(" ")));
        }
        for f in self.features() {
            out.push_str(&format!("feature {} {} {}\n", f.name, f.kind(), f.expr));
        }
        out
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn goal_pattern(&self) -> &[AtomPattern] {
        &self.goal_pattern
    }

    pub fn booleans(&self) -> &[Feature] {
        &self.booleans
    }

    pub fn numericals(&self) -> &[Feature] {
        &self.numericals
    }

    /// All features in signature order.
    pub fn features(&self) -> impl Iterator<Item = &Feature> {
        self.booleans.iter().chain(&self.numericals)
    }

    pub fn feature(&self, name: &str) -> Result<&Feature> {
        self.features()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.signature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signature.is_empty()
    }

    /// Parameters referenced by the features or the goal pattern.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.features().flat_map(|f| f.expr.params()).collect();
        for p in &self.goal_pattern {
            out.extend(p.params().map(str::to_string));
        }
        out
    }

    /// Binds the goal parameters of `inst` and checks the binding covers
    /// every parameter the features use.
    pub fn bind(&self, inst: &Instance) -> Result<Binding> {
        let b = bind_goal_parameters(&self.goal_pattern, inst)?;
        for p in self.params() {
            b.require(&p)?;
        }
        Ok(b)
    }

    pub fn valuation(&self, inst: &Instance, state: &State, binding: &Binding) -> Result<FeatureValuation> {
        self.features()
            .map(|f| f.evaluate(inst, state, binding))
            .collect::<Result<Vec<_>>>()
            .map(FeatureValuation)
    }

    pub fn boolean_valuation(&self, inst: &Instance, state: &State, binding: &Binding) -> Result<BoolValuation> {
        boolean_valuation(self, inst, state, binding)
    }
}

/// φ_B(s): `n` maps to `n=0` iff its value is zero.
pub fn boolean_valuation(f: &FeatureSet, inst: &Instance, state: &State, binding: &Binding) -> Result<BoolValuation> {
    Ok(f.valuation(inst, state, binding)?.to_boolean(f.signature()))
}

pub fn evaluate(f: &Feature, inst: &Instance, state: &State, binding: &Binding) -> Result<u64> {
    f.evaluate(inst, state, binding)
}

/// Finds the unique σ with σ(pattern) ⊆ goal, merged with the instance's
/// explicit `param` bindings.
pub fn bind_goal_parameters(pattern: &[AtomPattern], inst: &Instance) -> Result<Binding> {
    let goal: Vec<&Atom> = inst.goal_atoms().collect();
    let mut found: BTreeSet<Binding> = BTreeSet::new();
    unify_all(pattern, &goal, inst.params().clone(), &mut found);
    let shown = || {
        pattern
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    match found.len() {
        0 => Err(Error::NoMatch(shown())),
        1 => Ok(found.into_iter().next().unwrap()),
        count => Err(Error::AmbiguousMatch {
            pattern: shown(),
            count,
        }),
    }
}

fn unify_all(pattern: &[AtomPattern], goal: &[&Atom], binding: Binding, out: &mut BTreeSet<Binding>) {
    let Some((first, rest)) = pattern.split_first() else {
        out.insert(binding);
        return;
    };
    for atom in goal {
        if let Some(b) = unify(first, atom, &binding) {
            unify_all(rest, goal, b, out);
        }
    }
}

fn unify(pattern: &AtomPattern, atom: &Atom, binding: &Binding) -> Option<Binding> {
    if pattern.predicate != atom.predicate || pattern.args.len() != atom.args.len() {
        return None;
    }
    let mut b = binding.clone();
    for (p, a) in pattern.args.iter().zip(&atom.args) {
        match p {
            PatternArg::Any | PatternArg::Capture => {}
            PatternArg::Const(c) if c == a => {}
            PatternArg::NotConst(c) if c != a => {}
            PatternArg::Param(x) => match b.get(x) {
                Some(v) if v != a => return None,
                Some(_) => {}
                None => b.insert(x.clone(), a.clone()),
            },
            PatternArg::NotParam(x) => match b.get(x) {
                Some(v) if v == a => return None,
                Some(_) => {}
                None => return None,
            },
            _ => return None,
        }
    }
    Some(b)
}

fn domain_error(message: impl Into<String>) -> Error {
    Error::FeatureDomain {
        feature: String::new(),
        message: message.into(),
    }
}

fn eval(expr: &Expr, inst: &Instance, state: &State, b: &Binding) -> Result<u64> {
    match expr {
        Expr::Atom(p) => {
            for atom in inst.atoms_of(state) {
                if p.matches(atom, b)?.is_some() {
                    return Ok(1);
                }
            }
            Ok(0)
        }
        Expr::Not(e) => Ok(1 - eval(e, inst, state, b)?),
        Expr::Count(p) => {
            let mut n = 0;
            for atom in inst.atoms_of(state) {
                if p.matches(atom, b)?.is_some() {
                    n += 1;
                }
            }
            Ok(n)
        }
        Expr::CountAbove(x) => {
            let x = b.require(x)?;
            Ok(Towers::of(inst, state)?.above(x) as u64)
        }
        Expr::CountOther(x) => {
            let x = b.require(x)?;
            let t = Towers::of(inst, state)?;
            let tower = if t.held == Some(x) {
                1
            } else {
                1 + t.above(x) + t.below(x)
            };
            let held_other = usize::from(t.held.is_some_and(|h| h != x));
            let total = inst.objects().len();
            total
                .checked_sub(tower + held_other)
                .map(|m| m as u64)
                .ok_or_else(|| domain_error("more blocks in towers than objects"))
        }
        Expr::Manhattan { pattern, coords } => {
            let pos = unique_capture(pattern, inst, state, b)?;
            let mut sum = 0u64;
            for (c, p) in pos.iter().zip(coords) {
                let target = parse_coord(b.require(p)?)?;
                sum += c.abs_diff(target);
            }
            Ok(sum)
        }
        Expr::BlankDetour { tile, tx, ty } => blank_detour(inst, state, b, tile, tx, ty),
    }
}

fn parse_coord(text: &str) -> Result<i64> {
    text.parse()
        .map_err(|_| domain_error(format!("`{text}` is not an integer coordinate")))
}

fn unique_capture(pattern: &AtomPattern, inst: &Instance, state: &State, b: &Binding) -> Result<Vec<i64>> {
    let mut found: Option<Vec<i64>> = None;
    for atom in inst.atoms_of(state) {
        if let Some(caps) = pattern.matches(atom, b)? {
            if found.is_some() {
                return Err(domain_error(format!("several atoms match {pattern}")));
            }
            found = Some(caps.into_iter().map(parse_coord).collect::<Result<_>>()?);
        }
    }
    found.ok_or_else(|| domain_error(format!("no atom matches {pattern}")))
}

/// Blocksworld structure of a state: `on`, `holding`.
struct Towers<'a> {
    above_of: HashMap<&'a str, &'a str>,
    below_of: HashMap<&'a str, &'a str>,
    held: Option<&'a str>,
}

impl<'a> Towers<'a> {
    fn of(inst: &'a Instance, state: &'a State) -> Result<Self> {
        let mut t = Towers {
            above_of: HashMap::new(),
            below_of: HashMap::new(),
            held: None,
        };
        for atom in inst.atoms_of(state) {
            match (atom.predicate.as_str(), atom.args.as_slice()) {
                ("on", [a, b]) => {
                    if t.above_of.insert(b, a).is_some() || t.below_of.insert(a, b).is_some() {
                        return Err(domain_error("state is not a set of towers"));
                    }
                }
                ("holding", [a]) => {
                    if t.held.replace(a).is_some() {
                        return Err(domain_error("more than one block held"));
                    }
                }
                _ => {}
            }
        }
        Ok(t)
    }

    fn chain(map: &HashMap<&'a str, &'a str>, start: &str) -> usize {
        let mut n = 0;
        let mut cur = start;
        while let Some(next) = map.get(cur) {
            n += 1;
            cur = next;
            if n > map.len() {
                break;
            }
        }
        n
    }

    fn above(&self, x: &str) -> usize {
        Self::chain(&self.above_of, x)
    }

    fn below(&self, x: &str) -> usize {
        Self::chain(&self.below_of, x)
    }
}

fn blank_detour(inst: &Instance, state: &State, b: &Binding, tile: &str, tx: &str, ty: &str) -> Result<u64> {
    let tile = b.require(tile)?;
    let target = (parse_coord(b.require(tx)?)?, parse_coord(b.require(ty)?)?);
    let mut cells: HashSet<(i64, i64)> = HashSet::new();
    let mut tile_at = None;
    let mut blank = None;
    for atom in inst.atoms_of(state) {
        match (atom.predicate.as_str(), atom.args.as_slice()) {
            ("at", [t, x, y]) => {
                let c = (parse_coord(x)?, parse_coord(y)?);
                cells.insert(c);
                if t == tile {
                    tile_at = Some(c);
                }
            }
            ("atB", [x, y]) => {
                let c = (parse_coord(x)?, parse_coord(y)?);
                cells.insert(c);
                if blank.replace(c).is_some() {
                    return Err(domain_error("more than one blank"));
                }
            }
            _ => {}
        }
    }
    let tile_at = tile_at.ok_or_else(|| domain_error(format!("tile {tile} is not on the board")))?;
    let blank = blank.ok_or_else(|| domain_error("state has no blank"))?;
    let dist = |a: (i64, i64), c: (i64, i64)| a.0.abs_diff(c.0) + a.1.abs_diff(c.1);
    let steps = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let add = |c: (i64, i64), d: (i64, i64)| (c.0 + d.0, c.1 + d.1);

    let goals: HashSet<(i64, i64)> = if tile_at != target {
        // Cells the tile could move into while getting closer to the target.
        steps
            .iter()
            .map(|&d| add(tile_at, d))
            .filter(|c| cells.contains(c) && dist(*c, target) < dist(tile_at, target))
            .collect()
    } else {
        // Tile already placed: distance to leave its neighbourhood.
        cells
            .iter()
            .copied()
            .filter(|&c| c != tile_at && dist(c, tile_at) > 1)
            .collect()
    };
    if goals.is_empty() {
        return if tile_at == target {
            Ok(0)
        } else {
            Err(domain_error("no cell brings the tile closer to its target"))
        };
    }
    let mut seen = HashSet::from([blank]);
    let mut queue = VecDeque::from([(blank, 0u64)]);
    while let Some((c, d)) = queue.pop_front() {
        if goals.contains(&c) {
            return Ok(d);
        }
        for &s in &steps {
            let n = add(c, s);
            if n != tile_at && cells.contains(&n) && seen.insert(n) {
                queue.push_back((n, d + 1));
            }
        }
    }
    Err(domain_error("blank cannot reach the tile without crossing it"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{blocksworld, grid_instance, slide_instance};
    use crate::strips::InstanceBuilder;

    fn atoms(inst: &Instance, text: &[&str]) -> State {
        let list: Vec<Atom> = text
            .iter()
            .map(|t| {
                let (h, a) = split_call(t).unwrap();
                Atom::new(h, a)
            })
            .collect();
        inst.state_from(&list).unwrap()
    }

    fn x_is(obj: &str) -> Binding {
        [("x", obj)].into_iter().collect()
    }

    fn bw(n: usize, towers: &[Vec<usize>]) -> Instance {
        blocksworld("t", n, &towers.to_vec()).unwrap().build().unwrap()
    }

    #[test]
    fn count_above_on_three_tower() {
        let inst = bw(3, &[vec![0, 1, 2]]);
        let f = Feature::new("nx", Expr::parse("count-above($x)").unwrap());
        let s = atoms(&inst, &["ontable(a)", "on(b,a)", "on(c,b)", "clear(c)", "armempty"]);
        assert_eq!(f.evaluate(&inst, &s, &x_is("a")).unwrap(), 2);
        assert_eq!(f.evaluate(&inst, &s, &x_is("c")).unwrap(), 0);
    }

    #[test]
    fn holding_feature_false_with_empty_arm() {
        let inst = bw(2, &[vec![0, 1]]);
        let h = Feature::new("H", Expr::parse("atom(holding(_))").unwrap());
        assert_eq!(h.evaluate(&inst, inst.init(), &Binding::new()).unwrap(), 0);
    }

    #[test]
    fn count_other_by_hand() {
        // a-b-c tower (x = a), d and e elsewhere.
        let inst = bw(5, &[vec![0, 1, 2], vec![3], vec![4]]);
        let m = Feature::new("mx", Expr::parse("count-other($x)").unwrap());
        assert_eq!(m.evaluate(&inst, inst.init(), &x_is("a")).unwrap(), 2);
        let held = atoms(&inst, &["ontable(a)", "on(b,a)", "on(c,b)", "clear(c)", "ontable(d)", "holding(e)"]);
        assert_eq!(m.evaluate(&inst, &held, &x_is("a")).unwrap(), 1);
        let x_held = atoms(&inst, &["holding(a)", "ontable(b)", "on(c,b)", "clear(c)", "ontable(d)", "ontable(e)"]);
        assert_eq!(m.evaluate(&inst, &x_held, &x_is("a")).unwrap(), 4);
    }

    #[test]
    fn boolean_valuation_of_qclear_init() {
        let f = FeatureSet::parse("goal-pattern clear($x)\nfeature H bool atom(holding(_))\nfeature nx num count-above($x)\n").unwrap();
        let inst = crate::generators::clear_instance(3, &vec![vec![0, 1, 2]], 0).unwrap();
        let b = f.bind(&inst).unwrap();
        let v = f.boolean_valuation(&inst, inst.init(), &b).unwrap();
        assert_eq!(v.display(f.signature()).to_string(), "{!H, nx>0}");
    }

    #[test]
    fn goal_binding_cases() {
        let base = || InstanceBuilder::new("g", "blocksworld").objects(["a", "b", "c"]);
        let on = AtomPattern::parse("on($x,$y)").unwrap();
        let one = base().goal([Atom::new("on", ["a", "b"])]).build().unwrap();
        let b = bind_goal_parameters(std::slice::from_ref(&on), &one).unwrap();
        assert_eq!(b.get("x"), Some("a"));
        assert_eq!(b.get("y"), Some("b"));

        let two = base()
            .goal([Atom::new("on", ["a", "b"]), Atom::new("on", ["b", "c"])])
            .build()
            .unwrap();
        assert_eq!(
            bind_goal_parameters(std::slice::from_ref(&on), &two).unwrap_err(),
            Error::AmbiguousMatch {
                pattern: "on($x,$y)".into(),
                count: 2
            }
        );
        let clear = AtomPattern::parse("clear($x)").unwrap();
        assert!(matches!(
            bind_goal_parameters(&[clear], &one),
            Err(Error::NoMatch(_))
        ));
    }

    #[test]
    fn manhattan_on_grid() {
        let g = grid_instance(4, 3, (1, 3), (4, 1)).unwrap();
        let f = FeatureSet::parse(
            "goal-pattern at($gx,$gy)\nfeature dX num manhattan(at(@,_), $gx)\nfeature dY num manhattan(at(_,@), $gy)\n",
        )
        .unwrap();
        let b = f.bind(&g).unwrap();
        assert_eq!(f.valuation(&g, g.init(), &b).unwrap(), FeatureValuation(vec![3, 2]));
    }

    #[test]
    fn blank_detour_cases() {
        let f = Feature::new("db", Expr::parse("blank-detour($t,$tx,$ty)").unwrap());
        let bind = |t: &str, x: &str, y: &str| -> Binding { [("t", t), ("tx", x), ("ty", y)].into_iter().collect() };
        // Row-major 3x3: t1 at (1,1), blank at (3,3).
        let inst = slide_instance(3, 3, &[1, 2, 3, 4, 5, 6, 7, 8, 0], 1, (3, 1)).unwrap();
        // Blank must reach (2,1): 3 steps avoiding (1,1).
        assert_eq!(f.evaluate(&inst, inst.init(), &bind("t1", "3", "1")).unwrap(), 3);
        // Both (2,1) and (1,2) bring t1 closer; each is 3 moves away.
        assert_eq!(f.evaluate(&inst, inst.init(), &bind("t1", "3", "3")).unwrap(), 3);
        // Tile placed at (1,1): blank at (3,3) is already non-adjacent.
        assert_eq!(f.evaluate(&inst, inst.init(), &bind("t1", "1", "1")).unwrap(), 0);
        // t8 at (2,3) next to the blank; target (3,3) is where the blank is.
        assert_eq!(f.evaluate(&inst, inst.init(), &bind("t8", "3", "3")).unwrap(), 0);
    }

    #[test]
    fn kind_mismatch_and_unknown_function() {
        assert_eq!(
            FeatureSet::parse("feature n bool count(on(_,_))").unwrap_err(),
            Error::KindMismatch("n".into())
        );
        assert!(FeatureSet::parse("feature n num frobnicate($x)").is_err());
    }

    #[test]
    fn feature_file_round_trips() {
        let text = "goal-pattern on($x,$y)\nfeature X bool atom(holding($x))\nfeature H bool atom(holding(!$x))\nfeature nx num count-above($x)\nfeature dX num manhattan(at(@,_), $gx)\nfeature nb bool not atom(holding(_))\n";
        let f = FeatureSet::parse(text).unwrap();
        assert_eq!(FeatureSet::parse(&f.print()).unwrap(), f);
        assert_eq!(f.signature().names(), ["X", "H", "nb", "nx", "dX"]);
    }
}
