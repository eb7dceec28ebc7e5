//! Atom patterns with goal parameters, wildcards and captures.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::strips::Atom;
use crate::syntax::{is_symbol, split_call};

/// Assignment of goal parameters (`x`, `y`, ...) to instance objects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding(BTreeMap<String, String>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, param: &str) -> Option<&str> {
        self.0.get(param).map(String::as_str)
    }

    pub fn require(&self, param: &str) -> Result<&str> {
        self.get(param)
            .ok_or_else(|| Error::UnboundParameter(param.to_string()))
    }

    pub fn insert(&mut self, param: impl Into<String>, object: impl Into<String>) {
        self.0.insert(param.into(), object.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Binding {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Binding(
            iter.into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        )
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternArg {
    /// `_`
    Any,
    /// `@`: matches anything and records the argument.
    Capture,
    Const(String),
    /// `$x`
    Param(String),
    /// `!a`
    NotConst(String),
    /// `!$x`
    NotParam(String),
}

impl PatternArg {
    fn parse(text: &str) -> Option<Self> {
        match text {
            "_" => Some(PatternArg::Any),
            "@" => Some(PatternArg::Capture),
            _ => {
                let (negated, body) = match text.strip_prefix('!') {
                    Some(rest) => (true, rest),
                    None => (false, text),
                };
                let (param, name) = match body.strip_prefix('$') {
                    Some(rest) => (true, rest),
                    None => (false, body),
                };
                if !is_symbol(name) {
                    return None;
                }
                let name = name.to_string();
                Some(match (negated, param) {
                    (false, false) => PatternArg::Const(name),
                    (false, true) => PatternArg::Param(name),
                    (true, false) => PatternArg::NotConst(name),
                    (true, true) => PatternArg::NotParam(name),
                })
            }
        }
    }

    fn param(&self) -> Option<&str> {
        match self {
            PatternArg::Param(p) | PatternArg::NotParam(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for PatternArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternArg::Any => write!(f, "_"),
            PatternArg::Capture => write!(f, "@"),
            PatternArg::Const(c) => write!(f, "{c}"),
            PatternArg::Param(p) => write!(f, "${p}"),
            PatternArg::NotConst(c) => write!(f, "!{c}"),
            PatternArg::NotParam(p) => write!(f, "!${p}"),
        }
    }
}

/// A pattern such as `holding(!$x)` or `at($t,@,@)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomPattern {
    pub predicate: String,
    pub args: Vec<PatternArg>,
}

impl AtomPattern {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed atom pattern `{text}`"));
        let (head, args) = split_call(text).ok_or_else(bad)?;
        if !is_symbol(head) {
            return Err(bad());
        }
        let args = args
            .into_iter()
            .map(|a| PatternArg::parse(a).ok_or_else(bad))
            .collect::<Result<Vec<_>>>()?;
        Ok(AtomPattern {
            predicate: head.to_string(),
            args,
        })
    }

    /// Parameters mentioned by the pattern, in argument order.
    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(PatternArg::param)
    }

    pub fn captures(&self) -> usize {
        self.args
            .iter()
            .filter(|a| matches!(a, PatternArg::Capture))
            .count()
    }

    /// Matches `atom` under `binding`, returning the captured arguments.
    pub fn matches<'a>(&self, atom: &'a Atom, binding: &Binding) -> Result<Option<Vec<&'a str>>> {
        if atom.predicate != self.predicate || atom.args.len() != self.args.len() {
            return Ok(None);
        }
        let mut captured = Vec::new();
        for (pat, arg) in self.args.iter().zip(&atom.args) {
            let ok = match pat {
                PatternArg::Any => true,
                PatternArg::Capture => {
                    captured.push(arg.as_str());
                    true
                }
                PatternArg::Const(c) => c == arg,
                PatternArg::NotConst(c) => c != arg,
                PatternArg::Param(p) => binding.require(p)? == arg,
                PatternArg::NotParam(p) => binding.require(p)? != arg,
            };
            if !ok {
                return Ok(None);
            }
        }
        Ok(Some(captured))
    }

    /// Instantiates a pattern made only of constants and parameters.
    pub fn instantiate(&self, binding: &Binding) -> Result<Atom> {
        let args = self
            .args
            .iter()
            .map(|a| match a {
                PatternArg::Const(c) => Ok(c.clone()),
                PatternArg::Param(p) => binding.require(p).map(str::to_string),
                other => Err(Error::Invalid(format!(
                    "pattern argument `{other}` cannot be instantiated"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Atom::new(&self.predicate, args))
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            let parts: Vec<String> = self.args.iter().map(ToString::to_string).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negated_parameter_excludes_bound_object() {
        let p = AtomPattern::parse("holding(!$x)").unwrap();
        let b: Binding = [("x", "a")].into_iter().collect();
        assert!(p.matches(&Atom::new("holding", ["b"]), &b).unwrap().is_some());
        assert!(p.matches(&Atom::new("holding", ["a"]), &b).unwrap().is_none());
    }

    #[test]
    fn captures_are_returned_in_order() {
        let p = AtomPattern::parse("at($t,@,@)").unwrap();
        let b: Binding = [("t", "t3")].into_iter().collect();
        let atom = Atom::new("at", ["t3", "1", "2"]);
        assert_eq!(p.matches(&atom, &b).unwrap(), Some(vec!["1", "2"]));
        assert_eq!(p.captures(), 2);
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let p = AtomPattern::parse("clear($x)").unwrap();
        let err = p
            .matches(&Atom::new("clear", ["a"]), &Binding::new())
            .unwrap_err();
        assert_eq!(err, Error::UnboundParameter("x".into()));
    }
}
