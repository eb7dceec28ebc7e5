//! Line-oriented run reports: `[section]` headers followed by `key = value`
//! lines, in a fixed order.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    pub name: String,
    pub fields: Vec<(String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Appends to the named section, creating it at the end if needed.
    pub fn push(&mut self, section: &str, key: impl Into<String>, value: impl fmt::Display) {
        let value = value.to_string().replace('\n', " ");
        let key = key.into();
        match self.sections.iter_mut().find(|s| s.name == section) {
            Some(s) => s.fields.push((key, value)),
            None => self.sections.push(Section {
                name: section.to_string(),
                fields: vec![(key, value)],
            }),
        }
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section).and_then(|s| s.get(key))
    }

    pub fn without_section(mut self, name: &str) -> Self {
        self.sections.retain(|s| s.name != name);
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                report.sections.push(Section {
                    name: name.to_string(),
                    fields: Vec::new(),
                });
                continue;
            }
            let Some((k, v)) = line.split_once(" = ") else {
                return Err(Error::syntax(i + 1, 1, "expected `key = value`"));
            };
            let Some(section) = report.sections.last_mut() else {
                return Err(Error::syntax(i + 1, 1, "field outside a section"));
            };
            section.fields.push((k.to_string(), v.to_string()));
        }
        Ok(report)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", s.name)?;
            for (k, v) in &s.fields {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

/// `sha256:<hex>` of the given text.
pub fn digest(text: &str) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())))
}
