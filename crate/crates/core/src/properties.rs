//! Property files (`.props`), one property per line:
//!
//! ```text
//! ctl: <CTL formula>
//! inv: G <p> | G (<p> -> X <q>)
//! forbid <id>: <propositional formula> [; <message>]
//! pattern: absence(<p>) | universality(<p>) | response(<p>, <q>)
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. Patterns use the
//! global scope.

use serde::Serialize;
use thiserror::Error;

use crate::check::{pattern_to_formula, ConsistencyRule, Pattern, Scope};
use crate::formula::{Formula, SafetyFormula};
use crate::smv::SmvProperty;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("property file line {line}: {message}")]
pub struct PropertyParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Property {
    Ctl(Formula),
    Invariant(SafetyFormula),
    Forbid(ConsistencyRule),
    Pattern { pattern: Pattern, formula: Formula },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyEntry {
    pub line: usize,
    pub source: String,
    pub property: Property,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PropertyFile {
    pub entries: Vec<PropertyEntry>,
}

impl PropertyFile {
    pub fn parse(text: &str) -> Result<PropertyFile, PropertyParseError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| PropertyParseError { line, message };
            let property = if let Some(rest) = trimmed.strip_prefix("ctl:") {
                Property::Ctl(Formula::parse(rest).map_err(|e| err(e.to_string()))?)
            } else if let Some(rest) = trimmed.strip_prefix("inv:") {
                Property::Invariant(SafetyFormula::parse(rest).map_err(|e| err(e.to_string()))?)
            } else if let Some(rest) = trimmed.strip_prefix("pattern:") {
                let pattern = parse_pattern(rest.trim()).map_err(err)?;
                let formula = pattern_to_formula(&pattern, &Scope::Globally)
                    .map_err(|e| err(e.to_string()))?;
                Property::Pattern { pattern, formula }
            } else if let Some(rest) = trimmed.strip_prefix("forbid ") {
                let (id, body) = rest
                    .split_once(':')
                    .ok_or_else(|| err("expected 'forbid <id>: <formula>'".into()))?;
                let id = id.trim();
                if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(err(format!("invalid rule id '{id}'")));
                }
                let (body, message) = match body.split_once(';') {
                    Some((b, m)) => (b, m.trim().to_string()),
                    None => (body, String::new()),
                };
                let forbidden = Formula::parse(body).map_err(|e| err(e.to_string()))?;
                if !forbidden.is_propositional() {
                    return Err(err(format!(
                        "forbidden predicate of '{id}' must be propositional"
                    )));
                }
                Property::Forbid(ConsistencyRule {
                    id: id.to_string(),
                    forbidden,
                    message,
                })
            } else {
                return Err(err(format!(
                    "expected 'ctl:', 'inv:', 'forbid <id>:' or 'pattern:', found '{trimmed}'"
                )));
            };
            entries.push(PropertyEntry {
                line,
                source: trimmed.to_string(),
                property,
            });
        }
        Ok(PropertyFile { entries })
    }

    pub fn consistency_rules(&self) -> Vec<ConsistencyRule> {
        self.entries
            .iter()
            .filter_map(|e| match &e.property {
                Property::Forbid(r) => Some(r.clone()),
                _ => None,
            })
            .collect()
    }

    /// Every entry as an exportable property; a forbidden predicate `f`
    /// becomes `AG !f`.
    pub fn smv_properties(&self) -> Vec<SmvProperty> {
        self.entries
            .iter()
            .map(|e| match &e.property {
                Property::Ctl(f) => SmvProperty::Ctl(f.clone()),
                Property::Invariant(f) => SmvProperty::Invariant(f.clone()),
                Property::Forbid(r) => {
                    SmvProperty::Ctl(Formula::ag(Formula::not(r.forbidden.clone())))
                }
                Property::Pattern { formula, .. } => SmvProperty::Ctl(formula.clone()),
            })
            .collect()
    }
}

fn parse_pattern(text: &str) -> Result<Pattern, String> {
    let open = text
        .find('(')
        .ok_or_else(|| format!("expected '<pattern>(...)', found '{text}'"))?;
    let name = text[..open].trim().to_ascii_lowercase();
    let args = text[open + 1..]
        .trim_end()
        .strip_suffix(')')
        .ok_or_else(|| "expected ')' at end of pattern".to_string())?;
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in args.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&args[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&args[start..]);
    let formulas = parts
        .iter()
        .map(|p| Formula::parse(p).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    match (name.as_str(), formulas.as_slice()) {
        ("absence", [p]) => Ok(Pattern::Absence(p.clone())),
        ("universality", [p]) => Ok(Pattern::Universality(p.clone())),
        ("response", [p, q]) => Ok(Pattern::Response(p.clone(), q.clone())),
        ("absence" | "universality", _) => Err(format!("{name} takes one argument")),
        ("response", _) => Err("response takes two arguments".into()),
        _ => Err(format!("unsupported pattern '{name}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_line_kinds() {
        let file = PropertyFile::parse(
            "# case study\nctl: AG !(home=empty & mode=LBP)\ninv: G (a -> X b)\n\nforbid i: home=empty & mode=LBP ; lights by presence in an empty home\npattern: response(fail_LC, !fail_LC)\n",
        )
        .unwrap();
        assert_eq!(file.entries.len(), 4);
        assert_eq!(file.entries[2].line, 5);
        let rules = file.consistency_rules();
        assert_eq!(rules[0].id, "i");
        assert_eq!(rules[0].message, "lights by presence in an empty home");
        match &file.entries[3].property {
            Property::Pattern { formula, .. } => {
                assert_eq!(
                    *formula,
                    Formula::parse("AG (fail_LC -> AF !fail_LC)").unwrap()
                )
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(file.smv_properties().len(), 4);
    }

    #[test]
    fn patterns() {
        assert_eq!(
            parse_pattern("absence(x)").unwrap(),
            Pattern::Absence(Formula::atom("x"))
        );
        assert_eq!(
            parse_pattern("Universality( x )").unwrap(),
            Pattern::Universality(Formula::atom("x"))
        );
        assert!(parse_pattern("precedence(a, b)").is_err());
        assert!(parse_pattern("response(a)").is_err());
    }

    #[test]
    fn errors_cite_the_line() {
        let err = PropertyFile::parse("ctl: true\nctl: AG true\nctl: AG (a &\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = PropertyFile::parse("bogus: x\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = PropertyFile::parse("forbid x: EF a\n").unwrap_err();
        assert!(err.message.contains("propositional"));
        let err = PropertyFile::parse("inv: F a\n").unwrap_err();
        assert!(err.message.contains("unsupported"));
    }

    #[test]
    fn empty_file() {
        assert!(PropertyFile::parse("").unwrap().entries.is_empty());
    }
}
