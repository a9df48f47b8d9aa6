//! Export of a composed LTS to the NuSMV input language.
//!
//! The LTS is flattened into a single `main` module:
//!
//! ```text
//! MODULE main
//! VAR
//!   state : { s_0_<locals>, s_1_<locals>, ... };
//! DEFINE
//!   p_<prop> := state = s_i | state = s_j ...;
//! INIT
//!   state = s_0_<locals>
//! TRANS
//!   (state = s_a & next(state) = s_b)
//!   | ...
//! CTLSPEC <formula>
//! LTLSPEC G <formula>
//! ```
//!
//! State names are `s_<canonical index>_` followed by the mangled local
//! state names joined by `__`; the index alone keeps them distinct.
//! Proposition names are `p_` plus the mangled proposition. Mangling maps
//! `=` to `_eq_` and `-` to `_`; any other character outside
//! `[A-Za-z0-9_]` becomes `_x<hex>_`. If two propositions still mangle to
//! the same name, later ones (in sorted order) get a `_<n>` suffix, so the
//! mapping is injective within one document.
//!
//! Edges are emitted once per (source, target) pair because the event
//! labels are not part of the exported model. Deadlock states get a
//! self-loop so the relation is total, matching the internal semantics.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::compose::CompositeLts;
use crate::formula::{Formula, SafetyFormula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmvError {
    #[error("cannot export an empty model")]
    EmptyModel,
    #[error("unknown proposition '{0}'")]
    UnknownProposition(String),
}

/// A property to export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SmvProperty {
    Ctl(Formula),
    Invariant(SafetyFormula),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmvDocument {
    pub text: String,
    pub property_count: usize,
}

/// Applies the character mangling (without any prefix).
pub fn mangle(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            '=' => out.push_str("_eq_"),
            '-' => out.push('_'),
            c if c.is_ascii_alphanumeric() || c == '_' => out.push(c),
            c => out.push_str(&format!("_x{:x}_", c as u32)),
        }
    }
    out
}

/// Emitted identifier per proposition.
pub fn proposition_names(props: &BTreeSet<String>) -> BTreeMap<String, String> {
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for p in props {
        let base = format!("p_{}", mangle(p));
        let mut name = base.clone();
        let mut n = 1;
        while used.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        used.insert(name.clone());
        out.insert(p.clone(), name);
    }
    out
}

/// Emitted identifier per canonical state index.
pub fn state_names(lts: &CompositeLts) -> Vec<String> {
    lts.states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let locals: Vec<String> = s.parts.iter().map(|(_, l)| mangle(l)).collect();
            format!("s_{i}_{}", locals.join("__"))
        })
        .collect()
}

fn render(f: &Formula, names: &BTreeMap<String, String>) -> String {
    use Formula::*;
    let r = |x: &Formula| render(x, names);
    match f {
        True => "TRUE".into(),
        False => "FALSE".into(),
        Atom(p) => names[p].clone(),
        Not(a) => format!("!{}", r(a)),
        And(a, b) => format!("({} & {})", r(a), r(b)),
        Or(a, b) => format!("({} | {})", r(a), r(b)),
        Implies(a, b) => format!("({} -> {})", r(a), r(b)),
        EX(a) => format!("EX {}", r(a)),
        EF(a) => format!("EF {}", r(a)),
        EG(a) => format!("EG {}", r(a)),
        AX(a) => format!("AX {}", r(a)),
        AF(a) => format!("AF {}", r(a)),
        AG(a) => format!("AG {}", r(a)),
        EU(a, b) => format!("E [ {} U {} ]", r(a), r(b)),
        AU(a, b) => format!("A [ {} U {} ]", r(a), r(b)),
    }
}

fn render_safety(f: &SafetyFormula, names: &BTreeMap<String, String>) -> String {
    match f {
        SafetyFormula::Always(p) => format!("G {}", render(p, names)),
        SafetyFormula::AlwaysNext { pre, post } => {
            format!("G ({} -> X {})", render(pre, names), render(post, names))
        }
    }
}

/// Renders the LTS and properties as a NuSMV document.
pub fn export_smv(lts: &CompositeLts, properties: &[SmvProperty]) -> Result<SmvDocument, SmvError> {
    if lts.is_empty() {
        return Err(SmvError::EmptyModel);
    }
    for p in properties {
        let atoms = match p {
            SmvProperty::Ctl(f) => f.atoms(),
            SmvProperty::Invariant(f) => f.atoms(),
        };
        if let Some(a) = atoms.into_iter().find(|a| !lts.propositions().contains(*a)) {
            return Err(SmvError::UnknownProposition(a.to_string()));
        }
    }
    let states = state_names(lts);
    let props = proposition_names(lts.propositions());

    let mut text = String::new();
    text.push_str("-- flattened composition of: ");
    text.push_str(&lts.machines().join(", "));
    text.push('\n');
    text.push_str(&format!(
        "-- {} states, {} transitions\n",
        lts.len(),
        lts.transitions().len()
    ));
    text.push_str("MODULE main\n");
    text.push_str("VAR\n");
    text.push_str(&format!("  state : {{ {} }};\n", states.join(", ")));

    if !props.is_empty() {
        text.push_str("DEFINE\n");
        for (p, name) in &props {
            let holders: Vec<String> = (0..lts.len())
                .filter(|&s| lts.state(s).holds(p))
                .map(|s| format!("state = {}", states[s]))
                .collect();
            let body = if holders.is_empty() {
                "FALSE".to_string()
            } else {
                holders.join(" | ")
            };
            text.push_str(&format!("  {name} := {body}; -- {p}\n"));
        }
    }

    text.push_str("INIT\n");
    text.push_str(&format!("  state = {}\n", states[lts.initial()]));

    text.push_str("TRANS\n");
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut seen = BTreeSet::new();
    for s in 0..lts.len() {
        let succ = lts.successors(s);
        let succ = if succ.is_empty() { vec![s] } else { succ };
        for t in succ {
            if seen.insert((s, t)) {
                pairs.push((s, t));
            }
        }
    }
    for (i, (s, t)) in pairs.iter().enumerate() {
        let lead = if i == 0 { "  " } else { "  | " };
        text.push_str(&format!(
            "{lead}(state = {} & next(state) = {})\n",
            states[*s], states[*t]
        ));
    }

    for p in properties {
        match p {
            SmvProperty::Ctl(f) => text.push_str(&format!("CTLSPEC {}\n", render(f, &props))),
            SmvProperty::Invariant(f) => {
                text.push_str(&format!("LTLSPEC {}\n", render_safety(f, &props)))
            }
        }
    }
    Ok(SmvDocument {
        text,
        property_count: properties.len(),
    })
}
