//! Composition manifests (`.comp`).
//!
//! ```text
//! composition <name>
//! machine <path> <mechanism|none> [<choice> ...]
//! sync <event> [<event> ...]
//! declare <proposition> [<proposition> ...]
//! ```
//!
//! `machine` lines are composed in file order; paths are relative to the
//! manifest's directory. A choice is `<Dimension>=<Value>`, a bare value
//! name, `variants=<n>` or `facet=absolute|relative`. `sync` and `declare`
//! may repeat; their arguments accumulate. `composition` is optional.
//! Blank lines and `#` comments are ignored.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::oftm::{Choices, Mechanism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("manifest line {line}: {message}")]
pub struct ManifestParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineEntry {
    pub line: usize,
    pub path: String,
    /// `None` when the manifest says `none`.
    pub mechanism: Option<Mechanism>,
    pub choices: Choices,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub name: Option<String>,
    pub machines: Vec<MachineEntry>,
    pub sync: BTreeSet<String>,
    pub declared: BTreeSet<String>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, ManifestParseError> {
        let mut manifest = Manifest::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            let Some((&keyword, args)) = toks.split_first() else {
                continue;
            };
            let err = |message: String| ManifestParseError { line, message };
            match keyword {
                "composition" => match args {
                    [name] if manifest.name.is_none() => manifest.name = Some(name.to_string()),
                    [_] => return Err(err("duplicate 'composition' directive".into())),
                    _ => return Err(err("expected 'composition <name>'".into())),
                },
                "machine" => {
                    let [path, mechanism, choices @ ..] = args else {
                        return Err(err(
                            "expected 'machine <path> <mechanism|none> [choices]'".into()
                        ));
                    };
                    let mechanism = if *mechanism == "none" {
                        if !choices.is_empty() {
                            return Err(err("choices given without a mechanism".into()));
                        }
                        None
                    } else {
                        Some(Mechanism::lookup(mechanism).map_err(|e| err(e.to_string()))?)
                    };
                    let mut parsed = Choices::new();
                    for c in choices {
                        parsed.apply(c).map_err(|e| err(e.to_string()))?;
                    }
                    manifest.machines.push(MachineEntry {
                        line,
                        path: path.to_string(),
                        mechanism,
                        choices: parsed,
                    });
                }
                "sync" | "declare" => {
                    if args.is_empty() {
                        return Err(err(format!("'{keyword}' needs at least one argument")));
                    }
                    let target = if keyword == "sync" {
                        &mut manifest.sync
                    } else {
                        &mut manifest.declared
                    };
                    target.extend(args.iter().map(|a| a.to_string()));
                }
                other => return Err(err(format!("unknown directive '{other}'"))),
            }
        }
        if manifest.machines.is_empty() {
            return Err(ManifestParseError {
                line: text.lines().count().max(1),
                message: "manifest lists no machines".into(),
            });
        }
        Ok(manifest)
    }
}
