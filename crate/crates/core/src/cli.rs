//! Command-line front end.
//!
//! Exit codes: 0 when every check passes (or the report is empty), 1 when
//! violations are found, 2 for usage, parse and I/O errors. Reports go to
//! standard output, diagnostics to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::check::{check_ctl, check_invariant, find_interactions, CheckResult, InteractionReport};
use crate::compose::{CompositeLts, Trace};
use crate::machine::validate_machine;
use crate::oftm::{
    derive_mechanism, validate_configuration, Choices, Dimension, Mechanism, RuleSet,
};
use crate::pipeline::{load_properties, load_rules, PipelineError, Project};
use crate::properties::{Property, PropertyFile};
use crate::smv::export_smv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(
    name = "oftm",
    version,
    about = "Fault-tolerance feature model, composition and interaction checking"
)]
pub struct Cli {
    /// Dependency rule file replacing the built-in rules.
    #[arg(long, global = true, value_name = "FILE")]
    pub rules: Option<PathBuf>,

    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the concrete configuration derived from a mechanism.
    Derive {
        mechanism: String,
        /// Choices for alternative cells, e.g. ExecutionScheme=Parallel, variants=3.
        choices: Vec<String>,
    },
    /// Validate the configurations and machines of a manifest.
    Validate { manifest: PathBuf },
    /// Report inconsistent composite states.
    Interactions {
        manifest: PathBuf,
        properties: PathBuf,
        /// Compose the machines without fail/recover behavior.
        #[arg(long)]
        no_faults: bool,
    },
    /// Check every property of a property file.
    Check {
        manifest: PathBuf,
        properties: PathBuf,
        #[arg(long)]
        no_faults: bool,
    },
    /// Write the composition and properties as an SMV model.
    Export {
        manifest: PathBuf,
        properties: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long)]
        no_faults: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Other(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let rules = load_rules(cli.rules.as_deref())?;
    match &cli.command {
        Command::Derive { mechanism, choices } => {
            derive(mechanism, choices, &rules, cli.format, out)
        }
        Command::Validate { manifest } => validate(manifest, rules, cli.format, out, err),
        Command::Interactions {
            manifest,
            properties,
            no_faults,
        } => {
            let props = load_properties(properties)?;
            let project = Project::load(manifest, rules)?;
            interactions(&project, &props, *no_faults, cli.format, out)
        }
        Command::Check {
            manifest,
            properties,
            no_faults,
        } => {
            let props = load_properties(properties)?;
            let project = Project::load(manifest, rules)?;
            check(&project, &props, *no_faults, cli.format, out)
        }
        Command::Export {
            manifest,
            properties,
            out: path,
            no_faults,
        } => {
            let props = load_properties(properties)?;
            let project = Project::load(manifest, rules)?;
            export(&project, &props, *no_faults, path, out)
        }
    }
}

fn derive(
    mechanism: &str,
    tokens: &[String],
    rules: &RuleSet,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut choices = Choices::new();
    for t in tokens {
        choices
            .apply(t)
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let config =
        derive_mechanism(mechanism, &choices).map_err(|e| CliError::Other(e.to_string()))?;
    let template = config
        .source
        .map(Mechanism::template)
        .expect("derived configs have a source");
    let report =
        validate_configuration(&config, rules).map_err(|e| CliError::Other(e.to_string()))?;
    match format {
        Format::Text => {
            writeln!(out, "mechanism: {}", template.mechanism)?;
            for d in Dimension::ALL {
                let allowed: Vec<&str> = template.allowed(d).iter().map(|v| v.name()).collect();
                let value = config.get(d).expect("complete").name();
                writeln!(
                    out,
                    "{:<16} = {:<14} allowed: {}",
                    d.name(),
                    value,
                    allowed.join(", ")
                )?;
            }
            writeln!(out, "{:<16} = {}", "variants", config.variants)?;
            if let Some(f) = config.judgment_facet {
                writeln!(out, "{:<16} = {:?}", "facet", f)?;
            }
            if report.is_consistent() {
                writeln!(out, "consistency: ok")?;
            }
            for v in &report.violations {
                writeln!(out, "consistency: violates {} ({})", v.id, v.message)?;
            }
        }
        Format::Structured => {
            let dims: serde_json::Map<String, Value> = Dimension::ALL
                .iter()
                .map(|d| {
                    (
                        d.name().to_string(),
                        json!({
                            "value": config.get(*d).map(|v| v.name()),
                            "allowed": template.allowed(*d).iter().map(|v| v.name()).collect::<Vec<_>>(),
                        }),
                    )
                })
                .collect();
            let doc = json!({
                "mechanism": template.mechanism.name(),
                "dimensions": dims,
                "variants": config.variants,
                "violations": report.violations,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
    }
    Ok(if report.is_consistent() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

fn validate(
    manifest: &Path,
    rules: RuleSet,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let project = Project::load(manifest, rules)?;
    let configs = project.configurations()?;
    let mut failures = 0usize;
    let mut machines_json = Vec::new();
    for (entry, m) in project.manifest.machines.iter().zip(&project.machines) {
        let warnings = validate_machine(m);
        let config = configs.iter().find(|c| c.machine == m.name());
        let mut errors: Vec<String> = Vec::new();
        if let Some(c) = config {
            for v in &c.report.violations {
                errors.push(format!("violates {}: {}", v.id, v.message));
            }
            if c.report.is_consistent() {
                if let Err(e) = crate::machine::weave_with_rules(m, &c.config, &project.rules) {
                    errors.push(e.to_string());
                }
            }
        }
        failures += errors.len();
        for e in &errors {
            writeln!(err, "{}: {}", m.name(), e)?;
        }
        match format {
            Format::Text => {
                let mech = entry.mechanism.map(|m| m.name()).unwrap_or("none");
                match config {
                    Some(c) => {
                        writeln!(out, "{} ({}): {} {}", m.name(), entry.path, mech, c.config)?
                    }
                    None => writeln!(out, "{} ({}): no fault tolerance", m.name(), entry.path)?,
                }
                for w in &warnings.warnings {
                    writeln!(out, "  warning: {w}")?;
                }
                for e in &errors {
                    writeln!(out, "  error: {e}")?;
                }
                if errors.is_empty() {
                    writeln!(out, "  ok")?;
                }
            }
            Format::Structured => machines_json.push(json!({
                "machine": m.name(),
                "path": entry.path,
                "mechanism": entry.mechanism.map(|m| m.name()),
                "config": config.map(|c| c.config.to_string()),
                "warnings": warnings.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                "errors": errors,
            })),
        }
    }
    if format == Format::Structured {
        let doc = json!({ "machines": machines_json, "ok": failures == 0 });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
    }
    Ok(if failures == 0 {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

fn state_json(lts: &CompositeLts, s: usize) -> Value {
    let st = lts.state(s);
    let parts: serde_json::Map<String, Value> = st
        .parts
        .iter()
        .map(|(m, l)| (m.clone(), Value::String(l.clone())))
        .collect();
    json!({ "index": s, "parts": parts, "valuation": st.valuation })
}

fn trace_json(lts: &CompositeLts, t: &Trace) -> Value {
    json!({
        "states": t.states.iter().map(|&s| state_json(lts, s)).collect::<Vec<_>>(),
        "events": t.events,
    })
}

fn state_text(lts: &CompositeLts, s: usize) -> String {
    let parts: Vec<String> = lts
        .state(s)
        .parts
        .iter()
        .map(|(m, l)| format!("{m}={l}"))
        .collect();
    parts.join(",")
}

fn trace_text(lts: &CompositeLts, t: &Trace) -> String {
    let mut s = format!("({})", state_text(lts, t.states[0]));
    for (e, &st) in t.events.iter().zip(&t.states[1..]) {
        s.push_str(&format!(" -{e}-> ({})", state_text(lts, st)));
    }
    s
}

/// Renders an interaction report in the requested format.
pub fn render_interactions(
    lts: &CompositeLts,
    rules: &[crate::check::ConsistencyRule],
    report: &InteractionReport,
    no_faults: bool,
    format: Format,
) -> String {
    let classes = report.classes();
    match format {
        Format::Text => {
            let mut s = format!(
                "{} states, {} transitions{}\n",
                lts.len(),
                lts.transitions().len(),
                if no_faults { " (faults disabled)" } else { "" }
            );
            s.push_str(&format!(
                "{} violation class(es), {} inconsistent state(s)\n",
                classes.len(),
                report.violations.len()
            ));
            for r in rules {
                let hits: Vec<_> = report
                    .violations
                    .iter()
                    .filter(|v| v.rule == r.id)
                    .collect();
                if hits.is_empty() {
                    continue;
                }
                s.push_str(&format!("[{}] {} : {}\n", r.id, r.forbidden, r.message));
                for v in hits {
                    s.push_str(&format!("  state {}\n", state_text(lts, v.state)));
                    s.push_str(&format!("    trace: {}\n", trace_text(lts, &v.trace)));
                }
            }
            s
        }
        Format::Structured => {
            let classes: Vec<Value> = rules
                .iter()
                .filter(|r| classes.contains_key(r.id.as_str()))
                .map(|r| {
                    json!({
                        "rule": r.id,
                        "forbidden": r.forbidden.to_string(),
                        "message": r.message,
                        "violations": report.violations.iter().filter(|v| v.rule == r.id).map(|v| json!({
                            "state": state_json(lts, v.state),
                            "trace": trace_json(lts, &v.trace),
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = json!({
                "faults": !no_faults,
                "states": lts.len(),
                "transitions": lts.transitions().len(),
                "classes": classes,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("json"))
        }
    }
}

fn interactions(
    project: &Project,
    props: &PropertyFile,
    no_faults: bool,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let lts = project.compose(no_faults)?;
    let rules = props.consistency_rules();
    let report =
        find_interactions(&lts, &rules).map_err(|e| CliError::Other(format!("[check] {e}")))?;
    write!(
        out,
        "{}",
        render_interactions(&lts, &rules, &report, no_faults, format)
    )?;
    Ok(if report.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

/// Checks one property; forbidden predicates are checked as invariants.
pub fn check_property(
    lts: &CompositeLts,
    property: &Property,
) -> Result<CheckResult, crate::check::CheckError> {
    match property {
        Property::Ctl(f) => check_ctl(lts, f),
        Property::Pattern { formula, .. } => check_ctl(lts, formula),
        Property::Invariant(f) => check_invariant(lts, f),
        Property::Forbid(r) => check_invariant(
            lts,
            &crate::formula::SafetyFormula::Always(crate::formula::Formula::not(
                r.forbidden.clone(),
            )),
        ),
    }
}

fn check(
    project: &Project,
    props: &PropertyFile,
    no_faults: bool,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let lts = project.compose(no_faults)?;
    let mut all_hold = true;
    let mut results = Vec::new();
    for entry in &props.entries {
        let result = check_property(&lts, &entry.property).map_err(|e| {
            CliError::Other(format!("[check] property on line {}: {e}", entry.line))
        })?;
        all_hold &= result.holds_in_initial;
        results.push((entry, result));
    }
    match format {
        Format::Text => {
            for (entry, r) in &results {
                let verdict = if r.holds_in_initial { "PASS" } else { "FAIL" };
                writeln!(out, "{verdict} line {}: {}", entry.line, entry.source)?;
                if let Some(t) = &r.trace {
                    let kind = if r.holds_in_initial {
                        "witness"
                    } else {
                        "counterexample"
                    };
                    writeln!(out, "  {kind}: {}", trace_text(&lts, t))?;
                }
            }
            if !lts.deadlocks().is_empty() {
                writeln!(out, "note: {} deadlock state(s)", lts.deadlocks().len())?;
            }
        }
        Format::Structured => {
            let items: Vec<Value> = results
                .iter()
                .map(|(entry, r)| {
                    json!({
                        "line": entry.line,
                        "property": entry.source,
                        "holds": r.holds_in_initial,
                        "satisfying_states": r.satisfying_states.len(),
                        "trace": r.trace.as_ref().map(|t| trace_json(&lts, t)),
                    })
                })
                .collect();
            let doc = json!({
                "states": lts.len(),
                "deadlocks": lts.deadlocks(),
                "properties": items,
                "ok": all_hold,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
    }
    Ok(if all_hold { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn export(
    project: &Project,
    props: &PropertyFile,
    no_faults: bool,
    path: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let lts = project.compose(no_faults)?;
    let doc = export_smv(&lts, &props.smv_properties())
        .map_err(|e| CliError::Other(format!("[export] {e}")))?;
    fs::write(path, &doc.text)
        .map_err(|e| CliError::Other(format!("[export] {}: {e}", path.display())))?;
    writeln!(
        out,
        "wrote {} ({} states, {} properties)",
        path.display(),
        lts.len(),
        doc.property_count
    )?;
    Ok(EXIT_OK)
}
