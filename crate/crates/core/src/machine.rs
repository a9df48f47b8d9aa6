//! Component state machines and fault-tolerance weaving.
//!
//! Machine file format (`.mach`), one directive per line:
//!
//! ```text
//! machine <name>
//! event <id> [<id> ...]
//! state <id> [rp] [safe] [prop <p> [<p> ...]]
//! initial <id>
//! trans <src> -<event>-> <dst>
//! ```
//!
//! Identifiers match `[A-Za-z0-9_=]+`. `#` starts a comment that runs to the
//! end of the line. `machine` must be the first directive and appear once;
//! `initial` must appear once. `event` is optional: the alphabet is the
//! declared events plus every event used by a transition. `rp` flags a
//! recovery point, `safe` the (single) safe state used by forward recovery.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::oftm::{self, Dimension, FeatureConfig, FeatureValue, RuleSet};

/// Proposition carried by every woven error state.
pub const FAILED_PROP: &str = "failed";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: state '{state}' declared twice")]
    DuplicateState { line: usize, state: String },
    #[error("line {line}: transition refers to unknown state '{state}'")]
    UnknownStateInTransition { line: usize, state: String },
    #[error("machine '{0}' has no initial state")]
    MissingInitial(String),
    #[error("machine '{machine}': unknown state '{state}'")]
    UnknownState { machine: String, state: String },
    #[error("machine '{machine}': more than one safe state ('{first}', '{second}')")]
    MultipleSafeStates {
        machine: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeaveError {
    #[error("invalid configuration for '{machine}': {reason}")]
    InvalidConfiguration { machine: String, reason: String },
    #[error(
        "machine '{machine}': no recovery point on the path from the initial state to '{state}'"
    )]
    NoRecoveryPointReachable { machine: String, state: String },
    #[error("machine '{0}' declares no safe state for forward recovery")]
    NoSafeStateDeclared(String),
    #[error("machine '{machine}' already uses event '{event}'")]
    EventClash { machine: String, event: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct State {
    pub id: String,
    pub recovery_point: bool,
    pub safe: bool,
    pub props: BTreeSet<String>,
}

impl State {
    pub fn new(id: impl Into<String>) -> State {
        State {
            id: id.into(),
            recovery_point: false,
            safe: false,
            props: BTreeSet::new(),
        }
    }

    pub fn rp(mut self) -> State {
        self.recovery_point = true;
        self
    }

    pub fn safe(mut self) -> State {
        self.safe = true;
        self
    }

    pub fn prop(mut self, p: impl Into<String>) -> State {
        self.props.insert(p.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Transition {
    pub source: String,
    pub event: String,
    pub target: String,
}

impl Transition {
    pub fn new(source: &str, event: &str, target: &str) -> Transition {
        Transition {
            source: source.to_string(),
            event: event.to_string(),
            target: target.to_string(),
        }
    }
}

/// A finite, possibly nondeterministic, event-labeled state machine.
///
/// States keep their declaration order; transitions keep theirs, with
/// duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateMachine {
    name: String,
    states: Vec<State>,
    initial: String,
    events: BTreeSet<String>,
    transitions: Vec<Transition>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl StateMachine {
    /// Builds a machine, checking that every referenced state exists.
    pub fn new(
        name: impl Into<String>,
        states: Vec<State>,
        initial: impl Into<String>,
        events: impl IntoIterator<Item = String>,
        transitions: Vec<Transition>,
    ) -> Result<StateMachine, MachineError> {
        let name = name.into();
        let initial = initial.into();
        let mut index = HashMap::new();
        let mut safe: Option<&str> = None;
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(MachineError::DuplicateState {
                    line: 0,
                    state: s.id.clone(),
                });
            }
            if s.safe {
                if let Some(first) = safe {
                    return Err(MachineError::MultipleSafeStates {
                        machine: name,
                        first: first.to_string(),
                        second: s.id.clone(),
                    });
                }
                safe = Some(&s.id);
            }
        }
        let unknown = |state: &str| MachineError::UnknownState {
            machine: name.clone(),
            state: state.to_string(),
        };
        if !index.contains_key(&initial) {
            return Err(unknown(&initial));
        }
        let mut events: BTreeSet<String> = events.into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut unique = Vec::with_capacity(transitions.len());
        for t in transitions {
            for end in [&t.source, &t.target] {
                if !index.contains_key(end) {
                    return Err(unknown(end));
                }
            }
            events.insert(t.event.clone());
            if seen.insert(t.clone()) {
                unique.push(t);
            }
        }
        Ok(StateMachine {
            name,
            states,
            initial,
            events,
            transitions: unique,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, id: &str) -> Option<&State> {
        self.index.get(id).map(|&i| &self.states[i])
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    /// Declared events plus every event used by a transition.
    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.events
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.source == state)
    }

    pub fn recovery_points(&self) -> impl Iterator<Item = &State> {
        self.states.iter().filter(|s| s.recovery_point)
    }

    pub fn safe_state(&self) -> Option<&State> {
        self.states.iter().find(|s| s.safe)
    }

    /// All propositions carried by any state.
    pub fn propositions(&self) -> BTreeSet<String> {
        self.states
            .iter()
            .flat_map(|s| s.props.iter().cloned())
            .collect()
    }

    /// Breadth-first spanning tree from the initial state. Successors are
    /// visited in lexicographic order of their names, so the first
    /// discoverer of a state is its parent. Unreachable states are absent.
    pub fn bfs_parents(&self) -> BTreeMap<String, Option<String>> {
        let mut parents = BTreeMap::new();
        parents.insert(self.initial.clone(), None);
        let mut queue = VecDeque::from([self.initial.as_str()]);
        while let Some(s) = queue.pop_front() {
            let succ: BTreeSet<&str> = self.outgoing(s).map(|t| t.target.as_str()).collect();
            for t in succ {
                if !parents.contains_key(t) {
                    parents.insert(t.to_string(), Some(s.to_string()));
                    queue.push_back(t);
                }
            }
        }
        parents
    }

    /// Renders the machine in the `.mach` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("machine {}\n", self.name);
        let used: BTreeSet<&str> = self.transitions.iter().map(|t| t.event.as_str()).collect();
        let unused: Vec<&str> = self
            .events
            .iter()
            .map(String::as_str)
            .filter(|e| !used.contains(e))
            .collect();
        if !unused.is_empty() {
            out.push_str(&format!("event {}\n", unused.join(" ")));
        }
        for s in &self.states {
            out.push_str("state ");
            out.push_str(&s.id);
            if s.recovery_point {
                out.push_str(" rp");
            }
            if s.safe {
                out.push_str(" safe");
            }
            if !s.props.is_empty() {
                out.push_str(" prop");
                for p in &s.props {
                    out.push(' ');
                    out.push_str(p);
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("initial {}\n", self.initial));
        for t in &self.transitions {
            out.push_str(&format!("trans {} -{}-> {}\n", t.source, t.event, t.target));
        }
        out
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '=')
}

/// Splits a line into (1-based column, token) pairs, dropping comments.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Parses a `.mach` document.
pub fn parse_machine(text: &str) -> Result<StateMachine, MachineError> {
    let mut name: Option<String> = None;
    let mut states: Vec<State> = Vec::new();
    let mut state_lines: HashMap<String, usize> = HashMap::new();
    let mut initial: Option<(usize, usize, String)> = None;
    let mut events: Vec<String> = Vec::new();
    let mut transitions: Vec<(usize, Transition)> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = tokens(line);
        let Some(&(col, keyword)) = toks.first() else {
            continue;
        };
        let syntax = |column: usize, message: String| MachineError::SyntaxError {
            line: lineno,
            column,
            message,
        };
        let ident = |(column, tok): (usize, &str)| -> Result<String, MachineError> {
            if is_ident(tok) {
                Ok(tok.to_string())
            } else {
                Err(syntax(column, format!("invalid identifier '{tok}'")))
            }
        };
        let end_col = line.find('#').unwrap_or(line.len()) + 1;
        if name.is_none() && keyword != "machine" {
            return Err(syntax(col, "expected 'machine <name>' first".into()));
        }
        match keyword {
            "machine" => {
                if name.is_some() {
                    return Err(syntax(col, "duplicate 'machine' directive".into()));
                }
                match toks.as_slice() {
                    [_, n] => name = Some(ident(*n)?),
                    [_] => return Err(syntax(end_col, "expected machine name".into())),
                    [_, _, extra, ..] => {
                        return Err(syntax(extra.0, format!("unexpected '{}'", extra.1)))
                    }
                    [] => unreachable!(),
                }
            }
            "event" => {
                if toks.len() < 2 {
                    return Err(syntax(end_col, "expected event name".into()));
                }
                for t in &toks[1..] {
                    events.push(ident(*t)?);
                }
            }
            "state" => {
                let Some(id_tok) = toks.get(1) else {
                    return Err(syntax(end_col, "expected state name".into()));
                };
                let mut state = State::new(ident(*id_tok)?);
                let mut rest = toks[2..].iter();
                let mut in_props = false;
                for &(c, t) in rest.by_ref() {
                    match (in_props, t) {
                        (false, "rp") => state.recovery_point = true,
                        (false, "safe") => state.safe = true,
                        (false, "prop") => in_props = true,
                        (true, _) => {
                            state.props.insert(ident((c, t))?);
                        }
                        (false, _) => {
                            return Err(syntax(c, format!("unexpected '{t}' in state declaration")))
                        }
                    }
                }
                if in_props && state.props.is_empty() {
                    return Err(syntax(
                        end_col,
                        "expected at least one proposition after 'prop'".into(),
                    ));
                }
                if state_lines.contains_key(&state.id) {
                    return Err(MachineError::DuplicateState {
                        line: lineno,
                        state: state.id,
                    });
                }
                if state.safe {
                    if let Some(first) = states.iter().find(|s| s.safe) {
                        return Err(MachineError::MultipleSafeStates {
                            machine: name.clone().unwrap_or_default(),
                            first: first.id.clone(),
                            second: state.id,
                        });
                    }
                }
                state_lines.insert(state.id.clone(), lineno);
                states.push(state);
            }
            "initial" => {
                if initial.is_some() {
                    return Err(syntax(col, "duplicate 'initial' directive".into()));
                }
                match toks.as_slice() {
                    [_, s] => initial = Some((lineno, s.0, ident(*s)?)),
                    [_] => return Err(syntax(end_col, "expected initial state".into())),
                    [_, _, extra, ..] => {
                        return Err(syntax(extra.0, format!("unexpected '{}'", extra.1)))
                    }
                    [] => unreachable!(),
                }
            }
            "trans" => {
                let (src, arrow, dst) = match toks.as_slice() {
                    [_, s, a, d] => (*s, *a, *d),
                    [_, _, _, _, extra, ..] => {
                        return Err(syntax(extra.0, format!("unexpected '{}'", extra.1)))
                    }
                    _ => {
                        return Err(syntax(
                            end_col,
                            "expected 'trans <src> -<event>-> <dst>'".into(),
                        ))
                    }
                };
                let event = arrow
                    .1
                    .strip_prefix('-')
                    .and_then(|a| a.strip_suffix("->"))
                    .filter(|e| is_ident(e))
                    .ok_or_else(|| {
                        syntax(
                            arrow.0,
                            format!("expected '-<event>->', found '{}'", arrow.1),
                        )
                    })?;
                transitions.push((
                    lineno,
                    Transition {
                        source: ident(src)?,
                        event: event.to_string(),
                        target: ident(dst)?,
                    },
                ));
            }
            other => return Err(syntax(col, format!("unknown directive '{other}'"))),
        }
    }

    let name = name.ok_or(MachineError::SyntaxError {
        line: 1,
        column: 1,
        message: "empty document: expected 'machine <name>'".into(),
    })?;
    let (init_line, init_col, initial) =
        initial.ok_or_else(|| MachineError::MissingInitial(name.clone()))?;
    if !state_lines.contains_key(&initial) {
        return Err(MachineError::SyntaxError {
            line: init_line,
            column: init_col,
            message: format!("initial state '{initial}' is not declared"),
        });
    }
    for (line, t) in &transitions {
        for end in [&t.source, &t.target] {
            if !state_lines.contains_key(end) {
                return Err(MachineError::UnknownStateInTransition {
                    line: *line,
                    state: end.clone(),
                });
            }
        }
    }
    StateMachine::new(
        name,
        states,
        initial,
        events,
        transitions.into_iter().map(|(_, t)| t).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MachineWarning {
    Unreachable(String),
    DanglingEvent(String),
    NoOutgoing(String),
}

impl fmt::Display for MachineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineWarning::Unreachable(s) => {
                write!(f, "state '{s}' is unreachable from the initial state")
            }
            MachineWarning::DanglingEvent(e) => write!(f, "event '{e}' is declared but never used"),
            MachineWarning::NoOutgoing(s) => write!(f, "state '{s}' has no outgoing transitions"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MachineReport {
    pub warnings: Vec<MachineWarning>,
}

impl MachineReport {
    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Structural diagnostics. Everything reported is a warning.
pub fn validate_machine(m: &StateMachine) -> MachineReport {
    let reachable = m.bfs_parents();
    let mut warnings = Vec::new();
    for s in m.states() {
        if !reachable.contains_key(&s.id) {
            warnings.push(MachineWarning::Unreachable(s.id.clone()));
        }
    }
    let used: BTreeSet<&str> = m.transitions().iter().map(|t| t.event.as_str()).collect();
    for e in m.alphabet() {
        if !used.contains(e.as_str()) {
            warnings.push(MachineWarning::DanglingEvent(e.clone()));
        }
    }
    for s in m.states() {
        if m.outgoing(&s.id).next().is_none() {
            warnings.push(MachineWarning::NoOutgoing(s.id.clone()));
        }
    }
    MachineReport { warnings }
}

/// A component machine with fault-tolerance behavior applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WovenMachine {
    base: StateMachine,
    config: Option<FeatureConfig>,
    machine: StateMachine,
    rollback_map: BTreeMap<String, String>,
    error_states: BTreeMap<String, String>,
    local_events: BTreeSet<String>,
    metadata: BTreeMap<String, String>,
}

impl WovenMachine {
    /// Wraps a machine without adding any fault-tolerance behavior.
    pub fn plain(m: StateMachine) -> WovenMachine {
        WovenMachine {
            machine: m.clone(),
            base: m,
            config: None,
            rollback_map: BTreeMap::new(),
            error_states: BTreeMap::new(),
            local_events: BTreeSet::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        self.base.name()
    }

    pub fn base(&self) -> &StateMachine {
        &self.base
    }

    pub fn config(&self) -> Option<&FeatureConfig> {
        self.config.as_ref()
    }

    /// The machine including error states and fail/recover transitions.
    pub fn machine(&self) -> &StateMachine {
        &self.machine
    }

    pub fn rollback_map(&self) -> &BTreeMap<String, String> {
        &self.rollback_map
    }

    /// Base state → the error state entered when failing there.
    pub fn error_states(&self) -> &BTreeMap<String, String> {
        &self.error_states
    }

    /// The added fail/recover events. Never synchronized.
    pub fn local_events(&self) -> &BTreeSet<String> {
        &self.local_events
    }

    /// Execution scheme, judgment criteria and related settings that add
    /// no transitions.
    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Removes error states and fail/recover transitions.
    pub fn erase_faults(&self) -> StateMachine {
        let errors: BTreeSet<&String> = self.error_states.values().collect();
        let states = self
            .machine
            .states()
            .iter()
            .filter(|s| !errors.contains(&s.id))
            .cloned()
            .collect();
        let transitions = self
            .machine
            .transitions()
            .iter()
            .filter(|t| !self.local_events.contains(&t.event))
            .cloned()
            .collect();
        let events = self
            .machine
            .alphabet()
            .iter()
            .filter(|e| !self.local_events.contains(*e))
            .cloned();
        StateMachine::new(
            self.name(),
            states,
            self.machine.initial(),
            events,
            transitions,
        )
        .expect("erasing faults keeps the machine well formed")
    }
}

pub fn fail_event(machine: &str) -> String {
    format!("fail_{machine}")
}

pub fn recover_event(machine: &str) -> String {
    format!("recover_{machine}")
}

/// Proposition carried by the error states of `machine`.
pub fn failed_prop(machine: &str) -> String {
    format!("fail_{machine}")
}

/// Weaves `config` into `m` after validating it against the default rules.
pub fn weave_fault_tolerance(
    m: &StateMachine,
    config: &FeatureConfig,
) -> Result<WovenMachine, WeaveError> {
    weave_with_rules(m, config, &RuleSet::default_rules())
}

/// Adds, for every state `s`, a fresh error state `e`, a transition
/// `s -fail-> e` and a transition `e -recover-> rollback(s)`.
///
/// Backward recovery rolls back to the nearest recovery point above `s` in
/// the breadth-first spanning tree (see [`StateMachine::bfs_parents`]);
/// forward recovery goes to the declared safe state. Every state must have
/// a rollback target, including states unreachable from the initial state.
pub fn weave_with_rules(
    m: &StateMachine,
    config: &FeatureConfig,
    rules: &RuleSet,
) -> Result<WovenMachine, WeaveError> {
    let invalid = |reason: String| WeaveError::InvalidConfiguration {
        machine: m.name().to_string(),
        reason,
    };
    let report = oftm::validate_configuration(config, rules).map_err(|e| invalid(e.to_string()))?;
    if let Some(v) = report.violations.first() {
        return Err(invalid(format!("violates {} ({})", v.id, v.message)));
    }
    let backward = config.is(FeatureValue::Backward);
    if backward && !config.is(FeatureValue::Yes) {
        return Err(invalid("backward recovery without checkpoints".into()));
    }

    let fail = fail_event(m.name());
    let recover = recover_event(m.name());
    for e in [&fail, &recover] {
        if m.alphabet().contains(e) {
            return Err(WeaveError::EventClash {
                machine: m.name().to_string(),
                event: e.clone(),
            });
        }
    }

    let rollback_map = if backward {
        backward_targets(m)?
    } else {
        let safe = m
            .safe_state()
            .ok_or_else(|| WeaveError::NoSafeStateDeclared(m.name().to_string()))?;
        m.states()
            .iter()
            .map(|s| (s.id.clone(), safe.id.clone()))
            .collect()
    };

    let mut taken: BTreeSet<String> = m.states().iter().map(|s| s.id.clone()).collect();
    let mut states = m.states().to_vec();
    let mut transitions = m.transitions().to_vec();
    let mut error_states = BTreeMap::new();
    let fail_prop = failed_prop(m.name());
    for s in m.states() {
        let mut err_id = format!("{}_err", s.id);
        while taken.contains(&err_id) {
            err_id.push('_');
        }
        taken.insert(err_id.clone());
        let target = &rollback_map[&s.id];
        let mut err = State::new(err_id.clone());
        err.props = m
            .state(target)
            .expect("rollback target exists")
            .props
            .clone();
        err.props.insert(FAILED_PROP.to_string());
        err.props.insert(fail_prop.clone());
        states.push(err);
        transitions.push(Transition::new(&s.id, &fail, &err_id));
        transitions.push(Transition::new(&err_id, &recover, target));
        error_states.insert(s.id.clone(), err_id);
    }
    let events = m
        .alphabet()
        .iter()
        .cloned()
        .chain([fail.clone(), recover.clone()]);
    let machine = StateMachine::new(m.name(), states, m.initial(), events, transitions)
        .expect("woven machine is well formed");

    let mut metadata = BTreeMap::new();
    for d in [Dimension::ExecutionScheme, Dimension::JudgmentCriteria] {
        if let Some(v) = config.get(d) {
            metadata.insert(d.name().to_string(), v.name().to_string());
        }
    }
    metadata.insert("variants".into(), config.variants.to_string());
    if let Some(src) = config.source {
        metadata.insert("mechanism".into(), src.name().to_string());
    }

    Ok(WovenMachine {
        base: m.clone(),
        config: Some(config.clone()),
        machine,
        rollback_map,
        error_states,
        local_events: BTreeSet::from([fail, recover]),
        metadata,
    })
}

fn backward_targets(m: &StateMachine) -> Result<BTreeMap<String, String>, WeaveError> {
    let parents = m.bfs_parents();
    let mut out = BTreeMap::new();
    for s in m.states() {
        let mut cursor = Some(s.id.as_str());
        let mut found = None;
        while let Some(c) = cursor {
            if m.state(c).is_some_and(|st| st.recovery_point) {
                found = Some(c);
                break;
            }
            cursor = parents.get(c).and_then(|p| p.as_deref());
        }
        let target = found.ok_or_else(|| WeaveError::NoRecoveryPointReachable {
            machine: m.name().to_string(),
            state: s.id.clone(),
        })?;
        out.insert(s.id.clone(), target.to_string());
    }
    Ok(out)
}
