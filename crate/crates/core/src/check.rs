//! Explicit-state checking over a [`CompositeLts`].
//!
//! CTL formulas are normalized into the EX/EG/EU kernel and labeled
//! bottom-up. States without successors get an implicit self-loop for the
//! temporal operators; they are reported separately as deadlocks.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::compose::{CompositeLts, Trace, DEADLOCK_LOOP};
use crate::formula::{Formula, Kernel, SafetyFormula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("unknown proposition '{0}'")]
    UnknownProposition(String),
    #[error("rule '{0}' must be a propositional formula")]
    NotPropositional(String),
    #[error("unsupported pattern: {0}")]
    UnsupportedPattern(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    /// Sorted canonical indices of the states satisfying the formula.
    pub satisfying_states: Vec<usize>,
    pub holds_in_initial: bool,
    /// Counterexample when the property fails, witness when an existential
    /// property holds; only for the formula shapes that have a finite path
    /// representation (see [`check_ctl`]).
    pub trace: Option<Trace>,
    pub deadlocks: Vec<usize>,
}

/// Successor and predecessor lists with deadlock self-loops added.
struct Graph {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Graph {
    fn new(lts: &CompositeLts) -> Graph {
        let n = lts.len();
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let out = lts.successors(s);
                if out.is_empty() {
                    vec![s]
                } else {
                    out
                }
            })
            .collect();
        let mut pred = vec![Vec::new(); n];
        for (s, out) in succ.iter().enumerate() {
            for &t in out {
                pred[t].push(s);
            }
        }
        Graph { succ, pred }
    }

    fn len(&self) -> usize {
        self.succ.len()
    }

    fn ex(&self, f: &[bool]) -> Vec<bool> {
        self.succ
            .iter()
            .map(|ss| ss.iter().any(|&t| f[t]))
            .collect()
    }

    /// Least fixpoint by backward search from `g` through `f`.
    fn eu(&self, f: &[bool], g: &[bool]) -> Vec<bool> {
        let mut sat = g.to_vec();
        let mut work: Vec<usize> = (0..self.len()).filter(|&s| g[s]).collect();
        while let Some(t) = work.pop() {
            for &s in &self.pred[t] {
                if !sat[s] && f[s] {
                    sat[s] = true;
                    work.push(s);
                }
            }
        }
        sat
    }

    /// Greatest fixpoint: repeatedly drop `f`-states with no successor left
    /// in the candidate set, tracked with per-state counters.
    fn eg(&self, f: &[bool]) -> Vec<bool> {
        let mut sat = f.to_vec();
        let mut count: Vec<usize> = self
            .succ
            .iter()
            .map(|ss| ss.iter().filter(|&&t| f[t]).count())
            .collect();
        let mut work: Vec<usize> = (0..self.len())
            .filter(|&s| sat[s] && count[s] == 0)
            .collect();
        for &s in &work {
            sat[s] = false;
        }
        while let Some(t) = work.pop() {
            for &s in &self.pred[t] {
                if sat[s] {
                    count[s] -= 1;
                    if count[s] == 0 {
                        sat[s] = false;
                        work.push(s);
                    }
                }
            }
        }
        sat
    }

    fn label(&self, lts: &CompositeLts, k: &Kernel) -> Vec<bool> {
        match k {
            Kernel::True => vec![true; self.len()],
            Kernel::Atom(p) => lts.states().iter().map(|s| s.holds(p)).collect(),
            Kernel::Not(a) => self.label(lts, a).into_iter().map(|b| !b).collect(),
            Kernel::And(a, b) => {
                let (x, y) = (self.label(lts, a), self.label(lts, b));
                x.into_iter().zip(y).map(|(a, b)| a && b).collect()
            }
            Kernel::EX(a) => self.ex(&self.label(lts, a)),
            Kernel::EG(a) => self.eg(&self.label(lts, a)),
            Kernel::EU(a, b) => self.eu(&self.label(lts, a), &self.label(lts, b)),
        }
    }

    /// Shortest path from the initial state to a `goal` state moving only
    /// through `via` states (the goal itself need not satisfy `via`).
    fn path_to(&self, lts: &CompositeLts, via: &[bool], goal: &[bool]) -> Option<Trace> {
        let mut parent: Vec<Option<usize>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            if goal[s] {
                let mut states = vec![s];
                let mut cursor = s;
                while let Some(p) = parent[cursor] {
                    states.push(p);
                    cursor = p;
                }
                states.reverse();
                return Some(with_events(lts, states));
            }
            if !via[s] {
                continue;
            }
            for &t in &self.succ[s] {
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some(s);
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// From the initial state, follows `set` until a state repeats. The
    /// returned path ends at the first repeated state, closing the loop.
    fn lasso(&self, lts: &CompositeLts, set: &[bool]) -> Option<Trace> {
        if !set[0] {
            return None;
        }
        let mut states = vec![0usize];
        let mut on_path = vec![false; self.len()];
        on_path[0] = true;
        loop {
            let s = *states.last().unwrap();
            let next = *self.succ[s].iter().find(|&&t| set[t])?;
            states.push(next);
            if on_path[next] {
                return Some(with_events(lts, states));
            }
            on_path[next] = true;
        }
    }
}

fn step_event(lts: &CompositeLts, s: usize, t: usize) -> String {
    lts.outgoing(s)
        .find(|tr| tr.target == t)
        .map(|tr| tr.event.clone())
        .unwrap_or_else(|| DEADLOCK_LOOP.to_string())
}

fn with_events(lts: &CompositeLts, states: Vec<usize>) -> Trace {
    let events = states
        .windows(2)
        .map(|w| step_event(lts, w[0], w[1]))
        .collect();
    Trace { states, events }
}

fn check_atoms<'a>(
    lts: &CompositeLts,
    atoms: impl IntoIterator<Item = &'a str>,
) -> Result<(), CheckError> {
    for a in atoms {
        if !lts.propositions().contains(a) {
            return Err(CheckError::UnknownProposition(a.to_string()));
        }
    }
    Ok(())
}

fn to_indices(set: &[bool]) -> Vec<usize> {
    (0..set.len()).filter(|&s| set[s]).collect()
}

/// Computes the set of states satisfying a CTL formula.
///
/// Paths are attached for: `AG f` and `AX f` and `AF f` and `A[f U g]`
/// when they fail in the initial state (counterexample), and `EF f`,
/// `EX f`, `EG f`, `E[f U g]` when they hold (witness). `EG`-shaped paths
/// are lassos that end at the first repeated state.
pub fn check_ctl(lts: &CompositeLts, f: &Formula) -> Result<CheckResult, CheckError> {
    check_atoms(lts, f.atoms())?;
    let g = Graph::new(lts);
    let sat = g.label(lts, &f.normalize());
    let holds = sat[0];
    let eval = |x: &Formula| g.label(lts, &x.normalize());
    let all = vec![true; g.len()];
    let trace = match (f, holds) {
        (Formula::AG(a), false) => {
            let bad: Vec<bool> = eval(a).into_iter().map(|b| !b).collect();
            g.path_to(lts, &all, &bad)
        }
        (Formula::EF(a), true) => g.path_to(lts, &all, &eval(a)),
        (Formula::EX(a), true) => {
            let good = eval(a);
            g.succ[0]
                .iter()
                .find(|&&t| good[t])
                .map(|&t| with_events(lts, vec![0, t]))
        }
        (Formula::AX(a), false) => {
            let good = eval(a);
            g.succ[0]
                .iter()
                .find(|&&t| !good[t])
                .map(|&t| with_events(lts, vec![0, t]))
        }
        (Formula::EG(a), true) => g.lasso(lts, &g.eg(&eval(a))),
        (Formula::AF(a), false) => {
            let not_a: Vec<bool> = eval(a).into_iter().map(|b| !b).collect();
            g.lasso(lts, &g.eg(&not_a))
        }
        (Formula::EU(a, b), true) => g.path_to(lts, &eval(a), &eval(b)),
        (Formula::AU(a, b), false) => {
            let na: Vec<bool> = eval(a).into_iter().map(|x| !x).collect();
            let nb: Vec<bool> = eval(b).into_iter().map(|x| !x).collect();
            let both: Vec<bool> = na.iter().zip(&nb).map(|(x, y)| *x && *y).collect();
            g.path_to(lts, &nb, &both)
                .filter(|t| nb[t.states[0]])
                .or_else(|| g.lasso(lts, &g.eg(&nb)))
        }
        _ => None,
    };
    Ok(CheckResult {
        satisfying_states: to_indices(&sat),
        holds_in_initial: holds,
        trace,
        deadlocks: lts.deadlocks(),
    })
}

/// Checks a safety formula. The satisfying set is the set of states from
/// which no violation is reachable; the counterexample is a shortest
/// violating prefix.
pub fn check_invariant(lts: &CompositeLts, f: &SafetyFormula) -> Result<CheckResult, CheckError> {
    check_atoms(lts, f.atoms())?;
    let g = Graph::new(lts);
    let holds = |p: &Formula, s: usize| {
        let state = lts.state(s);
        p.eval_propositional(&|a| state.holds(a))
    };
    // bad[s]: the violation is observable at s (or on a step leaving s)
    let mut bad = vec![false; g.len()];
    let mut first: Option<Trace> = None;
    // canonical order is breadth-first, so the first hit is a shortest prefix
    for (s, bad_s) in bad.iter_mut().enumerate() {
        match f {
            SafetyFormula::Always(p) => {
                if !holds(p, s) {
                    *bad_s = true;
                    if first.is_none() {
                        first = Some(lts.shortest_trace(s));
                    }
                }
            }
            SafetyFormula::AlwaysNext { pre, post } => {
                if !holds(pre, s) {
                    continue;
                }
                if let Some(&t) = g.succ[s].iter().find(|&&t| !holds(post, t)) {
                    *bad_s = true;
                    if first.is_none() {
                        let mut trace = lts.shortest_trace(s);
                        trace.events.push(step_event(lts, s, t));
                        trace.states.push(t);
                        first = Some(trace);
                    }
                }
            }
        }
    }
    let can_fail = g.eu(&vec![true; g.len()], &bad);
    let sat: Vec<bool> = can_fail.into_iter().map(|b| !b).collect();
    Ok(CheckResult {
        satisfying_states: to_indices(&sat),
        holds_in_initial: sat[0],
        trace: first,
        deadlocks: lts.deadlocks(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Pattern {
    Absence(Formula),
    Universality(Formula),
    Response(Formula, Formula),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Scope {
    Globally,
    Before(Formula),
    After(Formula),
    Between(Formula, Formula),
    AfterUntil(Formula, Formula),
}

/// Maps a specification pattern to CTL. Only the global scope is supported.
pub fn pattern_to_formula(pattern: &Pattern, scope: &Scope) -> Result<Formula, CheckError> {
    if *scope != Scope::Globally {
        return Err(CheckError::UnsupportedPattern(format!("{scope:?} scope")));
    }
    Ok(match pattern {
        Pattern::Absence(p) => Formula::ag(Formula::not(p.clone())),
        Pattern::Universality(p) => Formula::ag(p.clone()),
        Pattern::Response(p, q) => Formula::ag(Formula::implies(p.clone(), Formula::af(q.clone()))),
    })
}

/// A state predicate that marks composite states as inconsistent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyRule {
    pub id: String,
    pub forbidden: Formula,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: String,
    pub state: usize,
    pub trace: Trace,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InteractionReport {
    /// Grouped by rule (in rule order), states in canonical order.
    pub violations: Vec<Violation>,
}

impl InteractionReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Rule id → violating states, for rules with at least one violation.
    pub fn classes(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for v in &self.violations {
            out.entry(v.rule.as_str()).or_default().push(v.state);
        }
        out
    }
}

/// Lists every reachable state matching any rule's forbidden predicate,
/// each with a shortest trace from the initial state.
pub fn find_interactions(
    lts: &CompositeLts,
    rules: &[ConsistencyRule],
) -> Result<InteractionReport, CheckError> {
    for r in rules {
        if !r.forbidden.is_propositional() {
            return Err(CheckError::NotPropositional(r.id.clone()));
        }
        check_atoms(lts, r.forbidden.atoms())?;
    }
    let mut violations = Vec::new();
    for r in rules {
        for (s, state) in lts.states().iter().enumerate() {
            if r.forbidden.eval_propositional(&|a| state.holds(a)) {
                violations.push(Violation {
                    rule: r.id.clone(),
                    state: s,
                    trace: lts.shortest_trace(s),
                });
            }
        }
    }
    Ok(InteractionReport { violations })
}

/// States without outgoing transitions, each with a shortest trace.
pub fn find_deadlocks(lts: &CompositeLts) -> Vec<(usize, Trace)> {
    lts.deadlocks()
        .into_iter()
        .map(|s| (s, lts.shortest_trace(s)))
        .collect()
}
