//! Synchronous-product composition of component machines into a reachable
//! labeled transition system.
//!
//! Events in the sync set fire jointly in every machine whose alphabet
//! contains them; all other events interleave and fire in exactly one
//! machine. Only states reachable from the initial tuple are kept, and the
//! breadth-first discovery order is the canonical state numbering used by
//! every downstream consumer (checking, traces, export).
//!
//! Successors of a composite state are generated in a fixed order: events
//! lexicographically; for a synchronized event, the cartesian product of
//! the participants' targets in machine order; for an interleaved event,
//! machines in declaration order. Per machine, targets follow transition
//! declaration order.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::machine::{StateMachine, WovenMachine};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("machine name '{0}' used more than once")]
    DuplicateMachineName(String),
    #[error("event '{event}' is local to machine '{machine}' and cannot be synchronized")]
    SyncOnLocalFailureEvent { machine: String, event: String },
    #[error("event '{event}' is local to machine '{owner}' but also used by '{other}'")]
    LocalEventShared {
        owner: String,
        other: String,
        event: String,
    },
    #[error("nothing to compose")]
    NoMachines,
}

/// Result of a breadth-first exploration: states in discovery order (index
/// 0 is the initial state), edges grouped by source in that same order, and
/// for each state the edge that first discovered it.
#[derive(Debug, Clone)]
pub struct Exploration<S, E> {
    pub states: Vec<S>,
    pub edges: Vec<(usize, E, usize)>,
    pub parent_edge: Vec<Option<usize>>,
}

/// Breadth-first reachability from `initial`.
///
/// `successors` is called once per discovered state; the order it yields
/// successors in fixes the discovery order. Duplicate `(event, target)`
/// pairs from the same source are dropped.
pub fn reachable<S, E, F, I>(initial: S, mut successors: F) -> Exploration<S, E>
where
    S: Clone + Eq + Hash,
    E: Clone + Eq + Hash,
    F: FnMut(&S) -> I,
    I: IntoIterator<Item = (E, S)>,
{
    let mut index: HashMap<S, usize> = HashMap::new();
    let mut states = vec![initial.clone()];
    let mut parent_edge = vec![None];
    index.insert(initial, 0);
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(src) = queue.pop_front() {
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut labels: HashMap<E, usize> = HashMap::new();
        for (event, next) in successors(&states[src]) {
            let tgt = match index.get(&next) {
                Some(&i) => i,
                None => {
                    let i = states.len();
                    index.insert(next.clone(), i);
                    states.push(next);
                    parent_edge.push(Some(edges.len()));
                    queue.push_back(i);
                    i
                }
            };
            let n = labels.len();
            let label = *labels.entry(event.clone()).or_insert(n);
            if seen.insert((label, tgt)) {
                edges.push((src, event, tgt));
            }
        }
    }
    Exploration {
        states,
        edges,
        parent_edge,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompositeState {
    /// (machine name, local state) per composed machine, in composition order.
    pub parts: Vec<(String, String)>,
    pub valuation: BTreeSet<String>,
}

impl CompositeState {
    /// Local state names joined with `|`.
    pub fn label(&self) -> String {
        self.parts
            .iter()
            .map(|(_, s)| s.as_str())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn local(&self, machine: &str) -> Option<&str> {
        self.parts
            .iter()
            .find(|(m, _)| m == machine)
            .map(|(_, s)| s.as_str())
    }

    pub fn holds(&self, prop: &str) -> bool {
        self.valuation.contains(prop)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LtsTransition {
    pub source: usize,
    pub event: String,
    pub target: usize,
}

/// A finite path from the initial state: `states[i] -events[i]-> states[i+1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub states: Vec<usize>,
    pub events: Vec<String>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.states.last().expect("a trace has at least one state")
    }
}

/// The reachable product of a list of machines.
#[derive(Debug, Clone, Serialize)]
pub struct CompositeLts {
    machines: Vec<String>,
    states: Vec<CompositeState>,
    transitions: Vec<LtsTransition>,
    #[serde(skip)]
    outgoing: Vec<Vec<usize>>,
    #[serde(skip)]
    parent_edge: Vec<Option<usize>>,
    sync_set: BTreeSet<String>,
    local_events: BTreeSet<String>,
    propositions: BTreeSet<String>,
    #[serde(skip)]
    component_sizes: Vec<usize>,
}

/// Composes woven machines. Fail/recover events stay local to their machine.
pub fn compose(
    machines: &[WovenMachine],
    sync_set: &BTreeSet<String>,
) -> Result<CompositeLts, ComposeError> {
    for w in machines {
        for e in w.local_events() {
            if sync_set.contains(e) {
                return Err(ComposeError::SyncOnLocalFailureEvent {
                    machine: w.name().to_string(),
                    event: e.clone(),
                });
            }
            if let Some(other) = machines
                .iter()
                .find(|o| o.name() != w.name() && o.machine().alphabet().contains(e))
            {
                return Err(ComposeError::LocalEventShared {
                    owner: w.name().to_string(),
                    other: other.name().to_string(),
                    event: e.clone(),
                });
            }
        }
    }
    let plain: Vec<&StateMachine> = machines.iter().map(|w| w.machine()).collect();
    let mut lts = compose_machines(&plain, sync_set)?;
    lts.local_events = machines
        .iter()
        .flat_map(|w| w.local_events().iter().cloned())
        .collect();
    Ok(lts)
}

/// Composes plain state machines.
pub fn compose_machines(
    machines: &[&StateMachine],
    sync_set: &BTreeSet<String>,
) -> Result<CompositeLts, ComposeError> {
    if machines.is_empty() {
        return Err(ComposeError::NoMachines);
    }
    let mut names = BTreeSet::new();
    for m in machines {
        if !names.insert(m.name()) {
            return Err(ComposeError::DuplicateMachineName(m.name().to_string()));
        }
    }

    // per machine: state index -> event -> targets (declaration order)
    let tables: Vec<Vec<HashMap<&str, Vec<usize>>>> = machines
        .iter()
        .map(|m| {
            let mut table: Vec<HashMap<&str, Vec<usize>>> = vec![HashMap::new(); m.states().len()];
            for t in m.transitions() {
                let s = m.state_index(&t.source).expect("known state");
                let d = m.state_index(&t.target).expect("known state");
                table[s].entry(t.event.as_str()).or_default().push(d);
            }
            table
        })
        .collect();
    let events: BTreeSet<&str> = machines
        .iter()
        .flat_map(|m| m.alphabet().iter().map(String::as_str))
        .collect();
    let participants: HashMap<&str, Vec<usize>> = events
        .iter()
        .map(|e| {
            let ps = machines
                .iter()
                .enumerate()
                .filter(|(_, m)| m.alphabet().contains(*e))
                .map(|(i, _)| i)
                .collect();
            (*e, ps)
        })
        .collect();

    let initial: Vec<usize> = machines
        .iter()
        .map(|m| m.state_index(m.initial()).expect("initial state exists"))
        .collect();

    let explored = reachable(initial, |tuple: &Vec<usize>| {
        let mut out: Vec<(&str, Vec<usize>)> = Vec::new();
        for &e in &events {
            if sync_set.contains(e) {
                let ps = &participants[e];
                let mut partial: Vec<Vec<usize>> = vec![tuple.clone()];
                for &i in ps {
                    let Some(targets) = tables[i][tuple[i]].get(e) else {
                        partial.clear();
                        break;
                    };
                    partial = partial
                        .into_iter()
                        .flat_map(|p| {
                            targets.iter().map(move |&d| {
                                let mut q = p.clone();
                                q[i] = d;
                                q
                            })
                        })
                        .collect();
                }
                out.extend(partial.into_iter().map(|p| (e, p)));
            } else {
                for (i, table) in tables.iter().enumerate() {
                    if let Some(targets) = table[tuple[i]].get(e) {
                        for &d in targets {
                            let mut q = tuple.clone();
                            q[i] = d;
                            out.push((e, q));
                        }
                    }
                }
            }
        }
        out
    });

    let states = explored
        .states
        .iter()
        .map(|tuple| {
            let mut valuation = BTreeSet::new();
            let parts = tuple
                .iter()
                .zip(machines)
                .map(|(&s, m)| {
                    let st = &m.states()[s];
                    valuation.extend(st.props.iter().cloned());
                    (m.name().to_string(), st.id.clone())
                })
                .collect();
            CompositeState { parts, valuation }
        })
        .collect();
    let transitions = explored
        .edges
        .into_iter()
        .map(|(source, event, target)| LtsTransition {
            source,
            event: event.to_string(),
            target,
        })
        .collect();
    let propositions = machines.iter().flat_map(|m| m.propositions()).collect();
    Ok(CompositeLts::assemble(
        machines.iter().map(|m| m.name().to_string()).collect(),
        states,
        transitions,
        explored.parent_edge,
        sync_set.clone(),
        BTreeSet::new(),
        propositions,
        machines.iter().map(|m| m.states().len()).collect(),
    ))
}

impl CompositeLts {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        machines: Vec<String>,
        states: Vec<CompositeState>,
        transitions: Vec<LtsTransition>,
        parent_edge: Vec<Option<usize>>,
        sync_set: BTreeSet<String>,
        local_events: BTreeSet<String>,
        propositions: BTreeSet<String>,
        component_sizes: Vec<usize>,
    ) -> CompositeLts {
        let mut outgoing = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.source].push(i);
        }
        CompositeLts {
            machines,
            states,
            transitions,
            outgoing,
            parent_edge,
            sync_set,
            local_events,
            propositions,
            component_sizes,
        }
    }

    /// The reachable graph of a single machine.
    pub fn from_machine(m: &StateMachine) -> CompositeLts {
        compose_machines(&[m], &BTreeSet::new()).expect("a single machine always composes")
    }

    pub fn machines(&self) -> &[String] {
        &self.machines
    }

    /// States in canonical order; index 0 is the initial state.
    pub fn states(&self) -> &[CompositeState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &CompositeState {
        &self.states[i]
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn transitions(&self) -> &[LtsTransition] {
        &self.transitions
    }

    pub fn outgoing(&self, s: usize) -> impl Iterator<Item = &LtsTransition> {
        self.outgoing[s].iter().map(|&i| &self.transitions[i])
    }

    /// Distinct successor states of `s` (without deadlock self-loops).
    pub fn successors(&self, s: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.outgoing(s).map(|t| t.target).collect();
        set.into_iter().collect()
    }

    pub fn sync_set(&self) -> &BTreeSet<String> {
        &self.sync_set
    }

    /// Fail/recover events of the woven components.
    pub fn local_events(&self) -> &BTreeSet<String> {
        &self.local_events
    }

    /// Every proposition that may be referred to in a formula: the ones
    /// carried by any component state plus explicitly declared ones.
    pub fn propositions(&self) -> &BTreeSet<String> {
        &self.propositions
    }

    pub fn declare<I: IntoIterator<Item = String>>(&mut self, props: I) {
        self.propositions.extend(props);
    }

    /// Product of the component state counts.
    pub fn state_bound(&self) -> usize {
        self.component_sizes.iter().product()
    }

    pub fn find(&self, locals: &[&str]) -> Option<usize> {
        self.states.iter().position(|s| {
            s.parts.len() == locals.len() && s.parts.iter().zip(locals).all(|((_, a), b)| a == b)
        })
    }

    /// States with no outgoing transitions.
    pub fn deadlocks(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&s| self.outgoing[s].is_empty())
            .collect()
    }

    /// Shortest path from the initial state to `target`; ties resolve to the
    /// path through earlier-discovered states.
    pub fn shortest_trace(&self, target: usize) -> Trace {
        let mut states = vec![target];
        let mut events = Vec::new();
        let mut cursor = target;
        while let Some(e) = self.parent_edge[cursor] {
            let t = &self.transitions[e];
            events.push(t.event.clone());
            states.push(t.source);
            cursor = t.source;
        }
        states.reverse();
        events.reverse();
        Trace { states, events }
    }

    /// Whether `trace` starts at the initial state and follows transitions.
    pub fn replays(&self, trace: &Trace) -> bool {
        trace.states.first() == Some(&self.initial())
            && trace.states.len() == trace.events.len() + 1
            && trace.events.iter().enumerate().all(|(i, e)| {
                let (s, d) = (trace.states[i], trace.states[i + 1]);
                s < self.len() && self.outgoing(s).any(|t| &t.event == e && t.target == d)
            })
    }

    /// Like [`CompositeLts::replays`], but a final step may also be a
    /// deadlock self-loop (as used by totalized temporal semantics).
    pub fn replays_totalized(&self, trace: &Trace) -> bool {
        trace.states.first() == Some(&self.initial())
            && trace.states.len() == trace.events.len() + 1
            && trace.events.iter().enumerate().all(|(i, e)| {
                let (s, d) = (trace.states[i], trace.states[i + 1]);
                s < self.len()
                    && (self.outgoing(s).any(|t| &t.event == e && t.target == d)
                        || (self.outgoing[s].is_empty() && s == d && e == DEADLOCK_LOOP))
            })
    }

    /// Keeps only transitions whose event satisfies `keep`, then drops the
    /// states that become unreachable. Canonical order is recomputed.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> CompositeLts {
        let explored = reachable(0usize, |&s| {
            self.outgoing(s)
                .filter(|t| keep(&t.event))
                .map(|t| (t.event.clone(), t.target))
                .collect::<Vec<_>>()
        });
        let states = explored
            .states
            .iter()
            .map(|&s| self.states[s].clone())
            .collect();
        let transitions = explored
            .edges
            .into_iter()
            .map(|(source, event, target)| LtsTransition {
                source,
                event,
                target,
            })
            .collect();
        CompositeLts::assemble(
            self.machines.clone(),
            states,
            transitions,
            explored.parent_edge,
            self.sync_set.clone(),
            self.local_events.clone(),
            self.propositions.clone(),
            self.component_sizes.clone(),
        )
    }

    /// Removes every fail/recover transition of the woven components.
    pub fn without_faults(&self) -> CompositeLts {
        self.restrict(|e| !self.local_events.contains(e))
    }
}

/// Event label used for the implicit self-loop at a deadlock state.
pub const DEADLOCK_LOOP: &str = "(deadlock)";
