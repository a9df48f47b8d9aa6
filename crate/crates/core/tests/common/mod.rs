//! Random generators and independent oracles shared by the integration
//! tests. Nothing here calls into the checker or the composer.

#![allow(dead_code)]

use std::collections::BTreeSet;

use oftm::machine::{State, StateMachine, Transition};
use oftm::{CompositeLts, Formula};
use proptest::prelude::*;

pub const PROPS: [&str; 3] = ["p", "q", "r"];
pub const EVENTS: [&str; 3] = ["a", "b", "c"];

/// A random machine with `1..=max_states` states and at most
/// `max_transitions` transitions over events a/b/c and propositions p/q/r.
pub fn machine(
    name: &'static str,
    max_states: usize,
    max_transitions: usize,
) -> impl Strategy<Value = StateMachine> {
    (1..=max_states).prop_flat_map(move |n| {
        let props = prop::collection::vec(prop::collection::btree_set(0..PROPS.len(), 0..=2), n);
        let edges = prop::collection::vec((0..n, 0..EVENTS.len(), 0..n), 0..=max_transitions);
        (props, edges).prop_map(move |(props, edges)| {
            let states = props
                .iter()
                .enumerate()
                .map(|(i, ps)| {
                    let mut s = State::new(format!("{name}{i}"));
                    for &p in ps {
                        s = s.prop(PROPS[p]);
                    }
                    s
                })
                .collect();
            let transitions = edges
                .iter()
                .map(|&(s, e, d)| {
                    Transition::new(&format!("{name}{s}"), EVENTS[e], &format!("{name}{d}"))
                })
                .collect();
            StateMachine::new(
                name,
                states,
                format!("{name}0"),
                Vec::<String>::new(),
                transitions,
            )
            .expect("generated machine is well formed")
        })
    })
}

/// A random CTL formula of depth at most `depth` over p/q/r.
pub fn formula(depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        (0..PROPS.len()).prop_map(|i| Formula::atom(PROPS[i])),
    ];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            inner.clone().prop_map(Formula::ex),
            inner.clone().prop_map(Formula::ax),
            inner.clone().prop_map(Formula::ef),
            inner.clone().prop_map(Formula::af),
            inner.clone().prop_map(Formula::eg),
            inner.clone().prop_map(Formula::ag),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::eu(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::au(a, b)),
        ]
    })
}

/// A random propositional formula over p/q/r.
pub fn propositional(depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        (0..PROPS.len()).prop_map(|i| Formula::atom(PROPS[i])),
    ];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
        ]
    })
}

/// Successor lists read straight off the transition list, with a self-loop
/// added at every state that has none.
pub fn total_successors(lts: &CompositeLts) -> Vec<Vec<usize>> {
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); lts.len()];
    for t in lts.transitions() {
        succ[t.source].insert(t.target);
    }
    succ.into_iter()
        .enumerate()
        .map(|(s, set)| {
            if set.is_empty() {
                vec![s]
            } else {
                set.into_iter().collect()
            }
        })
        .collect()
}

fn fixpoint(n: usize, start: bool, step: impl Fn(&[bool]) -> Vec<bool>) -> Vec<bool> {
    let mut cur = vec![start; n];
    loop {
        let next = step(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Naive CTL semantics: every operator evaluated directly by its own
/// fixpoint characterization over whole state sets, with no rewriting.
pub fn naive_ctl(
    succ: &[Vec<usize>],
    label: &dyn Fn(usize, &str) -> bool,
    f: &Formula,
) -> Vec<bool> {
    let n = succ.len();
    let ev = |g: &Formula| naive_ctl(succ, label, g);
    let ex = |z: &[bool]| -> Vec<bool> { (0..n).map(|s| succ[s].iter().any(|&t| z[t])).collect() };
    let ax = |z: &[bool]| -> Vec<bool> { (0..n).map(|s| succ[s].iter().all(|&t| z[t])).collect() };
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(p) => (0..n).map(|s| label(s, p)).collect(),
        Formula::Not(a) => ev(a).into_iter().map(|x| !x).collect(),
        Formula::And(a, b) => ev(a).iter().zip(ev(b)).map(|(x, y)| *x && y).collect(),
        Formula::Or(a, b) => ev(a).iter().zip(ev(b)).map(|(x, y)| *x || y).collect(),
        Formula::Implies(a, b) => ev(a).iter().zip(ev(b)).map(|(x, y)| !*x || y).collect(),
        Formula::EX(a) => ex(&ev(a)),
        Formula::AX(a) => ax(&ev(a)),
        Formula::EF(a) => {
            let fa = ev(a);
            fixpoint(n, false, |z| {
                let e = ex(z);
                (0..n).map(|s| fa[s] || e[s]).collect()
            })
        }
        Formula::AF(a) => {
            let fa = ev(a);
            fixpoint(n, false, |z| {
                let e = ax(z);
                (0..n).map(|s| fa[s] || e[s]).collect()
            })
        }
        Formula::EG(a) => {
            let fa = ev(a);
            fixpoint(n, true, |z| {
                let e = ex(z);
                (0..n).map(|s| fa[s] && e[s]).collect()
            })
        }
        Formula::AG(a) => {
            let fa = ev(a);
            fixpoint(n, true, |z| {
                let e = ax(z);
                (0..n).map(|s| fa[s] && e[s]).collect()
            })
        }
        Formula::EU(a, b) => {
            let (fa, fb) = (ev(a), ev(b));
            fixpoint(n, false, |z| {
                let e = ex(z);
                (0..n).map(|s| fb[s] || (fa[s] && e[s])).collect()
            })
        }
        Formula::AU(a, b) => {
            let (fa, fb) = (ev(a), ev(b));
            fixpoint(n, false, |z| {
                let e = ax(z);
                (0..n).map(|s| fb[s] || (fa[s] && e[s])).collect()
            })
        }
    }
}

pub fn naive_ctl_on(lts: &CompositeLts, f: &Formula) -> Vec<usize> {
    let succ = total_successors(lts);
    let label = |s: usize, p: &str| lts.state(s).valuation.contains(p);
    let sat = naive_ctl(&succ, &label, f);
    (0..sat.len()).filter(|&s| sat[s]).collect()
}

/// All paths of exactly `len` steps from the initial state (deadlocks loop).
pub fn paths(succ: &[Vec<usize>], len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                let last = *p.last().unwrap();
                succ[last].iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    out
}

/// Brute-force reachable tuples of the synchronous product: start from the
/// initial tuple and repeatedly apply every step rule until nothing new
/// appears. Returns the number of reachable tuples.
pub fn brute_force_product_size(machines: &[&StateMachine], sync: &BTreeSet<String>) -> usize {
    let init: Vec<String> = machines.iter().map(|m| m.initial().to_string()).collect();
    let mut reached: BTreeSet<Vec<String>> = BTreeSet::from([init]);
    let events: BTreeSet<&String> = machines.iter().flat_map(|m| m.alphabet()).collect();
    loop {
        let mut next = reached.clone();
        for tuple in &reached {
            for e in &events {
                if sync.contains(*e) {
                    // every machine knowing e must move; combine choices
                    let mut combos: Vec<Vec<String>> = vec![tuple.clone()];
                    for (i, m) in machines.iter().enumerate() {
                        if !m.alphabet().contains(*e) {
                            continue;
                        }
                        let targets: Vec<&String> = m
                            .transitions()
                            .iter()
                            .filter(|t| t.source == tuple[i] && &t.event == *e)
                            .map(|t| &t.target)
                            .collect();
                        combos = combos
                            .into_iter()
                            .flat_map(|c| {
                                targets.iter().map(move |d| {
                                    let mut c = c.clone();
                                    c[i] = (*d).clone();
                                    c
                                })
                            })
                            .collect();
                    }
                    next.extend(combos);
                } else {
                    for (i, m) in machines.iter().enumerate() {
                        for t in m.transitions() {
                            if t.source == tuple[i] && &t.event == *e {
                                let mut c = tuple.clone();
                                c[i] = t.target.clone();
                                next.insert(c);
                            }
                        }
                    }
                }
            }
        }
        if next.len() == reached.len() {
            return reached.len();
        }
        reached = next;
    }
}
