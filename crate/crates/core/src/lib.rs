//! Orthogonal fault-tolerance modeling for adaptive systems.
//!
//! The pipeline derives a fault-tolerance configuration from a mechanism
//! template ([`oftm`]), weaves its fail/recover behavior into component
//! state machines ([`machine`]), composes the machines into a reachable
//! transition system ([`compose`]) and checks the result for inconsistent
//! states and temporal properties ([`check`]). [`smv`] exports the composed
//! system for an external model checker.

pub mod check;
pub mod cli;
pub mod compose;
pub mod corpus;
pub mod formula;
pub mod machine;
pub mod manifest;
pub mod oftm;
pub mod pipeline;
pub mod properties;
pub mod smv;

pub use check::{
    check_ctl, check_invariant, find_deadlocks, find_interactions, pattern_to_formula, CheckResult,
    ConsistencyRule, InteractionReport, Pattern, Scope,
};
pub use compose::{compose, compose_machines, reachable, CompositeLts, CompositeState, Trace};
pub use formula::{Formula, SafetyFormula};
pub use machine::{
    parse_machine, validate_machine, weave_fault_tolerance, StateMachine, WovenMachine,
};
pub use oftm::{
    derive_mechanism, enumerate_valid_configs, validate_configuration, FeatureConfig, RuleSet,
};
pub use smv::export_smv;
