//! Built-in models used by the examples, tests and the command line.
//!
//! The gridworld's obstacle cells (5 and 6) are an assumed layout; see
//! `fixtures/README.md`.

use crate::automaton::PreferenceAutomaton;
use crate::gridworld::{build_gridworld, GridworldSpec};
use crate::mdp::LabeledMdp;

pub const FIG1_AUTOMATON: &str = include_str!("../fixtures/fig1_automaton.json");
pub const FIG2_AUTOMATON: &str = include_str!("../fixtures/fig2_automaton.json");
pub const MICRO_AUTOMATON: &str = include_str!("../fixtures/micro_automaton.json");
pub const MICRO3_AUTOMATON: &str = include_str!("../fixtures/micro3_automaton.json");
pub const MICRO1_MDP: &str = include_str!("../fixtures/micro1_mdp.json");
pub const MICRO2_MDP: &str = include_str!("../fixtures/micro2_mdp.json");
pub const MICRO3_MDP: &str = include_str!("../fixtures/micro3_mdp.json");
pub const GRIDWORLD_5X5: &str = include_str!("../fixtures/gridworld_5x5.json");

/// Name and contents of every built-in document.
pub const ALL: [(&str, &str); 8] = [
    ("fig1_automaton", FIG1_AUTOMATON),
    ("fig2_automaton", FIG2_AUTOMATON),
    ("micro_automaton", MICRO_AUTOMATON),
    ("micro3_automaton", MICRO3_AUTOMATON),
    ("micro1_mdp", MICRO1_MDP),
    ("micro2_mdp", MICRO2_MDP),
    ("micro3_mdp", MICRO3_MDP),
    ("gridworld_5x5", GRIDWORLD_5X5),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

fn automaton(text: &str) -> PreferenceAutomaton {
    PreferenceAutomaton::from_json(text).expect("built-in automaton is valid")
}

fn mdp(text: &str) -> LabeledMdp {
    LabeledMdp::from_json(text).expect("built-in MDP is valid")
}

/// Tracks which of the regions A, B, C have been visited.
pub fn fig1_automaton() -> PreferenceAutomaton {
    automaton(FIG1_AUTOMATON)
}

/// Refinement of [`fig1_automaton`] whose state 8 records visiting A and B
/// before C.
pub fn fig2_automaton() -> PreferenceAutomaton {
    automaton(FIG2_AUTOMATON)
}

/// Three states `q0, qA, qB`; `p` prefers `qA` over `qB`.
pub fn micro1_automaton() -> PreferenceAutomaton {
    automaton(MICRO_AUTOMATON)
}

pub fn micro3_automaton() -> PreferenceAutomaton {
    automaton(MICRO3_AUTOMATON)
}

/// One action: `s0` moves to `sA` w.p. 0.6 and to `sB` w.p. 0.4.
pub fn micro1_mdp() -> LabeledMdp {
    mdp(MICRO1_MDP)
}

/// MICRO-1 plus an action `b` that moves to `sB` surely.
pub fn micro2_mdp() -> LabeledMdp {
    mdp(MICRO2_MDP)
}

/// Two decision stages; the best policy for `p & r` plays `a` then `b`.
pub fn micro3_mdp() -> LabeledMdp {
    mdp(MICRO3_MDP)
}

pub fn gridworld_spec() -> GridworldSpec {
    GridworldSpec::from_json(GRIDWORLD_5X5).expect("built-in gridworld is valid")
}

pub fn gridworld_mdp() -> LabeledMdp {
    build_gridworld(&gridworld_spec()).expect("built-in gridworld is valid")
}
