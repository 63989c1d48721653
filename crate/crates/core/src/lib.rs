//! Planning with qualitative preferences over temporal goals.
//!
//! A [`PreferenceAutomaton`] tracks temporal progress and ranks its states
//! through atomic preferences combined into a [`Gpf`]. Composed with a
//! [`LabeledMdp`], the planner finds a finite-horizon policy that maximises
//! the formula's value by solving a mixed-integer program.

pub mod automaton;
pub mod encoding;
pub mod eval;
pub mod fixtures;
pub mod gpf;
pub mod gridworld;
pub mod mdp;
pub mod policy;
pub mod product;
pub mod simulate;

pub use automaton::{AtomicPreference, AutomatonError, NamedApf, PreferenceAutomaton, StateSet, Symbol};
pub use encoding::{
    encode, encode_and, encode_apf1, encode_flow, encode_or, plan, plan_lex, plan_product, terminal_mass,
    EncodingParams, OccupancyPlan, PlanError, PlanStatus, PlanWarning,
};
pub use eval::{evaluate, forward_eval, value_of, EvalError, EvalResult, Propagation};
pub use gpf::{eval_apf, eval_gpf, parse_gpf, Gpf, GpfError, TerminalDistribution};
pub use gridworld::{build_gridworld, GridworldSpec};
pub use mdp::{validate_mdp, LabeledMdp, MdpIssue};
pub use policy::{extract_policy, Policy};
pub use product::{product, ProductMdp};
pub use simulate::{simulate, Empirical};
