//! Self-contained linear and mixed-integer programming.
//!
//! [`lp_solve`] runs a bounded-variable revised simplex. [`milp_solve`] either
//! enumerates every binary assignment (small instances) or runs best-first
//! branch-and-bound on the LP relaxation; both paths are exact.

mod factor;
pub mod format;
mod milp;
mod problem;
mod simplex;
mod tolerance;

pub use milp::{milp_solve, MilpConfig, MilpStrategy};
pub use problem::{
    verify, Comparison, Constraint, LinearExpr, LpProblem, MilpProblem, Sense, Solution, SolverError, Status,
    VarId, Variable,
};
pub use simplex::{lp_solve, lp_solve_with, Simplex, SimplexOptions};
pub use tolerance::Tolerances;
