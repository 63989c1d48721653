//! Problem and solution types shared by the LP and MILP layers.

use std::fmt;

use crate::tolerance::Tolerances;

/// Index of a variable inside an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Le,
    Ge,
    Eq,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
            Comparison::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sense {
    #[default]
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub name: String,
}

/// Sparse linear expression `sum coef * x + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        self.terms.push((v, coef));
        self
    }

    pub fn with_term(mut self, v: VarId, coef: f64) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    /// `self + scale * other`.
    pub fn add_scaled(mut self, other: &LinearExpr, scale: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    /// Merges duplicate variables and drops zero coefficients. Terms come out
    /// sorted by variable index.
    pub fn normalized(&self) -> LinearExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        LinearExpr { terms: merged, constant: self.constant }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }
}

/// A single row `sum coeffs <cmp> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(VarId, f64)>,
    pub cmp: Comparison,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.cmp {
            Comparison::Le => (a - self.rhs).max(0.0),
            Comparison::Ge => (self.rhs - a).max(0.0),
            Comparison::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        Self { sense, variables: Vec::new(), constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, objective: f64) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable { lower, upper, objective, name: format!("x{}", id.0) });
        id
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        let id = self.add_var(lower, upper, objective);
        self.variables[id.0].name = name.into();
        id
    }

    pub fn set_objective(&mut self, v: VarId, coef: f64) {
        self.variables[v.0].objective = coef;
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.variables[v.0].lower = lower;
        self.variables[v.0].upper = upper;
    }

    /// Adds `expr <cmp> rhs`; the expression's constant is moved to the
    /// right-hand side and duplicate terms are merged.
    pub fn add_constraint(&mut self, expr: &LinearExpr, cmp: Comparison, rhs: f64) -> usize {
        let e = expr.normalized();
        self.constraints.push(Constraint { coeffs: e.terms, cmp, rhs: rhs - e.constant });
        self.constraints.len() - 1
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables.iter().zip(values).map(|(v, x)| v.objective * x).sum()
    }

    /// Checks the structural invariants: bounds ordered and indices in range.
    pub fn check(&self) -> Result<(), SolverError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(SolverError::InvalidProblem(format!(
                    "variable {i} has bounds [{}, {}]",
                    v.lower, v.upper
                )));
            }
            if !v.objective.is_finite() {
                return Err(SolverError::InvalidProblem(format!("variable {i} has a non-finite objective")));
            }
        }
        let n = self.variables.len();
        for (r, row) in self.constraints.iter().enumerate() {
            if row.rhs.is_nan() {
                return Err(SolverError::InvalidProblem(format!("row {r} has a NaN right-hand side")));
            }
            for &(v, c) in &row.coeffs {
                if v.0 >= n {
                    return Err(SolverError::InvalidProblem(format!("row {r} references {v} out of range")));
                }
                if !c.is_finite() {
                    return Err(SolverError::InvalidProblem(format!("row {r} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        bounds.max(rows)
    }
}

/// An LP plus a set of variables restricted to {0, 1}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpProblem {
    pub lp: LpProblem,
    pub binaries: Vec<VarId>,
}

impl MilpProblem {
    pub fn new(sense: Sense) -> Self {
        Self { lp: LpProblem::new(sense), binaries: Vec::new() }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        let v = self.lp.add_named_var(name, 0.0, 1.0, 0.0);
        self.binaries.push(v);
        v
    }

    pub fn check(&self) -> Result<(), SolverError> {
        self.lp.check()?;
        for &b in &self.binaries {
            let var = self
                .lp
                .variables
                .get(b.0)
                .ok_or_else(|| SolverError::InvalidProblem(format!("binary {b} out of range")))?;
            if var.lower < 0.0 || var.upper > 1.0 {
                return Err(SolverError::InvalidProblem(format!(
                    "binary {b} must have bounds within [0, 1], got [{}, {}]",
                    var.lower, var.upper
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Objective in the problem's own sense; NaN unless `Optimal`.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Rounded binary assignment, in the order of `MilpProblem::binaries`.
    pub binaries: Vec<bool>,
    /// LP solves (enumeration) or branch-and-bound nodes.
    pub nodes: usize,
    pub iterations: usize,
}

impl Solution {
    pub(crate) fn without_point(status: Status, iterations: usize) -> Self {
        Self { status, objective: f64::NAN, values: Vec::new(), binaries: Vec::new(), nodes: 0, iterations }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("node limit of {limit} exceeded (best bound {bound})")]
    NodeLimitExceeded {
        limit: usize,
        incumbent: Option<Box<Solution>>,
        bound: f64,
    },
}

/// Independent re-check of a claimed optimal point against the original rows,
/// bounds and integrality requirements.
pub fn verify(problem: &MilpProblem, values: &[f64], tol: &Tolerances) -> Result<(), String> {
    if values.len() != problem.lp.num_vars() {
        return Err(format!("expected {} values, got {}", problem.lp.num_vars(), values.len()));
    }
    for (i, (v, &x)) in problem.lp.variables.iter().zip(values).enumerate() {
        if !x.is_finite() {
            return Err(format!("{} ({i}) is not finite", v.name));
        }
        if x < v.lower - tol.feasibility || x > v.upper + tol.feasibility {
            return Err(format!("{} = {x} outside [{}, {}]", v.name, v.lower, v.upper));
        }
    }
    for (r, row) in problem.lp.constraints.iter().enumerate() {
        let viol = row.violation(values);
        if viol > tol.feasibility {
            return Err(format!("row {r} violated by {viol:e}"));
        }
    }
    for &b in &problem.binaries {
        let x = values[b.0];
        if (x - x.round()).abs() > tol.integrality {
            return Err(format!("binary {} = {x} is fractional", problem.lp.variables[b.0].name));
        }
    }
    Ok(())
}
