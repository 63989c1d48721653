//! Mixed-integer encoding of finite-horizon preference planning.
//!
//! Occupancy variables `y(t, x, a)` give the probability of being in product
//! state `x` and taking action `a` at stage `t`, for `t = 0..T-1`. Only states
//! some policy can reach at exactly stage `t` get variables. The value of a
//! formula is measured on the occupancy of the last stage.

use std::collections::HashMap;

use prefplan_milp::{
    milp_solve, Comparison, LinearExpr, MilpConfig, MilpProblem, Sense, SolverError, Status, VarId,
};

use crate::automaton::{NamedApf, PreferenceAutomaton, StateSet};
use crate::eval::forward_eval;
use crate::gpf::{Gpf, GpfError};
use crate::mdp::LabeledMdp;
use crate::policy::extract_policy;
use crate::product::{product, ProductError, ProductMdp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingParams {
    pub horizon: usize,
    /// Upper bound on any value difference.
    pub big_m: f64,
    /// Lower bound on any value difference.
    pub small_m: f64,
    /// Margin separating the two outcomes of every comparison.
    pub epsilon: f64,
}

impl EncodingParams {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, big_m: 1.0, small_m: -1.0, epsilon: 1e-6 }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.horizon == 0 {
            return Err(PlanError::InvalidParams("horizon must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) || !(self.big_m > 0.0) || !(self.small_m < 0.0) {
            return Err(PlanError::InvalidParams(format!(
                "need epsilon > 0, M > 0, m < 0 (got {}, {}, {})",
                self.epsilon, self.big_m, self.small_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("preference `{name}` has length {len}; the planner supports length 1 only")]
    ApfTooLong { name: String, len: usize },
    #[error("lex(...) must be planned with plan_lex")]
    LexNotAllowed,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Gpf(#[from] GpfError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Occupancy variables of an encoded problem.
#[derive(Debug, Clone)]
pub struct FlowVars {
    pub horizon: usize,
    /// Per stage: `(product state, action, variable)`.
    pub vars: Vec<Vec<(usize, usize, VarId)>>,
}

/// Adds the initial-distribution and flow-balance rows.
pub fn encode_flow(problem: &mut MilpProblem, product: &ProductMdp, horizon: usize) -> FlowVars {
    let layers = product.reachable_layers(horizon);
    let mut vars: Vec<Vec<(usize, usize, VarId)>> = Vec::with_capacity(horizon);
    for (t, layer) in layers.iter().enumerate() {
        let stage: Vec<(usize, usize, VarId)> = layer
            .iter()
            .flat_map(|&x| product.available_actions(x).map(move |a| (x, a)))
            .map(|(x, a)| (x, a, problem.lp.add_named_var(format!("y[{t},{x},{a}]"), 0.0, 1.0, 0.0)))
            .collect();
        vars.push(stage);
    }

    let nu = product.initial_vector();
    let mut rows: HashMap<usize, LinearExpr> = HashMap::new();
    for &(x, _, v) in &vars[0] {
        rows.entry(x).or_default().add_term(v, 1.0);
    }
    for &x in &layers[0] {
        let row = rows.remove(&x).unwrap_or_default();
        problem.lp.add_constraint(&row, Comparison::Eq, nu[x]);
    }

    for t in 1..horizon {
        let mut rows: HashMap<usize, LinearExpr> = HashMap::new();
        for &(x, _, v) in &vars[t] {
            rows.entry(x).or_default().add_term(v, 1.0);
        }
        for &(x, a, v) in &vars[t - 1] {
            for &(y, p) in &product.transitions[x][a] {
                rows.entry(y).or_default().add_term(v, -p);
            }
        }
        for &x in &layers[t] {
            let row = rows.remove(&x).unwrap_or_default();
            problem.lp.add_constraint(&row.normalized(), Comparison::Eq, 0.0);
        }
    }
    FlowVars { horizon, vars }
}

/// Probability that the automaton is in `set` at the last stage.
pub fn terminal_mass(flow: &FlowVars, product: &ProductMdp, set: &StateSet) -> LinearExpr {
    let mut e = LinearExpr::new();
    if let Some(last) = flow.vars.last() {
        for &(x, _, v) in last {
            if set.contains(product.states[x].1) {
                e.add_term(v, 1.0);
            }
        }
    }
    e
}

#[derive(Debug, Clone)]
pub struct ApfVars {
    pub name: String,
    pub value: VarId,
    pub binary: VarId,
}

/// Encodes a length-1 preference `X ≼ X'` given expressions for the terminal
/// masses of `X` (`low`) and `X'` (`high`). At any feasible point the binary
/// is 1 with value `high` and `high ≥ low + ε`, or 0 with value 0 and
/// `high ≤ low − ε`.
pub fn encode_apf1(
    problem: &mut MilpProblem,
    apf: &NamedApf,
    low: &LinearExpr,
    high: &LinearExpr,
    params: &EncodingParams,
) -> Result<ApfVars, PlanError> {
    if apf.apf.len() != 1 {
        return Err(PlanError::ApfTooLong { name: apf.name.clone(), len: apf.apf.len() });
    }
    let (big, small, eps) = (params.big_m, params.small_m, params.epsilon);
    let v = problem.lp.add_named_var(format!("v[{}]", apf.name), 0.0, big, 0.0);
    let z = problem.add_binary(format!("z[{}]", apf.name));
    let lp = &mut problem.lp;
    let gap = high.clone().add_scaled(low, -1.0);

    lp.add_constraint(&LinearExpr::var(v).add_scaled(high, -1.0).with_term(z, -big), Comparison::Ge, -big);
    lp.add_constraint(&LinearExpr::var(v).add_scaled(high, -1.0), Comparison::Le, 0.0);
    lp.add_constraint(&LinearExpr::var(v).with_term(z, -big), Comparison::Le, 0.0);
    lp.add_constraint(&gap.clone().with_term(z, -(big + eps)), Comparison::Le, -eps);
    lp.add_constraint(&gap.with_term(z, small - eps), Comparison::Ge, small);
    Ok(ApfVars { name: apf.name.clone(), value: v, binary: z })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
}

#[derive(Debug, Clone)]
pub struct ConnectiveVars {
    pub kind: Connective,
    pub value: VarId,
    /// One binary per pairwise fold; 1 when the left operand is at least
    /// the right one.
    pub binaries: Vec<VarId>,
}

fn encode_pair(
    problem: &mut MilpProblem,
    kind: Connective,
    p1: VarId,
    p2: VarId,
    params: &EncodingParams,
    name: &str,
) -> (VarId, VarId) {
    let (big, small, eps) = (params.big_m, params.small_m, params.epsilon);
    let v = problem.lp.add_named_var(format!("v[{name}]"), 0.0, big, 0.0);
    let z = problem.add_binary(format!("z[{name}]"));
    let lp = &mut problem.lp;
    let cmp_bound = match kind {
        Connective::And => Comparison::Le,
        Connective::Or => Comparison::Ge,
    };
    lp.add_constraint(&LinearExpr::var(v).with_term(p1, -1.0), cmp_bound, 0.0);
    lp.add_constraint(&LinearExpr::var(v).with_term(p2, -1.0), cmp_bound, 0.0);
    match kind {
        Connective::And => {
            // z = 1 selects p2, z = 0 selects p1.
            lp.add_constraint(&LinearExpr::var(v).with_term(p2, -1.0).with_term(z, small), Comparison::Ge, small);
            lp.add_constraint(&LinearExpr::var(v).with_term(p1, -1.0).with_term(z, -small), Comparison::Ge, 0.0);
        }
        Connective::Or => {
            // z = 1 selects p1, z = 0 selects p2.
            lp.add_constraint(&LinearExpr::var(v).with_term(p1, -1.0).with_term(z, big), Comparison::Le, big);
            lp.add_constraint(&LinearExpr::var(v).with_term(p2, -1.0).with_term(z, -big), Comparison::Le, 0.0);
        }
    }
    lp.add_constraint(
        &LinearExpr::var(p1).with_term(p2, -1.0).with_term(z, -(big + eps)),
        Comparison::Le,
        -eps,
    );
    (v, z)
}

fn encode_connective(
    problem: &mut MilpProblem,
    kind: Connective,
    children: &[VarId],
    params: &EncodingParams,
    name: &str,
) -> ConnectiveVars {
    assert!(children.len() >= 2, "connectives need at least two operands");
    let mut acc = children[0];
    let mut binaries = Vec::new();
    for (k, &c) in children[1..].iter().enumerate() {
        let (v, z) = encode_pair(problem, kind, acc, c, params, &format!("{name}.{k}"));
        binaries.push(z);
        acc = v;
    }
    ConnectiveVars { kind, value: acc, binaries }
}

/// `v = min(children)`, folded pairwise from the left.
pub fn encode_and(problem: &mut MilpProblem, children: &[VarId], params: &EncodingParams) -> ConnectiveVars {
    let name = format!("and{}", problem.lp.num_vars());
    encode_connective(problem, Connective::And, children, params, &name)
}

/// `v = max(children)`, folded pairwise from the left.
pub fn encode_or(problem: &mut MilpProblem, children: &[VarId], params: &EncodingParams) -> ConnectiveVars {
    let name = format!("or{}", problem.lp.num_vars());
    encode_connective(problem, Connective::Or, children, params, &name)
}

/// A fully encoded planning problem, before solving.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub problem: MilpProblem,
    pub flow: FlowVars,
    pub apfs: Vec<ApfVars>,
    pub connectives: Vec<ConnectiveVars>,
    pub root: VarId,
}

struct Builder<'a> {
    problem: MilpProblem,
    flow: FlowVars,
    product: &'a ProductMdp,
    params: EncodingParams,
    masses: HashMap<StateSet, VarId>,
    apfs: Vec<ApfVars>,
    connectives: Vec<ConnectiveVars>,
}

impl Builder<'_> {
    /// One auxiliary variable per distinct state set keeps the preference
    /// rows short.
    fn mass(&mut self, set: &StateSet) -> LinearExpr {
        if let Some(&v) = self.masses.get(set) {
            return LinearExpr::var(v);
        }
        let v = self.problem.lp.add_named_var(format!("mass[{}]", self.masses.len()), 0.0, 1.0, 0.0);
        let row = terminal_mass(&self.flow, self.product, set).with_term(v, -1.0);
        self.problem.lp.add_constraint(&row, Comparison::Eq, 0.0);
        self.masses.insert(set.clone(), v);
        LinearExpr::var(v)
    }

    fn encode(&mut self, gpf: &Gpf) -> Result<VarId, PlanError> {
        match gpf {
            Gpf::Apf(a) => {
                if let Some(existing) = self.apfs.iter().find(|x| x.name == a.name) {
                    return Ok(existing.value);
                }
                if a.apf.len() != 1 {
                    return Err(PlanError::ApfTooLong { name: a.name.clone(), len: a.apf.len() });
                }
                let low = self.mass(&a.apf.sets[0]);
                let high = self.mass(&a.apf.sets[1]);
                let vars = encode_apf1(&mut self.problem, a, &low, &high, &self.params)?;
                let v = vars.value;
                self.apfs.push(vars);
                Ok(v)
            }
            Gpf::And(children) | Gpf::Or(children) => {
                let vs = children.iter().map(|c| self.encode(c)).collect::<Result<Vec<_>, _>>()?;
                let c = if matches!(gpf, Gpf::And(_)) {
                    encode_and(&mut self.problem, &vs, &self.params)
                } else {
                    encode_or(&mut self.problem, &vs, &self.params)
                };
                let v = c.value;
                self.connectives.push(c);
                Ok(v)
            }
            Gpf::Lex(_) => Err(PlanError::LexNotAllowed),
        }
    }
}

/// Builds the program `max v(φ)` subject to flow balance and the preference
/// rows of `gpf`.
pub fn encode(product: &ProductMdp, gpf: &Gpf, params: &EncodingParams) -> Result<Encoded, PlanError> {
    params.validate()?;
    if gpf.is_lex() {
        return Err(PlanError::LexNotAllowed);
    }
    for leaf in gpf.leaves() {
        if leaf.apf.len() != 1 {
            return Err(PlanError::ApfTooLong { name: leaf.name.clone(), len: leaf.apf.len() });
        }
    }
    let mut problem = MilpProblem::new(Sense::Maximize);
    let flow = encode_flow(&mut problem, product, params.horizon);
    let mut b = Builder {
        problem,
        flow,
        product,
        params: *params,
        masses: HashMap::new(),
        apfs: Vec::new(),
        connectives: Vec::new(),
    };
    let root = b.encode(gpf)?;
    b.problem.lp.set_objective(root, 1.0);
    Ok(Encoded { problem: b.problem, flow: b.flow, apfs: b.apfs, connectives: b.connectives, root })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApfOutcome {
    pub name: String,
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectiveOutcome {
    pub kind: Connective,
    pub value: f64,
    pub binaries: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanWarning {
    /// The extracted policy leaves this preference's two masses closer than
    /// the encoding margin, so the reported value may be misclassified.
    TieBand { apf: String, gap: f64 },
}

/// Occupancy `y(t, x, a)` of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupancy {
    pub state: usize,
    pub action: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct OccupancyPlan {
    pub horizon: usize,
    pub status: PlanStatus,
    /// Optimal value of the formula; 0 when infeasible.
    pub objective: f64,
    /// Margin actually used, after any retry.
    pub epsilon: f64,
    /// Per stage, every occupancy variable; empty when infeasible.
    pub occupancy: Vec<Vec<Occupancy>>,
    pub apfs: Vec<ApfOutcome>,
    pub connectives: Vec<ConnectiveOutcome>,
    pub nodes: usize,
    pub warnings: Vec<PlanWarning>,
}

impl OccupancyPlan {
    pub fn is_optimal(&self) -> bool {
        self.status == PlanStatus::Optimal
    }

    /// Total occupancy of each product state at stage `t`.
    pub fn state_occupancy(&self, t: usize, num_states: usize) -> Vec<f64> {
        let mut p = vec![0.0; num_states];
        for o in &self.occupancy[t] {
            p[o.state] += o.value;
        }
        p
    }

    fn infeasible(params: &EncodingParams, gpf: &Gpf, nodes: usize, epsilon: f64) -> Self {
        OccupancyPlan {
            horizon: params.horizon,
            status: PlanStatus::Infeasible,
            objective: 0.0,
            epsilon,
            occupancy: Vec::new(),
            apfs: gpf
                .distinct_apfs()
                .iter()
                .map(|a| ApfOutcome { name: a.name.clone(), value: 0.0, satisfied: false })
                .collect(),
            connectives: Vec::new(),
            nodes,
            warnings: Vec::new(),
        }
    }
}

fn solve_encoded(enc: &Encoded, solver: &MilpConfig) -> Result<prefplan_milp::Solution, PlanError> {
    Ok(milp_solve(&enc.problem, solver)?)
}

pub fn plan(
    mdp: &LabeledMdp,
    automaton: &PreferenceAutomaton,
    gpf: &Gpf,
    params: &EncodingParams,
    solver: &MilpConfig,
) -> Result<OccupancyPlan, PlanError> {
    let product = product(mdp, automaton)?;
    plan_product(&product, gpf, params, solver)
}

/// Solves the program; when no binary assignment is feasible the margin is
/// reduced tenfold once before reporting infeasibility.
pub fn plan_product(
    product: &ProductMdp,
    gpf: &Gpf,
    params: &EncodingParams,
    solver: &MilpConfig,
) -> Result<OccupancyPlan, PlanError> {
    let mut used = *params;
    let mut enc = encode(product, gpf, &used)?;
    let mut sol = solve_encoded(&enc, solver)?;
    let mut nodes = sol.nodes;
    if sol.status == Status::Infeasible {
        used.epsilon /= 10.0;
        enc = encode(product, gpf, &used)?;
        sol = solve_encoded(&enc, solver)?;
        nodes += sol.nodes;
    }
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Ok(OccupancyPlan::infeasible(params, gpf, nodes, used.epsilon)),
        Status::Unbounded => {
            return Err(PlanError::Solver(SolverError::NumericalBreakdown("bounded program reported unbounded".into())))
        }
    }

    let occupancy = enc
        .flow
        .vars
        .iter()
        .map(|stage| {
            stage.iter().map(|&(x, a, v)| Occupancy { state: x, action: a, value: sol.value(v).max(0.0) }).collect()
        })
        .collect();
    let binary = |z: VarId| sol.value(z) > 0.5;
    let mut plan = OccupancyPlan {
        horizon: params.horizon,
        status: PlanStatus::Optimal,
        objective: sol.objective,
        epsilon: used.epsilon,
        occupancy,
        apfs: enc
            .apfs
            .iter()
            .map(|a| ApfOutcome { name: a.name.clone(), value: sol.value(a.value), satisfied: binary(a.binary) })
            .collect(),
        connectives: enc
            .connectives
            .iter()
            .map(|c| ConnectiveOutcome {
                kind: c.kind,
                value: sol.value(c.value),
                binaries: c.binaries.iter().map(|&z| binary(z)).collect(),
            })
            .collect(),
        nodes,
        warnings: Vec::new(),
    };
    plan.warnings = tie_band_warnings(product, &plan, gpf, params, solver.simplex.tolerances.feasibility);
    Ok(plan)
}

/// Checks the extracted policy against the original margin. A gap no wider
/// than the margin (plus the solver's feasibility tolerance) means the
/// separation was forced by the encoding rather than found in the problem.
fn tie_band_warnings(
    product: &ProductMdp,
    plan: &OccupancyPlan,
    gpf: &Gpf,
    params: &EncodingParams,
    feasibility: f64,
) -> Vec<PlanWarning> {
    let policy = extract_policy(plan, product);
    let Ok(result) = forward_eval(product, &policy, plan.horizon) else {
        return Vec::new();
    };
    let band = params.epsilon + feasibility;
    gpf.distinct_apfs()
        .into_iter()
        .filter_map(|a| {
            let gap = result.terminal.prob(&a.apf.sets[1]) - result.terminal.prob(&a.apf.sets[0]);
            (gap.abs() <= band).then(|| PlanWarning::TieBand { apf: a.name.clone(), gap })
        })
        .collect()
}

/// Plans each formula in order and returns the 1-based index and plan of
/// the first one with positive value, or the last one if none has.
pub fn plan_lex(
    product: &ProductMdp,
    gpfs: &[Gpf],
    params: &EncodingParams,
    solver: &MilpConfig,
) -> Result<(usize, OccupancyPlan), PlanError> {
    if gpfs.is_empty() {
        return Err(PlanError::InvalidParams("lex needs at least one formula".into()));
    }
    let mut last = None;
    for (i, g) in gpfs.iter().enumerate() {
        let plan = plan_product(product, g, params, solver)?;
        // Positive values are at least the margin; this threshold only
        // filters rounding noise.
        if plan.objective > 1e-9 {
            return Ok((i + 1, plan));
        }
        last = Some((i + 1, plan));
    }
    Ok(last.expect("at least one formula"))
}
