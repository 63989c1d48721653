use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::problem::{verify, MilpProblem, Sense, Solution, SolverError, Status};
use crate::simplex::{finish, Simplex, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MilpStrategy {
    /// Enumerate when the binary count is at most `enum_threshold`,
    /// otherwise branch and bound.
    #[default]
    Auto,
    Enumerate,
    BranchAndBound,
}

#[derive(Debug, Clone)]
pub struct MilpConfig {
    pub strategy: MilpStrategy,
    pub enum_threshold: usize,
    /// Maximum number of branch-and-bound nodes.
    pub node_limit: usize,
    pub simplex: SimplexOptions,
}

impl Default for MilpConfig {
    fn default() -> Self {
        Self { strategy: MilpStrategy::Auto, enum_threshold: 16, node_limit: 100_000, simplex: SimplexOptions::default() }
    }
}

/// Solves a mixed-integer program exactly.
pub fn milp_solve(problem: &MilpProblem, config: &MilpConfig) -> Result<Solution, SolverError> {
    problem.check()?;
    let enumerate = match config.strategy {
        MilpStrategy::Enumerate => true,
        MilpStrategy::BranchAndBound => false,
        MilpStrategy::Auto => problem.binaries.len() <= config.enum_threshold,
    };
    if enumerate && problem.binaries.len() >= usize::BITS as usize - 1 {
        return Err(SolverError::InvalidProblem(format!(
            "{} binaries are too many to enumerate",
            problem.binaries.len()
        )));
    }
    let mut sol = if enumerate { enumerate_all(problem, config)? } else { branch_and_bound(problem, config)? };
    if sol.status == Status::Optimal {
        verify(problem, &sol.values, &config.simplex.tolerances).map_err(SolverError::NumericalBreakdown)?;
        sol.binaries = problem.binaries.iter().map(|b| sol.values[b.0] > 0.5).collect();
    }
    Ok(sol)
}

fn improves(sense: Sense, candidate: f64, incumbent: Option<f64>) -> bool {
    match incumbent {
        None => true,
        Some(best) => match sense {
            Sense::Maximize => candidate > best,
            Sense::Minimize => candidate < best,
        },
    }
}

/// Visits assignments in Gray-code order so consecutive LPs differ in one
/// binary's bounds and the simplex restarts from a nearby basis.
fn enumerate_all(problem: &MilpProblem, config: &MilpConfig) -> Result<Solution, SolverError> {
    let lp = &problem.lp;
    let mut simplex = Simplex::new(lp, config.simplex.clone())?;
    let bins = &problem.binaries;
    let total: usize = 1 << bins.len();

    let mut best: Option<Solution> = None;
    let mut solves = 0usize;
    let mut previous_gray = 0usize;
    for k in 0..total {
        let gray = k ^ (k >> 1);
        for (i, b) in bins.iter().enumerate() {
            let bit = (gray >> i) & 1;
            let changed = k == 0 || ((gray ^ previous_gray) >> i) & 1 == 1;
            if changed {
                let v = bit as f64;
                simplex.set_bounds(b.0, v, v);
            }
        }
        previous_gray = gray;
        // Assignments outside a binary's declared bounds are skipped.
        if bins.iter().enumerate().any(|(i, b)| {
            let v = ((gray >> i) & 1) as f64;
            v < lp.variables[b.0].lower || v > lp.variables[b.0].upper
        }) {
            continue;
        }
        solves += 1;
        match simplex.solve()? {
            Status::Infeasible => {}
            Status::Unbounded => {
                let mut s = Solution::without_point(Status::Unbounded, simplex.iterations());
                s.nodes = solves;
                return Ok(s);
            }
            Status::Optimal => {
                let sol = finish(lp, &mut simplex, Status::Optimal, &config.simplex.tolerances)?;
                if improves(lp.sense, sol.objective, best.as_ref().map(|b| b.objective)) {
                    best = Some(sol);
                }
            }
        }
    }
    let iterations = simplex.iterations();
    Ok(match best {
        Some(mut s) => {
            s.nodes = solves;
            s.iterations = iterations;
            s
        }
        None => {
            let mut s = Solution::without_point(Status::Infeasible, iterations);
            s.nodes = solves;
            s
        }
    })
}

#[derive(Debug)]
struct Node {
    id: usize,
    bound: f64,
    /// (position in `binaries`, fixed value)
    fixings: Vec<(usize, f64)>,
}

/// Heap order: best bound first, lowest id on ties. `bound` is stored in
/// maximisation form.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

fn branch_and_bound(problem: &MilpProblem, config: &MilpConfig) -> Result<Solution, SolverError> {
    let lp = &problem.lp;
    let tol = config.simplex.tolerances;
    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let original: Vec<(f64, f64)> =
        problem.binaries.iter().map(|b| (lp.variables[b.0].lower, lp.variables[b.0].upper)).collect();
    let mut simplex = Simplex::new(lp, config.simplex.clone())?;

    let mut heap = BinaryHeap::new();
    heap.push(Node { id: 0, bound: f64::INFINITY, fixings: Vec::new() });
    let mut next_id = 1usize;
    let mut incumbent: Option<Solution> = None;
    let mut nodes = 0usize;

    while let Some(node) = heap.pop() {
        let inc_obj = incumbent.as_ref().map(|s| sign * s.objective);
        if let Some(inc) = inc_obj {
            if node.bound <= inc + 1e-9 * (1.0 + inc.abs()) {
                continue;
            }
        }
        if nodes >= config.node_limit {
            let bound = sign * node.bound.max(heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max));
            return Err(SolverError::NodeLimitExceeded {
                limit: config.node_limit,
                incumbent: incumbent.map(Box::new),
                bound,
            });
        }
        nodes += 1;

        for (i, b) in problem.binaries.iter().enumerate() {
            let (lo, hi) = node
                .fixings
                .iter()
                .rev()
                .find(|f| f.0 == i)
                .map_or(original[i], |&(_, v)| (v, v));
            if simplex.bounds(b.0) != (lo, hi) {
                simplex.set_bounds(b.0, lo, hi);
            }
        }

        let sol = match simplex.solve()? {
            Status::Infeasible => continue,
            Status::Unbounded => {
                let mut s = Solution::without_point(Status::Unbounded, simplex.iterations());
                s.nodes = nodes;
                return Ok(s);
            }
            Status::Optimal => finish(lp, &mut simplex, Status::Optimal, &tol)?,
        };
        let obj = sign * sol.objective;
        if let Some(inc) = inc_obj {
            if obj <= inc + 1e-9 * (1.0 + inc.abs()) {
                continue;
            }
        }

        let branch = problem
            .binaries
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let x = sol.values[b.0];
                (i, (x - x.floor()).min(x.ceil() - x))
            })
            .filter(|&(_, frac)| frac > tol.integrality)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));

        match branch {
            None => incumbent = Some(sol),
            Some((i, _)) => {
                for v in [1.0, 0.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((i, v));
                    heap.push(Node { id: next_id, bound: obj, fixings });
                    next_id += 1;
                }
            }
        }
    }

    let iterations = simplex.iterations();
    Ok(match incumbent {
        Some(mut s) => {
            s.nodes = nodes;
            s.iterations = iterations;
            s
        }
        None => {
            let mut s = Solution::without_point(Status::Infeasible, iterations);
            s.nodes = nodes;
            s
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Comparison, LinearExpr};

    fn both(problem: &MilpProblem) -> (Solution, Solution) {
        let e = milp_solve(problem, &MilpConfig { strategy: MilpStrategy::Enumerate, ..Default::default() }).unwrap();
        let b =
            milp_solve(problem, &MilpConfig { strategy: MilpStrategy::BranchAndBound, ..Default::default() }).unwrap();
        (e, b)
    }

    #[test]
    fn integrality_rounds_down() {
        let mut p = MilpProblem::new(Sense::Maximize);
        let z = p.add_binary("z");
        p.lp.set_objective(z, 1.0);
        p.lp.add_constraint(&LinearExpr::var(z), Comparison::Le, 0.4);
        let (e, b) = both(&p);
        for s in [e, b] {
            assert_eq!(s.status, Status::Optimal);
            assert_eq!(s.binaries, vec![false]);
            assert!(s.objective.abs() < 1e-9);
        }
    }

    #[test]
    fn big_m_choice() {
        // max v s.t. v <= 0.6 z, v <= 1.7 - z
        let mut p = MilpProblem::new(Sense::Maximize);
        let v = p.lp.add_named_var("v", 0.0, f64::INFINITY, 1.0);
        let z = p.add_binary("z");
        p.lp.add_constraint(&LinearExpr::var(v).with_term(z, -0.6), Comparison::Le, 0.0);
        p.lp.add_constraint(&LinearExpr::var(v).with_term(z, 1.0), Comparison::Le, 1.7);
        let (e, b) = both(&p);
        for s in [e, b] {
            assert_eq!(s.binaries, vec![true]);
            assert!((s.objective - 0.6).abs() < 1e-9);
        }
    }

    #[test]
    fn all_assignments_infeasible() {
        let mut p = MilpProblem::new(Sense::Maximize);
        let z = p.add_binary("z");
        p.lp.add_constraint(&LinearExpr::var(z), Comparison::Eq, 0.5);
        let (e, b) = both(&p);
        assert_eq!(e.status, Status::Infeasible);
        assert_eq!(b.status, Status::Infeasible);
        assert_eq!(e.nodes, 2);
    }

    #[test]
    fn node_limit_reports_incumbent_and_bound() {
        // Knapsack with fractional relaxation needs several nodes.
        let mut p = MilpProblem::new(Sense::Maximize);
        let weights = [3.0, 4.0, 5.0, 6.0];
        let values = [4.0, 5.0, 6.0, 7.5];
        let mut row = LinearExpr::new();
        for (i, (&w, &v)) in weights.iter().zip(&values).enumerate() {
            let z = p.add_binary(format!("z{i}"));
            p.lp.set_objective(z, v);
            row.add_term(z, w);
        }
        p.lp.add_constraint(&row, Comparison::Le, 10.0);
        let err = milp_solve(&p, &MilpConfig { strategy: MilpStrategy::BranchAndBound, node_limit: 1, ..Default::default() })
            .unwrap_err();
        match err {
            SolverError::NodeLimitExceeded { limit, bound, .. } => {
                assert_eq!(limit, 1);
                assert!(bound >= 12.5 - 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        let (e, b) = both(&p);
        assert!((e.objective - 12.5).abs() < 1e-9, "{}", e.objective);
        assert!((b.objective - e.objective).abs() < 1e-9);
    }
}
