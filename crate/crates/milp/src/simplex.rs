//! Bounded-variable revised primal simplex.
//!
//! Every row `a x <cmp> b` gets a logical `s = -a x` whose bounds encode the
//! comparison, so the working system is `[A | I] (x, s) = 0` with all
//! variables boxed (possibly by infinite bounds). Phase 1 minimises the sum of
//! bound violations of basic variables; phase 2 minimises the cost. Pricing is
//! Dantzig's rule with a Harris ratio test. After `stall_limit` iterations
//! without progress the bounds are widened by small random amounts to break
//! degenerate ties; once the perturbed problem is solved the true bounds are
//! restored and the solve continues from that basis. A second stall falls
//! back to Bland's rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::factor::EtaFile;
use crate::problem::{Comparison, LpProblem, Sense, Solution, SolverError, Status};
use crate::tolerance::Tolerances;

const NONE: usize = usize::MAX;

/// Relative size of the bound perturbation.
const PERTURBATION: f64 = 1e-8;

/// Pivots smaller than this are taken only when no other entering
/// candidate has a usable one.
const WEAK_PIVOT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub tolerances: Tolerances,
    pub refactor_every: usize,
    pub stall_limit: usize,
    /// Hard cap on pivots; `None` picks a size-dependent default.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), refactor_every: 80, stall_limit: 300, max_iterations: None }
    }
}

/// A simplex engine bound to one constraint matrix. Bounds may be changed
/// between solves; the last basis is reused as a warm start.
#[derive(Debug, Clone)]
pub struct Simplex {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Minimisation costs over structurals and logicals.
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    pos: Vec<usize>,
    eta: EtaFile,
    opts: SimplexOptions,
    xb_stale: bool,
    needs_refactor: bool,
    iterations: usize,
    // scratch
    alpha: Vec<f64>,
    dual: Vec<f64>,
    /// True bounds while a perturbation is active.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

enum Step {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

impl Simplex {
    pub fn new(problem: &LpProblem, opts: SimplexOptions) -> Result<Self, SolverError> {
        problem.check()?;
        let n = problem.num_vars();
        let m = problem.constraints.len();

        let mut counts = vec![0usize; n];
        for row in &problem.constraints {
            for &(v, _) in &row.coeffs {
                counts[v.0] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let mut fill = col_start.clone();
        let mut col_row = vec![0usize; col_start[n]];
        let mut col_val = vec![0.0; col_start[n]];
        for (i, row) in problem.constraints.iter().enumerate() {
            for &(v, c) in &row.coeffs {
                let k = fill[v.0];
                col_row[k] = i;
                col_val[k] = c;
                fill[v.0] += 1;
            }
        }

        let sign = match problem.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for v in &problem.variables {
            lower.push(v.lower);
            upper.push(v.upper);
            cost.push(sign * v.objective);
        }
        for row in &problem.constraints {
            let (lo, hi) = match row.cmp {
                Comparison::Le => (-row.rhs, f64::INFINITY),
                Comparison::Ge => (f64::NEG_INFINITY, -row.rhs),
                Comparison::Eq => (-row.rhs, -row.rhs),
            };
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
        }

        let mut s = Self {
            m,
            n,
            col_start,
            col_row,
            col_val,
            lower,
            upper,
            cost,
            x: vec![0.0; n + m],
            state: vec![VarState::AtLower; n + m],
            head: (n..n + m).collect(),
            pos: vec![NONE; n + m],
            eta: EtaFile::new(),
            opts,
            xb_stale: true,
            needs_refactor: false,
            iterations: 0,
            alpha: vec![0.0; m],
            dual: vec![0.0; m],
            saved_bounds: None,
        };
        for j in 0..n {
            s.place_nonbasic(j);
        }
        for r in 0..m {
            let b = n + r;
            s.state[b] = VarState::Basic;
            s.pos[b] = r;
        }
        Ok(s)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn num_structural(&self) -> usize {
        self.n
    }

    /// Changes the bounds of structural variable `j`, keeping the basis.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.state[j] != VarState::Basic {
            let prefer_upper = self.state[j] == VarState::AtUpper;
            self.place_nonbasic_pref(j, prefer_upper);
            self.xb_stale = true;
        }
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Values of the structural variables at the current basis.
    pub fn structural_values(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    fn place_nonbasic(&mut self, j: usize) {
        self.place_nonbasic_pref(j, false);
    }

    fn place_nonbasic_pref(&mut self, j: usize, prefer_upper: bool) {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        let (st, v) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) if prefer_upper => (VarState::AtUpper, hi),
            (true, _) => (VarState::AtLower, lo),
            (false, true) => (VarState::AtUpper, hi),
            (false, false) => (VarState::Zero, 0.0),
        };
        self.state[j] = st;
        self.x[j] = v;
        self.pos[j] = NONE;
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for k in self.col_start[j]..self.col_start[j + 1] {
                s += self.col_val[k] * y[self.col_row[k]];
            }
            s
        } else {
            y[j - self.n]
        }
    }

    fn load_column(&self, j: usize, dense: &mut [f64]) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                dense[self.col_row[k]] += self.col_val[k];
            }
        } else {
            dense[j - self.n] += 1.0;
        }
    }

    /// Rebuilds the eta file for the current basic set, repairing singular
    /// bases by swapping in logicals.
    fn refactor(&mut self) {
        let (n, m) = (self.n, self.m);
        self.eta.clear();
        let mut new_head = vec![NONE; m];
        let mut taken = vec![false; m];
        let mut structs = Vec::new();
        for r in 0..m {
            let b = self.head[r];
            if b >= n {
                taken[b - n] = true;
                new_head[b - n] = b;
            } else {
                structs.push(b);
            }
        }

        // Row -> columns incidence restricted to rows not held by logicals.
        let mut row_count = vec![0usize; m];
        for &c in &structs {
            for k in self.col_start[c]..self.col_start[c + 1] {
                let r = self.col_row[k];
                if !taken[r] {
                    row_count[r] += 1;
                }
            }
        }
        let mut row_start = vec![0usize; m + 1];
        for r in 0..m {
            row_start[r + 1] = row_start[r] + row_count[r];
        }
        let mut row_cols = vec![0usize; row_start[m]];
        let mut fill = row_start.clone();
        for (ci, &c) in structs.iter().enumerate() {
            for k in self.col_start[c]..self.col_start[c + 1] {
                let r = self.col_row[k];
                if !taken[r] {
                    row_cols[fill[r]] = ci;
                    fill[r] += 1;
                }
            }
        }

        let mut done = vec![false; structs.len()];
        let mut live = row_count.clone();
        let mut queue: Vec<usize> = (0..m).filter(|&r| !taken[r] && live[r] == 1).collect();
        let mut dropped = Vec::new();
        let mut remaining = structs.len();
        let mut cursor = 0usize;
        let mut work = vec![0.0; m];

        while remaining > 0 {
            // Prefer a row singleton; otherwise take the next unprocessed column.
            let mut pick: Option<(usize, Option<usize>)> = None;
            while let Some(r) = queue.pop() {
                if new_head[r] != NONE || live[r] != 1 {
                    continue;
                }
                if let Some(&ci) = row_cols[row_start[r]..row_start[r + 1]].iter().find(|&&ci| !done[ci]) {
                    pick = Some((ci, Some(r)));
                    break;
                }
            }
            if pick.is_none() {
                while cursor < structs.len() && done[cursor] {
                    cursor += 1;
                }
                if cursor < structs.len() {
                    pick = Some((cursor, None));
                }
            }
            let Some((ci, preferred)) = pick else { break };
            let c = structs[ci];

            let untouched = (self.col_start[c]..self.col_start[c + 1])
                .all(|k| new_head[self.col_row[k]] == NONE || new_head[self.col_row[k]] >= n);
            let chosen = if untouched {
                // No processed eta pivots on this column's rows: FTRAN is the identity.
                let entries = self.col_start[c]..self.col_start[c + 1];
                let free_rows = entries
                    .clone()
                    .filter(|&k| !taken[self.col_row[k]] && new_head[self.col_row[k]] == NONE);
                let (arg, maxabs) = free_rows.fold((NONE, 0.0f64), |(arg, best), k| {
                    let v = self.col_val[k].abs();
                    if v > best { (self.col_row[k], v) } else { (arg, best) }
                });
                let preferred_val = preferred
                    .and_then(|p| entries.clone().find(|&k| self.col_row[k] == p))
                    .map_or(0.0, |k| self.col_val[k].abs());
                let r = match preferred {
                    Some(p) if preferred_val >= 0.01 * maxabs && preferred_val > 1e-9 => Some(p),
                    _ => (maxabs > 1e-9).then_some(arg),
                };
                if let Some(r) = r {
                    self.eta.push_sparse(r, entries.map(|k| (self.col_row[k], self.col_val[k])));
                }
                r
            } else {
                self.load_column(c, &mut work);
                self.eta.ftran(&mut work);
                let mut arg = (NONE, 0.0f64);
                for r in 0..m {
                    if !taken[r] && new_head[r] == NONE && work[r].abs() > arg.1 {
                        arg = (r, work[r].abs());
                    }
                }
                let r = match preferred {
                    Some(p) if work[p].abs() >= 0.01 * arg.1 && work[p].abs() > 1e-9 => Some(p),
                    _ => (arg.1 > 1e-9).then_some(arg.0),
                };
                if let Some(r) = r {
                    self.eta.push_dense(r, &work, 1e-14);
                }
                work.iter_mut().for_each(|w| *w = 0.0);
                r
            };

            done[ci] = true;
            remaining -= 1;
            for k in self.col_start[c]..self.col_start[c + 1] {
                let r = self.col_row[k];
                if !taken[r] && live[r] > 0 {
                    live[r] -= 1;
                    if live[r] == 1 && new_head[r] == NONE {
                        queue.push(r);
                    }
                }
            }
            match chosen {
                Some(r) => new_head[r] = c,
                None => dropped.push(c),
            }
        }

        for r in 0..m {
            if new_head[r] == NONE {
                new_head[r] = n + r;
            }
        }
        for &c in &dropped {
            self.place_nonbasic(c);
        }
        for (r, &b) in new_head.iter().enumerate() {
            if b >= n && self.state[b] != VarState::Basic {
                self.state[b] = VarState::Basic;
            }
            self.pos[b] = r;
        }
        self.head = new_head;
        self.eta.mark_base();
        self.needs_refactor = false;
        self.xb_stale = true;
    }

    fn snap_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            self.x[j] = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
                VarState::Zero => 0.0,
            };
        }
        self.xb_stale = true;
    }

    /// Widens every finite bound by a random amount of order `PERTURBATION`.
    fn perturb(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.iterations as u64);
        self.saved_bounds = Some((self.lower.clone(), self.upper.clone()));
        for j in 0..self.n + self.m {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_finite() {
                self.lower[j] = lo - PERTURBATION * (1.0 + lo.abs()) * rng.gen_range(1.0..2.0);
            }
            if hi.is_finite() {
                self.upper[j] = hi + PERTURBATION * (1.0 + hi.abs()) * rng.gen_range(1.0..2.0);
            }
        }
        self.snap_nonbasic();
    }

    /// Restores the true bounds. Returns false if none were saved.
    fn unperturb(&mut self) -> bool {
        let Some((lower, upper)) = self.saved_bounds.take() else { return false };
        self.lower = lower;
        self.upper = upper;
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Zero && (self.lower[j].is_finite() || self.upper[j].is_finite()) {
                self.place_nonbasic(j);
            }
        }
        self.snap_nonbasic();
        true
    }

    fn compute_xb(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                if j < self.n {
                    for k in self.col_start[j]..self.col_start[j + 1] {
                        rhs[self.col_row[k]] -= self.col_val[k] * xj;
                    }
                } else {
                    rhs[j - self.n] -= xj;
                }
            }
        }
        self.eta.ftran(&mut rhs);
        for r in 0..self.m {
            self.x[self.head[r]] = rhs[r];
        }
        self.xb_stale = false;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.opts.tolerances.primal;
        let x = self.x[j];
        if x < self.lower[j] - tol {
            self.lower[j] - x
        } else if x > self.upper[j] + tol {
            x - self.upper[j]
        } else {
            0.0
        }
    }

    fn iteration_cap(&self) -> usize {
        self.opts.max_iterations.unwrap_or(20_000 + 40 * (self.n + self.m))
    }

    /// Runs phases 1 and 2 from the current basis.
    pub fn solve(&mut self) -> Result<Status, SolverError> {
        let tol = self.opts.tolerances;
        let cap = self.iterations + self.iteration_cap();
        let mut stall = 0usize;
        let mut bland = false;
        let mut perturbed_once = false;
        let mut rejected: Vec<usize> = Vec::new();
        let mut accept_weak = false;
        let mut last_measure = f64::INFINITY;
        let mut last_phase1 = true;
        let mut costs = vec![0.0; self.m];

        loop {
            if self.needs_refactor || self.eta.updates() >= self.opts.refactor_every {
                self.refactor();
            }
            if self.xb_stale {
                self.compute_xb();
            }
            if self.iterations >= cap {
                self.unperturb();
                return Err(SolverError::NumericalBreakdown(format!(
                    "iteration limit {} reached",
                    self.iteration_cap()
                )));
            }

            let mut sum_inf = 0.0;
            for r in 0..self.m {
                let b = self.head[r];
                let inf = self.infeasibility(b);
                sum_inf += inf;
                costs[r] = if inf == 0.0 {
                    0.0
                } else if self.x[b] < self.lower[b] {
                    -1.0
                } else {
                    1.0
                };
            }
            let phase1 = sum_inf > 0.0;
            if !phase1 {
                for r in 0..self.m {
                    costs[r] = self.cost[self.head[r]];
                }
            }
            if phase1 != last_phase1 {
                last_measure = f64::INFINITY;
                stall = 0;
                bland = false;
                last_phase1 = phase1;
            }
            let measure = if phase1 { sum_inf } else { self.objective_internal() };
            if measure < last_measure - 1e-12 * (1.0 + measure.abs()) {
                stall = 0;
                bland = false;
                last_measure = measure;
            } else {
                stall += 1;
                if stall > self.opts.stall_limit {
                    if !perturbed_once {
                        perturbed_once = true;
                        self.perturb();
                        stall = 0;
                        last_measure = f64::INFINITY;
                        continue;
                    }
                    bland = true;
                }
            }

            self.dual.copy_from_slice(&costs);
            self.eta.btran(&mut self.dual);

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None; // (j, dir, |d|)
            for j in 0..self.n + self.m {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] || rejected.contains(&j) {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.cost[j] };
                let d = cj - self.dot_column(j, &self.dual);
                let dir = match st {
                    VarState::AtLower if d < -tol.dual => 1.0,
                    VarState::AtUpper if d > tol.dual => -1.0,
                    VarState::Zero if d.abs() > tol.dual => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.map_or(true, |(_, _, best)| d.abs() > best) {
                    entering = Some((j, dir, d.abs()));
                }
            }

            let Some((q, dir, _)) = entering else {
                if !rejected.is_empty() {
                    rejected.clear();
                    accept_weak = true;
                    continue;
                }
                if self.eta.updates() > 0 {
                    // Confirm on a fresh factorization before declaring.
                    self.needs_refactor = true;
                    continue;
                }
                if self.unperturb() {
                    // Widened bounds relax the problem, so infeasibility carries over.
                    if phase1 {
                        return Ok(Status::Infeasible);
                    }
                    last_measure = f64::INFINITY;
                    stall = 0;
                    continue;
                }
                return Ok(if phase1 { Status::Infeasible } else { Status::Optimal });
            };

            self.alpha.iter_mut().for_each(|a| *a = 0.0);
            let mut alpha = std::mem::take(&mut self.alpha);
            self.load_column(q, &mut alpha);
            self.eta.ftran(&mut alpha);

            let step = self.ratio_test(q, dir, &alpha, phase1, bland);
            let Some((theta, step)) = step else {
                self.alpha = alpha;
                if phase1 {
                    // Cannot happen with exact arithmetic; treat as a stale factorization.
                    if self.eta.updates() > 0 {
                        self.needs_refactor = true;
                        continue;
                    }
                    self.unperturb();
                    return Err(SolverError::NumericalBreakdown("phase 1 ray without blocking variable".into()));
                }
                if self.unperturb() {
                    continue;
                }
                return Ok(Status::Unbounded);
            };

            if let Step::Pivot { row, .. } = step {
                if alpha[row].abs() < WEAK_PIVOT && !accept_weak {
                    rejected.push(q);
                    self.alpha = alpha;
                    self.iterations += 1;
                    continue;
                }
            }
            rejected.clear();
            accept_weak = false;

            // Apply the step.
            if theta != 0.0 {
                self.x[q] += dir * theta;
                for r in 0..self.m {
                    let a = alpha[r];
                    if a != 0.0 {
                        self.x[self.head[r]] -= dir * a * theta;
                    }
                }
            }
            match step {
                Step::Flip => {
                    self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Step::Pivot { row, to_upper } => {
                    let leaving = self.head[row];
                    if to_upper {
                        self.state[leaving] = VarState::AtUpper;
                        self.x[leaving] = self.upper[leaving];
                    } else {
                        self.state[leaving] = VarState::AtLower;
                        self.x[leaving] = self.lower[leaving];
                    }
                    if !self.x[leaving].is_finite() {
                        self.state[leaving] = VarState::Zero;
                        self.x[leaving] = 0.0;
                    }
                    self.pos[leaving] = NONE;
                    self.head[row] = q;
                    self.pos[q] = row;
                    self.state[q] = VarState::Basic;
                    if alpha[row].abs() < 1e-7 {
                        self.needs_refactor = true;
                    }
                    self.eta.push_dense(row, &alpha, 1e-14);
                }
            }
            self.alpha = alpha;
            self.iterations += 1;
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Option<(f64, Step)> {
        let tol = self.opts.tolerances;
        let flip = self.upper[q] - self.lower[q];
        let flip = if flip.is_finite() { flip } else { f64::INFINITY };

        // (row, exact ratio, |alpha|, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        let mut theta_max = flip;
        for r in 0..self.m {
            let a = alpha[r];
            if a.abs() <= tol.pivot {
                continue;
            }
            let b = self.head[r];
            let rate = -dir * a;
            let x = self.x[b];
            let (lo, hi) = (self.lower[b], self.upper[b]);
            let below = x < lo - tol.primal;
            let above = x > hi + tol.primal;
            let blocked = if phase1 && below {
                (rate > 0.0).then(|| ((lo - x) / rate, false))
            } else if phase1 && above {
                (rate < 0.0).then(|| ((x - hi) / -rate, true))
            } else if rate < 0.0 {
                lo.is_finite().then(|| ((x - lo).max(0.0) / -rate, false))
            } else {
                hi.is_finite().then(|| ((hi - x).max(0.0) / rate, true))
            };
            if let Some((ratio, to_upper)) = blocked {
                let relaxed = if phase1 && (below || above) { ratio } else { ratio + tol.primal / rate.abs() };
                if !bland {
                    theta_max = theta_max.min(relaxed);
                }
                cands.push((r, ratio, a.abs(), to_upper));
            }
        }

        if bland {
            let min_ratio = cands.iter().map(|c| c.1).fold(flip, f64::min);
            if !min_ratio.is_finite() {
                return None;
            }
            if flip <= min_ratio {
                return Some((flip, Step::Flip));
            }
            let ties: Vec<_> = cands.iter().filter(|c| c.1 <= min_ratio + 1e-12).collect();
            let largest = ties.iter().map(|c| c.2).fold(0.0, f64::max);
            let best = ties
                .iter()
                .filter(|c| c.2 >= 1e-3 * largest)
                .min_by_key(|c| self.head[c.0])
                .expect("a candidate attains the minimum ratio");
            return Some((best.1, Step::Pivot { row: best.0, to_upper: best.3 }));
        }

        if !theta_max.is_finite() {
            return None;
        }
        let best = cands
            .iter()
            .filter(|c| c.1 <= theta_max)
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)));
        match best {
            Some(&(row, ratio, _, to_upper)) if ratio < flip => Some((ratio, Step::Pivot { row, to_upper })),
            _ if flip.is_finite() && flip <= theta_max => Some((flip, Step::Flip)),
            Some(&(row, ratio, _, to_upper)) => Some((ratio, Step::Pivot { row, to_upper })),
            None => None,
        }
    }

    fn objective_internal(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Finishes a solve: fresh factorization, recomputed basics, snapped
    /// nonbasics. Returns the largest remaining bound violation.
    pub fn polish(&mut self) -> f64 {
        self.refactor();
        self.compute_xb();
        (0..self.n + self.m).map(|j| self.infeasibility(j)).fold(0.0, f64::max)
    }
}

/// Solves a linear program from the all-logical basis.
pub fn lp_solve(problem: &LpProblem) -> Result<Solution, SolverError> {
    lp_solve_with(problem, &SimplexOptions::default())
}

pub fn lp_solve_with(problem: &LpProblem, opts: &SimplexOptions) -> Result<Solution, SolverError> {
    let mut simplex = Simplex::new(problem, opts.clone())?;
    let status = simplex.solve()?;
    finish(problem, &mut simplex, status, &opts.tolerances)
}

pub(crate) fn finish(
    problem: &LpProblem,
    simplex: &mut Simplex,
    status: Status,
    tol: &Tolerances,
) -> Result<Solution, SolverError> {
    if status != Status::Optimal {
        return Ok(Solution::without_point(status, simplex.iterations()));
    }
    simplex.polish();
    let values = simplex.structural_values();
    let viol = problem.max_violation(&values);
    if viol > tol.feasibility {
        return Err(SolverError::NumericalBreakdown(format!(
            "optimal basis violates constraints by {viol:e}"
        )));
    }
    Ok(Solution {
        status,
        objective: problem.objective_value(&values),
        values,
        binaries: Vec::new(),
        nodes: 1,
        iterations: simplex.iterations(),
    })
}
