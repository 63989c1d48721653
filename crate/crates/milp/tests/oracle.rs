//! Cross-checks the simplex and both MILP strategies against brute force.

use prefplan_milp::{
    format, lp_solve, milp_solve, Comparison, LinearExpr, LpProblem, MilpConfig, MilpProblem, MilpStrategy,
    Sense, Status, VarId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A hyperplane `a·x = b` that may be active at a vertex.
struct Plane {
    a: Vec<f64>,
    b: f64,
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best objective over all vertices of a bounded LP, or `None` if infeasible.
fn vertex_oracle(lp: &LpProblem) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes = Vec::new();
    for (j, v) in lp.variables.iter().enumerate() {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push(Plane { a: a.clone(), b: v.lower });
        planes.push(Plane { a, b: v.upper });
    }
    for row in &lp.constraints {
        let mut a = vec![0.0; n];
        for &(v, c) in &row.coeffs {
            a[v.0] += c;
        }
        planes.push(Plane { a, b: row.rhs });
    }
    let mut best: Option<f64> = None;
    for combo in combinations(planes.len(), n) {
        let a = combo.iter().map(|&i| planes[i].a.clone()).collect();
        let b = combo.iter().map(|&i| planes[i].b).collect();
        let Some(x) = solve_square(a, b) else { continue };
        if lp.max_violation(&x) > 1e-7 {
            continue;
        }
        let obj = lp.objective_value(&x);
        best = Some(match (best, lp.sense) {
            (None, _) => obj,
            (Some(b), Sense::Maximize) => b.max(obj),
            (Some(b), Sense::Minimize) => b.min(obj),
        });
    }
    best
}

fn random_lp(seed: u64, n: usize, m: usize) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LpProblem::new(sense);
    let vars: Vec<VarId> = (0..n)
        .map(|_| {
            let lo = rng.gen_range(-3i32..=1) as f64;
            let hi = lo + rng.gen_range(0i32..=4) as f64;
            lp.add_var(lo, hi, rng.gen_range(-5i32..=5) as f64)
        })
        .collect();
    for _ in 0..m {
        let mut e = LinearExpr::new();
        for &v in &vars {
            let c = rng.gen_range(-3i32..=3) as f64;
            if c != 0.0 {
                e.add_term(v, c);
            }
        }
        let cmp = match rng.gen_range(0..5) {
            0 => Comparison::Eq,
            1 | 2 => Comparison::Ge,
            _ => Comparison::Le,
        };
        lp.add_constraint(&e, cmp, rng.gen_range(-4i32..=4) as f64);
    }
    lp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>(), n in 1usize..=3, m in 0usize..=6) {
        let lp = random_lp(seed, n, m);
        let sol = lp_solve(&lp).unwrap();
        match vertex_oracle(&lp) {
            None => prop_assert_eq!(sol.status, Status::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, Status::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-6 * (1.0 + best.abs()),
                    "simplex {} oracle {}", sol.objective, best);
                prop_assert!(lp.max_violation(&sol.values) <= 1e-7);
            }
        }
    }

    #[test]
    fn strategies_agree_with_exhaustive_rounding(seed in any::<u64>(), bins in 1usize..=4, m in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = MilpProblem::new(Sense::Maximize);
        let x = p.lp.add_var(0.0, 4.0, rng.gen_range(-2i32..=2) as f64);
        let zs: Vec<VarId> = (0..bins).map(|i| p.add_binary(format!("z{i}"))).collect();
        for &z in &zs {
            p.lp.set_objective(z, rng.gen_range(-3i32..=3) as f64);
        }
        for _ in 0..m {
            let mut e = LinearExpr::var(x).with_term(x, rng.gen_range(-2i32..=1) as f64);
            for &z in &zs {
                e.add_term(z, rng.gen_range(-3i32..=3) as f64);
            }
            p.lp.add_constraint(&e, Comparison::Le, rng.gen_range(-1i32..=4) as f64);
        }
        // Oracle: fix each assignment and use vertex enumeration on the rest.
        let mut best: Option<f64> = None;
        for mask in 0..(1usize << bins) {
            let mut lp = p.lp.clone();
            for (i, &z) in zs.iter().enumerate() {
                let v = ((mask >> i) & 1) as f64;
                lp.set_bounds(z, v, v);
            }
            if let Some(o) = vertex_oracle(&lp) {
                best = Some(best.map_or(o, |b: f64| b.max(o)));
            }
        }
        for strategy in [MilpStrategy::Enumerate, MilpStrategy::BranchAndBound] {
            let sol = milp_solve(&p, &MilpConfig { strategy, ..Default::default() }).unwrap();
            match best {
                None => prop_assert_eq!(sol.status, Status::Infeasible),
                Some(b) => {
                    prop_assert_eq!(sol.status, Status::Optimal);
                    prop_assert!((sol.objective - b).abs() <= 1e-6 * (1.0 + b.abs()), "{:?}: {} vs {}", strategy, sol.objective, b);
                }
            }
        }
    }

    #[test]
    fn scaling_the_objective_scales_the_optimum(seed in any::<u64>(), n in 1usize..=3, m in 0usize..=5, k in 1u32..=8) {
        let lp = random_lp(seed, n, m);
        let mut scaled = lp.clone();
        for v in &mut scaled.variables {
            v.objective *= k as f64;
        }
        let a = lp_solve(&lp).unwrap();
        let b = lp_solve(&scaled).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.is_optimal() {
            prop_assert!((b.objective - k as f64 * a.objective).abs() <= 1e-6 * (1.0 + b.objective.abs()));
        }
    }

    #[test]
    fn dump_round_trips(seed in any::<u64>(), n in 1usize..=3, m in 0usize..=6) {
        let mut p = MilpProblem::new(Sense::Minimize);
        p.lp = random_lp(seed, n, m);
        p.add_binary("z");
        let text = format::dump(&p);
        let back = format::restore(&text).unwrap();
        prop_assert_eq!(format::dump(&back), text);
    }
}

#[test]
fn degenerate_cycling_example_terminates() {
    // Beale's example, which cycles under naive Dantzig pricing.
    let mut lp = LpProblem::new(Sense::Minimize);
    let x: Vec<VarId> = [-0.75, 150.0, -0.02, 6.0].iter().map(|&c| lp.add_var(0.0, f64::INFINITY, c)).collect();
    let rows = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0]];
    for r in rows {
        let mut e = LinearExpr::new();
        for (j, c) in r.iter().enumerate() {
            e.add_term(x[j], *c);
        }
        lp.add_constraint(&e, Comparison::Le, 0.0);
    }
    lp.add_constraint(&LinearExpr::var(x[2]), Comparison::Le, 1.0);
    let sol = lp_solve(&lp).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective + 0.05).abs() < 1e-9, "{}", sol.objective);
}
