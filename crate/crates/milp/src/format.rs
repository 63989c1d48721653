//! Line-oriented text dump of a MILP, for debugging solver runs.
//!
//! ```text
//! prefplan-milp 1
//! sense max
//! var <name> <lower> <upper> <objective> [binary]
//! row <le|ge|eq> <rhs> <index>:<coef> ...
//! ```
//!
//! Variables are numbered in order of appearance. Names may not contain
//! whitespace; `dump` replaces any with `_`. Infinite bounds are written
//! `inf` / `-inf`.

use std::fmt::Write as _;

use crate::problem::{Comparison, Constraint, MilpProblem, Sense, VarId, Variable};

const MAGIC: &str = "prefplan-milp 1";

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

pub fn dump(problem: &MilpProblem) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let sense = match problem.lp.sense {
        Sense::Maximize => "max",
        Sense::Minimize => "min",
    };
    writeln!(out, "sense {sense}").unwrap();
    let mut is_bin = vec![false; problem.lp.num_vars()];
    for b in &problem.binaries {
        is_bin[b.0] = true;
    }
    for (i, v) in problem.lp.variables.iter().enumerate() {
        let name: String = v.name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        let name = if name.is_empty() { format!("x{i}") } else { name };
        write!(out, "var {name} {} {} {}", v.lower, v.upper, v.objective).unwrap();
        if is_bin[i] {
            out.push_str(" binary");
        }
        out.push('\n');
    }
    for row in &problem.lp.constraints {
        let cmp = match row.cmp {
            Comparison::Le => "le",
            Comparison::Ge => "ge",
            Comparison::Eq => "eq",
        };
        write!(out, "row {cmp} {}", row.rhs).unwrap();
        for &(v, c) in &row.coeffs {
            write!(out, " {}:{}", v.0, c).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn restore(text: &str) -> Result<MilpProblem, FormatError> {
    let err = |line: usize, msg: String| FormatError { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((n, l)) => return Err(err(n, format!("expected header `{MAGIC}`, got `{l}`"))),
        None => return Err(err(0, "empty input".into())),
    }
    let num = |n: usize, s: &str| s.parse::<f64>().map_err(|_| err(n, format!("bad number `{s}`")));
    let mut problem = MilpProblem::default();
    for (n, line) in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("sense") => {
                problem.lp.sense = match parts.next() {
                    Some("max") => Sense::Maximize,
                    Some("min") => Sense::Minimize,
                    other => return Err(err(n, format!("bad sense {other:?}"))),
                }
            }
            Some("var") => {
                let fields: Vec<&str> = parts.collect();
                if fields.len() < 4 || fields.len() > 5 {
                    return Err(err(n, "var needs name, lower, upper, objective".into()));
                }
                let var = Variable {
                    name: fields[0].to_string(),
                    lower: num(n, fields[1])?,
                    upper: num(n, fields[2])?,
                    objective: num(n, fields[3])?,
                };
                let id = VarId(problem.lp.variables.len());
                problem.lp.variables.push(var);
                match fields.get(4) {
                    Some(&"binary") => problem.binaries.push(id),
                    Some(other) => return Err(err(n, format!("unknown flag `{other}`"))),
                    None => {}
                }
            }
            Some("row") => {
                let cmp = match parts.next() {
                    Some("le") => Comparison::Le,
                    Some("ge") => Comparison::Ge,
                    Some("eq") => Comparison::Eq,
                    other => return Err(err(n, format!("bad comparison {other:?}"))),
                };
                let rhs = num(n, parts.next().ok_or_else(|| err(n, "missing rhs".into()))?)?;
                let mut coeffs = Vec::new();
                for term in parts {
                    let (idx, coef) = term.split_once(':').ok_or_else(|| err(n, format!("bad term `{term}`")))?;
                    let idx: usize = idx.parse().map_err(|_| err(n, format!("bad index `{idx}`")))?;
                    if idx >= problem.lp.variables.len() {
                        return Err(err(n, format!("index {idx} refers to an undeclared variable")));
                    }
                    coeffs.push((VarId(idx), num(n, coef)?));
                }
                problem.lp.constraints.push(Constraint { coeffs, cmp, rhs });
            }
            Some(other) => return Err(err(n, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::LinearExpr;

    #[test]
    fn dump_restore_is_identity() {
        let mut p = MilpProblem::new(Sense::Maximize);
        let x = p.lp.add_named_var("flow y", 0.0, f64::INFINITY, 0.25);
        let z = p.add_binary("z");
        p.lp.add_constraint(&LinearExpr::var(x).with_term(z, -0.1), Comparison::Le, 1.0 / 3.0);
        p.lp.add_constraint(&LinearExpr::var(x), Comparison::Ge, f64::MIN_POSITIVE);
        let text = dump(&p);
        let back = restore(&text).unwrap();
        assert_eq!(back.binaries, p.binaries);
        assert_eq!(back.lp.constraints, p.lp.constraints);
        assert_eq!(back.lp.variables[0].name, "flow_y");
        assert_eq!(back.lp.variables[0].upper, f64::INFINITY);
        assert_eq!(dump(&back), text);
    }

    #[test]
    fn rejects_dangling_index() {
        let e = restore("prefplan-milp 1\nsense max\nrow le 1 0:1\n").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
