use std::fmt::Write;

use super::{ConstraintSense, LinearConstraint, LinearProblem, ObjectiveSense, VarId, VarKind};

fn sanitize(name: &str, index: usize) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.".contains(c) { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert_str(0, "x_");
    }
    // names must stay unique after sanitizing
    write!(out, "#{index}").unwrap();
    out.replace('#', "_")
}

fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn expr(terms: &[(VarId, f64)], names: &[String]) -> String {
    if terms.is_empty() {
        return "0 x_zero".into();
    }
    let mut s = String::new();
    for (k, &(v, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { "-" } else { "+" };
        if k == 0 && a >= 0.0 {
            write!(s, "{} {}", fmt_num(a), names[v.0]).unwrap();
        } else {
            write!(s, " {sign} {} {}", fmt_num(a.abs()), names[v.0]).unwrap();
        }
    }
    s
}

fn row(c: &LinearConstraint, names: &[String]) -> String {
    let op = match c.sense {
        ConstraintSense::Le => "<=",
        ConstraintSense::Eq => "=",
        ConstraintSense::Ge => ">=",
    };
    format!("{} {op} {}", expr(&c.merged_terms(), names), fmt_num(c.rhs))
}

/// Renders the problem in CPLEX LP text format (for debugging; indicator
/// rows use the `b = 1 -> row` syntax).
pub fn write_lp(problem: &LinearProblem) -> String {
    let names: Vec<String> = problem
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| sanitize(&v.name, i))
        .collect();
    let mut out = String::new();
    out.push_str(match problem.sense {
        ObjectiveSense::Maximize => "Maximize\n",
        ObjectiveSense::Minimize => "Minimize\n",
    });
    writeln!(out, " obj: {}", expr(&problem.objective, &names)).unwrap();
    out.push_str("Subject To\n");
    for (i, c) in problem.constraints.iter().enumerate() {
        writeln!(out, " {}: {}", sanitize(&c.name, i), row(c, &names)).unwrap();
    }
    for (i, ind) in problem.indicators.iter().enumerate() {
        writeln!(
            out,
            " {}: {} = {} -> {}",
            sanitize(&ind.constraint.name, i),
            names[ind.binary.0],
            u8::from(ind.active),
            row(&ind.constraint, &names)
        )
        .unwrap();
    }
    out.push_str("Bounds\n");
    for (var, name) in problem.variables.iter().zip(&names) {
        if var.lb == f64::NEG_INFINITY && var.ub == f64::INFINITY {
            writeln!(out, " {name} free").unwrap();
        } else {
            writeln!(out, " {} <= {name} <= {}", fmt_num(var.lb), fmt_num(var.ub)).unwrap();
        }
    }
    let binaries: Vec<&String> = problem
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            writeln!(out, " {name}").unwrap();
        }
    }
    out.push_str("End\n");
    out
}
