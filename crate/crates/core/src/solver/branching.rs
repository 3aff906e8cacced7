use std::collections::BTreeSet;
use std::time::Instant;

use super::{Backend, LinearProblem, ObjectiveSense, SolveResult, SolveSettings, SolveStatus, VarId};
use crate::error::Result;

/// Adds indicator-constraint support to a backend that lacks it.
///
/// Indicator constraints are enforced by depth-first branching on their
/// controlling binaries. A node fixes some binaries; its relaxation drops every
/// indicator whose binary is still free and adds the implied rows of the fixed
/// ones. A relaxed optimum that already satisfies all indicators closes the
/// node. Binaries that appear only in indicators are flipped to a consistent
/// value instead of branched on when possible.
pub struct IndicatorBranching<B> {
    inner: B,
    name: String,
    max_nodes: usize,
}

impl<B: Backend> IndicatorBranching<B> {
    pub fn new(inner: B) -> Self {
        let name = format!("{}+indicator-branching", inner.name());
        IndicatorBranching {
            inner,
            name,
            max_nodes: 1_000_000,
        }
    }

    pub fn with_max_nodes(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    fn relaxation(problem: &LinearProblem, fixed: &[(VarId, bool)]) -> LinearProblem {
        let mut relaxed = problem.clone();
        relaxed.indicators.clear();
        for &(b, value) in fixed {
            let x = if value { 1.0 } else { 0.0 };
            relaxed.variables[b.0].lb = x;
            relaxed.variables[b.0].ub = x;
            for ind in problem.indicators.iter().filter(|i| i.binary == b && i.active == value) {
                relaxed.constraints.push(ind.constraint.clone());
            }
        }
        relaxed
    }

    /// Returns the first binary whose indicators cannot be satisfied at `x`,
    /// after trying to repair free-standing binaries in place.
    fn find_violation(
        problem: &LinearProblem,
        fixed: &[(VarId, bool)],
        free_standing: &BTreeSet<VarId>,
        x: &mut [f64],
        tol: f64,
    ) -> Option<VarId> {
        let holds = |x: &[f64], b: VarId, value: bool| {
            problem
                .indicators
                .iter()
                .filter(|i| i.binary == b && i.active == value)
                .all(|i| i.constraint.violation(x) <= tol)
        };
        let mut seen = BTreeSet::new();
        for ind in &problem.indicators {
            let b = ind.binary;
            if !seen.insert(b) || fixed.iter().any(|f| f.0 == b) {
                continue;
            }
            let current = x[b.0].round() >= 0.5;
            if holds(x, b, current) {
                continue;
            }
            if free_standing.contains(&b) && holds(x, b, !current) {
                x[b.0] = if current { 0.0 } else { 1.0 };
                continue;
            }
            return Some(b);
        }
        None
    }
}

impl<B: Backend> Backend for IndicatorBranching<B> {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_indicators(&self) -> bool {
        true
    }

    fn solve(&self, problem: &LinearProblem, settings: &SolveSettings) -> Result<SolveResult> {
        problem.validate()?;
        settings.validate()?;
        if problem.indicators.is_empty() {
            return self.inner.solve(problem, settings);
        }
        let start = Instant::now();
        let maximize = problem.sense == ObjectiveSense::Maximize;
        let better = |a: f64, b: f64| if maximize { a > b } else { a < b };

        // binaries referenced outside indicator constraints cannot be flipped freely
        let mut referenced = BTreeSet::new();
        for c in &problem.constraints {
            referenced.extend(c.terms.iter().map(|t| t.0));
        }
        referenced.extend(problem.objective.iter().map(|t| t.0));
        for ind in &problem.indicators {
            referenced.extend(ind.constraint.terms.iter().map(|t| t.0));
        }
        let free_standing: BTreeSet<VarId> = problem
            .indicators
            .iter()
            .map(|i| i.binary)
            .filter(|b| !referenced.contains(b))
            .collect();

        let mut incumbent: Option<(f64, Vec<f64>)> = None;
        let mut stack: Vec<Vec<(VarId, bool)>> = vec![Vec::new()];
        let mut nodes = 0usize;
        while let Some(fixed) = stack.pop() {
            nodes += 1;
            let elapsed = start.elapsed().as_secs_f64();
            if elapsed >= settings.time_limit_s || nodes > self.max_nodes {
                return Ok(timeout(incumbent));
            }
            let node_settings = settings.with_time_limit(settings.time_limit_s - elapsed);
            let result = self.inner.solve(&Self::relaxation(problem, &fixed), &node_settings)?;
            let (objective, mut x) = match result.status {
                SolveStatus::Optimal => (
                    result.objective.unwrap_or(f64::NAN),
                    result.values.unwrap_or_default(),
                ),
                SolveStatus::Infeasible => continue,
                SolveStatus::TimeLimit => return Ok(timeout(incumbent)),
                SolveStatus::Unbounded | SolveStatus::NumericalError => {
                    return Ok(SolveResult::status_only(result.status))
                }
            };
            if let Some((best, _)) = &incumbent {
                let slack = settings.optimality_gap * best.abs().max(1.0);
                let threshold = if maximize { best + slack } else { best - slack };
                if !better(objective, threshold) {
                    continue;
                }
            }
            let tol = settings.feasibility_tol * 10.0;
            match Self::find_violation(problem, &fixed, &free_standing, &mut x, tol) {
                None => incumbent = Some((objective, x)),
                Some(b) => {
                    let preferred = x[b.0].round() >= 0.5;
                    for value in [!preferred, preferred] {
                        let mut child = fixed.clone();
                        child.push((b, value));
                        stack.push(child);
                    }
                }
            }
        }
        log::debug!("indicator branching explored {nodes} nodes");
        Ok(match incumbent {
            Some((objective, x)) => SolveResult {
                status: SolveStatus::Optimal,
                values: Some(x),
                objective: Some(objective),
                duals: None,
            },
            None => SolveResult::status_only(SolveStatus::Infeasible),
        })
    }
}

fn timeout(incumbent: Option<(f64, Vec<f64>)>) -> SolveResult {
    match incumbent {
        Some((objective, x)) => SolveResult {
            status: SolveStatus::TimeLimit,
            values: Some(x),
            objective: Some(objective),
            duals: None,
        },
        None => SolveResult::status_only(SolveStatus::TimeLimit),
    }
}
