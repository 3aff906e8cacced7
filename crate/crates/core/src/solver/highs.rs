use highs::{Col, HighsModelStatus, HighsSolutionStatus, Model, RowProblem, Sense};

use super::{
    Backend, ConstraintSense, LinearProblem, ObjectiveSense, SolveResult, SolveSettings, SolveStatus,
    VarKind,
};
use crate::error::{Error, Result};

/// The HiGHS engine. Stateless: every call builds and drops its own HiGHS
/// instance, so one value can serve concurrent solves.
#[derive(Clone, Debug, Default)]
pub struct HighsBackend;

impl HighsBackend {
    fn build(problem: &LinearProblem) -> (RowProblem, Vec<Col>) {
        let mut costs = vec![0.0; problem.num_variables()];
        for &(v, c) in &problem.objective {
            costs[v.0] += c;
        }
        let mut pb = RowProblem::default();
        let cols: Vec<Col> = problem
            .variables
            .iter()
            .zip(&costs)
            .map(|(var, &cost)| match var.kind {
                VarKind::Continuous => pb.add_column(cost, var.lb..=var.ub),
                VarKind::Binary => pb.add_integer_column(cost, var.lb..=var.ub),
            })
            .collect();
        for c in &problem.constraints {
            let terms: Vec<(Col, f64)> = c.merged_terms().into_iter().map(|(v, a)| (cols[v.0], a)).collect();
            match c.sense {
                ConstraintSense::Le => pb.add_row(..=c.rhs, terms),
                ConstraintSense::Ge => pb.add_row(c.rhs.., terms),
                ConstraintSense::Eq => pb.add_row(c.rhs..=c.rhs, terms),
            }
        }
        (pb, cols)
    }

    fn configure(model: &mut Model, settings: &SolveSettings, is_mip: bool, presolve: bool) -> Result<()> {
        let set = |model: &mut Model, key: &str, value: f64| {
            model
                .try_set_option(key, value)
                .map_err(|_| Error::Backend(format!("cannot set HiGHS option {key}")))
        };
        model.make_quiet();
        if settings.time_limit_s.is_finite() {
            set(model, "time_limit", settings.time_limit_s.max(1e-6))?;
        }
        set(model, "primal_feasibility_tolerance", settings.feasibility_tol)?;
        set(model, "dual_feasibility_tolerance", settings.feasibility_tol)?;
        let seed = (settings.seed % i32::MAX as u64) as i32;
        model
            .try_set_option("random_seed", seed)
            .map_err(|_| Error::Backend("cannot set HiGHS random_seed".into()))?;
        if is_mip {
            set(model, "mip_feasibility_tolerance", settings.integrality_tol)?;
            set(model, "mip_rel_gap", settings.optimality_gap)?;
            // the bundled HiGHS can crash inside feasibility jump on small
            // degenerate sub-MIPs
            model
                .try_set_option("mip_heuristic_run_feasibility_jump", false)
                .map_err(|_| Error::Backend("cannot disable HiGHS feasibility jump".into()))?;
        } else {
            // simplex guarantees a basic (vertex) optimal solution
            model
                .try_set_option("solver", "simplex")
                .map_err(|_| Error::Backend("cannot select HiGHS simplex".into()))?;
        }
        if !presolve {
            model
                .try_set_option("presolve", "off")
                .map_err(|_| Error::Backend("cannot disable HiGHS presolve".into()))?;
        }
        Ok(())
    }

    fn run(problem: &LinearProblem, settings: &SolveSettings, presolve: bool) -> Result<SolveResult> {
        let is_mip = problem.is_mip();
        let (pb, _) = Self::build(problem);
        let sense = match problem.sense {
            ObjectiveSense::Maximize => Sense::Maximise,
            ObjectiveSense::Minimize => Sense::Minimise,
        };
        let mut model = pb
            .try_optimise(sense)
            .map_err(|s| Error::Backend(format!("HiGHS rejected the problem: {s:?}")))?;
        Self::configure(&mut model, settings, is_mip, presolve)?;
        let solved = model
            .try_solve()
            .map_err(|s| Error::Backend(format!("HiGHS run failed: {s:?}")))?;

        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible if presolve => {
                return Self::run(problem, settings, false);
            }
            HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
            other => {
                log::warn!("HiGHS terminated with {other:?}");
                SolveStatus::NumericalError
            }
        };
        let has_point = status == SolveStatus::Optimal
            || (status == SolveStatus::TimeLimit
                && solved.primal_solution_status() == HighsSolutionStatus::Feasible);
        if !has_point {
            return Ok(SolveResult::status_only(status));
        }
        let solution = solved.get_solution();
        let duals = (status == SolveStatus::Optimal && !is_mip).then(|| solution.dual_rows().to_vec());
        Ok(SolveResult {
            status,
            values: Some(solution.columns().to_vec()),
            objective: Some(solved.objective_value()),
            duals,
        })
    }
}

impl Backend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn supports_indicators(&self) -> bool {
        false
    }

    fn solve(&self, problem: &LinearProblem, settings: &SolveSettings) -> Result<SolveResult> {
        problem.validate()?;
        settings.validate()?;
        if !problem.indicators.is_empty() {
            return Err(Error::Capability {
                backend: self.name().into(),
                feature: "indicator constraints".into(),
            });
        }
        if problem.variables.is_empty() {
            let feasible = problem
                .constraints
                .iter()
                .all(|c| c.violation(&[]) <= settings.feasibility_tol);
            return Ok(if feasible {
                SolveResult {
                    status: SolveStatus::Optimal,
                    values: Some(Vec::new()),
                    objective: Some(0.0),
                    duals: Some(vec![0.0; problem.constraints.len()]),
                }
            } else {
                SolveResult::status_only(SolveStatus::Infeasible)
            });
        }
        Self::run(problem, settings, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::LinearConstraint;

    #[test]
    fn small_lp() {
        let mut p = LinearProblem::new(ObjectiveSense::Maximize);
        let x = p.add_continuous("x", 0.0, f64::INFINITY);
        let y = p.add_continuous("y", 0.0, f64::INFINITY);
        p.add_constraint("c1", vec![(x, 3.0), (y, 1.0)], ConstraintSense::Le, 6.0);
        p.add_constraint("c2", vec![(y, 1.0)], ConstraintSense::Le, 3.0);
        p.set_objective(vec![(x, 1.0), (y, 1.0)]);
        let r = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(r.duals.as_ref().map(Vec::len), Some(2));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = LinearProblem::new(ObjectiveSense::Minimize);
        let x = p.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        p.add_constraint("lo", vec![(x, 1.0)], ConstraintSense::Ge, 1.0);
        p.add_constraint("hi", vec![(x, 1.0)], ConstraintSense::Le, 0.0);
        let r = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.values.is_none());
    }

    #[test]
    fn empty_problem_is_optimal_at_zero() {
        let p = LinearProblem::new(ObjectiveSense::Maximize);
        let r = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(0.0));
    }

    #[test]
    fn unbounded_lp_is_reported() {
        let mut p = LinearProblem::new(ObjectiveSense::Maximize);
        let x = p.add_continuous("x", 0.0, f64::INFINITY);
        p.set_objective(vec![(x, 1.0)]);
        let r = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn rejects_indicators() {
        let mut p = LinearProblem::new(ObjectiveSense::Maximize);
        let b = p.add_binary("b");
        let x = p.add_continuous("x", -1.0, 1.0);
        p.add_indicator(b, true, LinearConstraint::new("i", vec![(x, 1.0)], ConstraintSense::Ge, 0.0));
        let err = HighsBackend.solve(&p, &SolveSettings::default()).unwrap_err();
        assert!(matches!(err, Error::Capability { .. }));
    }

    #[test]
    fn small_mip_is_deterministic() {
        let mut p = LinearProblem::new(ObjectiveSense::Maximize);
        let x = p.add_continuous("x", 0.0, f64::INFINITY);
        let y = p.add_variable("y", VarKind::Binary, 0.0, 1.0);
        p.add_constraint("c1", vec![(x, 1.0), (y, 1.0)], ConstraintSense::Le, 3.5);
        p.add_constraint("c2", vec![(x, 1.0), (y, -1.0)], ConstraintSense::Ge, 1.0);
        p.set_objective(vec![(x, 1.0), (y, 2.0)]);
        let a = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        let b = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert!((a.objective.unwrap() - 4.5).abs() < 1e-9);
        assert_eq!(a.objective, b.objective);
        assert!(a.duals.is_none());
    }
}
