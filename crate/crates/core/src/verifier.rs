//! Independent certification that a flux vector carries no internal loop.

use crate::benders::{DirectionAssignment, SubproblemOutcome, SubsystemFinder};
use crate::error::{Error, Result};
use crate::model::{nullspace_basis, MetabolicModel};
use crate::solver::{Backend, ConstraintSense, LinearProblem, ObjectiveSense, SolveSettings, SolveStatus, VarId};

/// Fluxes at or below this magnitude may take either direction.
pub const ZERO_FLUX_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum Verification {
    /// Potentials whose differences have the opposite sign of every
    /// non-zero internal flux, with magnitude at least ε.
    Certified { mu: Vec<f64> },
    /// Reaction indices (columns of S) of a minimal set of non-zero internal
    /// fluxes that no potential can explain.
    CycleFound(Vec<usize>),
}

impl Verification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verification::Certified { .. })
    }
}

fn check_steady_state(model: &MetabolicModel, v: &[f64], tol: f64) -> Result<()> {
    if v.len() != model.num_reactions() {
        return Err(Error::InvalidInput(format!(
            "flux vector has length {}, model has {} reactions",
            v.len(),
            model.num_reactions()
        )));
    }
    let scale = v.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let residual = model.steady_state_residual(v);
    if residual > tol * scale {
        return Err(Error::InvalidInput(format!("flux vector is not at steady state (‖S·v‖∞ = {residual:e})")));
    }
    Ok(())
}

/// Sign of each internal flux: `Some(true)` above `tol`, `Some(false)` below
/// `-tol`, `None` in between.
fn sign_pattern(model: &MetabolicModel, v: &[f64], tol: f64) -> Vec<Option<bool>> {
    model
        .internal()
        .iter()
        .map(|&i| {
            if v[i] > tol {
                Some(true)
            } else if v[i] < -tol {
                Some(false)
            } else {
                None
            }
        })
        .collect()
}

/// Looks for potentials `μ` with `(S_Iᵀμ)_i ≤ -ε` on forward and `≥ ε` on
/// backward internal fluxes; fluxes within `tol` of zero are unconstrained.
pub fn verify_loopless(
    model: &MetabolicModel,
    v: &[f64],
    epsilon: f64,
    tol: f64,
    backend: &dyn Backend,
) -> Result<Verification> {
    check_steady_state(model, v, tol)?;
    let pattern = sign_pattern(model, v, tol);
    let s_i = model.internal_submatrix();
    let finder = SubsystemFinder::new(&s_i, epsilon, backend);
    if let SubproblemOutcome::Feasible { mu, .. } = finder.check_pattern(&pattern)? {
        return Ok(Verification::Certified { mu });
    }
    // restrict to the fixed reactions and extract a MIS there
    let fixed: Vec<usize> = (0..pattern.len()).filter(|&k| pattern[k].is_some()).collect();
    let sub = s_i.select_columns(&fixed);
    let a = DirectionAssignment(fixed.iter().map(|&k| pattern[k] == Some(true)).collect());
    let sub_finder = SubsystemFinder::new(&sub, epsilon, backend);
    let mis = sub_finder
        .find_mis(&a, &vec![1.0; fixed.len()])?
        .ok_or_else(|| Error::Numerical("potential LP infeasible but no Farkas certificate found".into()))?;
    Ok(Verification::CycleFound(
        mis.indices.iter().map(|&p| model.internal()[fixed[p]]).collect(),
    ))
}

/// `true` iff no `ℓ ∈ null(S_I)` exists with `supp(ℓ) ⊆ supp(v_I)` and
/// `sign(ℓ_i) = sign(v_i)` on its support. Searched as an LP over the
/// coordinates of a nullspace basis.
pub fn verify_via_nullspace(model: &MetabolicModel, v: &[f64], tol: f64, backend: &dyn Backend) -> Result<bool> {
    check_steady_state(model, v, tol)?;
    let basis = nullspace_basis(&model.internal_submatrix());
    if basis.is_empty() {
        return Ok(true);
    }
    let pattern = sign_pattern(model, v, tol);
    let mut p = LinearProblem::new(ObjectiveSense::Minimize);
    let t: Vec<VarId> = (0..basis.len())
        .map(|j| p.add_continuous(format!("t[{j}]"), f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let mut normalization = Vec::new();
    for (k, dir) in pattern.iter().enumerate() {
        let ell: Vec<(VarId, f64)> = basis
            .iter()
            .zip(&t)
            .filter(|(b, _)| b[k] != 0.0)
            .map(|(b, &tj)| (tj, b[k]))
            .collect();
        if ell.is_empty() {
            continue;
        }
        match dir {
            None => p.add_constraint(format!("zero[{k}]"), ell, ConstraintSense::Eq, 0.0),
            Some(true) => {
                normalization.extend(ell.iter().copied());
                p.add_constraint(format!("fwd[{k}]"), ell, ConstraintSense::Ge, 0.0)
            }
            Some(false) => {
                normalization.extend(ell.iter().map(|&(x, c)| (x, -c)));
                p.add_constraint(format!("bwd[{k}]"), ell, ConstraintSense::Le, 0.0)
            }
        };
    }
    if normalization.is_empty() {
        return Ok(true);
    }
    p.add_constraint("normalize", normalization, ConstraintSense::Eq, 1.0);
    let result = backend.solve(&p, &SolveSettings::default())?;
    match result.status {
        SolveStatus::Optimal => Ok(false),
        SolveStatus::Infeasible => Ok(true),
        other => Err(Error::Numerical(format!("loop search LP ended with {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_example_loop_model;
    use crate::solver::HighsBackend;

    #[test]
    fn fba_optimum_of_example_has_the_loop() {
        let model = build_example_loop_model();
        let v = [10.0, 30.0, 30.0, -20.0, 10.0];
        let out = verify_loopless(&model, &v, 1.0, ZERO_FLUX_TOL, &HighsBackend).unwrap();
        assert_eq!(out, Verification::CycleFound(vec![1, 2, 3]));
        assert!(!verify_via_nullspace(&model, &v, ZERO_FLUX_TOL, &HighsBackend).unwrap());
    }

    #[test]
    fn loopless_point_is_certified() {
        let model = build_example_loop_model();
        let v = [10.0, 10.0, 10.0, 0.0, 10.0];
        let out = verify_loopless(&model, &v, 1.0, ZERO_FLUX_TOL, &HighsBackend).unwrap();
        let Verification::Certified { mu } = out else {
            panic!("expected a certificate")
        };
        let dmu = model.internal_submatrix().transpose_mul_vec(&mu);
        assert!(dmu[0] <= -1.0 + 1e-9 && dmu[1] <= -1.0 + 1e-9, "{dmu:?}");
        assert!(verify_via_nullspace(&model, &v, ZERO_FLUX_TOL, &HighsBackend).unwrap());
    }

    #[test]
    fn zero_flux_is_certified() {
        let model = build_example_loop_model();
        let v = [0.0; 5];
        assert!(verify_loopless(&model, &v, 1.0, ZERO_FLUX_TOL, &HighsBackend).unwrap().is_certified());
        assert!(verify_via_nullspace(&model, &v, ZERO_FLUX_TOL, &HighsBackend).unwrap());
    }

    #[test]
    fn off_steady_state_is_rejected() {
        let model = build_example_loop_model();
        let err = verify_loopless(&model, &[1.0, 0.0, 0.0, 0.0, 0.0], 1.0, ZERO_FLUX_TOL, &HighsBackend);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
