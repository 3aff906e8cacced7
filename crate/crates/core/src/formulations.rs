//! FBA and the monolithic loopless reformulations (big-M, indicator, convex
//! hull).
//!
//! Every builder lays out its variables the same way: fluxes `v` first (one per
//! reaction, in column order), then whatever the flux system appends (enzyme
//! usages), then potentials `μ` (one per metabolite), then `Δμ` (one per
//! internal reaction), then formulation-specific variables.

use serde::{Deserialize, Serialize};

use crate::enzyme::EnzymeModel;
use crate::error::{Error, Result};
use crate::model::{FluxSolution, MetabolicModel};
use crate::solver::{
    Backend, ConstraintSense, LinearConstraint, LinearProblem, ObjectiveSense, SolveResult,
    SolveSettings, SolveStatus, VarId,
};

/// A flux network that can be posed as an FBA linear program.
///
/// The LP returned by [`FluxSystem::fba_problem`] must declare the reaction
/// fluxes of [`FluxSystem::network`] as its first variables.
pub trait FluxSystem: Send + Sync {
    fn network(&self) -> &MetabolicModel;

    fn fba_problem(&self) -> LinearProblem;

    /// Extra per-solution values (enzyme usages) read from an LP point.
    fn auxiliary_values(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl FluxSystem for MetabolicModel {
    fn network(&self) -> &MetabolicModel {
        self
    }

    fn fba_problem(&self) -> LinearProblem {
        fba_problem(self)
    }
}

impl FluxSystem for EnzymeModel {
    fn network(&self) -> &MetabolicModel {
        self.base()
    }

    fn fba_problem(&self) -> LinearProblem {
        self.enzyme_fba_problem()
    }

    fn auxiliary_values(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.enzyme_usage(x))
    }
}

/// Which MIP encoding of the sign disjunction to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    BigM,
    Indicator,
    Hull,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooplessConfig {
    /// Half-width of the excluded `Δμ` interval around zero.
    pub epsilon: f64,
    /// Big-M constant; `None` selects the largest absolute flux bound.
    pub big_m: Option<f64>,
    pub formulation: Formulation,
    /// Linearize indicator constraints with big-M rows when the backend
    /// cannot take them natively.
    pub allow_indicator_fallback: bool,
}

impl Default for LooplessConfig {
    fn default() -> Self {
        LooplessConfig {
            epsilon: 1.0,
            big_m: None,
            formulation: Formulation::BigM,
            allow_indicator_fallback: true,
        }
    }
}

impl LooplessConfig {
    pub fn with_formulation(formulation: Formulation) -> Self {
        LooplessConfig {
            formulation,
            ..Self::default()
        }
    }

    /// The big-M constant for `model`. Without an override this is the
    /// largest absolute bound, raised to `2ε` for (near) zero-bound models.
    pub fn resolved_big_m(&self, model: &MetabolicModel) -> f64 {
        self.big_m
            .unwrap_or_else(|| model.max_abs_bound().max(2.0 * self.epsilon))
    }

    pub fn validate(&self, model: &MetabolicModel, settings: &SolveSettings) -> Result<()> {
        let m = self.resolved_big_m(model);
        if !(self.epsilon > settings.feasibility_tol) {
            return Err(Error::InvalidInput(format!(
                "epsilon {} must exceed the feasibility tolerance {}",
                self.epsilon, settings.feasibility_tol
            )));
        }
        if m < model.max_abs_bound() {
            return Err(Error::InvalidInput(format!(
                "big-M {m} is below the largest flux bound {}",
                model.max_abs_bound()
            )));
        }
        if m <= self.epsilon {
            return Err(Error::InvalidInput(format!("big-M {m} must exceed epsilon {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Variable handles of a loopless problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LooplessLayout {
    pub num_fluxes: usize,
    pub mu: Vec<VarId>,
    pub delta_mu: Vec<VarId>,
    /// Per internal reaction, the binary that is 1 on the forward disjunct.
    pub forward: Vec<VarId>,
}

fn rows_of(model: &MetabolicModel) -> Vec<Vec<(VarId, f64)>> {
    let mut rows = vec![Vec::new(); model.num_metabolites()];
    for (r, j, v) in model.stoichiometry().triplets() {
        rows[r].push((VarId(j), v));
    }
    rows
}

/// `max cᵀv  s.t.  S·v = 0, l ≤ v ≤ u`
pub fn fba_problem(model: &MetabolicModel) -> LinearProblem {
    let mut p = LinearProblem::new(ObjectiveSense::Maximize);
    for (j, id) in model.reaction_ids().iter().enumerate() {
        p.add_continuous(format!("v[{id}]"), model.lower_bounds()[j], model.upper_bounds()[j]);
    }
    for (row, id) in rows_of(model).into_iter().zip(model.metabolite_ids()) {
        p.add_constraint(format!("balance[{id}]"), row, ConstraintSense::Eq, 0.0);
    }
    p.set_objective(
        model
            .objective()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (VarId(j), c))
            .collect(),
    );
    p
}

/// Adds `μ` (free), `Δμ ∈ [-M, M]` and the rows `Δμ = S_Iᵀ μ`.
pub(crate) fn add_potentials(
    p: &mut LinearProblem,
    model: &MetabolicModel,
    big_m: f64,
) -> (Vec<VarId>, Vec<VarId>) {
    let mu: Vec<VarId> = model
        .metabolite_ids()
        .iter()
        .map(|id| p.add_continuous(format!("mu[{id}]"), f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let s = model.stoichiometry();
    let mut delta_mu = Vec::with_capacity(model.internal().len());
    for &i in model.internal() {
        let id = &model.reaction_ids()[i];
        let d = p.add_continuous(format!("dmu[{id}]"), -big_m, big_m);
        let mut terms = vec![(d, 1.0)];
        terms.extend(s.column(i).map(|(r, coef)| (mu[r], -coef)));
        p.add_constraint(format!("kirchhoff[{id}]"), terms, ConstraintSense::Eq, 0.0);
        delta_mu.push(d);
    }
    (mu, delta_mu)
}

/// Big-M rows linking `a` to the sign of `v_i` and `Δμ_i`.
fn add_big_m_disjunction(
    p: &mut LinearProblem,
    id: &str,
    v: VarId,
    dmu: VarId,
    a: VarId,
    eps: f64,
    big_m: f64,
) {
    // -M a + ε(1 - a) ≤ Δμ ≤ -ε a + M(1 - a)
    p.add_constraint(format!("dmu_lo[{id}]"), vec![(dmu, 1.0), (a, big_m + eps)], ConstraintSense::Ge, eps);
    p.add_constraint(format!("dmu_hi[{id}]"), vec![(dmu, 1.0), (a, big_m + eps)], ConstraintSense::Le, big_m);
    // -M(1 - a) ≤ v ≤ M a
    p.add_constraint(format!("v_lo[{id}]"), vec![(v, 1.0), (a, -big_m)], ConstraintSense::Ge, -big_m);
    p.add_constraint(format!("v_hi[{id}]"), vec![(v, 1.0), (a, -big_m)], ConstraintSense::Le, 0.0);
}

fn add_indicator_disjunction(p: &mut LinearProblem, id: &str, v: VarId, dmu: VarId, a: VarId, eps: f64) {
    let row = |name: String, x: VarId, sense, rhs| LinearConstraint::new(name, vec![(x, 1.0)], sense, rhs);
    p.add_indicator(a, true, row(format!("fwd_v[{id}]"), v, ConstraintSense::Ge, 0.0));
    p.add_indicator(a, true, row(format!("fwd_dmu[{id}]"), dmu, ConstraintSense::Le, -eps));
    p.add_indicator(a, false, row(format!("bwd_v[{id}]"), v, ConstraintSense::Le, 0.0));
    p.add_indicator(a, false, row(format!("bwd_dmu[{id}]"), dmu, ConstraintSense::Ge, eps));
}

fn loopless_base(system: &dyn FluxSystem, big_m: f64) -> (LinearProblem, Vec<VarId>, Vec<VarId>) {
    let mut p = system.fba_problem();
    let (mu, dmu) = add_potentials(&mut p, system.network(), big_m);
    (p, mu, dmu)
}

/// ll-FBA with big-M rows.
pub fn build_llfba_bigm(system: &dyn FluxSystem, config: &LooplessConfig) -> (LinearProblem, LooplessLayout) {
    let model = system.network();
    let big_m = config.resolved_big_m(model);
    let (mut p, mu, delta_mu) = loopless_base(system, big_m);
    let mut forward = Vec::with_capacity(model.internal().len());
    for (k, &i) in model.internal().iter().enumerate() {
        let id = &model.reaction_ids()[i];
        let a = p.add_binary(format!("a[{id}]"));
        add_big_m_disjunction(&mut p, id, VarId(i), delta_mu[k], a, config.epsilon, big_m);
        forward.push(a);
    }
    let layout = LooplessLayout {
        num_fluxes: model.num_reactions(),
        mu,
        delta_mu,
        forward,
    };
    (p, layout)
}

/// ll-FBA with indicator constraints. With `native = false` the indicators
/// are written as the big-M rows of [`build_llfba_bigm`].
pub fn build_llfba_indicator(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    native: bool,
) -> (LinearProblem, LooplessLayout) {
    if !native {
        return build_llfba_bigm(system, config);
    }
    let model = system.network();
    let big_m = config.resolved_big_m(model);
    let (mut p, mu, delta_mu) = loopless_base(system, big_m);
    let mut forward = Vec::with_capacity(model.internal().len());
    for (k, &i) in model.internal().iter().enumerate() {
        let id = &model.reaction_ids()[i];
        let a = p.add_binary(format!("a[{id}]"));
        add_indicator_disjunction(&mut p, id, VarId(i), delta_mu[k], a, config.epsilon);
        forward.push(a);
    }
    let layout = LooplessLayout {
        num_fluxes: model.num_reactions(),
        mu,
        delta_mu,
        forward,
    };
    (p, layout)
}

/// Convex-hull reformulation: per internal reaction two binaries
/// `y_f + y_b = 1`, fluxes and `Δμ` split into one copy per disjunct.
///
/// Split variables carry their disjunct's box scaled by the binary:
/// `0 ≤ v_f ≤ max(u,0)·y_f`, `min(l,0)·y_b ≤ v_b ≤ 0`,
/// `-M·y_f ≤ Δμ_f ≤ -ε·y_f`, `ε·y_b ≤ Δμ_b ≤ M·y_b`.
pub fn build_llfba_hull(system: &dyn FluxSystem, config: &LooplessConfig) -> (LinearProblem, LooplessLayout) {
    let model = system.network();
    let big_m = config.resolved_big_m(model);
    let eps = config.epsilon;
    let (mut p, mu, delta_mu) = loopless_base(system, big_m);
    let internal = model.internal();
    let mut forward = Vec::with_capacity(internal.len());
    let mut backward = Vec::with_capacity(internal.len());
    for &i in internal {
        forward.push(p.add_binary(format!("y_fwd[{}]", model.reaction_ids()[i])));
    }
    for &i in internal {
        backward.push(p.add_binary(format!("y_bwd[{}]", model.reaction_ids()[i])));
    }
    for (k, &i) in internal.iter().enumerate() {
        let id = &model.reaction_ids()[i];
        let (yf, yb) = (forward[k], backward[k]);
        let hi = model.upper_bounds()[i].max(0.0);
        let lo = model.lower_bounds()[i].min(0.0);
        let vf = p.add_continuous(format!("v_fwd[{id}]"), 0.0, f64::INFINITY);
        let vb = p.add_continuous(format!("v_bwd[{id}]"), f64::NEG_INFINITY, 0.0);
        let df = p.add_continuous(format!("dmu_fwd[{id}]"), f64::NEG_INFINITY, f64::INFINITY);
        let db = p.add_continuous(format!("dmu_bwd[{id}]"), f64::NEG_INFINITY, f64::INFINITY);
        let v = VarId(i);
        let d = delta_mu[k];
        use ConstraintSense::{Eq, Ge, Le};
        p.add_constraint(format!("choose[{id}]"), vec![(yf, 1.0), (yb, 1.0)], Eq, 1.0);
        p.add_constraint(format!("split_v[{id}]"), vec![(v, 1.0), (vf, -1.0), (vb, -1.0)], Eq, 0.0);
        p.add_constraint(format!("split_dmu[{id}]"), vec![(d, 1.0), (df, -1.0), (db, -1.0)], Eq, 0.0);
        p.add_constraint(format!("v_fwd_box[{id}]"), vec![(vf, 1.0), (yf, -hi)], Le, 0.0);
        p.add_constraint(format!("v_bwd_box[{id}]"), vec![(vb, 1.0), (yb, -lo)], Ge, 0.0);
        p.add_constraint(format!("dmu_fwd_eps[{id}]"), vec![(df, 1.0), (yf, eps)], Le, 0.0);
        p.add_constraint(format!("dmu_fwd_box[{id}]"), vec![(df, 1.0), (yf, big_m)], Ge, 0.0);
        p.add_constraint(format!("dmu_bwd_eps[{id}]"), vec![(db, 1.0), (yb, -eps)], Ge, 0.0);
        p.add_constraint(format!("dmu_bwd_box[{id}]"), vec![(db, 1.0), (yb, -big_m)], Le, 0.0);
    }
    let layout = LooplessLayout {
        num_fluxes: model.num_reactions(),
        mu,
        delta_mu,
        forward,
    };
    (p, layout)
}

/// Closed-form `(variables, constraints)` of [`build_llfba_hull`] on a plain
/// metabolic model: `n + m + |I| + 4|I| + 2|I|` and `m + |I| + 9|I|`.
pub fn hull_size(model: &MetabolicModel) -> (usize, usize) {
    let (n, m, k) = (model.num_reactions(), model.num_metabolites(), model.internal().len());
    (n + m + k + 4 * k + 2 * k, m + k + 9 * k)
}

/// Bounds every internal flux to the sign chosen by `forward`. A direction
/// the bounds cannot accommodate makes the problem infeasible.
fn restrict_signs(p: &mut LinearProblem, model: &MetabolicModel, forward: &[bool]) {
    for (k, &i) in model.internal().iter().enumerate() {
        let v = &mut p.variables[i];
        if forward[k] {
            v.lb = v.lb.max(0.0);
        } else {
            v.ub = v.ub.min(0.0);
        }
        if v.lb > v.ub {
            let lb = v.lb;
            v.ub = lb;
            let id = &model.reaction_ids()[i];
            p.add_constraint(format!("conflict[{id}]"), vec![(VarId(i), 1.0)], ConstraintSense::Le, lb - 1.0);
        }
    }
}

/// FBA with every internal flux restricted to the sign given by `forward`.
pub fn fixed_sign_problem(system: &dyn FluxSystem, forward: &[bool]) -> LinearProblem {
    let mut p = system.fba_problem();
    restrict_signs(&mut p, system.network(), forward);
    p
}

/// LP with every internal direction fixed: `v_i ≥ 0, Δμ_i ≤ -ε` on forward
/// reactions and `v_i ≤ 0, Δμ_i ≥ ε` on backward ones.
pub fn fixed_direction_problem(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    forward: &[bool],
) -> (LinearProblem, Vec<VarId>, Vec<VarId>) {
    let model = system.network();
    let (mut p, mu, delta_mu) = loopless_base(system, config.resolved_big_m(model));
    restrict_signs(&mut p, model, forward);
    for (&d, &fwd) in delta_mu.iter().zip(forward) {
        let var = &mut p.variables[d.0];
        if fwd {
            var.ub = -config.epsilon;
        } else {
            var.lb = config.epsilon;
        }
    }
    (p, mu, delta_mu)
}

pub(crate) fn flux_solution(
    system: &dyn FluxSystem,
    result: &SolveResult,
    potentials: Option<(&[VarId], &[VarId])>,
) -> FluxSolution {
    let n = system.network().num_reactions();
    let Some(x) = result.values.as_ref() else {
        return FluxSolution::without_point(result.status, n);
    };
    let (mu, delta_mu) = match potentials {
        Some((mu, dmu)) => (
            Some(mu.iter().map(|v| x[v.0]).collect()),
            Some(dmu.iter().map(|v| x[v.0]).collect()),
        ),
        None => (None, None),
    };
    FluxSolution {
        status: result.status,
        objective_value: result.objective.unwrap_or(f64::NAN),
        v: x[..n].to_vec(),
        delta_mu,
        mu,
        enzyme_usage: system.auxiliary_values(x),
    }
}

/// Flux balance analysis.
pub fn solve_fba(system: &dyn FluxSystem, settings: &SolveSettings, backend: &dyn Backend) -> Result<FluxSolution> {
    let result = backend.solve(&system.fba_problem(), settings)?;
    Ok(flux_solution(system, &result, None))
}

/// Enzyme-constrained FBA: maximizes `cᵀv` subject to the extended
/// stoichiometry, enzyme capacities and mass-group budgets.
pub fn solve_enzyme_fba(model: &EnzymeModel, settings: &SolveSettings, backend: &dyn Backend) -> Result<FluxSolution> {
    solve_fba(model, settings, backend)
}

/// Solves the fixed-direction LP and returns its solution, or `None` when the
/// direction pattern admits no feasible point.
pub fn solve_fixed_directions(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    forward: &[bool],
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<Option<FluxSolution>> {
    let (p, mu, dmu) = fixed_direction_problem(system, config, forward);
    let result = backend.solve(&p, settings)?;
    Ok((result.status == SolveStatus::Optimal).then(|| flux_solution(system, &result, Some((&mu, &dmu)))))
}

/// Solves a loopless MIP and re-solves its LP with the directions fixed, so
/// the returned point is free of big-M leakage.
fn solve_loopless_mip(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    problem: &LinearProblem,
    layout: &LooplessLayout,
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<FluxSolution> {
    config.validate(system.network(), settings)?;
    let result = backend.solve(problem, settings)?;
    let raw = flux_solution(system, &result, Some((&layout.mu, &layout.delta_mu)));
    if result.status != SolveStatus::Optimal {
        return Ok(raw);
    }
    let x = result.values.as_ref().expect("optimal result carries values");
    let forward: Vec<bool> = layout.forward.iter().map(|a| x[a.0] >= 0.5).collect();
    match solve_fixed_directions(system, config, &forward, settings, backend)? {
        Some(polished) => Ok(polished),
        None => {
            log::warn!("fixed-direction re-solve failed; returning the raw MIP point");
            Ok(raw)
        }
    }
}

pub fn solve_llfba_bigm(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<FluxSolution> {
    let (p, layout) = build_llfba_bigm(system, config);
    solve_loopless_mip(system, config, &p, &layout, settings, backend)
}

/// Indicator formulation; linearized with the big-M constant when the
/// backend has no indicator support and the fallback is allowed.
pub fn solve_llfba_indicator(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<FluxSolution> {
    let native = backend.supports_indicators();
    if !native && !config.allow_indicator_fallback {
        return Err(Error::Capability {
            backend: backend.name().into(),
            feature: "indicator constraints".into(),
        });
    }
    let (p, layout) = build_llfba_indicator(system, config, native);
    solve_loopless_mip(system, config, &p, &layout, settings, backend)
}

pub fn solve_llfba_hull(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<FluxSolution> {
    let (p, layout) = build_llfba_hull(system, config);
    solve_loopless_mip(system, config, &p, &layout, settings, backend)
}

/// Dispatches on `config.formulation`.
pub fn solve_llfba(
    system: &dyn FluxSystem,
    config: &LooplessConfig,
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<FluxSolution> {
    match config.formulation {
        Formulation::BigM => solve_llfba_bigm(system, config, settings, backend),
        Formulation::Indicator => solve_llfba_indicator(system, config, settings, backend),
        Formulation::Hull => solve_llfba_hull(system, config, settings, backend),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_example_loop_model;
    use crate::solver::{HighsBackend, IndicatorBranching};
    use crate::sparse::CscMatrix;

    fn settings() -> SolveSettings {
        SolveSettings::default()
    }

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }

    #[test]
    fn example_fba_is_40() {
        let model = build_example_loop_model();
        let sol = solve_fba(&model, &settings(), &HighsBackend).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_close(sol.objective_value, 40.0);
        assert!(model.steady_state_residual(&sol.v) < 1e-9);
    }

    #[test]
    fn pinned_fluxes_give_zero() {
        let model = build_example_loop_model();
        let pinned = model.with_bounds(vec![0.0; 5], vec![0.0; 5]).unwrap();
        let sol = solve_fba(&pinned, &settings(), &HighsBackend).unwrap();
        assert_close(sol.objective_value, 0.0);
        assert!(sol.v.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn example_loopless_is_20_for_every_formulation() {
        let model = build_example_loop_model();
        let plain = HighsBackend;
        let branching = IndicatorBranching::new(HighsBackend);
        for f in [Formulation::BigM, Formulation::Indicator, Formulation::Hull] {
            for backend in [&plain as &dyn Backend, &branching] {
                let cfg = LooplessConfig::with_formulation(f);
                let sol = solve_llfba(&model, &cfg, &settings(), backend).unwrap();
                assert_eq!(sol.status, SolveStatus::Optimal, "{f:?}");
                assert_close(sol.objective_value, 20.0);
                assert!(sol.v[3].abs() < 1e-6, "{f:?}: {:?}", sol.v);
                assert!(sol.certificate_residual(&model).unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn no_internal_reactions_reduces_to_fba() {
        let model = build_example_loop_model().with_internal(vec![]).unwrap();
        for f in [Formulation::BigM, Formulation::Indicator, Formulation::Hull] {
            let sol = solve_llfba(&model, &LooplessConfig::with_formulation(f), &settings(), &HighsBackend).unwrap();
            assert_close(sol.objective_value, 40.0);
        }
    }

    #[test]
    fn acyclic_network_matches_fba() {
        // A → B → C chain, no cycle in S_I
        let s = CscMatrix::from_dense_rows(&[
            vec![1.0, -1.0, 0.0, 0.0],
            vec![0.0, 1.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ]);
        let model = MetabolicModel::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec!["in".into(), "ab".into(), "bc".into(), "out".into()],
            s,
            vec![0.0, -5.0, -5.0, 0.0],
            vec![4.0, 5.0, 5.0, 4.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1, 2],
        )
        .unwrap();
        let fba = solve_fba(&model, &settings(), &HighsBackend).unwrap();
        let ll = solve_llfba_bigm(&model, &LooplessConfig::default(), &settings(), &HighsBackend).unwrap();
        assert_close(fba.objective_value, 8.0);
        assert_close(ll.objective_value, fba.objective_value);
    }

    #[test]
    fn indicator_without_fallback_is_a_capability_error() {
        let model = build_example_loop_model();
        let cfg = LooplessConfig {
            formulation: Formulation::Indicator,
            allow_indicator_fallback: false,
            ..LooplessConfig::default()
        };
        let err = solve_llfba(&model, &cfg, &settings(), &HighsBackend).unwrap_err();
        assert!(matches!(err, Error::Capability { .. }));
    }

    #[test]
    fn hull_counts_follow_closed_form() {
        let model = build_example_loop_model();
        let (p, layout) = build_llfba_hull(&model, &LooplessConfig::default());
        assert_eq!((p.num_variables(), p.num_constraints()), hull_size(&model));
        assert_eq!(hull_size(&model), (5 + 3 + 3 + 12 + 6, 3 + 3 + 27));
        assert_eq!(p.num_binaries(), 6);
        assert_eq!(layout.forward.len(), 3);
    }

    #[test]
    fn config_validation() {
        let model = build_example_loop_model();
        let s = settings();
        assert!(LooplessConfig::default().validate(&model, &s).is_ok());
        let small_m = LooplessConfig {
            big_m: Some(10.0),
            ..LooplessConfig::default()
        };
        assert!(small_m.validate(&model, &s).is_err());
        let tiny_eps = LooplessConfig {
            epsilon: 1e-9,
            ..LooplessConfig::default()
        };
        assert!(tiny_eps.validate(&model, &s).is_err());
        assert_eq!(LooplessConfig::default().resolved_big_m(&model), 30.0);
    }
}
