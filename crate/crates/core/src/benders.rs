//! Combinatorial Benders decomposition of loopless FBA.
//!
//! The master problem is FBA plus one binary per internal reaction fixing the
//! sign of its flux. For a master direction pattern `a` the subproblem asks for
//! potentials `μ` with `(S_Iᵀμ)_i ≤ -ε` where `a_i = 1` and `≥ ε` where
//! `a_i = 0`. When no such `μ` exists, a minimal infeasible subsystem (MIS) of
//! those rows is read off a Farkas certificate and turned into a cut that
//! forbids the offending partial pattern.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::formulations::{fixed_sign_problem, flux_solution, FluxSystem, LooplessConfig};
use crate::model::FluxSolution;
use crate::report::SolveReport;
use crate::solver::{
    Backend, ConstraintSense, LinearConstraint, LinearProblem, ObjectiveSense, SolveSettings, SolveStatus, VarId,
};
use crate::sparse::CscMatrix;
use crate::verifier::ZERO_FLUX_TOL;

/// Largest allowed gap between the first master objective and FBA.
pub const FBA_AGREEMENT_TOL: f64 = 1e-3;

/// Multiplier entries below this fraction of the largest one are outside the
/// support of a Farkas certificate.
const SUPPORT_TOL: f64 = 1e-9;

/// Per internal reaction (in internal order), `true` for the forward disjunct.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectionAssignment(pub Vec<bool>);

impl DirectionAssignment {
    /// Rounds binary values at 1/2.
    pub fn from_values(x: &[f64], binaries: &[VarId]) -> Self {
        DirectionAssignment(binaries.iter().map(|b| x[b.0] >= 0.5).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Signed potential rows over internal positions `indices` that admit no `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfeasibleSubsystem {
    /// Sorted positions into the internal reaction list.
    pub indices: Vec<usize>,
    /// The refuted directions, aligned with `indices`.
    pub directions: Vec<bool>,
    /// Farkas multipliers, aligned with `indices`.
    pub lambda: Vec<f64>,
}

impl InfeasibleSubsystem {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn key(&self) -> (&[usize], &[bool]) {
        (&self.indices, &self.directions)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubproblemOutcome {
    Feasible { mu: Vec<f64>, delta_mu: Vec<f64> },
    Infeasible,
}

/// A no-good style cut `Σ_{refuted=0} a_p + Σ_{refuted=1} (1 - a_p) ≥ 1` over
/// internal positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BendersCut {
    pub positions: Vec<usize>,
    pub refuted: Vec<bool>,
}

impl BendersCut {
    /// Number of positions where `a` differs from the refuted pattern.
    pub fn lhs(&self, a: &[bool]) -> usize {
        self.positions
            .iter()
            .zip(&self.refuted)
            .filter(|(&p, &r)| a[p] != r)
            .count()
    }

    pub fn is_violated_by(&self, a: &[bool]) -> bool {
        self.lhs(a) < 1
    }

    /// The cut as a row over the master binaries.
    pub fn to_constraint(&self, name: impl Into<String>, binaries: &[VarId]) -> LinearConstraint {
        let terms = self
            .positions
            .iter()
            .zip(&self.refuted)
            .map(|(&p, &r)| (binaries[p], if r { -1.0 } else { 1.0 }))
            .collect();
        let ones = self.refuted.iter().filter(|&&r| r).count() as f64;
        LinearConstraint::new(name, terms, ConstraintSense::Ge, 1.0 - ones)
    }
}

/// Cut excluding every assignment that agrees with the MIS on its support.
pub fn cb_cut(mis: &InfeasibleSubsystem) -> BendersCut {
    BendersCut {
        positions: mis.indices.clone(),
        refuted: mis.directions.clone(),
    }
}

/// Cut excluding exactly the assignment `a`.
pub fn no_good_cut(a: &DirectionAssignment) -> BendersCut {
    BendersCut {
        positions: (0..a.len()).collect(),
        refuted: a.0.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CutStrategy {
    All,
    Distinct,
    KSmallest(usize),
    DensityLimit(f64),
}

impl fmt::Display for CutStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutStrategy::All => f.write_str("all"),
            CutStrategy::Distinct => f.write_str("distinct"),
            CutStrategy::KSmallest(k) => write!(f, "k-smallest:{k}"),
            CutStrategy::DensityLimit(d) => write!(f, "density:{d}"),
        }
    }
}

impl FromStr for CutStrategy {
    type Err = Error;

    /// `all`, `distinct`, `k-smallest:K` or `density:D`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown cut strategy `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let strategy = match (name.to_ascii_lowercase().as_str(), arg) {
            ("all", None) => CutStrategy::All,
            ("distinct", None) => CutStrategy::Distinct,
            ("k-smallest" | "ksmallest", Some(k)) => CutStrategy::KSmallest(k.parse().map_err(|_| bad())?),
            ("density" | "density-limit", Some(d)) => CutStrategy::DensityLimit(d.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl CutStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CutStrategy::KSmallest(0) => Err(Error::InvalidInput("k-smallest needs k ≥ 1".into())),
            CutStrategy::DensityLimit(d) if !(d > 0.0 && d <= 1.0) => {
                Err(Error::InvalidInput(format!("density limit {d} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

fn dedup(pool: &[InfeasibleSubsystem]) -> Vec<InfeasibleSubsystem> {
    let mut seen = BTreeSet::new();
    pool.iter().filter(|m| seen.insert(m.key())).cloned().collect()
}

fn size_order(a: &InfeasibleSubsystem, b: &InfeasibleSubsystem) -> std::cmp::Ordering {
    (a.len(), &a.indices, &a.directions).cmp(&(b.len(), &b.indices, &b.directions))
}

/// Filters a cut pool. `num_internal` is `|I|`, the density denominator.
pub fn select_cuts(
    pool: &[InfeasibleSubsystem],
    strategy: CutStrategy,
    num_internal: usize,
) -> Vec<InfeasibleSubsystem> {
    match strategy {
        CutStrategy::All => pool.to_vec(),
        CutStrategy::Distinct => dedup(pool),
        CutStrategy::KSmallest(k) => {
            let mut unique = dedup(pool);
            unique.sort_by(size_order);
            unique.truncate(k);
            unique
        }
        CutStrategy::DensityLimit(d) => {
            let dense = |m: &InfeasibleSubsystem| m.len() as f64 / num_internal.max(1) as f64 > d;
            let kept: Vec<_> = dedup(pool).into_iter().filter(|m| !dense(m)).collect();
            if kept.is_empty() {
                pool.iter().min_by(|a, b| size_order(a, b)).cloned().into_iter().collect()
            } else {
                kept
            }
        }
    }
}

/// Potentials LP: one free `μ` per row of `s_i`, and for each position with a
/// direction the row `(S_Iᵀμ)_p ≤ -ε` (forward) or `≥ ε` (backward).
pub fn potential_problem(s_i: &CscMatrix, pattern: &[Option<bool>], epsilon: f64) -> LinearProblem {
    let mut p = LinearProblem::new(ObjectiveSense::Minimize);
    let mu: Vec<VarId> = (0..s_i.nrows())
        .map(|r| p.add_continuous(format!("mu[{r}]"), f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    for (k, dir) in pattern.iter().enumerate() {
        let Some(fwd) = *dir else { continue };
        let terms = s_i.column(k).map(|(r, a)| (mu[r], a)).collect();
        if fwd {
            p.add_constraint(format!("fwd[{k}]"), terms, ConstraintSense::Le, -epsilon);
        } else {
            p.add_constraint(format!("bwd[{k}]"), terms, ConstraintSense::Ge, epsilon);
        }
    }
    p
}

/// Farkas LP over the rows of `Ã μ ≤ -ε·1`, where row `p` is `+S_I[:,p]ᵀ` for
/// forward and `-S_I[:,p]ᵀ` for backward positions:
/// `max wᵀλ  s.t.  Ãᵀλ = 0, ε·Σλ = 1, λ ≥ 0`.
///
/// A feasible `λ` proves the rows infeasible, and a vertex has minimal support.
pub fn mis_problem(s_i: &CscMatrix, a: &DirectionAssignment, epsilon: f64, weights: &[f64]) -> LinearProblem {
    let mut p = LinearProblem::new(ObjectiveSense::Maximize);
    let lambda: Vec<VarId> = (0..a.len())
        .map(|k| p.add_continuous(format!("lambda[{k}]"), 0.0, f64::INFINITY))
        .collect();
    let mut rows = vec![Vec::new(); s_i.nrows()];
    for (k, &fwd) in a.0.iter().enumerate() {
        let sign = if fwd { 1.0 } else { -1.0 };
        for (r, coef) in s_i.column(k) {
            rows[r].push((lambda[k], sign * coef));
        }
    }
    for (r, terms) in rows.into_iter().enumerate() {
        if !terms.is_empty() {
            p.add_constraint(format!("dual[{r}]"), terms, ConstraintSense::Eq, 0.0);
        }
    }
    p.add_constraint("normalize", lambda.iter().map(|&l| (l, epsilon)).collect(), ConstraintSense::Eq, 1.0);
    p.set_objective(lambda.iter().zip(weights).map(|(&l, &w)| (l, w)).collect());
    p
}

/// Subproblem and MIS machinery for one internal submatrix.
pub struct SubsystemFinder<'a> {
    pub s_i: &'a CscMatrix,
    pub epsilon: f64,
    /// Re-solve each MIS minus one index to confirm minimality.
    pub check_minimality: bool,
    pub settings: SolveSettings,
    pub backend: &'a dyn Backend,
    pub execution: Execution,
}

impl<'a> SubsystemFinder<'a> {
    pub fn new(s_i: &'a CscMatrix, epsilon: f64, backend: &'a dyn Backend) -> Self {
        SubsystemFinder {
            s_i,
            epsilon,
            check_minimality: true,
            settings: SolveSettings::default(),
            backend,
            execution: Execution::default(),
        }
    }

    /// Feasibility of an arbitrary partial sign pattern.
    pub fn check_pattern(&self, pattern: &[Option<bool>]) -> Result<SubproblemOutcome> {
        let p = potential_problem(self.s_i, pattern, self.epsilon);
        let result = self.backend.solve(&p, &self.settings.with_time_limit(f64::INFINITY))?;
        match result.status {
            SolveStatus::Optimal => {
                let mu = result.values.expect("optimal result carries values");
                let delta_mu = self.s_i.transpose_mul_vec(&mu);
                Ok(SubproblemOutcome::Feasible { mu, delta_mu })
            }
            SolveStatus::Infeasible => Ok(SubproblemOutcome::Infeasible),
            other => Err(Error::Numerical(format!("potential subproblem ended with {other}"))),
        }
    }

    pub fn check_subproblem(&self, a: &DirectionAssignment) -> Result<SubproblemOutcome> {
        let pattern: Vec<Option<bool>> = a.0.iter().map(|&x| Some(x)).collect();
        self.check_pattern(&pattern)
    }

    fn restricted_feasible(&self, a: &DirectionAssignment, keep: impl Iterator<Item = usize>) -> Result<bool> {
        let mut pattern = vec![None; a.len()];
        for p in keep {
            pattern[p] = Some(a.0[p]);
        }
        Ok(matches!(self.check_pattern(&pattern)?, SubproblemOutcome::Feasible { .. }))
    }

    /// Whether the MIS rows are jointly infeasible and every proper subset
    /// obtained by dropping one index is feasible.
    pub fn is_minimal(&self, a: &DirectionAssignment, mis: &InfeasibleSubsystem) -> Result<bool> {
        if self.restricted_feasible(a, mis.indices.iter().copied())? {
            return Ok(false);
        }
        for &j in &mis.indices {
            if !self.restricted_feasible(a, mis.indices.iter().copied().filter(|&p| p != j))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// MIS of the rows selected by `a`, from a vertex of the Farkas LP with
    /// objective weights `weights`. `None` when `a` is feasible.
    pub fn find_mis(&self, a: &DirectionAssignment, weights: &[f64]) -> Result<Option<InfeasibleSubsystem>> {
        let p = mis_problem(self.s_i, a, self.epsilon, weights);
        let result = self.backend.solve(&p, &self.settings.with_time_limit(f64::INFINITY))?;
        if result.status != SolveStatus::Optimal {
            return Ok(None);
        }
        let lambda = result.values.expect("optimal result carries values");
        let peak = lambda.iter().copied().fold(0.0, f64::max);
        let indices: Vec<usize> = (0..lambda.len()).filter(|&k| lambda[k] > SUPPORT_TOL * peak).collect();
        let mis = InfeasibleSubsystem {
            directions: indices.iter().map(|&k| a.0[k]).collect(),
            lambda: indices.iter().map(|&k| lambda[k]).collect(),
            indices,
        };
        if self.check_minimality && !self.is_minimal(a, &mis)? {
            return Err(Error::Numerical(format!(
                "support {:?} of the Farkas certificate is not a minimal infeasible subsystem",
                mis.indices
            )));
        }
        Ok(Some(mis))
    }

    /// Up to `max_count` distinct MIS. With `max_count = 1` this is one
    /// all-ones-weight solve; otherwise run `i` (for the first `max_count`
    /// rows) zeroes the weight of row `i`, steering the LP towards subsystems
    /// that avoid it. Results are deduplicated and sorted by index set.
    pub fn enumerate_mis(&self, a: &DirectionAssignment, max_count: usize) -> Result<Vec<InfeasibleSubsystem>> {
        let n = a.len();
        let weights: Vec<Vec<f64>> = if max_count <= 1 {
            vec![vec![1.0; n]]
        } else {
            (0..max_count.min(n))
                .map(|i| {
                    let mut w = vec![1.0; n];
                    w[i] = 0.0;
                    w
                })
                .collect()
        };
        let found = exec::map(self.execution, &weights, |w| self.find_mis(a, w));
        let mut pool = Vec::new();
        for r in found {
            match r {
                Ok(Some(mis)) => pool.push(mis),
                Ok(None) => {}
                Err(Error::Numerical(msg)) => log::warn!("discarding subsystem: {msg}"),
                Err(e) => return Err(e),
            }
        }
        let mut unique = dedup(&pool);
        unique.sort_by(|x, y| x.key().cmp(&y.key()));
        unique.truncate(max_count.max(1));
        Ok(unique)
    }
}

/// Free-function form of [`SubsystemFinder::check_subproblem`].
pub fn check_subproblem(
    s_i: &CscMatrix,
    a: &DirectionAssignment,
    epsilon: f64,
    backend: &dyn Backend,
) -> Result<SubproblemOutcome> {
    SubsystemFinder::new(s_i, epsilon, backend).check_subproblem(a)
}

/// Free-function form of [`SubsystemFinder::find_mis`].
pub fn find_mis(
    s_i: &CscMatrix,
    a: &DirectionAssignment,
    epsilon: f64,
    weights: &[f64],
    backend: &dyn Backend,
) -> Result<Option<InfeasibleSubsystem>> {
    SubsystemFinder::new(s_i, epsilon, backend).find_mis(a, weights)
}

/// Free-function form of [`SubsystemFinder::enumerate_mis`].
pub fn enumerate_mis(
    s_i: &CscMatrix,
    a: &DirectionAssignment,
    epsilon: f64,
    max_count: usize,
    backend: &dyn Backend,
) -> Result<Vec<InfeasibleSubsystem>> {
    SubsystemFinder::new(s_i, epsilon, backend).enumerate_mis(a, max_count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MasterFormulation {
    BigM,
    Indicator,
    /// Indicator and big-M rows on one shared binary vector.
    Both,
}

impl fmt::Display for MasterFormulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MasterFormulation::BigM => "bigm",
            MasterFormulation::Indicator => "indicator",
            MasterFormulation::Both => "both",
        })
    }
}

impl FromStr for MasterFormulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bigm" | "big-m" => Ok(MasterFormulation::BigM),
            "indicator" => Ok(MasterFormulation::Indicator),
            "both" => Ok(MasterFormulation::Both),
            other => Err(Error::InvalidInput(format!("unknown master formulation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendersConfig {
    pub master_formulation: MasterFormulation,
    /// Percentage of reactions bounding the MIS computed per iteration;
    /// 0 means a single cut.
    pub cuts_per_iter_pct: f64,
    pub cut_strategy: CutStrategy,
    /// Add a no-good cut per iteration instead of computing MIS.
    pub no_good_only: bool,
    pub epsilon: f64,
    pub big_m: Option<f64>,
    pub max_iterations: usize,
    pub time_limit_s: f64,
    pub check_minimality: bool,
    /// Leave internal reactions with zero master flux out of the subproblem
    /// and complete their directions from the potentials found.
    pub free_zero_fluxes: bool,
    pub execution: Execution,
}

impl Default for BendersConfig {
    fn default() -> Self {
        BendersConfig {
            master_formulation: MasterFormulation::BigM,
            cuts_per_iter_pct: 0.0,
            cut_strategy: CutStrategy::All,
            no_good_only: false,
            epsilon: 1.0,
            big_m: None,
            max_iterations: 100_000,
            time_limit_s: f64::INFINITY,
            check_minimality: true,
            free_zero_fluxes: false,
            execution: Execution::default(),
        }
    }
}

impl BendersConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.cuts_per_iter_pct) {
            return Err(Error::InvalidInput(format!(
                "cuts per iteration {}% outside [0, 100]",
                self.cuts_per_iter_pct
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be positive".into()));
        }
        if self.time_limit_s.is_nan() || self.time_limit_s < 0.0 {
            return Err(Error::InvalidInput("time limit must be non-negative".into()));
        }
        self.cut_strategy.validate()
    }

    /// `ceil(pct/100 · n)`, at least 1.
    pub fn max_cuts(&self, num_reactions: usize) -> usize {
        if self.cuts_per_iter_pct <= 0.0 {
            return 1;
        }
        ((self.cuts_per_iter_pct / 100.0 * num_reactions as f64).ceil() as usize).max(1)
    }

    pub fn loopless(&self) -> LooplessConfig {
        LooplessConfig {
            epsilon: self.epsilon,
            big_m: self.big_m,
            ..LooplessConfig::default()
        }
    }

    fn method_name(&self) -> &'static str {
        if self.no_good_only {
            "benders-nogood"
        } else {
            "benders"
        }
    }
}

/// A zero flux satisfies both direction disjuncts, so the master's binary
/// there is arbitrary. Checks the potentials with those reactions
/// unconstrained and, if they exist, completes `a` from the signs of `Δμ`.
/// Returns the completed assignment when it admits potentials.
fn complete_at_zero_fluxes(
    finder: &SubsystemFinder<'_>,
    model: &crate::model::MetabolicModel,
    x: &[f64],
    a: &DirectionAssignment,
) -> Result<Option<(DirectionAssignment, Vec<f64>, Vec<f64>)>> {
    let pattern: Vec<Option<bool>> = model
        .internal()
        .iter()
        .zip(&a.0)
        .map(|(&i, &fwd)| (x[i].abs() > ZERO_FLUX_TOL).then_some(fwd))
        .collect();
    if pattern.iter().all(Option::is_some) {
        return Ok(None);
    }
    let SubproblemOutcome::Feasible { delta_mu, .. } = finder.check_pattern(&pattern)? else {
        return Ok(None);
    };
    let full = DirectionAssignment(
        pattern
            .iter()
            .zip(&delta_mu)
            .zip(&a.0)
            .map(|((p, &d), &fwd)| p.unwrap_or(if d.abs() > SUPPORT_TOL { d < 0.0 } else { fwd }))
            .collect(),
    );
    match finder.check_subproblem(&full)? {
        SubproblemOutcome::Feasible { mu, delta_mu } => Ok(Some((full, mu, delta_mu))),
        SubproblemOutcome::Infeasible => Ok(None),
    }
}

/// FBA plus one direction binary per internal reaction. Returns the problem
/// and the binaries in internal order.
pub fn build_master(
    system: &dyn FluxSystem,
    config: &BendersConfig,
    backend: &dyn Backend,
) -> Result<(LinearProblem, Vec<VarId>)> {
    let model = system.network();
    let formulation = config.master_formulation;
    if formulation != MasterFormulation::BigM && !backend.supports_indicators() {
        return Err(Error::Capability {
            backend: backend.name().into(),
            feature: "indicator constraints".into(),
        });
    }
    let big_m = config.loopless().resolved_big_m(model);
    let mut p = system.fba_problem();
    let mut binaries = Vec::with_capacity(model.internal().len());
    for &i in model.internal() {
        let id = &model.reaction_ids()[i];
        let a = p.add_binary(format!("a[{id}]"));
        let v = VarId(i);
        if formulation != MasterFormulation::Indicator {
            // -M(1 - a) ≤ v ≤ M a
            p.add_constraint(format!("v_lo[{id}]"), vec![(v, 1.0), (a, -big_m)], ConstraintSense::Ge, -big_m);
            p.add_constraint(format!("v_hi[{id}]"), vec![(v, 1.0), (a, -big_m)], ConstraintSense::Le, 0.0);
        }
        if formulation != MasterFormulation::BigM {
            let row = |name: String, sense| LinearConstraint::new(name, vec![(v, 1.0)], sense, 0.0);
            p.add_indicator(a, true, row(format!("fwd[{id}]"), ConstraintSense::Ge));
            p.add_indicator(a, false, row(format!("bwd[{id}]"), ConstraintSense::Le));
        }
        binaries.push(a);
    }
    Ok((p, binaries))
}

/// Solve–cut–resolve loop: solve the master, test its direction pattern,
/// add cuts until the pattern admits potentials, then return the fluxes of the
/// master LP with that pattern fixed together with the subproblem potentials.
pub fn solve_llfba_benders(
    system: &dyn FluxSystem,
    config: &BendersConfig,
    settings: &SolveSettings,
    backend: &dyn Backend,
) -> Result<(FluxSolution, SolveReport)> {
    solve_llfba_benders_observed(system, config, settings, backend, &mut |_, _| {})
}

/// [`solve_llfba_benders`], calling `observer` with every refuted master
/// assignment and the subsystems computed for it (empty for no-good cuts).
pub fn solve_llfba_benders_observed(
    system: &dyn FluxSystem,
    config: &BendersConfig,
    settings: &SolveSettings,
    backend: &dyn Backend,
    observer: &mut dyn FnMut(&DirectionAssignment, &[InfeasibleSubsystem]),
) -> Result<(FluxSolution, SolveReport)> {
    let start = Instant::now();
    config.validate()?;
    settings.validate()?;
    let model = system.network();
    config.loopless().validate(model, settings)?;
    let n = model.num_reactions();
    let deadline = config.time_limit_s.min(settings.time_limit_s);
    let remaining = || deadline - start.elapsed().as_secs_f64();

    let mut report = SolveReport::new(config.method_name(), SolveStatus::Optimal);
    report.formulation = config.master_formulation.to_string();
    report.pct = Some(config.cuts_per_iter_pct);
    report.strategy = if config.no_good_only {
        "nogood".into()
    } else {
        config.cut_strategy.to_string()
    };
    let finish = |mut report: SolveReport, sol: FluxSolution| {
        report.status = sol.status;
        report.objective = sol.objective_value.is_finite().then_some(sol.objective_value);
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok((sol, report))
    };

    if remaining() <= 0.0 {
        return finish(report, FluxSolution::without_point(SolveStatus::TimeLimit, n));
    }
    let fba = backend.solve(&system.fba_problem(), &settings.with_time_limit(remaining()))?;
    if fba.status != SolveStatus::Optimal {
        return finish(report, FluxSolution::without_point(fba.status, n));
    }
    let fba_objective = fba.objective.unwrap_or(f64::NAN);

    let (mut master, binaries) = build_master(system, config, backend)?;
    let s_i = model.internal_submatrix();
    let finder = SubsystemFinder {
        s_i: &s_i,
        epsilon: config.epsilon,
        check_minimality: config.check_minimality,
        settings: settings.clone(),
        backend,
        execution: config.execution,
    };
    let max_cuts = config.max_cuts(n);

    loop {
        if report.iterations >= config.max_iterations || remaining() <= 0.0 {
            return finish(report, FluxSolution::without_point(SolveStatus::TimeLimit, n));
        }
        let t = Instant::now();
        let result = backend.solve(&master, &settings.with_time_limit(remaining()))?;
        report.master_time_s += t.elapsed().as_secs_f64();
        report.iterations += 1;
        if result.status != SolveStatus::Optimal {
            return finish(report, FluxSolution::without_point(result.status, n));
        }
        let objective = result.objective.unwrap_or(f64::NAN);
        report.master_objectives.push(objective);
        if report.iterations == 1 && !((objective - fba_objective).abs() <= FBA_AGREEMENT_TOL) {
            log::warn!("first master objective {objective} differs from FBA {fba_objective}");
            return finish(report, FluxSolution::without_point(SolveStatus::NumericalError, n));
        }
        let x = result.values.expect("optimal result carries values");
        let a = DirectionAssignment::from_values(&x, &binaries);

        let t = Instant::now();
        let completed = if config.free_zero_fluxes {
            complete_at_zero_fluxes(&finder, model, &x, &a)?
        } else {
            None
        };
        let (a, outcome) = match completed {
            Some((full, mu, delta_mu)) => (full, SubproblemOutcome::Feasible { mu, delta_mu }),
            None => {
                let outcome = finder.check_subproblem(&a)?;
                (a, outcome)
            }
        };
        let cuts = match outcome {
            SubproblemOutcome::Feasible { mu, delta_mu } => {
                report.mis_time_s += t.elapsed().as_secs_f64();
                let polished = backend.solve(&fixed_sign_problem(system, &a.0), &settings.with_time_limit(f64::INFINITY))?;
                let mut sol = if polished.status == SolveStatus::Optimal {
                    flux_solution(system, &polished, None)
                } else {
                    log::warn!("fixed-sign re-solve ended with {}; keeping the master point", polished.status);
                    flux_solution(system, &crate::solver::SolveResult { values: Some(x), ..result }, None)
                };
                sol.mu = Some(mu);
                sol.delta_mu = Some(delta_mu);
                return finish(report, sol);
            }
            SubproblemOutcome::Infeasible if config.no_good_only => {
                observer(&a, &[]);
                vec![no_good_cut(&a)]
            }
            SubproblemOutcome::Infeasible => {
                let pool = finder.enumerate_mis(&a, max_cuts)?;
                observer(&a, &pool);
                if pool.is_empty() {
                    log::warn!("no minimal infeasible subsystem recovered; adding a no-good cut");
                    vec![no_good_cut(&a)]
                } else {
                    select_cuts(&pool, config.cut_strategy, a.len()).iter().map(cb_cut).collect()
                }
            }
        };
        report.mis_time_s += t.elapsed().as_secs_f64();
        for cut in cuts {
            debug_assert!(cut.is_violated_by(&a.0));
            let name = format!("cut[{}]", report.cuts);
            master.push_constraint(cut.to_constraint(name, &binaries));
            report.cuts += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_example_loop_model;
    use crate::solver::{HighsBackend, IndicatorBranching};

    fn example_si() -> CscMatrix {
        build_example_loop_model().internal_submatrix()
    }

    #[test]
    fn subproblem_on_example() {
        let s_i = example_si();
        let infeasible = DirectionAssignment(vec![true, true, false]);
        assert_eq!(
            check_subproblem(&s_i, &infeasible, 1.0, &HighsBackend).unwrap(),
            SubproblemOutcome::Infeasible
        );
        let feasible = DirectionAssignment(vec![true, true, true]);
        match check_subproblem(&s_i, &feasible, 1.0, &HighsBackend).unwrap() {
            SubproblemOutcome::Feasible { mu, delta_mu } => {
                assert_eq!(delta_mu, s_i.transpose_mul_vec(&mu));
                assert!(delta_mu.iter().all(|&d| d <= -1.0 + 1e-9), "{delta_mu:?}");
            }
            SubproblemOutcome::Infeasible => panic!("expected feasible"),
        }
    }

    #[test]
    fn single_column_is_feasible_both_ways() {
        let s_i = CscMatrix::from_dense_rows(&[vec![1.0], vec![-2.0]]);
        for dir in [true, false] {
            let out = check_subproblem(&s_i, &DirectionAssignment(vec![dir]), 1.0, &HighsBackend).unwrap();
            assert!(matches!(out, SubproblemOutcome::Feasible { .. }));
        }
    }

    #[test]
    fn mis_of_example_is_whole_loop() {
        let s_i = example_si();
        let a = DirectionAssignment(vec![true, true, false]);
        let mis = find_mis(&s_i, &a, 1.0, &[1.0; 3], &HighsBackend).unwrap().unwrap();
        assert_eq!(mis.indices, vec![0, 1, 2]);
        assert_eq!(mis.directions, vec![true, true, false]);
        let all = enumerate_mis(&s_i, &a, 1.0, 3, &HighsBackend).unwrap();
        assert_eq!(all.len(), 1);
        let feasible = DirectionAssignment(vec![true, true, true]);
        assert!(find_mis(&s_i, &feasible, 1.0, &[1.0; 3], &HighsBackend).unwrap().is_none());
    }

    #[test]
    fn cut_construction() {
        let a = DirectionAssignment(vec![true, true, false]);
        let mis = InfeasibleSubsystem {
            indices: vec![0, 1, 2],
            directions: a.0.clone(),
            lambda: vec![1.0; 3],
        };
        let cb = cb_cut(&mis);
        assert_eq!(cb, no_good_cut(&a));
        assert!(cb.is_violated_by(&a.0));
        assert!(!cb.is_violated_by(&[true, true, true]));
        let bins = [VarId(5), VarId(6), VarId(7)];
        let row = cb.to_constraint("c", &bins);
        // (1 - a0) + (1 - a1) + a2 ≥ 1
        assert_eq!(row.terms, vec![(VarId(5), -1.0), (VarId(6), -1.0), (VarId(7), 1.0)]);
        assert_eq!(row.rhs, -1.0);
        let zeros = no_good_cut(&DirectionAssignment(vec![false, false]));
        let row = zeros.to_constraint("z", &bins[..2]);
        assert_eq!(row.terms, vec![(VarId(5), 1.0), (VarId(6), 1.0)]);
        assert_eq!(row.rhs, 1.0);
    }

    fn subsystem(indices: &[usize]) -> InfeasibleSubsystem {
        InfeasibleSubsystem {
            indices: indices.to_vec(),
            directions: vec![true; indices.len()],
            lambda: vec![1.0; indices.len()],
        }
    }

    #[test]
    fn cut_selection() {
        let small = subsystem(&[4, 5, 6]);
        let big = subsystem(&[0, 1, 2, 3, 7]);
        let pool = vec![big.clone(), small.clone(), small.clone()];
        assert_eq!(select_cuts(&pool, CutStrategy::KSmallest(1), 10), vec![small.clone()]);
        assert_eq!(select_cuts(&pool, CutStrategy::Distinct, 10).len(), 2);
        assert_eq!(select_cuts(&pool, CutStrategy::All, 10).len(), 3);
        assert_eq!(select_cuts(&pool, CutStrategy::DensityLimit(0.01), 15), vec![small.clone()]);
        assert_eq!(select_cuts(&pool, CutStrategy::DensityLimit(0.4), 10), vec![small]);
        // ties go to the lexicographically smaller index set
        let tie = subsystem(&[1, 2, 3]);
        let picked = select_cuts(&[subsystem(&[4, 5, 6]), tie.clone()], CutStrategy::KSmallest(1), 10);
        assert_eq!(picked, vec![tie]);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("k-smallest:3".parse::<CutStrategy>().unwrap(), CutStrategy::KSmallest(3));
        assert_eq!("density:0.5".parse::<CutStrategy>().unwrap(), CutStrategy::DensityLimit(0.5));
        assert!("density:2".parse::<CutStrategy>().is_err());
        assert!("k-smallest:0".parse::<CutStrategy>().is_err());
        for s in [CutStrategy::All, CutStrategy::Distinct, CutStrategy::KSmallest(2), CutStrategy::DensityLimit(0.25)] {
            assert_eq!(s.to_string().parse::<CutStrategy>().unwrap(), s);
        }
    }

    #[test]
    fn max_cuts_rounds_up() {
        let mut cfg = BendersConfig::default();
        assert_eq!(cfg.max_cuts(95), 1);
        cfg.cuts_per_iter_pct = 0.5;
        assert_eq!(cfg.max_cuts(95), 1);
        cfg.cuts_per_iter_pct = 5.0;
        assert_eq!(cfg.max_cuts(95), 5);
        cfg.cuts_per_iter_pct = 101.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn first_master_is_fba() {
        let model = build_example_loop_model();
        let (p, bins) = build_master(&model, &BendersConfig::default(), &HighsBackend).unwrap();
        let r = HighsBackend.solve(&p, &SolveSettings::default()).unwrap();
        assert!((r.objective.unwrap() - 40.0).abs() < 1e-6);
        let a = DirectionAssignment::from_values(&r.values.unwrap(), &bins);
        assert_eq!(a.0, vec![true, true, false]);
    }

    #[test]
    fn indicator_master_needs_capability() {
        let model = build_example_loop_model();
        let cfg = BendersConfig {
            master_formulation: MasterFormulation::Indicator,
            ..BendersConfig::default()
        };
        assert!(matches!(build_master(&model, &cfg, &HighsBackend), Err(Error::Capability { .. })));
        assert!(build_master(&model, &cfg, &IndicatorBranching::new(HighsBackend)).is_ok());
    }

    #[test]
    fn example_converges_in_two_masters() {
        let model = build_example_loop_model();
        let s = SolveSettings::default();
        for formulation in [MasterFormulation::BigM, MasterFormulation::Indicator, MasterFormulation::Both] {
            let cfg = BendersConfig {
                master_formulation: formulation,
                ..BendersConfig::default()
            };
            let backend = IndicatorBranching::new(HighsBackend);
            let (sol, report) = solve_llfba_benders(&model, &cfg, &s, &backend).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!((sol.objective_value - 20.0).abs() < 1e-6, "{}", sol.objective_value);
            assert_eq!(report.iterations, 2, "{formulation:?}");
            assert_eq!(report.cuts, 1);
            assert!(sol.certificate_residual(&model).unwrap() < 1e-9);
        }
    }

    #[test]
    fn loop_free_model_needs_no_cuts() {
        let model = build_example_loop_model().with_internal(vec![1, 2]).unwrap();
        let (sol, report) =
            solve_llfba_benders(&model, &BendersConfig::default(), &SolveSettings::default(), &HighsBackend).unwrap();
        assert_eq!(report.cuts, 0);
        assert_eq!(report.iterations, 1);
        assert!((sol.objective_value - 40.0).abs() < 1e-6);
    }

    #[test]
    fn zero_flux_completion_keeps_the_optimum() {
        let params = crate::synthetic::RandomModelParams::default();
        for seed in 0..40 {
            let model = crate::synthetic::random_model(seed, &params);
            let solve = |free_zero_fluxes| {
                let cfg = BendersConfig {
                    free_zero_fluxes,
                    ..BendersConfig::default()
                };
                solve_llfba_benders(&model, &cfg, &SolveSettings::default(), &HighsBackend).unwrap()
            };
            let ((plain, _), (free, report)) = (solve(false), solve(true));
            assert!((plain.objective_value - free.objective_value).abs() < 1e-6, "seed {seed}");
            assert!(free.certificate_residual(&model).unwrap() < 1e-9, "seed {seed}");
            let dmu = free.delta_mu.unwrap();
            assert!(dmu.iter().all(|d| d.abs() >= 1.0 - 1e-6), "seed {seed}: {dmu:?}");
            assert!(report.iterations >= 1);
        }
    }

    #[test]
    fn zero_time_limit_reports_timeout() {
        let model = build_example_loop_model();
        let cfg = BendersConfig {
            time_limit_s: 0.0,
            ..BendersConfig::default()
        };
        let (sol, report) = solve_llfba_benders(&model, &cfg, &SolveSettings::default(), &HighsBackend).unwrap();
        assert_eq!(sol.status, SolveStatus::TimeLimit);
        assert_eq!(report.status, SolveStatus::TimeLimit);
    }
}
