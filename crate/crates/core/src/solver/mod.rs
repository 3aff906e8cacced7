//! Engine-neutral linear and mixed-integer problem description, plus the
//! [`Backend`] contract every formulation solves through.

mod branching;
mod highs;
mod lp_format;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::branching::IndicatorBranching;
pub use self::highs::HighsBackend;
pub use self::lp_format::write_lp;

/// Environment variable consulted by [`backend_from_env`].
pub const BACKEND_ENV: &str = "LLFBA_BACKEND";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: ConstraintSense,
        rhs: f64,
    ) -> Self {
        LinearConstraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            ConstraintSense::Le => (lhs - self.rhs).max(0.0),
            ConstraintSense::Ge => (self.rhs - lhs).max(0.0),
            ConstraintSense::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Terms with duplicate variables summed and zero coefficients removed.
    pub fn merged_terms(&self) -> Vec<(VarId, f64)> {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, a) in terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => out.push((v, a)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        out
    }
}

/// `binary = active ⟹ constraint`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorConstraint {
    pub binary: VarId,
    pub active: bool,
    pub constraint: LinearConstraint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub indicators: Vec<IndicatorConstraint>,
    pub objective: Vec<(VarId, f64)>,
    pub sense: ObjectiveSense,
}

impl LinearProblem {
    pub fn new(sense: ObjectiveSense) -> Self {
        LinearProblem {
            variables: Vec::new(),
            constraints: Vec::new(),
            indicators: Vec::new(),
            objective: Vec::new(),
            sense,
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lb,
            ub,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> VarId {
        self.add_variable(name, VarKind::Continuous, lb, ub)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: ConstraintSense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(LinearConstraint::new(name, terms, sense, rhs));
        self.constraints.len() - 1
    }

    pub fn push_constraint(&mut self, constraint: LinearConstraint) -> usize {
        self.constraints.push(constraint);
        self.constraints.len() - 1
    }

    pub fn add_indicator(&mut self, binary: VarId, active: bool, constraint: LinearConstraint) {
        self.indicators.push(IndicatorConstraint {
            binary,
            active,
            constraint,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn is_mip(&self) -> bool {
        self.num_binaries() > 0
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Checks that every referenced variable exists and binaries live in `{0, 1}`.
    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        let check = |v: VarId, ctx: &str| {
            if v.0 >= n {
                Err(Error::InvalidInput(format!("{ctx} references undeclared variable {}", v.0)))
            } else {
                Ok(())
            }
        };
        for var in &self.variables {
            if var.lb.is_nan() || var.ub.is_nan() || var.lb > var.ub {
                return Err(Error::InvalidInput(format!(
                    "variable {} has bounds [{}, {}]",
                    var.name, var.lb, var.ub
                )));
            }
            if var.kind == VarKind::Binary && (var.lb < 0.0 || var.ub > 1.0) {
                return Err(Error::InvalidInput(format!("binary {} has bounds outside [0, 1]", var.name)));
            }
        }
        for c in &self.constraints {
            for &(v, _) in &c.terms {
                check(v, &c.name)?;
            }
        }
        for ind in &self.indicators {
            check(ind.binary, &ind.constraint.name)?;
            if self.variables[ind.binary.0].kind != VarKind::Binary {
                return Err(Error::InvalidInput(format!(
                    "indicator {} is controlled by a non-binary variable",
                    ind.constraint.name
                )));
            }
            for &(v, _) in &ind.constraint.terms {
                check(v, &ind.constraint.name)?;
            }
        }
        for &(v, _) in &self.objective {
            check(v, "objective")?;
        }
        Ok(())
    }

    /// Largest violation of bounds, linear rows, integrality and indicators at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(var, &xv)| {
                let b = (var.lb - xv).max(xv - var.ub).max(0.0);
                if var.kind == VarKind::Binary {
                    b.max((xv - xv.round()).abs())
                } else {
                    b
                }
            })
            .fold(0.0, f64::max);
        let rows = self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        let inds = self
            .indicators
            .iter()
            .filter(|ind| (x[ind.binary.0].round() == 1.0) == ind.active)
            .map(|ind| ind.constraint.violation(x))
            .fold(0.0, f64::max);
        bounds.max(rows).max(inds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    /// Wall-clock budget in seconds; infinite means no limit.
    pub time_limit_s: f64,
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Relative MIP gap.
    pub optimality_gap: f64,
    pub seed: u64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            time_limit_s: f64::INFINITY,
            feasibility_tol: 1e-6,
            integrality_tol: 1e-6,
            optimality_gap: 1e-6,
            seed: 0,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("time_limit_s", self.time_limit_s),
            ("feasibility_tol", self.feasibility_tol),
            ("integrality_tol", self.integrality_tol),
            ("optimality_gap", self.optimality_gap),
        ];
        for (name, value) in positive {
            if value.is_nan() || value <= 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Copy with the time limit replaced.
    pub fn with_time_limit(&self, seconds: f64) -> Self {
        SolveSettings {
            time_limit_s: seconds,
            ..self.clone()
        }
    }
}

/// Termination status shared by the backend and every solver path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    NumericalError,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::NumericalError => "NumericalError",
        };
        f.write_str(s)
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Optimal" => SolveStatus::Optimal,
            "Infeasible" => SolveStatus::Infeasible,
            "Unbounded" => SolveStatus::Unbounded,
            "TimeLimit" => SolveStatus::TimeLimit,
            "NumericalError" => SolveStatus::NumericalError,
            other => return Err(Error::InvalidInput(format!("unknown status `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal values, present iff a feasible point was found.
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Row duals, present only for pure LPs solved to optimality.
    pub duals: Option<Vec<f64>>,
}

impl SolveResult {
    pub fn status_only(status: SolveStatus) -> Self {
        SolveResult {
            status,
            values: None,
            objective: None,
            duals: None,
        }
    }
}

/// An LP/MIP engine.
///
/// Implementations must be deterministic: the same problem and settings give
/// the same status and objective.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    /// Whether [`LinearProblem::indicators`] may be non-empty.
    fn supports_indicators(&self) -> bool;

    fn solve(&self, problem: &LinearProblem, settings: &SolveSettings) -> Result<SolveResult>;
}

/// Capability query; formulations fall back to big-M rows when this is false.
pub fn supports_indicators(backend: &dyn Backend) -> bool {
    backend.supports_indicators()
}

/// Backends selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    /// Plain HiGHS; indicators are linearized by the caller.
    Highs,
    /// HiGHS wrapped in [`IndicatorBranching`].
    HighsIndicator,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "highs" => Ok(BackendKind::Highs),
            "highs-indicator" | "highs_indicator" => Ok(BackendKind::HighsIndicator),
            other => Err(Error::InvalidInput(format!("unknown backend `{other}`"))),
        }
    }
}

pub fn make_backend(kind: BackendKind) -> Box<dyn Backend> {
    match kind {
        BackendKind::Highs => Box::new(HighsBackend::default()),
        BackendKind::HighsIndicator => Box::new(IndicatorBranching::new(HighsBackend::default())),
    }
}

/// Backend named by `LLFBA_BACKEND`, HiGHS when unset.
pub fn backend_from_env() -> Result<Box<dyn Backend>> {
    let kind = match std::env::var(BACKEND_ENV) {
        Ok(name) => name.parse()?,
        Err(_) => BackendKind::Highs,
    };
    Ok(make_backend(kind))
}
