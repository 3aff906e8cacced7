//! Constraint-based metabolic models and the linear-algebra queries shared by
//! every formulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolveStatus;
use crate::sparse::CscMatrix;

/// Relative pivot threshold below which a column is considered dependent
/// during the nullspace factorization.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// An immutable metabolic network: stoichiometry, flux bounds, objective and
/// the set of internal reactions.
///
/// Internal reactions are addressed through [`MetabolicModel::internal`]; they
/// may be interleaved with exchange reactions in the column order.
#[derive(Clone, Debug, PartialEq)]
pub struct MetabolicModel {
    metabolite_ids: Vec<String>,
    reaction_ids: Vec<String>,
    stoichiometry: CscMatrix,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    internal: Vec<usize>,
}

impl MetabolicModel {
    /// Validates and assembles a model.
    ///
    /// `internal` is sorted and deduplicated before the checks run.
    pub fn new(
        metabolite_ids: Vec<String>,
        reaction_ids: Vec<String>,
        stoichiometry: CscMatrix,
        lower: Vec<f64>,
        upper: Vec<f64>,
        objective: Vec<f64>,
        mut internal: Vec<usize>,
    ) -> Result<Self> {
        let m = metabolite_ids.len();
        let n = reaction_ids.len();
        if stoichiometry.nrows() != m || stoichiometry.ncols() != n {
            return Err(Error::Validation(format!(
                "stoichiometric matrix is {}x{} but the model has {m} metabolites and {n} reactions",
                stoichiometry.nrows(),
                stoichiometry.ncols()
            )));
        }
        for (name, len) in [("lower", lower.len()), ("upper", upper.len()), ("objective", objective.len())] {
            if len != n {
                return Err(Error::Validation(format!("{name} has length {len}, expected {n}")));
            }
        }
        for j in 0..n {
            if lower[j].is_nan() || upper[j].is_nan() || lower[j] > upper[j] {
                return Err(Error::Validation(format!(
                    "reaction {} has bounds [{}, {}]",
                    reaction_ids[j], lower[j], upper[j]
                )));
            }
        }
        let before = internal.len();
        internal.sort_unstable();
        internal.dedup();
        if internal.len() != before {
            return Err(Error::Validation("duplicate internal reaction index".into()));
        }
        if let Some(&bad) = internal.iter().find(|&&i| i >= n) {
            return Err(Error::Validation(format!("internal index {bad} out of range")));
        }
        if let Some(row) = stoichiometry.nonempty_rows().iter().position(|&used| !used) {
            return Err(Error::Validation(format!(
                "metabolite {} participates in no reaction",
                metabolite_ids[row]
            )));
        }
        Ok(MetabolicModel {
            metabolite_ids,
            reaction_ids,
            stoichiometry,
            lower,
            upper,
            objective,
            internal,
        })
    }

    pub fn num_metabolites(&self) -> usize {
        self.metabolite_ids.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reaction_ids.len()
    }

    pub fn metabolite_ids(&self) -> &[String] {
        &self.metabolite_ids
    }

    pub fn reaction_ids(&self) -> &[String] {
        &self.reaction_ids
    }

    pub fn stoichiometry(&self) -> &CscMatrix {
        &self.stoichiometry
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Sorted column indices of the internal reactions.
    pub fn internal(&self) -> &[usize] {
        &self.internal
    }

    /// Column indices not listed as internal.
    pub fn exchange(&self) -> Vec<usize> {
        let mut is_internal = vec![false; self.num_reactions()];
        for &i in &self.internal {
            is_internal[i] = true;
        }
        (0..self.num_reactions()).filter(|&j| !is_internal[j]).collect()
    }

    /// A reaction is reversible when its bounds straddle zero.
    pub fn is_reversible(&self, j: usize) -> bool {
        self.lower[j] < 0.0 && self.upper[j] > 0.0
    }

    /// Largest absolute flux bound, the default big-M constant.
    pub fn max_abs_bound(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0_f64, |acc, b| acc.max(b.abs()))
    }

    /// `S_I`: the columns of the internal reactions, in internal order.
    pub fn internal_submatrix(&self) -> CscMatrix {
        self.stoichiometry.select_columns(&self.internal)
    }

    /// Position of reaction `j` inside the internal index list.
    pub fn internal_position(&self, j: usize) -> Option<usize> {
        self.internal.binary_search(&j).ok()
    }

    pub fn reaction_index(&self, id: &str) -> Option<usize> {
        self.reaction_ids.iter().position(|r| r == id)
    }

    /// `‖S·v‖∞`
    pub fn steady_state_residual(&self, v: &[f64]) -> f64 {
        self.stoichiometry
            .mul_vec(v)
            .into_iter()
            .fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Largest bound violation of `v`.
    pub fn bound_violation(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&l, &u))| (l - x).max(x - u).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Same network with new flux bounds.
    pub fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        MetabolicModel::new(
            self.metabolite_ids.clone(),
            self.reaction_ids.clone(),
            self.stoichiometry.clone(),
            lower,
            upper,
            self.objective.clone(),
            self.internal.clone(),
        )
    }

    /// Same network with a different internal reaction set.
    pub fn with_internal(&self, internal: Vec<usize>) -> Result<Self> {
        MetabolicModel::new(
            self.metabolite_ids.clone(),
            self.reaction_ids.clone(),
            self.stoichiometry.clone(),
            self.lower.clone(),
            self.upper.clone(),
            self.objective.clone(),
            internal,
        )
    }
}

/// A flux distribution together with its optional thermodynamic certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSolution {
    pub status: SolveStatus,
    pub objective_value: f64,
    /// One entry per reaction.
    pub v: Vec<f64>,
    /// One entry per internal reaction, `S_Iᵀ μ`.
    pub delta_mu: Option<Vec<f64>>,
    /// One entry per metabolite.
    pub mu: Option<Vec<f64>>,
    /// Enzyme usages, present for enzyme-constrained solves.
    pub enzyme_usage: Option<Vec<f64>>,
}

impl FluxSolution {
    /// A solution without a flux vector, for non-optimal terminations.
    pub fn without_point(status: SolveStatus, n: usize) -> Self {
        FluxSolution {
            status,
            objective_value: f64::NAN,
            v: vec![0.0; n],
            delta_mu: None,
            mu: None,
            enzyme_usage: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Largest deviation between the stored `Δμ` and `S_Iᵀ μ`, or `None`
    /// when no certificate is attached.
    pub fn certificate_residual(&self, model: &MetabolicModel) -> Option<f64> {
        let (dmu, mu) = (self.delta_mu.as_ref()?, self.mu.as_ref()?);
        let expected = model.internal_submatrix().transpose_mul_vec(mu);
        Some(
            expected
                .iter()
                .zip(dmu)
                .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())),
        )
    }
}

/// Basis of `null(a)` as dense columns (`a.ncols() × k`), each scaled to unit
/// maximum norm.
///
/// Uses Householder QR with column pivoting on the dense lift of `a`; pivots
/// below `RANK_TOLERANCE` times the leading pivot count as zero.
pub fn nullspace_basis(a: &CscMatrix) -> Vec<Vec<f64>> {
    let m = a.nrows();
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut c = vec![0.0; m];
            for (r, v) in a.column(j) {
                c[r] = v;
            }
            c
        })
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    let mut lead = 0.0_f64;

    for k in 0..m.min(n) {
        let tail_norm = |c: &Vec<f64>| c[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let (best, best_norm) = (k..n)
            .map(|j| (j, tail_norm(&cols[j])))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if k == 0 {
            lead = best_norm;
        }
        if best_norm <= RANK_TOLERANCE * lead || best_norm == 0.0 {
            break;
        }
        cols.swap(k, best);
        perm.swap(k, best);

        // Householder reflector zeroing cols[k][k+1..]
        let alpha = if cols[k][k] > 0.0 { -best_norm } else { best_norm };
        let mut h: Vec<f64> = cols[k][k..].to_vec();
        h[0] -= alpha;
        let h_norm2: f64 = h.iter().map(|x| x * x).sum();
        cols[k][k] = alpha;
        for x in cols[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
        if h_norm2 > 0.0 {
            for col in cols.iter_mut().skip(k + 1) {
                let dot: f64 = h.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / h_norm2;
                for (x, hv) in col[k..].iter_mut().zip(&h) {
                    *x -= f * hv;
                }
            }
        }
        rank += 1;
    }

    // Solve R11 X = R12 by back substitution, one free column at a time.
    let mut basis = Vec::with_capacity(n - rank);
    for free in rank..n {
        let mut x = vec![0.0; rank];
        for i in (0..rank).rev() {
            let mut s = cols[free][i];
            for (j, xj) in x.iter().enumerate().skip(i + 1) {
                s -= cols[j][i] * xj;
            }
            x[i] = s / cols[i][i];
        }
        let mut b = vec![0.0; n];
        b[perm[free]] = 1.0;
        for i in 0..rank {
            b[perm[i]] = -x[i];
        }
        let scale = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        for v in b.iter_mut() {
            *v /= scale;
        }
        basis.push(b);
    }
    basis
}

/// The five-reaction network with one internal loop over `A → B → C` and
/// `A → C`: exchange reactions `r1` (uptake of A) and `r5` (export of C),
/// reversible internal reactions `r2`, `r3`, `r4`.
pub fn build_example_loop_model() -> MetabolicModel {
    let s = CscMatrix::from_dense_rows(&[
        vec![1.0, -1.0, 0.0, -1.0, 0.0],
        vec![0.0, 1.0, -1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 1.0, -1.0],
    ]);
    MetabolicModel::new(
        vec!["A".into(), "B".into(), "C".into()],
        (1..=5).map(|i| format!("r{i}")).collect(),
        s,
        vec![0.0, -30.0, -30.0, -30.0, 0.0],
        vec![10.0, 30.0, 30.0, 30.0, 10.0],
        vec![0.0, 1.0, 1.0, 1.0, 0.0],
        vec![1, 2, 3],
    )
    .expect("example model is valid")
}
