//! Enzyme-constrained models: reversible-reaction splitting, the extended
//! stoichiometry `[[S, 0], [diag(-1/kcat), I]]` and seeded synthetic kinetic
//! data.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::fba_problem;
use crate::io::{read_json, write_json};
use crate::model::MetabolicModel;
use crate::solver::{ConstraintSense, LinearProblem, VarId};
use crate::sparse::CscMatrix;

/// Upper bound on every enzyme concentration.
pub const MAX_ENZYME_CAPACITY: f64 = 1000.0;
/// Mass budget of each protein group.
pub const GROUP_CAPACITY: f64 = 0.5;
/// Floor applied to sampled turnover numbers.
pub const MIN_KCAT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MassGroup {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// One column of a split model: which original reaction it carries and in
/// which direction (`v_orig = Σ ±v_split`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitColumn {
    pub original: usize,
    pub direction: Direction,
}

impl SplitColumn {
    fn sign(&self) -> f64 {
        match self.direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// A model whose fluxes are all non-negative, plus the map back to the
/// original columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitModel {
    pub model: MetabolicModel,
    pub columns: Vec<SplitColumn>,
    pub num_original: usize,
}

impl SplitModel {
    /// Folds split fluxes back onto the original reactions.
    pub fn fold(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_original];
        for (col, &x) in self.columns.iter().zip(v) {
            out[col.original] += col.sign() * x;
        }
        out
    }

    /// Maps an original flux vector onto the split columns.
    pub fn unfold(&self, v: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| (c.sign() * v[c.original]).max(0.0))
            .collect()
    }
}

/// Splits every reversible reaction `i` into `i_fwd ∈ [0, u]` and
/// `i_bwd ∈ [0, -l]` with the negated column; backward-only reactions are
/// flipped. Split columns of internal reactions stay internal.
pub fn split_reversible(model: &MetabolicModel) -> SplitModel {
    let (l, u) = (model.lower_bounds(), model.upper_bounds());
    let s = model.stoichiometry();
    let mut columns = Vec::new();
    let mut ids = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut objective = Vec::new();
    let mut internal = Vec::new();
    let mut triplets = Vec::new();
    for j in 0..model.num_reactions() {
        let id = &model.reaction_ids()[j];
        let c = model.objective()[j];
        let mut push = |direction: Direction, name: String, lo: f64, hi: f64| {
            let col = SplitColumn { original: j, direction };
            let k = columns.len();
            triplets.extend(s.column(j).map(|(r, a)| (r, k, col.sign() * a)));
            if model.internal_position(j).is_some() {
                internal.push(k);
            }
            ids.push(name);
            lower.push(lo);
            upper.push(hi);
            objective.push(col.sign() * c);
            columns.push(col);
        };
        if model.is_reversible(j) {
            push(Direction::Forward, format!("{id}_fwd"), 0.0, u[j]);
            push(Direction::Backward, format!("{id}_bwd"), 0.0, -l[j]);
        } else if u[j] <= 0.0 && l[j] < 0.0 {
            push(Direction::Backward, format!("{id}_bwd"), -u[j], -l[j]);
        } else {
            push(Direction::Forward, id.clone(), l[j], u[j]);
        }
    }
    let n = columns.len();
    let split = MetabolicModel::new(
        model.metabolite_ids().to_vec(),
        ids,
        CscMatrix::from_triplets(model.num_metabolites(), n, triplets),
        lower,
        upper,
        objective,
        internal,
    )
    .expect("splitting preserves model validity");
    SplitModel {
        model: split,
        columns,
        num_original: model.num_reactions(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enzyme {
    pub id: String,
    pub proteins: Vec<String>,
    /// Original reaction id this enzyme catalyzes.
    pub reaction: String,
    pub direction: Direction,
}

/// Kinetic and proteomic data keyed by original reaction ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnzymeData {
    pub seed: Option<u64>,
    pub enzymes: Vec<Enzyme>,
    /// Turnover numbers in 1/h.
    pub kcat_forward: BTreeMap<String, f64>,
    pub kcat_backward: BTreeMap<String, f64>,
    /// g/mmol
    pub protein_molar_mass: BTreeMap<String, f64>,
    pub mass_groups: BTreeMap<String, MassGroup>,
    /// Mass budget per group, mmol/gDW.
    pub group_capacity: BTreeMap<MassGroup, f64>,
    pub enzyme_capacity: BTreeMap<String, f64>,
}

impl EnzymeData {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnzymeDataParams {
    /// Molar masses are drawn uniformly from `(lo, hi]`.
    pub molar_mass_range: (f64, f64),
    pub proteins_per_enzyme: usize,
    pub enzyme_capacity: f64,
}

impl Default for EnzymeDataParams {
    fn default() -> Self {
        EnzymeDataParams {
            molar_mass_range: (0.0, 1.0),
            proteins_per_enzyme: 1,
            enzyme_capacity: MAX_ENZYME_CAPACITY,
        }
    }
}

/// Random kinetic data: one enzyme per reaction direction, `kcat` drawn from
/// `|N(0,1)|` floored at [`MIN_KCAT`], molar masses uniform, protein groups
/// uniform over {A, B}. Deterministic in `seed`.
pub fn generate_enzyme_data(model: &MetabolicModel, seed: u64, params: &EnzymeDataParams) -> EnzymeData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kcat = |rng: &mut ChaCha8Rng| {
        let z: f64 = StandardNormal.sample(rng);
        z.abs().max(MIN_KCAT)
    };
    let (lo, hi) = params.molar_mass_range;
    let mut data = EnzymeData {
        seed: Some(seed),
        enzymes: Vec::new(),
        kcat_forward: BTreeMap::new(),
        kcat_backward: BTreeMap::new(),
        protein_molar_mass: BTreeMap::new(),
        mass_groups: BTreeMap::new(),
        group_capacity: [(MassGroup::A, GROUP_CAPACITY), (MassGroup::B, GROUP_CAPACITY)].into(),
        enzyme_capacity: BTreeMap::new(),
    };
    for j in 0..model.num_reactions() {
        let id = &model.reaction_ids()[j];
        let mut directions = Vec::new();
        if model.upper_bounds()[j] > 0.0 || model.lower_bounds()[j] >= 0.0 {
            directions.push(Direction::Forward);
        }
        if model.lower_bounds()[j] < 0.0 {
            directions.push(Direction::Backward);
        }
        for direction in directions {
            let (suffix, map) = match direction {
                Direction::Forward => ("fwd", &mut data.kcat_forward),
                Direction::Backward => ("bwd", &mut data.kcat_backward),
            };
            map.insert(id.clone(), kcat(&mut rng));
            let enzyme_id = format!("E_{id}_{suffix}");
            let mut proteins = Vec::with_capacity(params.proteins_per_enzyme);
            for k in 0..params.proteins_per_enzyme.max(1) {
                let protein = format!("P_{id}_{suffix}_{k}");
                // 1 - U[0,1) lies in (0, 1]
                let mass = lo + (hi - lo) * (1.0 - rng.random::<f64>());
                let group = if rng.random_bool(0.5) { MassGroup::A } else { MassGroup::B };
                data.protein_molar_mass.insert(protein.clone(), mass);
                data.mass_groups.insert(protein.clone(), group);
                proteins.push(protein);
            }
            data.enzyme_capacity.insert(enzyme_id.clone(), params.enzyme_capacity);
            data.enzymes.push(Enzyme {
                id: enzyme_id,
                proteins,
                reaction: id.clone(),
                direction,
            });
        }
    }
    data
}

/// A split model coupled to enzyme usages `e`.
///
/// LP layout: split fluxes `v` (n columns), then usages `e` (p columns). Rows:
/// `S·v = 0`, `-v_j/kcat_j + e_j = 0` and one mass budget per group.
#[derive(Clone, Debug, PartialEq)]
pub struct EnzymeModel {
    split: SplitModel,
    enzyme_ids: Vec<String>,
    /// Split column catalyzed by each enzyme.
    enzyme_column: Vec<usize>,
    kcat: Vec<f64>,
    capacity: Vec<f64>,
    /// Per group: `(enzyme index, molar-mass weight)` terms and the budget.
    groups: Vec<(MassGroup, Vec<(usize, f64)>, f64)>,
}

pub fn build_enzyme_model(model: &MetabolicModel, data: &EnzymeData) -> Result<EnzymeModel> {
    let split = split_reversible(model);
    let mut enzyme_ids = Vec::new();
    let mut enzyme_column = Vec::new();
    let mut kcat = Vec::new();
    let mut capacity = Vec::new();
    let mut weights: BTreeMap<MassGroup, Vec<(usize, f64)>> = BTreeMap::new();
    for enzyme in &data.enzymes {
        let j = model
            .reaction_index(&enzyme.reaction)
            .ok_or_else(|| Error::Validation(format!("enzyme {} names unknown reaction {}", enzyme.id, enzyme.reaction)))?;
        let Some(col) = split
            .columns
            .iter()
            .position(|c| c.original == j && c.direction == enzyme.direction)
        else {
            // direction unused by the bounds
            continue;
        };
        let table = match enzyme.direction {
            Direction::Forward => &data.kcat_forward,
            Direction::Backward => &data.kcat_backward,
        };
        let k = *table.get(&enzyme.reaction).ok_or_else(|| {
            Error::Validation(format!("missing kcat for {:?} direction of {}", enzyme.direction, enzyme.reaction))
        })?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Validation(format!("kcat of {} must be positive, got {k}", enzyme.reaction)));
        }
        let cap = data.enzyme_capacity.get(&enzyme.id).copied().unwrap_or(MAX_ENZYME_CAPACITY);
        if !(0.0..=MAX_ENZYME_CAPACITY).contains(&cap) {
            return Err(Error::Validation(format!("capacity of {} outside [0, {MAX_ENZYME_CAPACITY}]", enzyme.id)));
        }
        let e = enzyme_ids.len();
        for protein in &enzyme.proteins {
            let mass = *data
                .protein_molar_mass
                .get(protein)
                .ok_or_else(|| Error::Validation(format!("missing molar mass for protein {protein}")))?;
            let group = *data
                .mass_groups
                .get(protein)
                .ok_or_else(|| Error::Validation(format!("missing mass group for protein {protein}")))?;
            weights.entry(group).or_default().push((e, mass));
        }
        enzyme_ids.push(enzyme.id.clone());
        enzyme_column.push(col);
        kcat.push(k);
        capacity.push(cap);
    }
    let mut catalyzed = vec![false; split.columns.len()];
    for &c in &enzyme_column {
        if std::mem::replace(&mut catalyzed[c], true) {
            return Err(Error::Validation(format!(
                "reaction {} has more than one enzyme",
                split.model.reaction_ids()[c]
            )));
        }
    }
    if let Some(c) = catalyzed.iter().position(|&x| !x) {
        if !enzyme_ids.is_empty() {
            return Err(Error::Validation(format!("no enzyme for reaction {}", split.model.reaction_ids()[c])));
        }
    }
    let groups = weights
        .into_iter()
        .map(|(g, terms)| {
            let budget = data.group_capacity.get(&g).copied().unwrap_or(GROUP_CAPACITY);
            (g, terms, budget)
        })
        .collect();
    Ok(EnzymeModel {
        split,
        enzyme_ids,
        enzyme_column,
        kcat,
        capacity,
        groups,
    })
}

impl EnzymeModel {
    /// The split network whose columns are the LP's flux variables.
    pub fn base(&self) -> &MetabolicModel {
        &self.split.model
    }

    pub fn split(&self) -> &SplitModel {
        &self.split
    }

    pub fn num_enzymes(&self) -> usize {
        self.enzyme_ids.len()
    }

    pub fn enzyme_ids(&self) -> &[String] {
        &self.enzyme_ids
    }

    pub fn kcat(&self) -> &[f64] {
        &self.kcat
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    /// `[[S, 0], [diag(-1/kcat), I]]`, `(m + p) × (n + p)`.
    pub fn s_enz(&self) -> CscMatrix {
        let base = self.base();
        let (m, n, p) = (base.num_metabolites(), base.num_reactions(), self.num_enzymes());
        let mut triplets: Vec<(usize, usize, f64)> = base.stoichiometry().triplets().collect();
        for (e, (&col, &k)) in self.enzyme_column.iter().zip(&self.kcat).enumerate() {
            triplets.push((m + e, col, -1.0 / k));
            triplets.push((m + e, n + e, 1.0));
        }
        CscMatrix::from_triplets(m + p, n + p, triplets)
    }

    pub(crate) fn enzyme_fba_problem(&self) -> LinearProblem {
        let base = self.base();
        let n = base.num_reactions();
        let mut p = fba_problem(base);
        let usage: Vec<VarId> = self
            .enzyme_ids
            .iter()
            .zip(&self.capacity)
            .map(|(id, &cap)| p.add_continuous(format!("e[{id}]"), 0.0, cap))
            .collect();
        debug_assert!(usage.first().is_none_or(|e| e.0 == n));
        for (e, id) in self.enzyme_ids.iter().enumerate() {
            let col = self.enzyme_column[e];
            p.add_constraint(
                format!("enzyme_balance[{id}]"),
                vec![(VarId(col), -1.0 / self.kcat[e]), (usage[e], 1.0)],
                ConstraintSense::Eq,
                0.0,
            );
        }
        for (g, terms, budget) in &self.groups {
            p.add_constraint(
                format!("mass_group[{g:?}]"),
                terms.iter().map(|&(e, w)| (usage[e], w)).collect(),
                ConstraintSense::Le,
                *budget,
            );
        }
        p
    }

    /// Usages read from an LP point laid out as in the enzyme FBA problem.
    pub fn enzyme_usage(&self, x: &[f64]) -> Vec<f64> {
        let n = self.base().num_reactions();
        x[n..n + self.num_enzymes()].to_vec()
    }

    /// Largest `|e_i - v_j / kcat_ij|`.
    pub fn mass_balance_residual(&self, v: &[f64], e: &[f64]) -> f64 {
        self.enzyme_column
            .iter()
            .zip(&self.kcat)
            .zip(e)
            .map(|((&col, &k), &usage)| (usage - v[col] / k).abs())
            .fold(0.0, f64::max)
    }

    /// Mass used by each group at usages `e`.
    pub fn group_mass(&self, e: &[f64]) -> Vec<(MassGroup, f64, f64)> {
        self.groups
            .iter()
            .map(|(g, terms, budget)| (*g, terms.iter().map(|&(i, w)| w * e[i]).sum(), *budget))
            .collect()
    }
}
