//! Small generated networks for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::MetabolicModel;
use crate::sparse::CscMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomModelParams {
    pub max_metabolites: usize,
    pub max_reactions: usize,
    pub max_internal: usize,
    /// Absolute stoichiometric coefficients are drawn from `1..=max_coefficient`.
    pub max_coefficient: i32,
    /// Smallest absolute non-zero flux bound.
    pub min_bound: f64,
    pub max_bound: f64,
}

impl Default for RandomModelParams {
    fn default() -> Self {
        RandomModelParams {
            max_metabolites: 8,
            max_reactions: 12,
            max_internal: 10,
            max_coefficient: 2,
            min_bound: 10.0,
            max_bound: 100.0,
        }
    }
}

/// A random network: internal conversions between two or three metabolites,
/// single-metabolite exchanges, every bound interval containing zero.
/// Deterministic in `seed`.
pub fn random_model(seed: u64, params: &RandomModelParams) -> MetabolicModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=params.max_metabolites.max(2));
    let max_internal = params.max_internal.min(params.max_reactions.saturating_sub(1)).max(1);
    let k = rng.random_range(1..=max_internal);
    let max_exchange = (params.max_reactions - k).max(1);
    let e = rng.random_range(1..=max_exchange);

    let coef = |rng: &mut ChaCha8Rng| rng.random_range(1..=params.max_coefficient) as f64;
    let bound = |rng: &mut ChaCha8Rng| (rng.random_range(params.min_bound..=params.max_bound)).round();

    let mut columns: Vec<Vec<(usize, f64)>> = Vec::new();
    for _ in 0..k {
        let size = if m >= 3 && rng.random_bool(0.25) { 3 } else { 2 };
        let picked = rand::seq::index::sample(&mut rng, m, size).into_vec();
        let mut col = vec![(picked[0], -coef(&mut rng)), (picked[1], coef(&mut rng))];
        if size == 3 {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            col.push((picked[2], sign * coef(&mut rng)));
        }
        columns.push(col);
    }
    let mut covered = vec![false; m];
    for col in &columns {
        for &(r, _) in col {
            covered[r] = true;
        }
    }
    // exchanges first go to metabolites no conversion touches
    let mut exchange_targets: Vec<usize> = (0..m).filter(|&r| !covered[r]).collect();
    while exchange_targets.len() < e {
        exchange_targets.push(rng.random_range(0..m));
    }
    let e = exchange_targets.len();
    let mut exchange_columns: Vec<Vec<(usize, f64)>> =
        exchange_targets.iter().map(|&r| vec![(r, if rng.random_bool(0.5) { 1.0 } else { -1.0 })]).collect();
    // if the uncovered metabolites exceeded the budget, merge surplus exchanges
    // into the internal columns instead
    while k + exchange_columns.len() > params.max_reactions {
        let extra = exchange_columns.pop().expect("non-empty");
        let target = rng.random_range(0..columns.len());
        columns[target].extend(extra);
    }
    let e = e.min(exchange_columns.len());

    let mut reaction_ids = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut triplets = Vec::new();
    let mut internal = Vec::new();
    for (j, col) in columns.iter().chain(&exchange_columns).enumerate() {
        let is_internal = j < k;
        reaction_ids.push(if is_internal { format!("R{j}") } else { format!("EX_{j}") });
        let u = bound(&mut rng);
        let l = if rng.random_bool(if is_internal { 0.75 } else { 0.5 }) {
            -bound(&mut rng)
        } else {
            0.0
        };
        lower.push(l);
        upper.push(u);
        triplets.extend(col.iter().map(|&(r, v)| (r, j, v)));
        if is_internal {
            internal.push(j);
        }
    }
    let n = k + e;
    let mut objective = vec![0.0; n];
    for c in objective.iter_mut() {
        if rng.random_bool(0.4) {
            *c = rng.random_range(-1..=2) as f64;
        }
    }
    if objective.iter().all(|&c| c == 0.0) {
        objective[rng.random_range(0..n)] = 1.0;
    }
    MetabolicModel::new(
        (0..m).map(|r| format!("M{r}")).collect(),
        reaction_ids,
        CscMatrix::from_triplets(m, n, triplets),
        lower,
        upper,
        objective,
        internal,
    )
    .expect("generated model is valid")
}

/// Two copies of the three-reaction loop joined in series:
/// `EX_A → A`, `A → B → C` and `A → C`, `C → D → E` and `C → E`, `E → EX_E`.
/// Internal reactions are reversible on `[-30, 30]` and carry objective 1.
pub fn two_cycle_model() -> MetabolicModel {
    //            EX_A  r2   r3   r4   r5   r6   r7  EX_E
    let rows = [
        vec![1.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 1.0, -1.0, 0.0, -1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, -1.0],
    ];
    let mut reaction_ids = vec!["EX_A".to_string()];
    reaction_ids.extend((2..=7).map(|i| format!("r{i}")));
    reaction_ids.push("EX_E".into());
    let mut lower = vec![-30.0; 8];
    let mut upper = vec![30.0; 8];
    let mut objective = vec![1.0; 8];
    for j in [0, 7] {
        lower[j] = 0.0;
        upper[j] = 10.0;
        objective[j] = 0.0;
    }
    MetabolicModel::new(
        ["A", "B", "C", "D", "E"].iter().map(|s| s.to_string()).collect(),
        reaction_ids,
        CscMatrix::from_dense_rows(&rows),
        lower,
        upper,
        objective,
        (1..=6).collect(),
    )
    .expect("two-cycle model is valid")
}
