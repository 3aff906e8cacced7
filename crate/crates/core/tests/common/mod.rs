//! Reference implementations used as test oracles. Nothing here calls into the
//! library's solver layer: LPs go through a dense two-phase tableau simplex
//! with Bland's rule, and loopless optima come from enumerating every sign
//! assignment of the internal reactions.

#![allow(dead_code)]

use llfba::MetabolicModel;

const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `max cᵀx  s.t.  rows, lb ≤ x ≤ ub` with possibly infinite bounds.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl DenseLp {
    pub fn new(n: usize) -> Self {
        DenseLp {
            c: vec![0.0; n],
            rows: Vec::new(),
            lb: vec![0.0; n],
            ub: vec![f64::INFINITY; n],
        }
    }

    pub fn solve(&self) -> LpOutcome {
        simplex(self)
    }
}

/// How an original variable is written in terms of non-negative columns.
enum Map {
    /// `x = shift + y`
    Shifted(usize, f64),
    /// `x = shift - y`
    Mirrored(usize, f64),
    /// `x = y⁺ - y⁻`
    Split(usize, usize),
}

fn simplex(lp: &DenseLp) -> LpOutcome {
    let n = lp.c.len();
    let mut ncols = 0;
    let mut maps = Vec::with_capacity(n);
    let mut extra_rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lb[j], lp.ub[j]);
        if l > u + TOL {
            return LpOutcome::Infeasible;
        }
        if l.is_finite() {
            maps.push(Map::Shifted(ncols, l));
            if u.is_finite() {
                extra_rows.push((vec![(ncols, 1.0)], Sense::Le, u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            maps.push(Map::Mirrored(ncols, u));
            ncols += 1;
        } else {
            maps.push(Map::Split(ncols, ncols + 1));
            ncols += 2;
        }
    }
    // substitute into the user rows
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for (a, sense, b) in &lp.rows {
        let mut row = vec![0.0; ncols];
        let mut rhs = *b;
        for (j, &coef) in a.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            match maps[j] {
                Map::Shifted(y, s) => {
                    row[y] += coef;
                    rhs -= coef * s;
                }
                Map::Mirrored(y, s) => {
                    row[y] -= coef;
                    rhs -= coef * s;
                }
                Map::Split(p, q) => {
                    row[p] += coef;
                    row[q] -= coef;
                }
            }
        }
        rows.push((row, *sense, rhs));
    }
    for (terms, sense, rhs) in extra_rows {
        let mut row = vec![0.0; ncols];
        for (y, v) in terms {
            row[y] = v;
        }
        rows.push((row, sense, rhs));
    }
    let mut cost = vec![0.0; ncols];
    let mut offset = 0.0;
    for (j, &cj) in lp.c.iter().enumerate() {
        match maps[j] {
            Map::Shifted(y, s) => {
                cost[y] += cj;
                offset += cj * s;
            }
            Map::Mirrored(y, s) => {
                cost[y] -= cj;
                offset += cj * s;
            }
            Map::Split(p, q) => {
                cost[p] += cj;
                cost[q] -= cj;
            }
        }
    }

    // slacks, then one artificial per row
    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let width = ncols + nslack + m;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0; m];
    let mut s = ncols;
    for (r, (row, sense, rhs)) in rows.iter().enumerate() {
        t[r][..ncols].copy_from_slice(row);
        match sense {
            Sense::Le => {
                t[r][s] = 1.0;
                s += 1;
            }
            Sense::Ge => {
                t[r][s] = -1.0;
                s += 1;
            }
            Sense::Eq => {}
        }
        t[r][width] = *rhs;
        if *rhs < 0.0 {
            for v in t[r].iter_mut() {
                *v = -*v;
            }
        }
        t[r][ncols + nslack + r] = 1.0;
        basis[r] = ncols + nslack + r;
    }
    let art_start = ncols + nslack;

    let mut phase1 = vec![0.0; width];
    for c in phase1.iter_mut().skip(art_start) {
        *c = -1.0;
    }
    let all = vec![true; width];
    iterate(&mut t, &mut basis, &phase1, &all);
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art_start)
        .map(|(r, _)| t[r][width])
        .sum();
    if infeas > 1e-7 {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out, dropping redundant rows
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= art_start {
            match (0..art_start).find(|&j| t[r][j].abs() > 1e-7) {
                Some(j) => pivot(&mut t, &mut basis, r, j),
                None => {
                    t.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    let mut phase2 = vec![0.0; width];
    phase2[..ncols].copy_from_slice(&cost);
    let allowed: Vec<bool> = (0..width).map(|j| j < art_start).collect();
    if !iterate(&mut t, &mut basis, &phase2, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut y = vec![0.0; width];
    for (r, &b) in basis.iter().enumerate() {
        y[b] = t[r][width];
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Map::Shifted(j, s) => s + y[j],
            Map::Mirrored(j, s) => s - y[j],
            Map::Split(p, q) => y[p] - y[q],
        })
        .collect();
    let value = cost.iter().zip(&y).map(|(c, v)| c * v).sum::<f64>() + offset;
    LpOutcome::Optimal { value, x }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, j: usize) {
    let p = t[r][j];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[r].clone();
    for (k, row) in t.iter_mut().enumerate() {
        if k == r {
            continue;
        }
        let f = row[j];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[r] = j;
}

/// Maximizes `cost` over the tableau. `false` on unboundedness.
fn iterate(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: &[bool]) -> bool {
    let width = cost.len();
    loop {
        // Bland: lowest-index improving column
        let entering = (0..width).find(|&j| {
            if !allowed[j] || basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().enumerate().map(|(r, &b)| cost[b] * t[r][j]).sum::<f64>();
            reduced > TOL
        });
        let Some(j) = entering else {
            return true;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..t.len() {
            if t[r][j] > TOL {
                let ratio = t[r][width] / t[r][j];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => ratio < best - TOL || (ratio <= best + TOL && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return false;
        };
        pivot(t, basis, r, j);
    }
}

pub fn dense_stoichiometry(model: &MetabolicModel) -> Vec<Vec<f64>> {
    model.stoichiometry().to_dense_rows()
}

/// FBA as a dense LP, with internal fluxes restricted to the sign in `signs`
/// (`Some(true)` forward, `Some(false)` backward).
pub fn fba_lp(model: &MetabolicModel, signs: Option<&[bool]>) -> DenseLp {
    let n = model.num_reactions();
    let mut lp = DenseLp::new(n);
    lp.c = model.objective().to_vec();
    lp.lb = model.lower_bounds().to_vec();
    lp.ub = model.upper_bounds().to_vec();
    for row in dense_stoichiometry(model) {
        lp.rows.push((row, Sense::Eq, 0.0));
    }
    if let Some(signs) = signs {
        for (k, &i) in model.internal().iter().enumerate() {
            if signs[k] {
                lp.lb[i] = lp.lb[i].max(0.0);
            } else {
                lp.ub[i] = lp.ub[i].min(0.0);
            }
        }
    }
    lp
}

pub fn fba_value(model: &MetabolicModel) -> Option<f64> {
    fba_lp(model, None).solve().value()
}

/// Whether potentials `μ` exist with `(S_Iᵀμ)_k ≤ -ε` where `pattern[k]` is
/// `Some(true)` and `≥ ε` where it is `Some(false)`.
pub fn pattern_feasible(model: &MetabolicModel, pattern: &[Option<bool>], epsilon: f64) -> bool {
    let m = model.num_metabolites();
    let mut lp = DenseLp::new(m);
    lp.lb = vec![f64::NEG_INFINITY; m];
    let s = dense_stoichiometry(model);
    for (k, &i) in model.internal().iter().enumerate() {
        let Some(fwd) = pattern[k] else { continue };
        let row: Vec<f64> = (0..m).map(|r| s[r][i]).collect();
        if fwd {
            lp.rows.push((row, Sense::Le, -epsilon));
        } else {
            lp.rows.push((row, Sense::Ge, epsilon));
        }
    }
    matches!(lp.solve(), LpOutcome::Optimal { .. })
}

pub fn assignment(bits: u64, k: usize) -> Vec<bool> {
    (0..k).map(|p| bits >> p & 1 == 1).collect()
}

/// Loopless optimum by enumeration: the best FBA value over all sign
/// assignments whose potential system is feasible. `None` if no assignment
/// is feasible.
pub fn llfba_bruteforce(model: &MetabolicModel, epsilon: f64) -> Option<f64> {
    let k = model.internal().len();
    assert!(k <= 20, "brute force over 2^{k} assignments");
    let mut best: Option<f64> = None;
    for bits in 0..1u64 << k {
        let a = assignment(bits, k);
        let pattern: Vec<Option<bool>> = a.iter().map(|&x| Some(x)).collect();
        if !pattern_feasible(model, &pattern, epsilon) {
            continue;
        }
        if let Some(v) = fba_lp(model, Some(&a)).solve().value() {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

/// Every direction assignment whose potential system is infeasible.
pub fn infeasible_assignments(model: &MetabolicModel, epsilon: f64) -> Vec<Vec<bool>> {
    let k = model.internal().len();
    (0..1u64 << k)
        .map(|bits| assignment(bits, k))
        .filter(|a| {
            let pattern: Vec<Option<bool>> = a.iter().map(|&x| Some(x)).collect();
            !pattern_feasible(model, &pattern, epsilon)
        })
        .collect()
}

/// Independent minimality check: the rows in `indices` are jointly infeasible
/// and dropping any one of them makes the rest feasible.
pub fn is_minimal_infeasible(model: &MetabolicModel, a: &[bool], indices: &[usize], epsilon: f64) -> bool {
    let restrict = |keep: &dyn Fn(usize) -> bool| -> Vec<Option<bool>> {
        (0..a.len()).map(|p| (indices.contains(&p) && keep(p)).then_some(a[p])).collect()
    };
    if pattern_feasible(model, &restrict(&|_| true), epsilon) {
        return false;
    }
    indices
        .iter()
        .all(|&drop| pattern_feasible(model, &restrict(&|p| p != drop), epsilon))
}

/// The random models of the oracle suite.
pub fn suite_models(count: u64) -> Vec<(u64, MetabolicModel)> {
    let params = llfba::synthetic::RandomModelParams::default();
    (0..count).map(|seed| (seed, llfba::synthetic::random_model(seed, &params))).collect()
}
