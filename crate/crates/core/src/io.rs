//! JSON model and solution files.
//!
//! The model schema is a subset of the BiGG/COBRA JSON export; unknown fields
//! (genes, annotations, ...) are ignored on load.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FluxSolution, MetabolicModel};
use crate::solver::SolveStatus;
use crate::sparse::CscMatrix;

pub const SCHEMA_VERSION: &str = "1";

const EXCHANGE_PREFIXES: [&str; 3] = ["EX_", "DM_", "SK_"];

fn default_schema() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaboliteEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compartment: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionEntry {
    pub id: String,
    pub lower_bound: f64,
    pub upper_bound: f64,
    #[serde(default)]
    pub objective_coefficient: f64,
    pub metabolites: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_exchange: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(default = "default_schema")]
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub metabolites: Vec<MetaboliteEntry>,
    pub reactions: Vec<ReactionEntry>,
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn is_exchange(reaction: &ReactionEntry) -> bool {
    if let Some(flag) = reaction.is_exchange {
        return flag;
    }
    if EXCHANGE_PREFIXES.iter().any(|p| reaction.id.starts_with(p)) {
        return true;
    }
    reaction.metabolites.values().filter(|&&c| c != 0.0).count() == 1
}

impl ModelDocument {
    pub fn to_model(&self) -> Result<MetabolicModel> {
        let mut seen = HashMap::new();
        for (r, met) in self.metabolites.iter().enumerate() {
            if seen.insert(met.id.as_str(), r).is_some() {
                return Err(Error::Validation(format!("duplicate metabolite id `{}`", met.id)));
            }
        }
        let mut reaction_ids = std::collections::HashSet::new();
        let mut triplets = Vec::new();
        for (j, rxn) in self.reactions.iter().enumerate() {
            if !reaction_ids.insert(rxn.id.as_str()) {
                return Err(Error::Validation(format!("duplicate reaction id `{}`", rxn.id)));
            }
            for (met, &coef) in &rxn.metabolites {
                let &r = seen.get(met.as_str()).ok_or_else(|| {
                    Error::Validation(format!("reaction `{}` references unknown metabolite `{met}`", rxn.id))
                })?;
                triplets.push((r, j, coef));
            }
        }
        let full = CscMatrix::from_triplets(self.metabolites.len(), self.reactions.len(), triplets);

        // metabolites without any reaction would leave empty rows in S
        let used = full.nonempty_rows();
        let mut row_map = vec![usize::MAX; used.len()];
        let mut metabolite_ids = Vec::new();
        for (r, met) in self.metabolites.iter().enumerate() {
            if used[r] {
                row_map[r] = metabolite_ids.len();
                metabolite_ids.push(met.id.clone());
            } else {
                log::warn!("dropping unused metabolite `{}`", met.id);
            }
        }
        let s = if metabolite_ids.len() == used.len() {
            full
        } else {
            CscMatrix::from_triplets(
                metabolite_ids.len(),
                self.reactions.len(),
                full.triplets().map(|(r, j, v)| (row_map[r], j, v)).collect::<Vec<_>>(),
            )
        };

        let internal = (0..self.reactions.len())
            .filter(|&j| !is_exchange(&self.reactions[j]))
            .collect();
        MetabolicModel::new(
            metabolite_ids,
            self.reactions.iter().map(|r| r.id.clone()).collect(),
            s,
            self.reactions.iter().map(|r| r.lower_bound).collect(),
            self.reactions.iter().map(|r| r.upper_bound).collect(),
            self.reactions.iter().map(|r| r.objective_coefficient).collect(),
            internal,
        )
    }

    /// Document with explicit exchange flags, so the internal/exchange
    /// partition survives a round trip.
    pub fn from_model(model: &MetabolicModel) -> Self {
        let metabolites = model
            .metabolite_ids()
            .iter()
            .map(|id| MetaboliteEntry {
                id: id.clone(),
                compartment: None,
            })
            .collect();
        let s = model.stoichiometry();
        let reactions = (0..model.num_reactions())
            .map(|j| ReactionEntry {
                id: model.reaction_ids()[j].clone(),
                lower_bound: model.lower_bounds()[j],
                upper_bound: model.upper_bounds()[j],
                objective_coefficient: model.objective()[j],
                metabolites: s
                    .column(j)
                    .map(|(r, v)| (model.metabolite_ids()[r].clone(), v))
                    .collect(),
                is_exchange: Some(model.internal_position(j).is_none()),
            })
            .collect();
        ModelDocument {
            schema_version: SCHEMA_VERSION.into(),
            id: None,
            metabolites,
            reactions,
        }
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MetabolicModel> {
    let doc: ModelDocument = read_json(path.as_ref())?;
    doc.to_model()
}

pub fn save_model(model: &MetabolicModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), &ModelDocument::from_model(model))
}

/// On-disk solution: fluxes and potentials keyed by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub fluxes: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_mu: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enzyme_usage: Option<Vec<f64>>,
}

impl SolutionDocument {
    pub fn from_solution(model: &MetabolicModel, sol: &FluxSolution) -> Result<Self> {
        if sol.v.len() != model.num_reactions() {
            return Err(Error::InvalidInput(format!(
                "solution has {} fluxes, model has {} reactions",
                sol.v.len(),
                model.num_reactions()
            )));
        }
        let ids = model.reaction_ids();
        let keyed = |ids: &[String], xs: &[f64]| ids.iter().cloned().zip(xs.iter().copied()).collect();
        let internal_ids: Vec<String> = model.internal().iter().map(|&i| ids[i].clone()).collect();
        Ok(SolutionDocument {
            status: sol.status,
            objective: sol.objective_value.is_finite().then_some(sol.objective_value),
            fluxes: keyed(ids, &sol.v),
            delta_mu: sol.delta_mu.as_ref().map(|d| keyed(&internal_ids, d)),
            mu: sol.mu.as_ref().map(|m| keyed(model.metabolite_ids(), m)),
            enzyme_usage: sol.enzyme_usage.clone(),
        })
    }

    pub fn to_solution(&self, model: &MetabolicModel) -> Result<FluxSolution> {
        let lookup = |map: &BTreeMap<String, f64>, ids: &mut dyn Iterator<Item = &String>, what: &str| {
            ids.map(|id| {
                map.get(id)
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("solution lacks {what} for `{id}`")))
            })
            .collect::<Result<Vec<f64>>>()
        };
        let v = lookup(&self.fluxes, &mut model.reaction_ids().iter(), "a flux")?;
        let delta_mu = match &self.delta_mu {
            Some(map) => Some(lookup(
                map,
                &mut model.internal().iter().map(|&i| &model.reaction_ids()[i]),
                "a potential difference",
            )?),
            None => None,
        };
        let mu = match &self.mu {
            Some(map) => Some(lookup(map, &mut model.metabolite_ids().iter(), "a potential")?),
            None => None,
        };
        Ok(FluxSolution {
            status: self.status,
            objective_value: self.objective.unwrap_or(f64::NAN),
            v,
            delta_mu,
            mu,
            enzyme_usage: self.enzyme_usage.clone(),
        })
    }
}

pub fn save_solution(model: &MetabolicModel, sol: &FluxSolution, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), &SolutionDocument::from_solution(model, sol)?)
}

pub fn load_solution(model: &MetabolicModel, path: impl AsRef<Path>) -> Result<FluxSolution> {
    let doc: SolutionDocument = read_json(path.as_ref())?;
    doc.to_solution(model)
}
