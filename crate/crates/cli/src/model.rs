//! Model-file schema and resolution into engine types.
//!
//! A model file describes one finite-dimensional system: dimension, ħ,
//! Hamiltonian and initial state (for the operator-form functional), named
//! temporal supports, a projector library (explicit matrices or basis-span
//! constructors), and named history sets referencing the library. An
//! optional `functional` selector switches the decoherence functional to an
//! explicit X operator or to the Schreckenberg construction over one of the
//! sets; when absent the operator form from (hamiltonian, initial_state) is
//! used.

use hist_core::decoherence::{
    schreckenberg_x, FunctionalForm, OperatorFormFunctional, XOperatorFunctional,
};
use hist_core::histories::{
    homogeneous_projector, HistoryProjector, HomogeneousHistory, PartitionOfUnity,
    TemporalSupport,
};
use hist_core::matrix::CMatrix;
use hist_core::operators::{DensityMatrix, HermitianMatrix, Projector};
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

impl ModelError {
    pub fn invalid(location: impl Into<String>, message: impl ToString) -> Self {
        ModelError::Invalid {
            location: location.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ProjectorSpec {
    SpanBasis { span_basis: Vec<usize> },
    Explicit(CMatrix),
}

#[derive(Debug, Clone, Deserialize)]
pub struct HistoryEntrySpec {
    #[serde(default)]
    pub name: Option<String>,
    pub support: String,
    pub props: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SchreckenbergSpec {
    pub set: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum FunctionalSpec {
    Named(String),
    Schreckenberg { schreckenberg: SchreckenbergSpec },
    X { x: XOperatorFunctional },
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
struct ModelFileRepr {
    dimension: usize,
    #[serde(default = "default_hbar")]
    hbar: f64,
    #[serde(default)]
    t0: f64,
    #[serde(default)]
    hamiltonian: Option<CMatrix>,
    #[serde(default)]
    initial_state: Option<CMatrix>,
    #[serde(default)]
    supports: BTreeMap<String, TemporalSupport>,
    #[serde(default)]
    projector_library: BTreeMap<String, ProjectorSpec>,
    #[serde(default)]
    history_sets: BTreeMap<String, Vec<HistoryEntrySpec>>,
    #[serde(default)]
    functional: Option<FunctionalSpec>,
}

/// Which functional the model selects for consistency checks.
#[derive(Debug, Clone)]
pub enum ModelFunctional {
    Operator,
    Schreckenberg(SchreckenbergSpec),
    X(XOperatorFunctional),
}

/// A fully validated model: every reference resolved, every projector and
/// the initial state checked against their invariants.
#[derive(Debug, Clone)]
pub struct Model {
    pub dimension: usize,
    pub hbar: f64,
    pub t0: f64,
    pub hamiltonian: Option<HermitianMatrix>,
    pub initial_state: Option<DensityMatrix>,
    pub supports: BTreeMap<String, TemporalSupport>,
    pub history_sets: BTreeMap<String, Vec<(Option<String>, HomogeneousHistory)>>,
    pub functional: ModelFunctional,
}

pub fn load_model(path: &std::path::Path) -> Result<Model, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let repr: ModelFileRepr =
        serde_json::from_str(&text).map_err(|source| ModelError::Json {
            path: path.display().to_string(),
            source,
        })?;
    resolve(repr)
}

fn resolve(repr: ModelFileRepr) -> Result<Model, ModelError> {
    let d = repr.dimension;
    if d == 0 {
        return Err(ModelError::invalid("dimension", "must be positive"));
    }
    if !(repr.hbar > 0.0) {
        return Err(ModelError::invalid("hbar", "must be positive"));
    }

    let hamiltonian = match repr.hamiltonian {
        None => None,
        Some(m) => {
            if m.rows() != d || m.cols() != d {
                return Err(ModelError::invalid(
                    "hamiltonian",
                    format!("must be {d}x{d}, got {}x{}", m.rows(), m.cols()),
                ));
            }
            Some(
                HermitianMatrix::new(m)
                    .map_err(|e| ModelError::invalid("hamiltonian", e))?,
            )
        }
    };

    let initial_state = match repr.initial_state {
        None => None,
        Some(m) => {
            if m.rows() != d || m.cols() != d {
                return Err(ModelError::invalid(
                    "initial_state",
                    format!("must be {d}x{d}, got {}x{}", m.rows(), m.cols()),
                ));
            }
            Some(
                DensityMatrix::new(m)
                    .map_err(|e| ModelError::invalid("initial_state", e))?,
            )
        }
    };

    let mut projectors = BTreeMap::new();
    for (name, spec) in repr.projector_library {
        let location = format!("projector_library.{name}");
        let matrix = match spec {
            ProjectorSpec::Explicit(m) => m,
            ProjectorSpec::SpanBasis { span_basis } => {
                CMatrix::basis_projector(d, &span_basis)
                    .map_err(|e| ModelError::invalid(&location, e))?
            }
        };
        if matrix.rows() != d || matrix.cols() != d {
            return Err(ModelError::invalid(
                &location,
                format!("must be {d}x{d}, got {}x{}", matrix.rows(), matrix.cols()),
            ));
        }
        let p = Projector::new(matrix).map_err(|e| ModelError::invalid(&location, e))?;
        projectors.insert(name, p);
    }

    let mut history_sets = BTreeMap::new();
    for (set_name, entries) in repr.history_sets {
        let mut resolved = Vec::with_capacity(entries.len());
        for (k, entry) in entries.into_iter().enumerate() {
            let location = format!("history_sets.{set_name}[{k}]");
            let support = repr
                .supports
                .get(&entry.support)
                .cloned()
                .ok_or_else(|| {
                    ModelError::invalid(
                        format!("{location}.support"),
                        format!("unknown support {:?}", entry.support),
                    )
                })?;
            let props = entry
                .props
                .iter()
                .enumerate()
                .map(|(i, pname)| {
                    projectors.get(pname).cloned().ok_or_else(|| {
                        ModelError::invalid(
                            format!("{location}.props[{i}]"),
                            format!("unknown projector {pname:?}"),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let history = HomogeneousHistory::new(support, props)
                .map_err(|e| ModelError::invalid(&location, e))?;
            resolved.push((entry.name, history));
        }
        history_sets.insert(set_name, resolved);
    }

    let functional = match repr.functional {
        None => ModelFunctional::Operator,
        Some(FunctionalSpec::Named(name)) if name == "operator" => ModelFunctional::Operator,
        Some(FunctionalSpec::Named(name)) => {
            return Err(ModelError::invalid(
                "functional",
                format!("unknown functional {name:?}; expected \"operator\""),
            ))
        }
        Some(FunctionalSpec::Schreckenberg { schreckenberg }) => {
            if !history_sets.contains_key(&schreckenberg.set) {
                return Err(ModelError::invalid(
                    "functional.schreckenberg.set",
                    format!("unknown history set {:?}", schreckenberg.set),
                ));
            }
            ModelFunctional::Schreckenberg(schreckenberg)
        }
        Some(FunctionalSpec::X { x }) => ModelFunctional::X(x),
    };

    Ok(Model {
        dimension: d,
        hbar: repr.hbar,
        t0: repr.t0,
        hamiltonian,
        initial_state,
        supports: repr.supports,
        history_sets,
        functional,
    })
}

impl Model {
    pub fn operator_functional(&self) -> Result<OperatorFormFunctional, ModelError> {
        let h = self
            .hamiltonian
            .clone()
            .ok_or_else(|| ModelError::invalid("hamiltonian", "required but absent"))?;
        let rho = self
            .initial_state
            .clone()
            .ok_or_else(|| ModelError::invalid("initial_state", "required but absent"))?;
        OperatorFormFunctional::new(h, rho, self.t0, self.hbar)
            .map_err(|e| ModelError::invalid("model", e))
    }

    pub fn history_set(
        &self,
        name: &str,
    ) -> Result<&[(Option<String>, HomogeneousHistory)], ModelError> {
        self.history_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| {
                ModelError::invalid("history_sets", format!("unknown set {name:?}"))
            })
    }

    /// Look up one history as `set/name` or `set/index`.
    pub fn history(&self, spec: &str) -> Result<&HomogeneousHistory, ModelError> {
        let (set_name, id) = spec.split_once('/').ok_or_else(|| {
            ModelError::invalid(
                "history",
                format!("expected SET/NAME or SET/INDEX, got {spec:?}"),
            )
        })?;
        let set = self.history_set(set_name)?;
        if let Ok(index) = id.parse::<usize>() {
            return set.get(index).map(|(_, h)| h).ok_or_else(|| {
                ModelError::invalid(
                    "history",
                    format!("index {index} out of range for set {set_name:?} of size {}", set.len()),
                )
            });
        }
        set.iter()
            .find(|(n, _)| n.as_deref() == Some(id))
            .map(|(_, h)| h)
            .ok_or_else(|| {
                ModelError::invalid(
                    "history",
                    format!("no history named {id:?} in set {set_name:?}"),
                )
            })
    }

    /// Tensor-space partition of unity from a history set.
    pub fn set_partition(&self, name: &str) -> Result<PartitionOfUnity, ModelError> {
        let members: Vec<HistoryProjector> = self
            .history_set(name)?
            .iter()
            .map(|(_, h)| homogeneous_projector(h))
            .collect();
        PartitionOfUnity::new(members, hist_core::decoherence::STRUCTURE_TOL).map_err(|e| {
            ModelError::invalid(format!("history_sets.{name}"), format!("not a partition of unity: {e}"))
        })
    }

    /// The functional the model selects. The Schreckenberg X is always built
    /// from its own defining set; it is a valid functional for any set of
    /// the same dimension.
    pub fn functional(&self) -> Result<FunctionalForm, ModelError> {
        match &self.functional {
            ModelFunctional::Operator => {
                Ok(FunctionalForm::Operator(self.operator_functional()?))
            }
            ModelFunctional::X(x) => Ok(FunctionalForm::X(x.clone())),
            ModelFunctional::Schreckenberg(spec) => {
                let partition = self.set_partition(&spec.set)?;
                let x = schreckenberg_x(&partition, &spec.weights).map_err(|e| {
                    ModelError::invalid("functional.schreckenberg", e)
                })?;
                Ok(FunctionalForm::X(x))
            }
        }
    }
}
