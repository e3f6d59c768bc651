//! On-disk JSON formats.
//!
//! Chain files: `{"labels": ["a", ...], "matrix": [[...], ...]}` with
//! `labels` optional and `matrix` square.  Perturbation files:
//! `{"target": t, "donor": d, "c": [...]}`.  The CLI's `perturb` command
//! accepts either kind in its second slot and tells them apart by which of
//! `matrix` / `c` is present.

use serde::{Deserialize, Serialize};

use crate::chain::{TransitionMatrix, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::perturbation::ElementaryPerturbation;
use crate::sensitivity::CouplingSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationFile {
    pub target: usize,
    pub donor: usize,
    pub c: Vec<f64>,
}

/// Either kind of second input to `perturb`.
#[derive(Debug, Clone)]
pub enum PerturbInput {
    Chain(TransitionMatrix),
    Perturbation(ElementaryPerturbation),
}

impl ChainFile {
    pub fn into_matrix(self) -> Result<TransitionMatrix> {
        let m = TransitionMatrix::validate(&self.matrix, DEFAULT_TOLERANCE)?;
        match self.labels {
            Some(labels) => m.with_labels(labels),
            None => Ok(m),
        }
    }

    pub fn from_matrix(m: &TransitionMatrix) -> Self {
        ChainFile { labels: m.labels().map(<[String]>::to_vec), matrix: m.to_rows() }
    }
}

impl PerturbationFile {
    pub fn into_perturbation(self) -> Result<ElementaryPerturbation> {
        Ok(ElementaryPerturbation::new(CouplingSpec::new(self.target, self.donor)?, self.c))
    }
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

/// Load and validate a chain file.
pub fn load_chain(path: &str) -> Result<TransitionMatrix> {
    let text = read(path)?;
    let file: ChainFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    file.into_matrix()
}

/// Load the second argument of `perturb`, detecting its schema.
pub fn load_perturb_input(path: &str) -> Result<PerturbInput> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    if value.get("matrix").is_some() {
        let file: ChainFile = serde_json::from_value(value)
            .map_err(|e| Error::Parse(format!("{path}: {e}")))?;
        Ok(PerturbInput::Chain(file.into_matrix()?))
    } else if value.get("c").is_some() {
        let file: PerturbationFile = serde_json::from_value(value)
            .map_err(|e| Error::Parse(format!("{path}: {e}")))?;
        Ok(PerturbInput::Perturbation(file.into_perturbation()?))
    } else {
        Err(Error::Parse(format!("{path}: expected a \"matrix\" or \"c\" field")))
    }
}
