//! JSON state files: dims + row-major nested [re, im] matrix + optional
//! metadata, validated into a DensityMatrix on load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{matrix_from_nested, matrix_to_nested};
use crate::tensor::DensityMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<StateMetadata>,
}

impl StateFile {
    pub fn from_density(rho: &DensityMatrix, metadata: Option<StateMetadata>) -> StateFile {
        StateFile {
            dims: rho.dims().to_vec(),
            matrix: matrix_to_nested(rho.mat()),
            metadata,
        }
    }

    /// Validation failures surface the violated density-matrix property and
    /// its numeric residue.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let mat = matrix_from_nested(&self.matrix)?;
        DensityMatrix::new(mat, self.dims.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }

    pub fn from_json(text: &str) -> Result<StateFile> {
        serde_json::from_str(text).map_err(Error::from)
    }
}

pub fn load_state(path: &std::path::Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    StateFile::from_json(&text)?.to_density()
}
