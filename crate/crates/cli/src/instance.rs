//! Instance file format.
//!
//! A JSON object `{"n": <int>, "coords": [[x, y], ...]}` or
//! `{"n": <int>, "matrix": [[...], ...]}`; when both are present the matrix
//! wins. Coordinates are converted to a distance matrix with full-precision
//! Euclidean distance at load time.

use std::path::Path;

use anyhow::Context;
use metaopt::CityGraph;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

pub fn write_instance(path: &Path, instance: &InstanceFile) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec(instance)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)
        .with_context(|| format!("writing instance file {}", path.display()))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<CityGraph, CliError> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading instance file {}", path.display()))?;
    let file: InstanceFile = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing instance file {}", path.display()))?;

    let graph = if let Some(matrix) = file.matrix {
        if matrix.len() != file.n {
            return Err(CliError::Internal(anyhow::anyhow!(
                "{}: matrix has {} rows but n = {}",
                path.display(),
                matrix.len(),
                file.n
            )));
        }
        CityGraph::from_matrix(matrix)?
    } else if let Some(coords) = file.coords {
        if coords.len() != file.n {
            return Err(CliError::Internal(anyhow::anyhow!(
                "{}: {} coordinate pairs but n = {}",
                path.display(),
                coords.len(),
                file.n
            )));
        }
        CityGraph::from_coords(&coords)?
    } else {
        return Err(CliError::Internal(anyhow::anyhow!(
            "{}: instance file has neither coords nor matrix",
            path.display()
        )));
    };
    Ok(graph)
}
