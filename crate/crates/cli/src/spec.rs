//! Input formats: the group spec JSON and the dataset CSV.
//!
//! Group spec:
//! `{"type": "cyclic"|"sign_flip"|"dihedral"|"custom"|"generated",
//!   "dim": d, "matrices": [[...]], "n_max": int, "tol": float}`
//! where each matrix is a flat row-major list of `d*d` doubles
//! (`custom` lists the full element set, `generated` lists generators).
//!
//! Dataset CSV: one point per row, `d` comma-separated doubles, with an
//! optional leading id column enabled by `--ids`.

use std::fs;
use std::path::Path;

use coorbit_core::{group, Dataset, GroupAction};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fail::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpecFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl GroupSpecFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        let spec: GroupSpecFile = serde_json::from_str(&text)?;
        Ok(spec)
    }

    fn parse_matrices(&self) -> CliResult<Vec<DMatrix<f64>>> {
        let d = self.dim;
        let Some(matrices) = &self.matrices else {
            return Err(CliError::Parse(format!(
                "group type {:?} requires a \"matrices\" field",
                self.kind
            )));
        };
        matrices
            .iter()
            .enumerate()
            .map(|(i, flat)| {
                if flat.len() != d * d {
                    return Err(CliError::Parse(format!(
                        "matrix {i} has {} entries, expected {}",
                        flat.len(),
                        d * d
                    )));
                }
                Ok(DMatrix::from_row_slice(d, d, flat))
            })
            .collect()
    }

    pub fn build(&self) -> CliResult<GroupAction> {
        let tol = self.tol.unwrap_or(group::DEFAULT_TOL);
        match self.kind.as_str() {
            "cyclic" => Ok(GroupAction::cyclic_shift(self.dim)?),
            "sign_flip" => Ok(GroupAction::sign_flip(self.dim)?),
            "dihedral" => Ok(GroupAction::dihedral(self.dim)?),
            "custom" => Ok(GroupAction::from_elements(self.parse_matrices()?, tol)?),
            "generated" => {
                let n_max = self.n_max.unwrap_or(group::DEFAULT_CLOSURE_CAP);
                Ok(GroupAction::close_under_product(
                    &self.parse_matrices()?,
                    n_max,
                    tol,
                )?)
            }
            other => Err(CliError::Parse(format!("unknown group type {other:?}"))),
        }
    }
}

/// Reads a dataset CSV. Rows must carry exactly `dim` doubles, after an
/// optional leading id column; without ids, points are named `p0, p1, ...`
pub fn read_dataset(path: &Path, dim: usize, has_ids: bool) -> CliResult<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let id = if has_ids {
            fields
                .next()
                .ok_or_else(|| CliError::Parse(format!("line {}: empty row", lineno + 1)))?
                .to_string()
        } else {
            format!("p{}", entries.len())
        };
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Parse(format!("line {}: bad number {f:?}", lineno + 1))
                })
            })
            .collect::<CliResult<_>>()?;
        if values.len() != dim {
            return Err(CliError::Parse(format!(
                "line {}: {} values, expected {dim}",
                lineno + 1,
                values.len()
            )));
        }
        entries.push((id, nalgebra::DVector::from_vec(values)));
    }
    Ok(Dataset::new(dim, entries)?)
}
