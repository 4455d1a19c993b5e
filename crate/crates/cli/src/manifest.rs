//! Run manifests: the fully-resolved configuration of a command, input file
//! digests, and everything `coorbit run --manifest` needs to reproduce the
//! numeric outputs byte for byte. Wall time is recorded for the log only and
//! plays no part in replay.

use std::fs;
use std::path::Path;

use coorbit_core::{LinearReduction, SelectionSet, WindowBank};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fail::{CliError, CliResult};
use crate::spec::GroupSpecFile;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestInput {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub ids: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankDump {
    pub dim: usize,
    pub windows: Vec<Vec<f64>>,
}

impl BankDump {
    pub fn from_bank(bank: &WindowBank) -> Self {
        Self {
            dim: bank.dim(),
            windows: bank
                .windows()
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
        }
    }

    pub fn to_bank(&self) -> CliResult<WindowBank> {
        let windows = self
            .windows
            .iter()
            .map(|w| DVector::from_vec(w.clone()))
            .collect();
        Ok(WindowBank::new(self.dim, windows)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionDump {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Row-major rows of the reduction matrix.
    pub matrix: Vec<Vec<f64>>,
}

impl ReductionDump {
    pub fn from_reduction(reduction: &LinearReduction) -> Self {
        let m = reduction.matrix();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            seed: reduction.seed(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn to_reduction(&self) -> CliResult<LinearReduction> {
        if self.matrix.len() != self.rows || self.matrix.iter().any(|r| r.len() != self.cols) {
            return Err(CliError::Parse("reduction matrix shape mismatch".into()));
        }
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        Ok(LinearReduction::from_matrix(
            DMatrix::from_row_slice(self.rows, self.cols, &flat),
            self.seed,
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub wall_time_ms: u64,
    pub inputs: Vec<ManifestInput>,
    pub group: GroupSpecFile,
    pub params: ManifestParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<BankDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn selection_set(&self) -> CliResult<SelectionSet> {
        let lists = self
            .selection
            .clone()
            .ok_or_else(|| CliError::Parse("manifest lacks a selection".into()))?;
        Ok(SelectionSet::new(lists)?)
    }

    /// Re-reads an input file and checks that its digest still matches.
    pub fn verify_input(&self, role: &str) -> CliResult<&ManifestInput> {
        let input = self
            .inputs
            .iter()
            .find(|i| i.role == role)
            .ok_or_else(|| CliError::Parse(format!("manifest lacks a {role} input")))?;
        let digest = file_digest(Path::new(&input.path))?;
        if digest != input.sha256 {
            return Err(CliError::Domain(format!(
                "input {} changed since the manifest was written (digest mismatch)",
                input.path
            )));
        }
        Ok(input)
    }
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
