//! Seeded window and reduction sampling, and the end-to-end embedding: a
//! linear map applied after the selected-coorbit map.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coorbit::{CoorbitEvaluator, SelectionSet, WindowBank};
use crate::error::{Error, Result};
use crate::group::GroupAction;
use crate::metric::Dataset;

/// Derives an independent stream seed from a master seed. Fixed splitting
/// rule (splitmix64), so parallel and serial runs agree.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `p` independent standard Gaussian windows from a seeded generator.
/// Exact-zero draws (practically impossible) are redrawn.
pub fn sample_windows(d: usize, p: usize, seed: u64) -> WindowBank {
    assert!(d >= 1, "window dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut windows = Vec::with_capacity(p);
    while windows.len() < p {
        let w = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        if w.iter().any(|v| *v != 0.0) {
            windows.push(w);
        }
    }
    WindowBank::new(d, windows).expect("sampled windows are nonzero")
}

/// An explicit linear map `R^m -> R^{2d}` with seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReduction {
    matrix: DMatrix<f64>,
    seed: u64,
}

impl LinearReduction {
    /// Wraps an explicit matrix (rows = output dimension, columns = input
    /// dimension).
    pub fn from_matrix(matrix: DMatrix<f64>, seed: u64) -> Self {
        Self { matrix, seed }
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: v.len(),
            });
        }
        Ok(&self.matrix * v)
    }
}

/// A `(2d) x m` matrix of i.i.d. Gaussian entries scaled by `1/sqrt(m)`,
/// deterministic per seed. When `m <= 2d` the map is injective with
/// probability 1; full column rank is asserted.
pub fn sample_reduction(m: usize, d: usize, seed: u64) -> LinearReduction {
    assert!(m >= 1, "reduction input dimension must be positive");
    assert!(d >= 2, "reduction output dimension needs d >= 2");
    let rows = 2 * d;
    let scale = 1.0 / (m as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = DMatrix::zeros(rows, m);
    for i in 0..rows {
        for j in 0..m {
            matrix[(i, j)] = scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    if m <= rows {
        let singular = matrix.clone().svd(false, false).singular_values;
        let max = singular.iter().fold(0.0f64, |acc, s| acc.max(*s));
        let rank = singular.iter().filter(|&&s| s > 1e-10 * max).count();
        assert_eq!(rank, m, "a Gaussian reduction with m <= 2d must be injective");
    }
    LinearReduction::from_matrix(matrix, seed)
}

/// Everything the embedding needs besides the group: the window bank, the
/// selection, an optional linear reduction (identity pass-through when
/// absent) and the master seed the parts were derived from.
#[derive(Debug, Clone)]
pub struct EmbeddingConfig {
    pub bank: WindowBank,
    pub selection: SelectionSet,
    pub reduction: Option<LinearReduction>,
    pub seed: u64,
}

impl EmbeddingConfig {
    /// Dimension of embedded points: the reduction output, or `m` when the
    /// reduction is the identity pass-through.
    pub fn out_dim(&self) -> usize {
        self.reduction
            .as_ref()
            .map_or(self.selection.m(), LinearReduction::out_dim)
    }

    pub fn validate(&self, action: &GroupAction) -> Result<()> {
        if self.bank.dim() != action.dim() {
            return Err(Error::ConfigInconsistent {
                reason: format!(
                    "bank dimension {} does not match action dimension {}",
                    self.bank.dim(),
                    action.dim()
                ),
            });
        }
        if self.selection.len() != self.bank.len() {
            return Err(Error::ConfigInconsistent {
                reason: format!(
                    "selection has {} lists for {} windows",
                    self.selection.len(),
                    self.bank.len()
                ),
            });
        }
        if self.selection.max_rank() > action.order() {
            return Err(Error::ConfigInconsistent {
                reason: format!(
                    "selection rank {} exceeds the group order {}",
                    self.selection.max_rank(),
                    action.order()
                ),
            });
        }
        if let Some(reduction) = &self.reduction {
            if reduction.in_dim() != self.selection.m() {
                return Err(Error::ConfigInconsistent {
                    reason: format!(
                        "reduction input dimension {} does not match selection size {}",
                        reduction.in_dim(),
                        self.selection.m()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Embeds one point: the linear reduction applied to the selected-coorbit
/// map (or that map unchanged when no reduction is configured).
pub fn embed_point(
    config: &EmbeddingConfig,
    action: &GroupAction,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    config.validate(action)?;
    let eval = CoorbitEvaluator::new(action, &config.bank)?;
    embed_with(config, &eval, x)
}

fn embed_with(
    config: &EmbeddingConfig,
    eval: &CoorbitEvaluator<'_>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let features = eval.map(&config.selection, x)?;
    match &config.reduction {
        Some(reduction) => reduction.apply(&features),
        None => Ok(features),
    }
}

/// Embeds a whole dataset, one row per point, input order preserved.
pub fn embed_dataset(
    config: &EmbeddingConfig,
    action: &GroupAction,
    dataset: &Dataset,
) -> Result<DMatrix<f64>> {
    config.validate(action)?;
    if dataset.dim() != action.dim() {
        return Err(Error::DimensionMismatch {
            expected: action.dim(),
            got: dataset.dim(),
        });
    }
    let eval = CoorbitEvaluator::new(action, &config.bank)?;
    let rows: Vec<DVector<f64>> = dataset
        .points()
        .par_iter()
        .map(|x| embed_with(config, &eval, x))
        .collect::<Result<_>>()?;
    let mut out = DMatrix::zeros(dataset.len(), config.out_dim());
    for (i, row) in rows.iter().enumerate() {
        out.row_mut(i).copy_from(&row.transpose());
    }
    Ok(out)
}
