//! Sorted coorbit vectors, selected coordinates, the bank map and the
//! max-filter special case.
//!
//! The coorbit of a point `x` against a window `w` is the vector of inner
//! products `<U_g w, x>` over all group elements, sorted in non-increasing
//! order. Coorbit values are computed as `<w, U_g^{-1} x>` with the sum
//! running over the window's own coordinates: replacing `x` by `U_h x`
//! then only relabels which group element produces which value, so on
//! signed-permutation groups the sorted coorbit is invariant *bitwise*,
//! not merely up to rounding.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::group::{ElementKind, GroupAction};

/// An ordered bank of `p` nonzero window vectors, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBank {
    dim: usize,
    windows: Vec<DVector<f64>>,
}

impl WindowBank {
    pub fn new(dim: usize, windows: Vec<DVector<f64>>) -> Result<Self> {
        for (index, w) in windows.iter().enumerate() {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                });
            }
            if w.iter().all(|v| *v == 0.0) {
                return Err(Error::ZeroWindow { index });
            }
        }
        Ok(Self { dim, windows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of windows `p`.
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window(&self, i: usize) -> &DVector<f64> {
        &self.windows[i]
    }

    pub fn windows(&self) -> &[DVector<f64>] {
        &self.windows
    }
}

/// Per-window lists of coorbit ranks (1-based into the sorted coorbit),
/// stored strictly increasing. `m` is the total number of selected entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    per_window: Vec<Vec<usize>>,
    m: usize,
}

impl SelectionSet {
    /// Builds a selection from per-window rank lists. Lists are sorted;
    /// empty lists, rank 0 and duplicate ranks are rejected. Upper bounds
    /// against the group order are checked where the selection is used.
    pub fn new(per_window: Vec<Vec<usize>>) -> Result<Self> {
        let mut sorted = per_window;
        for (window, list) in sorted.iter_mut().enumerate() {
            if list.is_empty() {
                return Err(Error::EmptySelection { window });
            }
            list.sort_unstable();
            for (k, &rank) in list.iter().enumerate() {
                if rank == 0 || (k > 0 && list[k - 1] == rank) {
                    return Err(Error::InvalidSelectionRank { window, rank });
                }
            }
        }
        let m = sorted.iter().map(Vec::len).sum();
        Ok(Self {
            per_window: sorted,
            m,
        })
    }

    /// The max-filter selection: rank 1 for each of `p` windows.
    pub fn singletons(p: usize) -> Self {
        Self {
            per_window: vec![vec![1]; p],
            m: p,
        }
    }

    /// Number of rank lists (one per window).
    pub fn len(&self) -> usize {
        self.per_window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_window.is_empty()
    }

    pub fn list(&self, i: usize) -> &[usize] {
        &self.per_window[i]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.per_window
    }

    /// Total number of selected entries.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_rank(&self) -> usize {
        self.per_window
            .iter()
            .map(|l| *l.last().unwrap())
            .max()
            .unwrap_or(0)
    }
}

/// A full sorted coorbit with optional provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CoorbitVector {
    /// Non-increasing values, one per group element.
    pub values: DVector<f64>,
    /// `(window index, point id)` when the caller wants to track origin.
    pub provenance: Option<(usize, String)>,
}

/// Multiset-preserving non-increasing sort, stable on ties.
pub fn sort_descending(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

enum WindowEval {
    /// Every element is a signed permutation: evaluate through the listed
    /// inverse's gather so each value sums `w[i] * sign * x[src]` in window
    /// order. This is the bitwise-invariant path.
    Signed,
    /// Dense orbit rows `(U_g w)^T`, one mat-vec per evaluation.
    Dense { rows: DMatrix<f64> },
}

/// Precomputed per-(action, bank) evaluation state. Build once and reuse:
/// evaluation is then one gather-or-matvec plus one sort per window.
pub struct CoorbitEvaluator<'a> {
    action: &'a GroupAction,
    bank: &'a WindowBank,
    windows: Vec<WindowEval>,
    /// Flattened inverse gathers, entry `g * d + i`; only on the signed path.
    inv_source: Vec<u32>,
    inv_signs: Vec<f64>,
}

impl<'a> CoorbitEvaluator<'a> {
    pub fn new(action: &'a GroupAction, bank: &'a WindowBank) -> Result<Self> {
        if bank.dim() != action.dim() {
            return Err(Error::DimensionMismatch {
                expected: action.dim(),
                got: bank.dim(),
            });
        }
        let d = action.dim();
        let n = action.order();
        let signed = action.is_signed_permutation_group();
        let (mut inv_source, mut inv_signs) = (Vec::new(), Vec::new());
        if signed {
            inv_source.reserve(n * d);
            inv_signs.reserve(n * d);
            for g in 0..n {
                let k = action.inverse_index(g).expect("inverse listed");
                match action.kind(k) {
                    ElementKind::SignedPermutation { source, signs } => {
                        inv_source.extend(source.iter().map(|&s| s as u32));
                        inv_signs.extend_from_slice(signs);
                    }
                    ElementKind::Generic => unreachable!("signed group"),
                }
            }
        }
        let windows = bank
            .windows()
            .iter()
            .map(|w| {
                if signed {
                    WindowEval::Signed
                } else {
                    let mut rows = DMatrix::zeros(n, d);
                    let mut orbit = DVector::zeros(d);
                    for g in 0..n {
                        action.apply_to(g, w, &mut orbit);
                        rows.row_mut(g).copy_from(&orbit.transpose());
                    }
                    WindowEval::Dense { rows }
                }
            })
            .collect();
        Ok(Self {
            action,
            bank,
            windows,
            inv_source,
            inv_signs,
        })
    }

    pub fn action(&self) -> &GroupAction {
        self.action
    }

    pub fn bank(&self) -> &WindowBank {
        self.bank
    }

    fn raw_values(&self, window: usize, x: &DVector<f64>, out: &mut Vec<f64>) {
        let d = self.action.dim();
        let n = self.action.order();
        out.clear();
        match &self.windows[window] {
            WindowEval::Signed => {
                let w = self.bank.window(window);
                for g in 0..n {
                    let base = g * d;
                    let mut acc = 0.0;
                    for i in 0..d {
                        acc += w[i]
                            * (self.inv_signs[base + i]
                                * x[self.inv_source[base + i] as usize]);
                    }
                    out.push(acc);
                }
            }
            WindowEval::Dense { rows } => {
                for g in 0..n {
                    out.push(rows.row(g).dot(&x.transpose()));
                }
            }
        }
    }

    /// The full sorted coorbit of `x` against window `window`.
    pub fn full_sorted(&self, window: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.action.check_dim(x)?;
        let mut values = Vec::with_capacity(self.action.order());
        self.raw_values(window, x, &mut values);
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(DVector::from_vec(values))
    }

    /// Validates a selection against this bank and group order.
    pub fn check_selection(&self, sel: &SelectionSet) -> Result<()> {
        if sel.len() != self.bank.len() {
            return Err(Error::SelectionShapeMismatch {
                expected: self.bank.len(),
                got: sel.len(),
            });
        }
        let n = self.action.order();
        for list in sel.lists() {
            for &rank in list {
                if rank > n {
                    return Err(Error::RankOutOfRange { rank, order: n });
                }
            }
        }
        Ok(())
    }

    /// The selected coorbit entries of `x`, concatenated window by window.
    /// Each block is non-increasing because ranks are stored ascending and
    /// the source vector is sorted; the definition's inner re-sort is a
    /// no-op here and is asserted rather than recomputed.
    pub fn map(&self, sel: &SelectionSet, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.action.check_dim(x)?;
        self.check_selection(sel)?;
        let mut out = Vec::with_capacity(sel.m());
        let mut values = Vec::with_capacity(self.action.order());
        for (window, list) in sel.lists().iter().enumerate() {
            self.raw_values(window, x, &mut values);
            values.sort_by(|a, b| b.total_cmp(a));
            let start = out.len();
            for &rank in list {
                out.push(values[rank - 1]);
            }
            debug_assert!(
                out[start..].windows(2).all(|w| w[0] >= w[1]),
                "selected block must already be sorted"
            );
        }
        Ok(DVector::from_vec(out))
    }

    /// The max filter: per window, the largest coorbit value.
    pub fn max_filter(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.action.check_dim(x)?;
        let mut out = Vec::with_capacity(self.bank.len());
        let mut values = Vec::with_capacity(self.action.order());
        for window in 0..self.bank.len() {
            self.raw_values(window, x, &mut values);
            out.push(values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        Ok(DVector::from_vec(out))
    }
}

/// The sorted coorbit of `x` against a single window.
///
/// For repeated evaluation build a [`CoorbitEvaluator`] once instead.
pub fn full_coorbit(
    action: &GroupAction,
    w: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<CoorbitVector> {
    let bank = WindowBank::new(action.dim(), vec![w.clone()])?;
    let eval = CoorbitEvaluator::new(action, &bank)?;
    Ok(CoorbitVector {
        values: eval.full_sorted(0, x)?,
        provenance: None,
    })
}

/// The `j`-th (1-based) coordinate of the sorted coorbit.
pub fn coorbit_entry(
    action: &GroupAction,
    w: &DVector<f64>,
    j: usize,
    x: &DVector<f64>,
) -> Result<f64> {
    if j == 0 || j > action.order() {
        return Err(Error::RankOutOfRange {
            rank: j,
            order: action.order(),
        });
    }
    Ok(full_coorbit(action, w, x)?.values[j - 1])
}

/// The selected-coorbit map of `x` for a whole bank: per window, the ranks
/// in `sel` of the sorted coorbit, concatenated into a vector of length
/// `sel.m()`.
pub fn coorbit_map(
    action: &GroupAction,
    bank: &WindowBank,
    sel: &SelectionSet,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    CoorbitEvaluator::new(action, bank)?.map(sel, x)
}

/// The max-filter map: per window, the largest coorbit value.
pub fn max_filter(
    action: &GroupAction,
    bank: &WindowBank,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    CoorbitEvaluator::new(action, bank)?.max_filter(x)
}
