//! Finite groups of orthogonal matrices acting on `R^d`.
//!
//! A [`GroupAction`] is a verified-or-verifiable list of `d x d` orthogonal
//! matrices, identity first, closed under products. Elements whose entries
//! are exactly `0.0` or `±1.0` with one nonzero per row and column are tagged
//! as signed permutations and applied through an `O(d)` gather instead of a
//! dense multiply. The gather path is also what makes downstream coorbit and
//! quotient-metric computations bitwise invariant under the action: for
//! signed permutations the same floating-point products are summed in the
//! same order no matter which orbit representative is evaluated.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default matrix-equality tolerance used by the built-in constructors.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default cap on the order of a generated closure.
pub const DEFAULT_CLOSURE_CAP: usize = 10_000;

/// Bucket pitch of the rounding-grid hash used for element deduplication.
const HASH_PITCH: f64 = 1e-6;

/// Per-element fast-apply tag.
///
/// `SignedPermutation` encodes `(U x)[i] = signs[i] * x[source[i]]`. Only
/// matrices whose entries are exactly `0.0` or `±1.0` are tagged, so the
/// gather agrees with the dense multiply to the last bit.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Generic,
    SignedPermutation { source: Vec<usize>, signs: Vec<f64> },
}

/// A finite set of orthogonal matrices together with fast-apply tags,
/// labels, listed inverses and the tolerance its invariants are held at.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct GroupAction {
    dim: usize,
    elements: Vec<DMatrix<f64>>,
    kinds: Vec<ElementKind>,
    labels: Vec<String>,
    inverses: Vec<Option<usize>>,
    tol: f64,
}

/// Outcome of one group-law check.
#[derive(Debug, Clone)]
pub struct GroupCheck {
    pub name: &'static str,
    /// Worst residual observed for this check. For `duplicates` this is the
    /// minimum pairwise element distance (which must exceed the tolerance).
    pub residual: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

/// Report produced by [`GroupAction::verify`]. Failures are entries, not
/// errors.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub dim: usize,
    pub order: usize,
    pub tol: f64,
    pub checks: Vec<GroupCheck>,
    pub passed: bool,
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn orthogonality_residual(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let gram = m.transpose() * m;
    max_abs_diff(&gram, &DMatrix::identity(d, d))
}

fn identity_residual(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    max_abs_diff(m, &DMatrix::identity(d, d))
}

/// Tags matrices whose entries are exactly `0.0` or `±1.0` with a single
/// nonzero per row and column.
fn detect_signed_permutation(m: &DMatrix<f64>) -> Option<(Vec<usize>, Vec<f64>)> {
    let d = m.nrows();
    let mut source = vec![0usize; d];
    let mut signs = vec![0.0f64; d];
    let mut column_used = vec![false; d];
    for i in 0..d {
        let mut hit: Option<(usize, f64)> = None;
        for j in 0..d {
            let v = m[(i, j)];
            if v == 0.0 {
                continue;
            }
            if (v == 1.0 || v == -1.0) && hit.is_none() {
                hit = Some((j, v));
            } else {
                return None;
            }
        }
        let (j, v) = hit?;
        if column_used[j] {
            return None;
        }
        column_used[j] = true;
        source[i] = j;
        signs[i] = v;
    }
    Some((source, signs))
}

/// Rounding-grid hash over matrix entries with an exact-distance confirm.
/// Lookups that miss the bucket fall back to a linear scan, so near-boundary
/// quantization can never produce a spurious "new element".
struct ElementTable {
    tol: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl ElementTable {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            buckets: HashMap::new(),
        }
    }

    fn key(m: &DMatrix<f64>) -> Vec<i64> {
        m.iter().map(|v| (v / HASH_PITCH).round() as i64).collect()
    }

    fn find(&self, m: &DMatrix<f64>, elements: &[DMatrix<f64>]) -> Option<usize> {
        if let Some(bucket) = self.buckets.get(&Self::key(m)) {
            for &idx in bucket {
                if max_abs_diff(m, &elements[idx]) <= self.tol {
                    return Some(idx);
                }
            }
        }
        elements
            .iter()
            .position(|e| max_abs_diff(m, e) <= self.tol)
    }

    fn insert(&mut self, idx: usize, m: &DMatrix<f64>) {
        self.buckets.entry(Self::key(m)).or_default().push(idx);
    }
}

impl GroupAction {
    /// Wraps an explicit element list. Group laws are *not* enforced here;
    /// call [`GroupAction::verify`] to check them. The identity is moved to
    /// index 0 when present.
    pub fn from_elements(elements: Vec<DMatrix<f64>>, tol: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::ConfigInconsistent {
                reason: "empty element list".into(),
            });
        }
        let dim = elements[0].nrows();
        if dim < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: dim });
        }
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.nrows().max(e.ncols()),
                });
            }
        }
        let mut elements = elements;
        let best = (0..elements.len())
            .min_by(|&a, &b| {
                identity_residual(&elements[a])
                    .total_cmp(&identity_residual(&elements[b]))
            })
            .unwrap();
        if best != 0 && identity_residual(&elements[best]) <= tol {
            elements.swap(0, best);
        }
        let labels = (0..elements.len())
            .map(|i| if i == 0 { "id".into() } else { format!("g{i}") })
            .collect();
        Ok(Self::assemble(dim, elements, labels, tol))
    }

    /// The `N = d` circulant coordinate shifts; shift-by-1 maps coordinate
    /// `i` to `i + 1 (mod d)`.
    pub fn cyclic_shift(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: d });
        }
        let mut elements = Vec::with_capacity(d);
        let mut labels = Vec::with_capacity(d);
        for k in 0..d {
            elements.push(DMatrix::from_fn(d, d, |i, j| {
                if (j + k) % d == i {
                    1.0
                } else {
                    0.0
                }
            }));
            labels.push(if k == 0 {
                "id".into()
            } else {
                format!("shift{k}")
            });
        }
        Ok(Self::assemble(d, elements, labels, DEFAULT_TOL))
    }

    /// The reflection action `{I, -I}`.
    pub fn sign_flip(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: d });
        }
        let elements = vec![
            DMatrix::identity(d, d),
            DMatrix::from_diagonal(&DVector::from_element(d, -1.0)),
        ];
        let labels = vec!["id".into(), "flip".into()];
        Ok(Self::assemble(d, elements, labels, DEFAULT_TOL))
    }

    /// The order-`2d` group generated by the coordinate cycle and the
    /// coordinate reversal `x_i -> x_{d-1-i}`. Rejects `d = 2`, where the
    /// two generators coincide and the group collapses.
    pub fn dihedral(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::DimensionTooSmall { min: 3, got: d });
        }
        let cycle = Self::cyclic_shift(d)?;
        let reversal =
            DMatrix::from_fn(d, d, |i, j| if j == d - 1 - i { 1.0 } else { 0.0 });
        let mut elements = Vec::with_capacity(2 * d);
        let mut labels = Vec::with_capacity(2 * d);
        for k in 0..d {
            elements.push(cycle.elements[k].clone());
            labels.push(if k == 0 {
                "id".into()
            } else {
                format!("rot{k}")
            });
        }
        for k in 0..d {
            elements.push(&cycle.elements[k] * &reversal);
            labels.push(if k == 0 {
                "rev".into()
            } else {
                format!("rot{k}rev")
            });
        }
        Ok(Self::assemble(d, elements, labels, DEFAULT_TOL))
    }

    /// Breadth-first closure of a generator set under multiplication.
    ///
    /// Elements are deduplicated with a rounding-grid hash confirmed by exact
    /// distance; the identity is inserted at index 0. Errors if a generator
    /// is not orthogonal within `tol` or if the closure would exceed `n_max`
    /// elements (the signature of an infinite or too-large group).
    pub fn close_under_product(
        generators: &[DMatrix<f64>],
        n_max: usize,
        tol: f64,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::ConfigInconsistent {
                reason: "empty generator list".into(),
            });
        }
        let dim = generators[0].nrows();
        if dim < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: dim });
        }
        if n_max < 1 {
            return Err(Error::ConfigInconsistent {
                reason: "n_max must be at least 1".into(),
            });
        }
        for (index, g) in generators.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.nrows().max(g.ncols()),
                });
            }
            let residual = orthogonality_residual(g);
            if residual > tol {
                return Err(Error::GeneratorNotOrthogonal { index, residual });
            }
        }

        let mut elements = vec![DMatrix::identity(dim, dim)];
        let mut table = ElementTable::new(tol);
        table.insert(0, &elements[0]);
        let mut cursor = 0usize;
        while cursor < elements.len() {
            for gen in generators {
                let product = &elements[cursor] * gen;
                if table.find(&product, &elements).is_none() {
                    if elements.len() >= n_max {
                        return Err(Error::ClosureExceedsCap { cap: n_max });
                    }
                    table.insert(elements.len(), &product);
                    elements.push(product);
                }
            }
            cursor += 1;
        }

        let labels = (0..elements.len())
            .map(|i| if i == 0 { "id".into() } else { format!("g{i}") })
            .collect();
        Ok(Self::assemble(dim, elements, labels, tol))
    }

    fn assemble(
        dim: usize,
        elements: Vec<DMatrix<f64>>,
        labels: Vec<String>,
        tol: f64,
    ) -> Self {
        let kinds: Vec<ElementKind> = elements
            .iter()
            .map(|e| match detect_signed_permutation(e) {
                Some((source, signs)) => ElementKind::SignedPermutation { source, signs },
                None => ElementKind::Generic,
            })
            .collect();
        let mut table = ElementTable::new(tol);
        for (i, e) in elements.iter().enumerate() {
            table.insert(i, e);
        }
        let inverses = elements
            .iter()
            .map(|e| table.find(&e.transpose(), &elements))
            .collect();
        Self {
            dim,
            elements,
            kinds,
            labels,
            inverses,
            tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Group order `N`.
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn element(&self, g: usize) -> &DMatrix<f64> {
        &self.elements[g]
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    pub fn kind(&self, g: usize) -> &ElementKind {
        &self.kinds[g]
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    /// Index of the listed inverse of `g`, when one is listed.
    pub fn inverse_index(&self, g: usize) -> Option<usize> {
        self.inverses.get(g).copied().flatten()
    }

    /// Index of the element equal to `U_g U_h` within tolerance, when listed.
    ///
    /// # Panics
    /// Panics if `g` or `h` is out of range.
    pub fn compose_index(&self, g: usize, h: usize) -> Option<usize> {
        let product = &self.elements[g] * &self.elements[h];
        let table = self.rebuild_table();
        table.find(&product, &self.elements)
    }

    fn rebuild_table(&self) -> ElementTable {
        let mut table = ElementTable::new(self.tol);
        for (i, e) in self.elements.iter().enumerate() {
            table.insert(i, e);
        }
        table
    }

    /// True when every element is a signed permutation and has a listed
    /// inverse; this is the precondition for the exact evaluation paths.
    pub fn is_signed_permutation_group(&self) -> bool {
        self.kinds
            .iter()
            .all(|k| matches!(k, ElementKind::SignedPermutation { .. }))
            && self.inverses.iter().all(|i| i.is_some())
    }

    /// Applies `U_g` to `x`.
    pub fn apply(&self, g: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_index(g)?;
        self.check_dim(x)?;
        let mut out = DVector::zeros(self.dim);
        self.apply_to(g, x, &mut out);
        Ok(out)
    }

    /// Applies `U_g^{-1} = U_g^T` to `x`.
    pub fn apply_inverse(&self, g: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_index(g)?;
        self.check_dim(x)?;
        let mut out = DVector::zeros(self.dim);
        self.apply_inverse_to(g, x, &mut out);
        Ok(out)
    }

    pub(crate) fn check_index(&self, g: usize) -> Result<()> {
        if g >= self.elements.len() {
            return Err(Error::IndexOutOfRange {
                index: g,
                order: self.elements.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn apply_to(&self, g: usize, x: &DVector<f64>, out: &mut DVector<f64>) {
        match &self.kinds[g] {
            ElementKind::SignedPermutation { source, signs } => {
                for i in 0..self.dim {
                    out[i] = signs[i] * x[source[i]];
                }
            }
            ElementKind::Generic => out.gemv(1.0, &self.elements[g], x, 0.0),
        }
    }

    pub(crate) fn apply_inverse_to(&self, g: usize, x: &DVector<f64>, out: &mut DVector<f64>) {
        if let Some(k) = self.inverses[g] {
            if let ElementKind::SignedPermutation { source, signs } = &self.kinds[k] {
                for i in 0..self.dim {
                    out[i] = signs[i] * x[source[i]];
                }
                return;
            }
        }
        match &self.kinds[g] {
            ElementKind::SignedPermutation { source, signs } => {
                // transpose of a signed permutation scatters instead of gathering
                for i in 0..self.dim {
                    out[source[i]] = signs[i] * x[i];
                }
            }
            ElementKind::Generic => out.gemv_tr(1.0, &self.elements[g], x, 0.0),
        }
    }

    /// Runs every group-law check and reports per-check residuals; failures
    /// are report entries, never errors.
    pub fn verify(&self) -> VerificationReport {
        let n = self.elements.len();
        let tol = self.tol;
        let mut checks = Vec::with_capacity(5);

        let (ortho_res, ortho_worst) = (0..n)
            .map(|g| (orthogonality_residual(&self.elements[g]), g))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        checks.push(GroupCheck {
            name: "orthogonality",
            residual: ortho_res,
            passed: ortho_res <= tol,
            detail: (ortho_res > tol).then(|| format!("worst element {}", self.labels[ortho_worst])),
        });

        let id_res = identity_residual(&self.elements[0]);
        checks.push(GroupCheck {
            name: "identity",
            residual: id_res,
            passed: id_res <= tol,
            detail: None,
        });

        let table = self.rebuild_table();
        let mut closure_res = 0.0f64;
        let mut closure_detail = None;
        for g in 0..n {
            for h in 0..n {
                let product = &self.elements[g] * &self.elements[h];
                let residual = match table.find(&product, &self.elements) {
                    Some(k) => max_abs_diff(&product, &self.elements[k]),
                    None => self
                        .elements
                        .iter()
                        .map(|e| max_abs_diff(&product, e))
                        .fold(f64::INFINITY, f64::min),
                };
                if residual > closure_res {
                    closure_res = residual;
                    closure_detail = Some(format!(
                        "product {} * {} is not listed",
                        self.labels[g], self.labels[h]
                    ));
                }
            }
        }
        checks.push(GroupCheck {
            name: "closure",
            residual: closure_res,
            passed: closure_res <= tol,
            detail: if closure_res > tol { closure_detail } else { None },
        });

        let identity = DMatrix::identity(self.dim, self.dim);
        let mut inverse_res = 0.0f64;
        let mut inverse_detail = None;
        for g in 0..n {
            let residual = match table.find(&self.elements[g].transpose(), &self.elements) {
                Some(k) => max_abs_diff(&(&self.elements[g] * &self.elements[k]), &identity),
                None => (0..n)
                    .map(|k| max_abs_diff(&(&self.elements[g] * &self.elements[k]), &identity))
                    .fold(f64::INFINITY, f64::min),
            };
            if residual > inverse_res {
                inverse_res = residual;
                inverse_detail = Some(format!("no listed inverse for {}", self.labels[g]));
            }
        }
        checks.push(GroupCheck {
            name: "inverses",
            residual: inverse_res,
            passed: inverse_res <= tol,
            detail: if inverse_res > tol { inverse_detail } else { None },
        });

        let mut min_dist = f64::INFINITY;
        let mut dup_detail = None;
        for g in 0..n {
            for h in (g + 1)..n {
                let dist = max_abs_diff(&self.elements[g], &self.elements[h]);
                if dist < min_dist {
                    min_dist = dist;
                    dup_detail = Some(format!(
                        "elements {} and {} coincide",
                        self.labels[g], self.labels[h]
                    ));
                }
            }
        }
        checks.push(GroupCheck {
            name: "duplicates",
            residual: min_dist,
            passed: min_dist > tol,
            detail: if min_dist <= tol { dup_detail } else { None },
        });

        let passed = checks.iter().all(|c| c.passed);
        VerificationReport {
            dim: self.dim,
            order: n,
            tol,
            checks,
            passed,
        }
    }
}
