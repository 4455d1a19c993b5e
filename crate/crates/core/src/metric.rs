//! The quotient (orbit-space) metric, orbit equivalence testing, and
//! G-invariant completion of finite datasets.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::group::GroupAction;

/// Default tolerance for orbit equivalence and point deduplication.
pub const DEFAULT_ORBIT_TOL: f64 = 1e-9;

/// A finite list of points with stable string ids. The `invariant` flag is
/// set by [`orbit_closure`] and gates the analyses that require a closed
/// dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    ids: Vec<String>,
    points: Vec<DVector<f64>>,
    invariant: bool,
}

impl Dataset {
    pub fn new(dim: usize, entries: Vec<(String, DVector<f64>)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(entries.len());
        let mut points = Vec::with_capacity(entries.len());
        for (id, point) in entries {
            if point.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: point.len(),
                });
            }
            if ids.contains(&id) {
                return Err(Error::DuplicatePointId { id });
            }
            ids.push(id);
            points.push(point);
        }
        Ok(Self {
            dim,
            ids,
            points,
            invariant: false,
        })
    }

    /// Builds a dataset with generated ids `p0, p1, ...`.
    pub fn from_points(dim: usize, points: Vec<DVector<f64>>) -> Result<Self> {
        let entries = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("p{i}"), p))
            .collect();
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn is_invariant(&self) -> bool {
        self.invariant
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DVector<f64>)> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.points.iter())
    }
}

fn max_abs_point_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// The quotient metric `d([x],[y]) = min_g ||x - U_g y||` together with a
/// minimizing element index (lowest index on ties).
///
/// Each candidate is evaluated as `||U_g^{-1} x - y||` with the sum running
/// in coordinate order, which keeps the candidate set bitwise stable when
/// `x` is replaced by another representative of its orbit on
/// signed-permutation groups.
pub fn quotient_distance(
    action: &GroupAction,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<(f64, usize)> {
    action.check_dim(x)?;
    action.check_dim(y)?;
    let d = action.dim();
    let mut buf = DVector::zeros(d);
    let mut best = f64::INFINITY;
    let mut best_g = 0usize;
    for g in 0..action.order() {
        action.apply_inverse_to(g, x, &mut buf);
        let mut dist2 = 0.0;
        for i in 0..d {
            let diff = buf[i] - y[i];
            dist2 += diff * diff;
        }
        if dist2 < best {
            best = dist2;
            best_g = g;
        }
    }
    Ok((best.sqrt(), best_g))
}

/// True when `x` and `y` lie on the same orbit within `tol * (1 + ||x||)`.
pub fn same_orbit(
    action: &GroupAction,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    let (dist, _) = quotient_distance(action, x, y)?;
    Ok(dist <= tol * (1.0 + x.norm()))
}

/// The orbit of `x` as a deduplicated point list (first representative
/// kept). On signed-permutation groups the arithmetic is exact, and the
/// orbit size must divide the group order; this is asserted there.
pub fn orbit(action: &GroupAction, x: &DVector<f64>, dedup_tol: f64) -> Result<Vec<DVector<f64>>> {
    action.check_dim(x)?;
    let mut points: Vec<DVector<f64>> = Vec::new();
    for g in 0..action.order() {
        let candidate = action.apply(g, x)?;
        if !points
            .iter()
            .any(|p| max_abs_point_diff(p, &candidate) <= dedup_tol)
        {
            points.push(candidate);
        }
    }
    if action.is_signed_permutation_group() {
        assert!(
            action.order().is_multiple_of(points.len()),
            "orbit size must divide the group order"
        );
    }
    Ok(points)
}

/// The union of the orbits of every dataset point, deduplicated. Input
/// points keep their ids; generated points get `{parent_id}#g{index}`.
/// Idempotent: closing an already-invariant dataset returns the same point
/// set with the same ids.
pub fn orbit_closure(action: &GroupAction, dataset: &Dataset, dedup_tol: f64) -> Result<Dataset> {
    if dataset.dim() != action.dim() {
        return Err(Error::DimensionMismatch {
            expected: action.dim(),
            got: dataset.dim(),
        });
    }
    let mut ids: Vec<String> = dataset.ids.clone();
    let mut points: Vec<DVector<f64>> = dataset.points.clone();
    for parent in 0..dataset.len() {
        for g in 1..action.order() {
            let candidate = action.apply(g, &dataset.points[parent])?;
            if !points
                .iter()
                .any(|p| max_abs_point_diff(p, &candidate) <= dedup_tol)
            {
                ids.push(format!("{}#g{g}", dataset.ids[parent]));
                points.push(candidate);
            }
        }
    }
    Ok(Dataset {
        dim: dataset.dim,
        ids,
        points,
        invariant: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupAction;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn gaussian(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn quotient_distance_examples() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let x = dv(&[1.0, 0.0]);
        assert_eq!(quotient_distance(&flip, &x, &x).unwrap(), (0.0, 0));

        let (dist, g) = quotient_distance(&flip, &x, &dv(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(dist, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_eq!(g, 0, "ties resolve to the lowest element index");

        let (dist, g) = quotient_distance(&flip, &x, &dv(&[-1.0, 0.0])).unwrap();
        assert_eq!((dist, g), (0.0, 1));
    }

    #[test]
    fn same_orbit_behaviour() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let x = dv(&[1.0, 0.0]);
        for g in 0..flip.order() {
            let moved = flip.apply(g, &x).unwrap();
            assert!(same_orbit(&flip, &x, &moved, DEFAULT_ORBIT_TOL).unwrap());
        }
        assert!(!same_orbit(&flip, &x, &dv(&[0.0, 1.0]), DEFAULT_ORBIT_TOL).unwrap());
        let nudged = dv(&[1.0 + 1e-12, 0.0]);
        assert!(same_orbit(&flip, &x, &nudged, DEFAULT_ORBIT_TOL).unwrap());
    }

    #[test]
    fn orbit_sizes() {
        let flip = GroupAction::sign_flip(2).unwrap();
        assert_eq!(orbit(&flip, &dv(&[0.0, 0.0]), 1e-9).unwrap().len(), 1);
        assert_eq!(orbit(&flip, &dv(&[1.0, 2.0]), 1e-9).unwrap().len(), 2);

        let cyclic = GroupAction::cyclic_shift(4).unwrap();
        assert_eq!(
            orbit(&cyclic, &dv(&[1.0, 0.0, 1.0, 0.0]), 1e-9).unwrap().len(),
            2
        );
    }

    #[test]
    fn closure_is_idempotent_and_labels_children() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let base = Dataset::new(2, vec![("a".into(), dv(&[1.0, 0.0]))]).unwrap();
        assert!(!base.is_invariant());
        let closed = orbit_closure(&flip, &base, 1e-9).unwrap();
        assert!(closed.is_invariant());
        assert_eq!(closed.len(), 2);
        assert_eq!(closed.id(0), "a");
        assert_eq!(closed.id(1), "a#g1");

        let again = orbit_closure(&flip, &closed, 1e-9).unwrap();
        assert_eq!(again.len(), closed.len());
        assert_eq!(again.ids(), closed.ids());

        let zero = Dataset::new(2, vec![("z".into(), dv(&[0.0, 0.0]))]).unwrap();
        assert_eq!(orbit_closure(&flip, &zero, 1e-9).unwrap().len(), 1);
    }

    #[test]
    fn dataset_rejects_duplicates_and_bad_dims() {
        assert!(matches!(
            Dataset::new(
                2,
                vec![("a".into(), dv(&[1.0, 0.0])), ("a".into(), dv(&[0.0, 1.0]))]
            ),
            Err(Error::DuplicatePointId { .. })
        ));
        assert!(matches!(
            Dataset::new(2, vec![("a".into(), dv(&[1.0, 0.0, 0.0]))]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for action in [
            GroupAction::cyclic_shift(5).unwrap(),
            GroupAction::dihedral(4).unwrap(),
            GroupAction::sign_flip(3).unwrap(),
        ] {
            let d = action.dim();
            for _ in 0..200 {
                let x = gaussian(d, &mut rng);
                let y = gaussian(d, &mut rng);
                let z = gaussian(d, &mut rng);
                let dxy = quotient_distance(&action, &x, &y).unwrap().0;
                let dyx = quotient_distance(&action, &y, &x).unwrap().0;
                let dxz = quotient_distance(&action, &x, &z).unwrap().0;
                let dyz = quotient_distance(&action, &y, &z).unwrap().0;
                assert!((dxy - dyx).abs() <= 1e-12 * (1.0 + dxy));
                assert!(dxz <= dxy + dyz + 1e-9);
                assert!(dxy <= (&x - &y).norm());
            }
        }
    }

    #[test]
    fn metric_is_exactly_invariant_on_permutation_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for action in [
            GroupAction::cyclic_shift(6).unwrap(),
            GroupAction::dihedral(5).unwrap(),
        ] {
            let d = action.dim();
            for _ in 0..30 {
                let x = gaussian(d, &mut rng);
                let y = gaussian(d, &mut rng);
                let base = quotient_distance(&action, &x, &y).unwrap().0;
                for g in 0..action.order() {
                    let moved = action.apply(g, &x).unwrap();
                    let dist = quotient_distance(&action, &moved, &y).unwrap().0;
                    assert_eq!(dist, base, "bitwise invariance under element {g}");
                }
            }
        }
    }

    #[test]
    fn zero_distance_iff_same_orbit() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let action = GroupAction::dihedral(4).unwrap();
        for _ in 0..40 {
            let x = gaussian(4, &mut rng);
            for g in 0..action.order() {
                let moved = action.apply(g, &x).unwrap();
                let (dist, _) = quotient_distance(&action, &x, &moved).unwrap();
                assert!(dist <= 1e-12 * (1.0 + x.norm()));
                assert!(same_orbit(&action, &x, &moved, DEFAULT_ORBIT_TOL).unwrap());
            }
            let y = gaussian(4, &mut rng);
            let (dist, _) = quotient_distance(&action, &x, &y).unwrap();
            let equivalent = same_orbit(&action, &x, &y, DEFAULT_ORBIT_TOL).unwrap();
            assert_eq!(equivalent, dist <= DEFAULT_ORBIT_TOL * (1.0 + x.norm()));
        }
    }
}
