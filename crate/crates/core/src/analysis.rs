//! Bi-Lipschitz constants on finite invariant sets, separation checking,
//! spectral profiles with minimal window counts, selection planning, and
//! adversarial collision search.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coorbit::{CoorbitEvaluator, SelectionSet, WindowBank};
use crate::embed::derive_seed;
use crate::error::{Error, Result};
use crate::group::GroupAction;
use crate::metric::{quotient_distance, same_orbit, Dataset, DEFAULT_ORBIT_TOL};

/// Relative singular-value threshold for numerical rank. Orthogonal-matrix
/// pencils keep an O(1) gap between zero and nonzero singular values, so
/// anything far from both works.
pub const RANK_TOL: f64 = 1e-8;

/// Restart candidates kept for coordinate-descent refinement.
const REFINE_CANDIDATES: usize = 32;

/// Coordinate-descent steps per refined candidate.
const DESCENT_STEPS: usize = 200;

/// Extremal ratios `|phi(x) - phi(y)| / d([x],[y])` over the non-equivalent
/// orbit pairs of a finite invariant dataset, with the witnesses attaining
/// them and the always-valid upper bound `||w||`.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    /// Optimal lower constant (minimum observed ratio).
    pub lower: f64,
    /// Optimal upper constant (maximum observed ratio).
    pub upper: f64,
    /// The window norm `||w||`, an upper Lipschitz bound for every rank.
    pub trivial_upper: f64,
    pub witness_lower: (String, String),
    pub witness_upper: (String, String),
    /// Number of non-equivalent orbit pairs scanned.
    pub pair_count: usize,
}

/// An orbit pair whose selected-coorbit images are closer than the
/// separation threshold.
#[derive(Debug, Clone)]
pub struct UnseparatedPair {
    pub id_a: String,
    pub id_b: String,
    pub gap: f64,
}

/// Real spectra and minimal ranks per non-identity element, their sorted
/// profile, and the minimal window count for each rich-selection depth.
#[derive(Debug, Clone)]
pub struct GammaProfile {
    pub dim: usize,
    pub order: usize,
    /// Descending sort of `min_rank` over the non-identity elements.
    pub gamma: Vec<usize>,
    pub per_element: Vec<ElementSpectrum>,
    /// `n ->` minimal window count for selections with `n` entries per rich
    /// window. `n = 1` is the singleton (max-filter) case and needs `2d`
    /// windows; for `n >= 2` the count is `2d - gamma[N - n + 1]` (1-based).
    pub min_windows: BTreeMap<usize, usize>,
}

/// Spectrum summary of one non-identity element.
#[derive(Debug, Clone)]
pub struct ElementSpectrum {
    pub index: usize,
    pub label: String,
    /// Real eigenvalues, snapped to `+1`/`-1`; empty when none exist.
    pub spectrum: Vec<f64>,
    /// `min over real eigenvalues of rank(U_g - lambda I)`; `d` when the
    /// real spectrum is empty (the pencil is then invertible for every
    /// real lambda).
    pub min_rank: usize,
}

impl GammaProfile {
    pub fn min_window_count(&self, n: usize) -> Option<usize> {
        self.min_windows.get(&n).copied()
    }
}

/// Best collision candidate found by the seeded adversarial search.
#[derive(Debug, Clone)]
pub struct CollisionReport {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// Quotient distance of the pair; at least the configured floor.
    pub orbit_distance: f64,
    /// `||Phi(x) - Phi(y)||` for the searched map.
    pub embedding_gap: f64,
    pub ratio: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Groups dataset points by orbit and returns one representative index per
/// orbit (first occurrence in dataset order).
fn orbit_representatives(action: &GroupAction, dataset: &Dataset) -> Result<Vec<usize>> {
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..dataset.len() {
        let mut matched = false;
        for &r in &reps {
            if same_orbit(action, dataset.point(r), dataset.point(i), DEFAULT_ORBIT_TOL)? {
                matched = true;
                break;
            }
        }
        if !matched {
            reps.push(i);
        }
    }
    Ok(reps)
}

/// Scans all non-equivalent orbit pairs of an invariant dataset with the
/// single-window rank-`j` coorbit map and reports the extremal
/// ratio-to-quotient-distance constants.
///
/// Ratios are constant on orbit pairs, so one representative per orbit is
/// scanned.
pub fn lipschitz_bounds(
    action: &GroupAction,
    w: &DVector<f64>,
    j: usize,
    dataset: &Dataset,
) -> Result<BoundsReport> {
    if !dataset.is_invariant() {
        return Err(Error::NotInvariantDataset);
    }
    if j == 0 || j > action.order() {
        return Err(Error::RankOutOfRange {
            rank: j,
            order: action.order(),
        });
    }
    let bank = WindowBank::new(action.dim(), vec![w.clone()])?;
    let eval = CoorbitEvaluator::new(action, &bank)?;
    let reps = orbit_representatives(action, dataset)?;
    if reps.len() < 2 {
        return Err(Error::FewerThanTwoOrbits);
    }
    let values: Vec<f64> = reps
        .iter()
        .map(|&r| Ok(eval.full_sorted(0, dataset.point(r))?[j - 1]))
        .collect::<Result<_>>()?;

    let mut pairs = Vec::with_capacity(reps.len() * (reps.len() - 1) / 2);
    for a in 0..reps.len() {
        for b in (a + 1)..reps.len() {
            pairs.push((a, b));
        }
    }
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (dist, _) =
                quotient_distance(action, dataset.point(reps[a]), dataset.point(reps[b]))?;
            Ok((values[a] - values[b]).abs() / dist)
        })
        .collect::<Result<_>>()?;

    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut witness_lower = (String::new(), String::new());
    let mut witness_upper = (String::new(), String::new());
    for (&(a, b), &ratio) in pairs.iter().zip(&ratios) {
        if ratio < lower {
            lower = ratio;
            witness_lower = (
                dataset.id(reps[a]).to_string(),
                dataset.id(reps[b]).to_string(),
            );
        }
        if ratio > upper {
            upper = ratio;
            witness_upper = (
                dataset.id(reps[a]).to_string(),
                dataset.id(reps[b]).to_string(),
            );
        }
    }
    let pair_count = pairs.len();
    Ok(BoundsReport {
        lower,
        upper,
        trivial_upper: w.norm(),
        witness_lower,
        witness_upper,
        pair_count,
    })
}

/// Lists the non-equivalent orbit pairs whose images under `point_map` are
/// within `tol * (1 + scale)` of each other, `scale` being the larger image
/// norm of the pair. An empty list means the map separates every scanned
/// orbit pair.
pub fn separation_check_with<F>(
    action: &GroupAction,
    dataset: &Dataset,
    tol: f64,
    point_map: F,
) -> Result<Vec<UnseparatedPair>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync,
{
    if !dataset.is_invariant() {
        return Err(Error::NotInvariantDataset);
    }
    let reps = orbit_representatives(action, dataset)?;
    let images: Vec<DVector<f64>> = reps
        .par_iter()
        .map(|&r| point_map(dataset.point(r)))
        .collect::<Result<_>>()?;
    let mut unseparated = Vec::new();
    for a in 0..reps.len() {
        for b in (a + 1)..reps.len() {
            let gap = (&images[a] - &images[b]).norm();
            let scale = images[a].norm().max(images[b].norm());
            if gap <= tol * (1.0 + scale) {
                unseparated.push(UnseparatedPair {
                    id_a: dataset.id(reps[a]).to_string(),
                    id_b: dataset.id(reps[b]).to_string(),
                    gap,
                });
            }
        }
    }
    Ok(unseparated)
}

/// [`separation_check_with`] for the selected-coorbit map of a bank.
pub fn separation_check(
    action: &GroupAction,
    bank: &WindowBank,
    sel: &SelectionSet,
    dataset: &Dataset,
    tol: f64,
) -> Result<Vec<UnseparatedPair>> {
    let eval = CoorbitEvaluator::new(action, bank)?;
    eval.check_selection(sel)?;
    separation_check_with(action, dataset, tol, |x| eval.map(sel, x))
}

/// Real eigenvalues of an orthogonal matrix, deduplicated and snapped to
/// `+1`/`-1`. Returns the empty list when every eigenvalue is properly
/// complex.
///
/// A real eigenvalue of an orthogonal matrix has unit modulus, so only
/// `+1` and `-1` are possible; each candidate is accepted when
/// `U - lambda I` is rank deficient. An orthogonal matrix is normal, so
/// its singular values at the shift are exactly the eigenvalue distances
/// `|lambda_k - lambda|`, which makes the rank test equivalent to the
/// imaginary-part filter of a full eigendecomposition.
pub fn real_spectrum(g: &DMatrix<f64>, tol: f64) -> Result<Vec<f64>> {
    let d = g.nrows();
    let gram = g.transpose() * g;
    let identity = DMatrix::<f64>::identity(d, d);
    let residual = gram
        .iter()
        .zip(identity.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if residual > tol {
        return Err(Error::NotOrthogonal { residual });
    }
    let mut out: Vec<f64> = Vec::new();
    for lambda in [1.0, -1.0] {
        if rank_at(g, lambda, tol) < d {
            out.push(lambda);
        }
    }
    Ok(out)
}

/// Numerical rank of `g - lambda I` from its singular values: the count of
/// `sigma > RANK_TOL * sigma_max`, with rank 0 when the matrix is zero
/// within the tolerance.
pub fn rank_at(g: &DMatrix<f64>, lambda: f64, tol: f64) -> usize {
    let d = g.nrows();
    let shifted = g - DMatrix::identity(d, d) * lambda;
    if shifted.iter().all(|v| v.abs() <= tol) {
        return 0;
    }
    let singular = shifted.svd(false, false).singular_values;
    let max = singular.iter().fold(0.0f64, |m, s| m.max(*s));
    if max <= tol {
        return 0;
    }
    singular.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Computes per-element real spectra and minimal ranks, the descending
/// profile over non-identity elements, and the minimal window count table.
pub fn gamma_profile(action: &GroupAction, tol: f64) -> Result<GammaProfile> {
    let n = action.order();
    if n < 2 {
        return Err(Error::TrivialGroup);
    }
    let d = action.dim();
    let mut per_element = Vec::with_capacity(n - 1);
    for g in 1..n {
        let element = action.element(g);
        let spectrum = real_spectrum(element, tol)?;
        let min_rank = spectrum
            .iter()
            .map(|&lambda| rank_at(element, lambda, tol))
            .min()
            .unwrap_or(d);
        per_element.push(ElementSpectrum {
            index: g,
            label: action.label(g).to_string(),
            spectrum,
            min_rank,
        });
    }
    let mut gamma: Vec<usize> = per_element.iter().map(|e| e.min_rank).collect();
    gamma.sort_unstable_by(|a, b| b.cmp(a));

    let mut min_windows = BTreeMap::new();
    min_windows.insert(1, 2 * d);
    // the descending-profile formula indexes gamma at N - n + 1 (1-based);
    // that covers n in [2, N-1], plus n = 2 when the group has order 2
    let hi = (n - 1).max(2);
    for depth in 2..=hi {
        let idx = n - depth + 1;
        if idx >= 1 && idx <= gamma.len() {
            min_windows.insert(depth, 2 * d - gamma[idx - 1]);
        }
    }
    Ok(GammaProfile {
        dim: d,
        order: n,
        gamma,
        per_element,
        min_windows,
    })
}

/// Plans the selection shape for `n` entries per rich window and `p`
/// windows: the first `2d - p` windows take ranks `1..=n`, the remaining
/// `2p - 2d` windows take rank 1, for a total of `(2d - p) n + 2p - 2d`
/// selected entries.
pub fn plan_selection(action: &GroupAction, n: usize, p: usize) -> Result<SelectionSet> {
    let order = action.order();
    let d = action.dim();
    if n < 2 || n > order.saturating_sub(1) {
        return Err(Error::EntriesOutOfRange {
            n,
            max: order.saturating_sub(1),
        });
    }
    let profile = gamma_profile(action, action.tol())?;
    let p_min = profile
        .min_window_count(n)
        .expect("depth in [2, N-1] is always tabulated");
    if p < p_min || p > 2 * d {
        return Err(Error::WindowCountOutOfRange {
            p,
            min: p_min,
            max: 2 * d,
        });
    }
    let rich = 2 * d - p;
    let mut lists = Vec::with_capacity(p);
    for _ in 0..rich {
        lists.push((1..=n).collect());
    }
    for _ in 0..(p - rich) {
        lists.push(vec![1]);
    }
    let sel = SelectionSet::new(lists)?;
    debug_assert_eq!(sel.m(), (2 * d - p) * n + 2 * p - 2 * d);
    Ok(sel)
}

struct PairObjective<'a> {
    action: &'a GroupAction,
    eval: &'a CoorbitEvaluator<'a>,
    sel: &'a SelectionSet,
    floor: f64,
}

impl PairObjective<'_> {
    /// Moves `y` (through its aligned copy) away from `x` until the pair
    /// clears the floor; gives up after a few projections.
    fn enforce_floor(&self, x: &DVector<f64>, y: &mut DVector<f64>) -> Option<f64> {
        for _ in 0..8 {
            let (dist, g) = quotient_distance(self.action, x, y).ok()?;
            if dist >= self.floor {
                return Some(dist);
            }
            let aligned = self.action.apply(g, y).ok()?;
            let gap = &aligned - x;
            let target = self.floor * (1.0 + 1e-9);
            let pushed = if dist == 0.0 {
                let mut unit = DVector::zeros(x.len());
                unit[0] = 1.0;
                x + unit * target
            } else {
                x + gap * (target / dist)
            };
            *y = self.action.apply_inverse(g, &pushed).ok()?;
        }
        None
    }

    fn ratio(&self, x: &DVector<f64>, y: &DVector<f64>) -> Option<(f64, f64, f64)> {
        let (dist, _) = quotient_distance(self.action, x, y).ok()?;
        if dist < self.floor {
            return None;
        }
        let fx = self.eval.map(self.sel, x).ok()?;
        let fy = self.eval.map(self.sel, y).ok()?;
        let gap = (&fx - &fy).norm();
        Some((gap / dist, dist, gap))
    }
}

struct Candidate {
    ratio: f64,
    index: usize,
    x: DVector<f64>,
    y: DVector<f64>,
}

/// Seeded adversarial search for the pair minimizing
/// `||Phi(x) - Phi(y)|| / d([x],[y])` subject to `d([x],[y]) >= floor`:
/// `budget` Gaussian restarts, then coordinate-descent refinement of the
/// most promising candidates with the floor enforced by projection.
/// Deterministic given the seed, including under parallel execution.
pub fn collision_search(
    action: &GroupAction,
    bank: &WindowBank,
    sel: &SelectionSet,
    budget: usize,
    floor: f64,
    seed: u64,
) -> Result<CollisionReport> {
    if budget == 0 {
        return Err(Error::ConfigInconsistent {
            reason: "collision search budget must be at least 1".into(),
        });
    }
    if !floor.is_finite() || floor <= 0.0 {
        return Err(Error::ConfigInconsistent {
            reason: "collision search floor must be positive".into(),
        });
    }
    let eval = CoorbitEvaluator::new(action, bank)?;
    eval.check_selection(sel)?;
    let objective = PairObjective {
        action,
        eval: &eval,
        sel,
        floor,
    };
    let d = action.dim();

    let mut candidates: Vec<Candidate> = (0..budget)
        .into_par_iter()
        .filter_map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
            for _ in 0..16 {
                let x = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let mut y = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                if objective.enforce_floor(&x, &mut y).is_none() {
                    continue;
                }
                if let Some((ratio, _, _)) = objective.ratio(&x, &y) {
                    return Some(Candidate { ratio, index, x, y });
                }
            }
            None
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::ConfigInconsistent {
            reason: "no restart satisfied the orbit-distance floor".into(),
        });
    }
    candidates.sort_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.index.cmp(&b.index)));
    let refine = candidates.len().min(REFINE_CANDIDATES);

    let refined: Vec<Candidate> = candidates[..refine]
        .par_iter()
        .map(|c| {
            let (ratio, x, y) = descend(&objective, c.ratio, c.x.clone(), c.y.clone());
            Candidate {
                ratio,
                index: c.index,
                x,
                y,
            }
        })
        .collect();

    let best = refined
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.index.cmp(&b.index)))
        .unwrap();
    let (ratio, orbit_distance, embedding_gap) = objective
        .ratio(&best.x, &best.y)
        .expect("best candidate satisfies the floor");
    Ok(CollisionReport {
        x: best.x.clone(),
        y: best.y.clone(),
        orbit_distance,
        embedding_gap,
        ratio,
        trials: budget,
        seed,
    })
}

/// Cyclic coordinate descent with a shrinking step, on both points of the
/// pair. Piecewise-linear objective, so no gradients: each step tries a
/// positive and a negative move of one coordinate and keeps an improvement.
fn descend(
    objective: &PairObjective<'_>,
    start_ratio: f64,
    mut x: DVector<f64>,
    mut y: DVector<f64>,
) -> (f64, DVector<f64>, DVector<f64>) {
    let d = x.len();
    let coords = 2 * d;
    let scale = x.norm().max(y.norm()).max(1.0);
    let mut step = 0.25 * scale;
    let mut best = start_ratio;
    let mut stale = 0usize;
    for s in 0..DESCENT_STEPS {
        let coord = s % coords;
        let mut improved = false;
        for sign in [1.0, -1.0] {
            let mut cx = x.clone();
            let mut cy = y.clone();
            if coord < d {
                cx[coord] += sign * step;
            } else {
                cy[coord - d] += sign * step;
            }
            if objective.enforce_floor(&cx, &mut cy).is_none() {
                continue;
            }
            if let Some((ratio, _, _)) = objective.ratio(&cx, &cy) {
                if ratio < best {
                    best = ratio;
                    x = cx;
                    y = cy;
                    improved = true;
                    break;
                }
            }
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= coords {
                step *= 0.5;
                stale = 0;
                if step < 1e-9 * scale {
                    break;
                }
            }
        }
    }
    (best, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::sample_windows;
    use crate::metric::orbit_closure;
    use approx::assert_relative_eq;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn bounds_match_the_worked_example() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let base = Dataset::new(
            2,
            vec![
                ("a".into(), dv(&[1.0, 0.0])),
                ("b".into(), dv(&[0.0, 2.0])),
            ],
        )
        .unwrap();
        let dataset = orbit_closure(&flip, &base, 1e-9).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let w = dv(&[s, s]);
        let report = lipschitz_bounds(&flip, &w, 1, &dataset).unwrap();
        let expected = 1.0 / 10.0f64.sqrt();
        assert_relative_eq!(report.lower, expected, epsilon = 1e-12);
        assert_relative_eq!(report.upper, expected, epsilon = 1e-12);
        assert_eq!(report.pair_count, 1);
        assert!(report.upper <= report.trivial_upper + 1e-9);
        assert_relative_eq!(report.trivial_upper, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bounds_require_invariance_and_two_orbits() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let raw = Dataset::new(2, vec![("a".into(), dv(&[1.0, 0.0]))]).unwrap();
        let w = dv(&[1.0, 0.0]);
        assert!(matches!(
            lipschitz_bounds(&flip, &w, 1, &raw),
            Err(Error::NotInvariantDataset)
        ));
        let closed = orbit_closure(&flip, &raw, 1e-9).unwrap();
        assert!(matches!(
            lipschitz_bounds(&flip, &w, 1, &closed),
            Err(Error::FewerThanTwoOrbits)
        ));
    }

    #[test]
    fn constructed_collision_gives_zero_lower_bound() {
        // w is orthogonal to the difference of the two orbit representatives
        let flip = GroupAction::sign_flip(2).unwrap();
        let base = Dataset::new(
            2,
            vec![
                ("a".into(), dv(&[1.0, 0.0])),
                ("b".into(), dv(&[0.0, 1.0])),
            ],
        )
        .unwrap();
        let dataset = orbit_closure(&flip, &base, 1e-9).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let report = lipschitz_bounds(&flip, &dv(&[s, s]), 1, &dataset).unwrap();
        assert_eq!(report.lower, 0.0);
        let mut pair = vec![report.witness_lower.0.as_str(), report.witness_lower.1.as_str()];
        pair.sort_unstable();
        assert_eq!(pair, vec!["a", "b"]);
    }

    #[test]
    fn zero_lower_bound_coincides_with_unseparated_pairs() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let w = dv(&[s, s]);
        let bank = WindowBank::new(2, vec![w.clone()]).unwrap();
        let sel = SelectionSet::singletons(1);
        // colliding pair: w is orthogonal to the representative difference
        let colliding = orbit_closure(
            &flip,
            &Dataset::new(
                2,
                vec![("a".into(), dv(&[1.0, 0.0])), ("b".into(), dv(&[0.0, 1.0]))],
            )
            .unwrap(),
            1e-9,
        )
        .unwrap();
        let report = lipschitz_bounds(&flip, &w, 1, &colliding).unwrap();
        let missed = separation_check(&flip, &bank, &sel, &colliding, 1e-9).unwrap();
        assert_eq!(report.lower, 0.0);
        assert_eq!(missed.len(), 1);
        // separated pair: same window, generic dataset
        let separated = orbit_closure(
            &flip,
            &Dataset::new(
                2,
                vec![("a".into(), dv(&[1.0, 0.0])), ("b".into(), dv(&[0.0, 2.0]))],
            )
            .unwrap(),
            1e-9,
        )
        .unwrap();
        let report = lipschitz_bounds(&flip, &w, 1, &separated).unwrap();
        let missed = separation_check(&flip, &bank, &sel, &separated, 1e-9).unwrap();
        assert!(report.lower > 0.0);
        assert!(missed.is_empty());
    }

    #[test]
    fn generic_window_separates_random_orbits() {
        for trial in 0..20u64 {
            let flip = GroupAction::sign_flip(4).unwrap();
            let points = sample_windows(4, 10, 1000 + trial);
            let base = Dataset::from_points(4, points.windows().to_vec()).unwrap();
            let dataset = orbit_closure(&flip, &base, 1e-9).unwrap();
            let w = sample_windows(4, 1, 5000 + trial).window(0).clone();
            let bank = WindowBank::new(4, vec![w]).unwrap();
            let sel = SelectionSet::singletons(1);
            let missed = separation_check(&flip, &bank, &sel, &dataset, 1e-9).unwrap();
            assert!(missed.is_empty(), "trial {trial}: {missed:?}");
        }
    }

    #[test]
    fn duplicate_orbits_are_skipped() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let base = Dataset::new(
            2,
            vec![
                ("a".into(), dv(&[1.0, 0.0])),
                ("copy".into(), dv(&[-1.0, 0.0])),
            ],
        )
        .unwrap();
        let dataset = orbit_closure(&flip, &base, 1e-9).unwrap();
        let bank = WindowBank::new(2, vec![dv(&[0.3, 0.7])]).unwrap();
        let sel = SelectionSet::singletons(1);
        // one orbit only: nothing to compare, nothing unseparated
        let missed = separation_check(&flip, &bank, &sel, &dataset, 1e-9).unwrap();
        assert!(missed.is_empty());
    }

    #[test]
    fn real_spectrum_examples() {
        let identity = DMatrix::<f64>::identity(3, 3);
        assert_eq!(real_spectrum(&identity, 1e-9).unwrap(), vec![1.0]);
        let neg = DMatrix::from_diagonal(&DVector::from_element(3, -1.0));
        assert_eq!(real_spectrum(&neg, 1e-9).unwrap(), vec![-1.0]);
        let rot90 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(real_spectrum(&rot90, 1e-9).unwrap().is_empty());
        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            real_spectrum(&shear, 1e-9),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn rank_at_examples() {
        let neg = DMatrix::from_diagonal(&DVector::from_element(3, -1.0));
        assert_eq!(rank_at(&neg, -1.0, 1e-9), 0);
        let identity = DMatrix::<f64>::identity(3, 3);
        assert_eq!(rank_at(&identity, -1.0, 1e-9), 3);
        let shift = GroupAction::cyclic_shift(4).unwrap();
        assert_eq!(rank_at(shift.element(1), 1.0, 1e-9), 3);
        assert_eq!(rank_at(shift.element(2), 1.0, 1e-9), 2);
    }

    #[test]
    fn gamma_profile_examples() {
        let flip = GroupAction::sign_flip(3).unwrap();
        let profile = gamma_profile(&flip, 1e-9).unwrap();
        assert_eq!(profile.gamma, vec![0]);
        assert_eq!(profile.min_window_count(1), Some(6));
        assert_eq!(profile.min_window_count(2), Some(6));

        let cyclic = GroupAction::cyclic_shift(4).unwrap();
        let profile = gamma_profile(&cyclic, 1e-9).unwrap();
        assert_eq!(profile.gamma, vec![3, 3, 2]);
        assert_eq!(profile.min_window_count(2), Some(6));
        assert_eq!(profile.min_window_count(3), Some(5));
        let ranks: Vec<usize> = profile.per_element.iter().map(|e| e.min_rank).collect();
        assert_eq!(ranks, vec![3, 2, 3]);
    }

    #[test]
    fn gamma_profile_rejects_trivial_group() {
        let trivial =
            GroupAction::from_elements(vec![DMatrix::identity(3, 3)], 1e-9).unwrap();
        assert!(matches!(
            gamma_profile(&trivial, 1e-9),
            Err(Error::TrivialGroup)
        ));
    }

    #[test]
    fn min_window_table_is_monotone_and_bounded_on_builtins() {
        let mut actions = vec![GroupAction::sign_flip(4).unwrap()];
        for d in 2..=8 {
            actions.push(GroupAction::cyclic_shift(d).unwrap());
        }
        for d in 3..=8 {
            actions.push(GroupAction::dihedral(d).unwrap());
        }
        for action in actions {
            let d = action.dim();
            let profile = gamma_profile(&action, 1e-9).unwrap();
            let mut last = None;
            for (&n, &p) in &profile.min_windows {
                if n >= 2 {
                    assert!(p > d, "n={n} p={p} d={d}");
                }
                if let Some(prev) = last {
                    assert!(p <= prev, "table must be non-increasing");
                }
                last = Some(p);
            }
        }
    }

    #[test]
    fn plan_selection_shapes() {
        let cyclic = GroupAction::cyclic_shift(4).unwrap();
        let sel = plan_selection(&cyclic, 2, 6).unwrap();
        let sizes: Vec<usize> = sel.lists().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 1, 1, 1, 1]);
        assert_eq!(sel.m(), 8);

        let all_single = plan_selection(&cyclic, 2, 8).unwrap();
        assert!(all_single.lists().iter().all(|l| l == &vec![1]));
        assert_eq!(all_single.m(), 8);

        assert!(matches!(
            plan_selection(&cyclic, 2, 5),
            Err(Error::WindowCountOutOfRange { p: 5, min: 6, max: 8 })
        ));
        assert!(matches!(
            plan_selection(&cyclic, 1, 8),
            Err(Error::EntriesOutOfRange { n: 1, .. })
        ));
        assert!(matches!(
            plan_selection(&cyclic, 4, 8),
            Err(Error::EntriesOutOfRange { n: 4, .. })
        ));
    }

    #[test]
    fn collision_search_is_deterministic() {
        let flip = GroupAction::sign_flip(3).unwrap();
        let bank = sample_windows(3, 6, 99);
        let sel = SelectionSet::singletons(6);
        let a = collision_search(&flip, &bank, &sel, 200, 1e-2, 7).unwrap();
        let b = collision_search(&flip, &bank, &sel, 200, 1e-2, 7).unwrap();
        assert_eq!(a.ratio, b.ratio);
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert!(a.orbit_distance >= 1e-2);
    }

    #[test]
    fn single_window_collapses() {
        let flip = GroupAction::sign_flip(2).unwrap();
        let bank = sample_windows(2, 1, 5);
        let sel = SelectionSet::singletons(1);
        let report = collision_search(&flip, &bank, &sel, 500, 1e-2, 11).unwrap();
        assert!(
            report.ratio < 1e-3,
            "one linear functional cannot separate: ratio {}",
            report.ratio
        );
    }

    #[test]
    fn full_bank_stays_separated() {
        let flip = GroupAction::sign_flip(3).unwrap();
        let bank = sample_windows(3, 6, 42);
        let sel = SelectionSet::singletons(6);
        let report = collision_search(&flip, &bank, &sel, 2000, 1e-2, 3).unwrap();
        assert!(report.ratio > 1e-3, "ratio {}", report.ratio);
    }

    #[test]
    fn ratio_is_exactly_orbit_invariant() {
        let actions = [
            GroupAction::cyclic_shift(4).unwrap(),
            GroupAction::sign_flip(3).unwrap(),
            GroupAction::dihedral(4).unwrap(),
        ];
        for action in &actions {
            let d = action.dim();
            let bank = sample_windows(d, 2 * d, 17);
            let sel = SelectionSet::singletons(2 * d);
            let eval = CoorbitEvaluator::new(action, &bank).unwrap();
            let objective = PairObjective {
                action,
                eval: &eval,
                sel: &sel,
                floor: 1e-2,
            };
            let x = sample_windows(d, 1, 23).window(0).clone();
            let y = sample_windows(d, 1, 29).window(0).clone();
            let base = objective.ratio(&x, &y).unwrap().0;
            for g in 0..action.order() {
                let moved = action.apply(g, &x).unwrap();
                let got = objective.ratio(&moved, &y).unwrap().0;
                assert_eq!(got, base, "element {g}");
            }
        }
    }
}
