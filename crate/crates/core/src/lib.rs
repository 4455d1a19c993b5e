//! Group-invariant embeddings of finite orthogonal actions via sorted coorbits.
//!
//! Given a finite group of orthogonal `d x d` matrices, a bank of window
//! vectors and a per-window selection of coorbit ranks, this crate computes
//! the invariant feature map obtained by sorting the inner products of a
//! point against each window orbit and keeping the selected entries. On top
//! of that sit the quotient (nearest-orbit) metric, bi-Lipschitz constant
//! estimation on finite invariant datasets, the spectral profile that
//! controls how many windows a rich selection needs, and an adversarial
//! collision search that stress-tests orbit separation empirically.
//!
//! Modules:
//! - [`group`]: construction, enumeration and verification of finite
//!   orthogonal matrix groups.
//! - [`coorbit`]: sorted coorbit vectors, selected coordinates, the bank map
//!   and the max-filter special case.
//! - [`metric`]: quotient metric, orbit equivalence and invariant closure of
//!   finite datasets.
//! - [`analysis`]: bi-Lipschitz bounds, separation checks, real spectra and
//!   numerical ranks, the gamma profile with minimal window counts,
//!   selection planning and collision search.
//! - [`embed`]: seeded window/reduction sampling and the end-to-end
//!   embedding (linear reduction after the coorbit map).

pub mod analysis;
pub mod coorbit;
pub mod embed;
pub mod error;
pub mod group;
pub mod metric;

pub use analysis::{
    collision_search, gamma_profile, lipschitz_bounds, plan_selection, rank_at, real_spectrum,
    separation_check, BoundsReport, CollisionReport, GammaProfile,
};
pub use coorbit::{
    coorbit_entry, coorbit_map, full_coorbit, max_filter, sort_descending, CoorbitEvaluator,
    CoorbitVector, SelectionSet, WindowBank,
};
pub use embed::{
    derive_seed, embed_dataset, embed_point, sample_reduction, sample_windows, EmbeddingConfig,
    LinearReduction,
};
pub use error::{Error, Result};
pub use group::{GroupAction, VerificationReport};
pub use metric::{orbit, orbit_closure, quotient_distance, same_orbit, Dataset};
