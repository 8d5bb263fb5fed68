//! Covering-type experiments: convex-split states, the measure-transformed
//! covering estimator, and extraction of GOOD index sets with their operator
//! inequality certificates.

mod convex_split;
mod cover;
mod goodset;

pub use convex_split::{
    convex_split_distance, convex_split_state, ConvexSplit, MAX_CONVEX_SPLIT_DIM,
};
pub use cover::{
    covering_error, covering_error_exact, covering_sweep, enumeration_size, trial_rng, CoverRow,
    CoveringEstimate, CoveringInstance,
};
pub use goodset::{extract_good_set, extract_good_set_transformed, GoodSetCertificate};
