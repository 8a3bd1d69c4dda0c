//! Exact finite-alphabet probability objects, information measures, and
//! method-of-types machinery.
//!
//! All quantities are in nats. Probability vectors are validated at
//! construction (entries non-negative, sum within `1e-12` of one) and are
//! immutable afterwards, so they can be shared freely across parallel
//! workers.

mod grid;
mod info;
mod pmf;
mod types;

pub use grid::{composition_count, simplex_grid, CompositionIter, SimplexGrid, MAX_ENUMERATION};
pub use info::{cond_entropy, entropy, entropy_of_slice, kl, kl_slices, mutual_information, weighted_cond_kl};
pub use pmf::{CondPmf, JointPmf, JointPmf3, Pmf, PROB_SUM_TOL};
pub use types::{
    empirical_joint, enumerate_joint_types, joint_counts, log_type_class_size, TypeDescriptor,
};
