//! Numerical evaluation of the single-letter error exponents by exhaustive
//! simplex grids with local refinement.
//!
//! The objectives contain `[·]_+` kinks and are not certified convex, so
//! every optimization is an explicit grid scan at a chosen resolution,
//! followed by a local refinement pass at `refine_factor`× finer spacing
//! around the incumbent. Reported values therefore carry their grid
//! metadata, and each result is re-checked at half resolution: if the value
//! moves by more than [`CONVERGENCE_TOL`], the result is flagged
//! unconverged.
//!
//! All optimizations report their arg-min so an independent re-evaluation
//! can close the loop.

mod expurgated;
mod fa;
mod fr;
mod optimize;
mod secrecy;

pub use expurgated::{
    alpha, fr_expurgated_exponent, fr_expurgated_rho, fr_expurgated_sup_beta, gamma,
    lambda_pairwise, ExpurgatedAnalysis, EXPURGATED_BETA_GRID,
};
pub use fa::{fa_exponent_gallager, fa_exponent_types};
pub use fr::{
    fr_map_exponent, fr_random_exponent, fr_random_exponent_given_type, inner_fr_exponent,
};
pub use secrecy::secrecy_exponent;

use serde::{Deserialize, Serialize};

/// Change threshold of the half-resolution convergence check, in nats.
pub const CONVERGENCE_TOL: f64 = 5e-3;

/// Grid-search controls shared by every exponent evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridOpts {
    /// Requested per-block grid resolution (points per `1/resolution`).
    pub resolution: u32,
    /// Cap on the number of product grid points of one scan; the effective
    /// resolution is lowered until the scan fits.
    pub point_budget: u64,
    /// Spacing refinement of the local pass around the incumbent.
    pub refine_factor: u32,
    /// Radius of the local pass, in coarse grid steps.
    pub refine_radius: u32,
    /// Re-evaluate at half resolution and flag unconverged results.
    pub check_convergence: bool,
}

impl Default for GridOpts {
    fn default() -> Self {
        Self {
            resolution: 60,
            point_budget: 200_000_000,
            refine_factor: 10,
            refine_radius: 2,
            check_convergence: true,
        }
    }
}

impl GridOpts {
    pub fn with_resolution(resolution: u32) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    /// Copy with the convergence re-check disabled (used internally for the
    /// half-resolution pass itself).
    pub(crate) fn single_pass(&self) -> Self {
        Self {
            check_convergence: false,
            ..self.clone()
        }
    }

    pub(crate) fn half_resolution(&self) -> Self {
        Self {
            resolution: (self.resolution / 2).max(2),
            check_convergence: false,
            ..self.clone()
        }
    }
}

/// A named vector attached to an exponent result: the optimizing
/// distribution(s), or scalar optimizer parameters where the variable is
/// not a distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedVector {
    pub name: String,
    pub values: Vec<f64>,
}

impl NamedVector {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// An exponent value (extended real, nats) with its optimization metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentResult {
    /// Non-negative, possibly `+∞`.
    pub value: f64,
    /// The optimizing distribution(s); empty when the feasible set is.
    pub argmin: Vec<NamedVector>,
    /// Effective per-block grid resolution of the reported scan.
    pub grid_resolution: u32,
    /// Whether the local refinement pass improved or confirmed the value.
    pub refined: bool,
    /// Half-resolution re-check stayed within [`CONVERGENCE_TOL`].
    pub converged: bool,
}

impl ExponentResult {
    pub(crate) fn new(
        value: f64,
        argmin: Vec<NamedVector>,
        grid_resolution: u32,
        refined: bool,
    ) -> Self {
        Self {
            value,
            argmin,
            grid_resolution,
            refined,
            converged: true,
        }
    }

    pub(crate) fn mark_convergence(mut self, other_value: f64) -> Self {
        let both_inf = self.value == f64::INFINITY && other_value == f64::INFINITY;
        self.converged =
            both_inf || (self.value.is_finite() && (self.value - other_value).abs() < CONVERGENCE_TOL);
        self
    }
}

/// `[a0 - a]_+` on the extended real line, with the decoder-side reading of
/// the indeterminate case: a candidate at metric `-∞` carries zero weight,
/// so the gap is `+∞` against any finite reference and `0` when the
/// reference is itself at `-∞`.
#[inline]
pub(crate) fn metric_gap(a0: f64, a: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        if a0 == f64::NEG_INFINITY {
            0.0
        } else {
            f64::INFINITY
        }
    } else if a0 == f64::NEG_INFINITY {
        0.0
    } else {
        crate::extreal::pos(a0 - a)
    }
}
