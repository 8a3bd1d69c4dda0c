//! Secrecy exponent of the key–helper leakage for the typical code:
//! `E_sec(R) = min { D(Q_X‖P_X) : H_Q(X) ≤ R }`.

use crate::measures::{entropy_of_slice, kl_slices, Pmf};
use crate::{Error, Result};

use super::optimize::{effective_resolution, minimize_product, refine_product, BlockGrid};
use super::{ExponentResult, GridOpts, NamedVector};

/// Entropy-constraint slack absorbing grid rounding at the boundary.
const ENTROPY_SLACK: f64 = 1e-12;

/// `E_sec(R)`: zero iff `R ≥ H(X)`, strictly positive below.
pub fn secrecy_exponent(p_x: &Pmf, rate: f64, opts: &GridOpts) -> Result<ExponentResult> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} must be finite and non-negative"
        )));
    }
    let run = |o: &GridOpts| -> ExponentResult {
        let k = p_x.alphabet_size();
        let m = effective_resolution(o.resolution, &[k], o.point_budget);
        // The source itself is a candidate whenever it is feasible, making
        // the zero region exact.
        let mut injected = Vec::new();
        if entropy_of_slice(p_x.probs()) <= rate + ENTROPY_SLACK {
            injected.push(p_x.probs().to_vec());
        }
        let blocks = vec![BlockGrid::lattice(k, m, &injected)];
        let objective = |pt: &[&[f64]]| -> f64 {
            if entropy_of_slice(pt[0]) > rate + ENTROPY_SLACK {
                return f64::INFINITY;
            }
            kl_slices(pt[0], p_x.probs())
        };
        let coarse = minimize_product(&blocks, objective);
        let refined = refine_product(
            &coarse,
            m,
            o.refine_factor,
            o.refine_radius,
            o.point_budget,
            objective,
        );
        let argmin = if refined.argmin.is_empty() {
            Vec::new()
        } else {
            vec![NamedVector::new("q_x", refined.argmin[0].clone())]
        };
        ExponentResult::new(refined.value.max(0.0), argmin, m, true)
    };
    let result = run(&opts.single_pass());
    if !opts.check_convergence {
        return Ok(result);
    }
    let half = run(&opts.half_resolution());
    Ok(result.mark_convergence(half.value))
}
