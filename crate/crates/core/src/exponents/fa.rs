//! False-accept exponent of the helper-only imposter, in its
//! types-domain and Gallager-style forms.

use crate::extreal::pos;
use crate::measures::{entropy_of_slice, kl_slices, Pmf};
use crate::{Error, Result};

use super::optimize::{effective_resolution, minimize_product, refine_product, BlockGrid};
use super::{ExponentResult, GridOpts, NamedVector};

/// `E_FA(R_w, R_s) = min_{Q_X} [ D(Q_X‖P_X) + min{ R_s, [H_Q(X) − R_w]_+ } ]`.
///
/// Zero whenever `R_w > H(X)` and never larger than `R_s`.
pub fn fa_exponent_types(
    p_x: &Pmf,
    r_w: f64,
    r_s: f64,
    opts: &GridOpts,
) -> Result<ExponentResult> {
    check_rates(r_w, r_s)?;
    let run = |o: &GridOpts| -> ExponentResult {
        let k = p_x.alphabet_size();
        let m = effective_resolution(o.resolution, &[k], o.point_budget);
        let injected = vec![p_x.probs().to_vec()];
        let blocks = vec![BlockGrid::lattice(k, m, &injected)];
        let objective = |pt: &[&[f64]]| -> f64 {
            let d = kl_slices(pt[0], p_x.probs());
            if d == f64::INFINITY {
                return f64::INFINITY;
            }
            d + r_s.min(pos(entropy_of_slice(pt[0]) - r_w))
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

/// The same exponent in Gallager form:
/// `min_{s∈[0,1]} max_{ρ∈[s,1]} { −ρ ln Σ_x P(x)^{1/ρ} + s R_s − (1−ρ) R_w }`,
/// computed by nested 1-D grids with one local refinement.
pub fn fa_exponent_gallager(
    p_x: &Pmf,
    r_w: f64,
    r_s: f64,
    opts: &GridOpts,
) -> Result<ExponentResult> {
    check_rates(r_w, r_s)?;
    let ln_p: Vec<f64> = p_x
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect();

    // −ρ ln Σ_x P(x)^{1/ρ} through log-sum-exp; ρ = 0 takes its limit
    // −max_x ln P(x).
    let neg_rho_ln_sum = |rho: f64| -> f64 {
        let vmax = ln_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if rho == 0.0 {
            return -vmax;
        }
        let sum: f64 = ln_p
            .iter()
            .filter(|&&l| l > f64::NEG_INFINITY)
            .map(|&l| ((l - vmax) / rho).exp())
            .sum();
        -rho * (vmax / rho + sum.ln())
    };
    let value_at = |s: f64, rho: f64| -> f64 {
        neg_rho_ln_sum(rho) + s * r_s - (1.0 - rho) * r_w
    };
    // max over ρ ∈ [s, 1] on a uniform grid of `steps` points.
    let inner_max = |s: f64, steps: u32| -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, s);
        for j in 0..=steps {
            let rho = s + (1.0 - s) * j as f64 / steps as f64;
            let v = value_at(s, rho);
            if v > best.0 {
                best = (v, rho);
            }
        }
        best
    };

    let steps = opts.resolution.max(2) * 4;
    let mut outer = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        let s = i as f64 / steps as f64;
        let (v, rho) = inner_max(s, steps);
        if v < outer.0 {
            outer = (v, s, rho);
        }
    }

    // Local refinement of (s, ρ*) at refine_factor× finer spacing.
    let step = 1.0 / steps as f64;
    let fine = step / opts.refine_factor as f64;
    let radius = opts.refine_radius as i64 * opts.refine_factor as i64;
    let mut refined = outer;
    for ds in -radius..=radius {
        let s = (outer.1 + ds as f64 * fine).clamp(0.0, 1.0);
        let (v, rho) = inner_max(s, steps * opts.refine_factor);
        if v < refined.0 {
            refined = (v, s, rho);
        }
    }

    let result = ExponentResult::new(
        refined.0.max(0.0),
        vec![NamedVector::new(
            "gallager_s_rho",
            vec![refined.1, refined.2],
        )],
        steps,
        true,
    );
    if !opts.check_convergence {
        return Ok(result);
    }
    // Convergence: the same construction at half the grid density.
    let half = fa_exponent_gallager(p_x, r_w, r_s, &{
        let mut o = opts.half_resolution();
        o.check_convergence = false;
        o
    })?;
    Ok(result.mark_convergence(half.value))
}

fn check_rates(r_w: f64, r_s: f64) -> Result<()> {
    for (name, r) in [("r_w", r_w), ("r_s", r_s)] {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{name} = {r} must be finite and non-negative"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use std::f64::consts::LN_2;

    fn opts(m: u32) -> GridOpts {
        GridOpts {
            resolution: m,
            check_convergence: false,
            ..GridOpts::default()
        }
    }

    #[test]
    fn zero_key_rate_gives_zero() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let t = fa_exponent_types(&p, 0.2, 0.0, &opts(60)).unwrap();
        assert_eq!(t.value, 0.0);
        let g = fa_exponent_gallager(&p, 0.2, 0.0, &opts(60)).unwrap();
        assert!(g.value.abs() < 1e-12);
    }

    #[test]
    fn zero_above_max_entropy_rate() {
        let p = Pmf::uniform(2);
        for r_w in [LN_2, 0.8, 1.5] {
            let t = fa_exponent_types(&p, r_w, 0.4, &opts(60)).unwrap();
            assert_eq!(t.value, 0.0, "r_w = {r_w}");
        }
    }

    #[test]
    fn types_value_binary_grid_oracle() {
        // Independent dense 1-D scan over the binary simplex.
        let p = Pmf::uniform(2);
        let (r_w, r_s): (f64, f64) = (0.2, 0.3);
        let res = 20_000u32;
        let mut oracle = f64::INFINITY;
        for c in 0..=res {
            let q = [c as f64 / res as f64, 1.0 - c as f64 / res as f64];
            let v = kl_slices(&q, p.probs()) + r_s.min(pos(entropy_of_slice(&q) - r_w));
            oracle = oracle.min(v);
        }
        let t = fa_exponent_types(&p, r_w, r_s, &opts(60)).unwrap();
        assert!((t.value - oracle).abs() < 2e-3, "{} vs {oracle}", t.value);
        // The arg-min reproduces the reported value.
        let q = &t.argmin[0].values;
        let re = kl_slices(q, p.probs()) + r_s.min(pos(entropy_of_slice(q) - r_w));
        assert!((re - t.value).abs() < 1e-9);
    }

    #[test]
    fn gallager_uniform_source_inner_objective() {
        // For uniform P the bracket is (1−ρ) ln|X|, checked numerically
        // against the log-sum-exp path over several ρ.
        let p = Pmf::uniform(3);
        let ln_p: Vec<f64> = p.probs().iter().map(|&v| v.ln()).collect();
        for rho in [0.1, 0.3, 0.5, 1.0] {
            let vmax = ln_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = ln_p.iter().map(|&l| ((l - vmax) / rho).exp()).sum();
            let val = -rho * (vmax / rho + sum.ln());
            let expect = (1.0 - rho) * 3f64.ln();
            assert!((val - expect).abs() < 1e-12, "rho {rho}");
        }
    }

    #[test]
    fn dual_formulas_agree_on_random_instances() {
        let mut rng = SplitMix64::new(2026);
        for trial in 0..20 {
            let k = if trial % 2 == 0 { 2 } else { 3 };
            let w: Vec<f64> = (0..k).map(|_| rng.next_f64() + 0.05).collect();
            let p = Pmf::from_weights(&w).unwrap();
            let r_w = rng.next_f64() * 1.2 * (k as f64).ln();
            let r_s = rng.next_f64() * 0.8;
            let t = fa_exponent_types(&p, r_w, r_s, &opts(60)).unwrap();
            let g = fa_exponent_gallager(&p, r_w, r_s, &opts(60)).unwrap();
            assert!(
                (t.value - g.value).abs() < 1e-2,
                "trial {trial}: types {} vs gallager {}",
                t.value,
                g.value
            );
            assert!(t.value <= r_s + 1e-12);
            let h = entropy_of_slice(p.probs());
            if r_w > h {
                assert!(t.value < 1e-9, "must vanish above H(X)");
            }
        }
    }

    #[test]
    fn monotonicity_sweeps() {
        let p = Pmf::new(vec![0.35, 0.65]).unwrap();
        // Non-increasing in r_w.
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let r_w = i as f64 * 0.08;
            let v = fa_exponent_types(&p, r_w, 0.5, &opts(40)).unwrap().value;
            assert!(v <= prev + 1e-9);
            prev = v;
        }
        // Non-decreasing in r_s.
        let mut prev = -1.0;
        for i in 0..10 {
            let r_s = i as f64 * 0.06;
            let v = fa_exponent_types(&p, 0.1, r_s, &opts(40)).unwrap().value;
            assert!(v >= prev - 1e-9);
            prev = v;
        }
    }
}
