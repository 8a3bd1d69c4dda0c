use crate::extreal::{add, kl_term, xlnx};
use crate::{Error, Result};

use super::pmf::{CondPmf, JointPmf, Pmf};

/// Shannon entropy of a probability slice, in nats, with `0 ln 0 = 0`.
pub fn entropy_of_slice(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlnx(p)).sum::<f64>()
}

/// Shannon entropy `H(X)` in nats.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_of_slice(p.probs())
}

/// Conditional entropy `H(X|Y) = H(X,Y) - H(Y)` of the row variable given
/// the column variable, in nats.
pub fn cond_entropy(j: &JointPmf) -> f64 {
    let h_xy = entropy_of_slice(j.probs());
    let h_y = entropy(&j.y_marginal());
    (h_xy - h_y).max(0.0)
}

/// Mutual information `I(X;Y) = H(X) - H(X|Y)` in nats.
pub fn mutual_information(j: &JointPmf) -> f64 {
    (entropy(&j.x_marginal()) - cond_entropy(j)).max(0.0)
}

/// Kullback–Leibler divergence `D(q‖p)` in nats; `+∞` iff `q` puts mass
/// where `p` has none.
pub fn kl(q: &Pmf, p: &Pmf) -> Result<f64> {
    if q.alphabet_size() != p.alphabet_size() {
        return Err(Error::ShapeMismatch(format!(
            "kl: alphabets {} vs {}",
            q.alphabet_size(),
            p.alphabet_size()
        )));
    }
    Ok(kl_slices(q.probs(), p.probs()))
}

/// KL divergence between raw probability slices (no validation).
pub fn kl_slices(q: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        total = add(total, kl_term(qi, pi));
        if total == f64::INFINITY {
            return total;
        }
    }
    total.max(0.0)
}

/// Weighted conditional divergence
/// `Σ_x q_x(x) D(q(·|x) ‖ p(·|x))`.
pub fn weighted_cond_kl(qyx: &CondPmf, pyx: &CondPmf, qx: &Pmf) -> Result<f64> {
    if qyx.given_size() != pyx.given_size()
        || qyx.out_size() != pyx.out_size()
        || qyx.given_size() != qx.alphabet_size()
    {
        return Err(Error::ShapeMismatch(format!(
            "weighted_cond_kl: ({}, {}) vs ({}, {}) with weight alphabet {}",
            qyx.given_size(),
            qyx.out_size(),
            pyx.given_size(),
            pyx.out_size(),
            qx.alphabet_size()
        )));
    }
    let mut total = 0.0;
    for x in 0..qx.alphabet_size() {
        let w = qx.prob(x);
        if w == 0.0 {
            continue;
        }
        let d = kl_slices(qyx.row(x).probs(), pyx.row(x).probs());
        total = add(total, if d == f64::INFINITY { d } else { w * d });
        if total == f64::INFINITY {
            return Ok(total);
        }
    }
    Ok(total.max(0.0))
}
