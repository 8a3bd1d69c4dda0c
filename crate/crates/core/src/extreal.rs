//! Extended-real arithmetic conventions used by the exponent formulas.
//!
//! Values live on the extended real line represented as `f64` with
//! `f64::INFINITY` / `f64::NEG_INFINITY`; NaN never appears. The conventions
//! are:
//!
//! * `0 · ln 0 = 0`,
//! * `+∞` dominates sums (`+∞ + (-∞) = +∞`),
//! * `[x]_+` of `-∞` is `0`, of `+∞` is `+∞`,
//! * an empty infimum is `+∞`, an empty supremum is `-∞`.

/// `[x]_+ = max{0, x}` on the extended real line.
#[inline]
pub fn pos(x: f64) -> f64 {
    debug_assert!(!x.is_nan());
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Extended-real addition where `+∞` dominates: `+∞ + (-∞) = +∞`.
#[inline]
pub fn add(a: f64, b: f64) -> f64 {
    debug_assert!(!a.is_nan() && !b.is_nan());
    if a == f64::INFINITY || b == f64::INFINITY {
        f64::INFINITY
    } else if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// Sum of extended reals with the `+∞`-dominates rule.
#[inline]
pub fn sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().fold(0.0, add)
}

/// Identity element of `min`: the empty infimum.
pub const EMPTY_INF: f64 = f64::INFINITY;

/// Identity element of `max`: the empty supremum.
pub const EMPTY_SUP: f64 = f64::NEG_INFINITY;

/// `x ln x` with the `0 ln 0 = 0` convention. Requires `x >= 0`.
#[inline]
pub fn xlnx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// One term of a KL sum: `q ln(q/p)`, `+∞` iff `q > 0` and `p = 0`.
#[inline]
pub fn kl_term(q: f64, p: f64) -> f64 {
    debug_assert!(q >= 0.0 && p >= 0.0);
    if q == 0.0 {
        0.0
    } else if p == 0.0 {
        f64::INFINITY
    } else {
        q * (q / p).ln()
    }
}

/// `ln(e^a + e^b)` computed stably; absorbs `-∞` operands.
#[inline]
pub fn log_sum_exp2(a: f64, b: f64) -> f64 {
    debug_assert!(!a.is_nan() && !b.is_nan());
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
