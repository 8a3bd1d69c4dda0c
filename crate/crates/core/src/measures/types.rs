use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::grid::{composition_count, CompositionIter, MAX_ENUMERATION};
use super::pmf::JointPmf;

/// The type (empirical histogram) of a length-`n` sequence: integer symbol
/// counts summing exactly to `n`.
///
/// For joint types the alphabet is the flattened product alphabet, listed
/// with the second coordinate fastest (same layout as [`JointPmf`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeDescriptor {
    n: u64,
    counts: Vec<u64>,
}

impl TypeDescriptor {
    pub fn new(n: u64, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyInput("type descriptor counts"));
        }
        let total: u64 = counts.iter().sum();
        if total != n {
            return Err(Error::InvalidArgument(format!(
                "type counts sum to {total}, expected n = {n}"
            )));
        }
        Ok(Self { n, counts })
    }

    /// The type of a concrete sequence.
    pub fn of_sequence(seq: &[usize], alphabet: usize) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::EmptyInput("sequence"));
        }
        let mut counts = vec![0u64; alphabet];
        for &s in seq {
            if s >= alphabet {
                return Err(Error::SymbolOutOfRange {
                    symbol: s,
                    alphabet,
                });
            }
            counts[s] += 1;
        }
        Ok(Self {
            n: seq.len() as u64,
            counts,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Empirical probabilities `counts / n`, derived on demand.
    pub fn probs(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n as f64)
            .collect()
    }
}

/// Joint empirical counts of a pair of equal-length sequences, flattened
/// with the `y` coordinate fastest.
pub fn joint_counts(
    xs: &[usize],
    ys: &[usize],
    x_alphabet: usize,
    y_alphabet: usize,
) -> Result<Vec<u64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput("sequence pair"));
    }
    let mut counts = vec![0u64; x_alphabet * y_alphabet];
    for (&x, &y) in xs.iter().zip(ys) {
        if x >= x_alphabet {
            return Err(Error::SymbolOutOfRange {
                symbol: x,
                alphabet: x_alphabet,
            });
        }
        if y >= y_alphabet {
            return Err(Error::SymbolOutOfRange {
                symbol: y,
                alphabet: y_alphabet,
            });
        }
        counts[x * y_alphabet + y] += 1;
    }
    Ok(counts)
}

/// Joint empirical distribution of a pair of sequences; entries are exact
/// multiples of `1/n`.
pub fn empirical_joint(
    xs: &[usize],
    ys: &[usize],
    x_alphabet: usize,
    y_alphabet: usize,
) -> Result<JointPmf> {
    let counts = joint_counts(xs, ys, x_alphabet, y_alphabet)?;
    let n = xs.len() as f64;
    JointPmf::new(
        x_alphabet,
        y_alphabet,
        counts.iter().map(|&c| c as f64 / n).collect(),
    )
}

/// Enumerate every joint type of length-`n` pairs over `|X| × |Y|`.
///
/// The number of types is the composition count `C(n + k - 1, k - 1)` with
/// `k = |X||Y|`; enumeration refuses when it exceeds [`MAX_ENUMERATION`].
pub fn enumerate_joint_types(
    n: u64,
    x_alphabet: usize,
    y_alphabet: usize,
) -> Result<impl Iterator<Item = TypeDescriptor>> {
    let k = x_alphabet
        .checked_mul(y_alphabet)
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::InvalidArgument("empty product alphabet".into()))?;
    let count = composition_count(n, k);
    if count > MAX_ENUMERATION as u128 {
        return Err(Error::GuardExceeded {
            what: "joint type enumeration",
            count,
            limit: MAX_ENUMERATION as u128,
        });
    }
    Ok(CompositionIter::new(n, k).map(move |counts| TypeDescriptor { n, counts }))
}

/// Exact log size of the type class, `ln( n! / Π_a counts[a]! )`.
pub fn log_type_class_size(t: &TypeDescriptor) -> f64 {
    let mut total = ln_factorial(t.n);
    for &c in t.counts() {
        total -= ln_factorial(c);
    }
    total.max(0.0)
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}
