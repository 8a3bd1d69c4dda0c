use crate::{Error, Result};

use super::pmf::Pmf;

/// Hard cap on any single enumeration (types, grid points).
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Number of compositions of `n` into `k` non-negative parts,
/// `C(n + k - 1, k - 1)`.
pub fn composition_count(n: u64, k: usize) -> u128 {
    assert!(k >= 1);
    // Product form of the binomial coefficient, interleaving divisions to
    // keep intermediates small; saturates at u128::MAX.
    let mut result: u128 = 1;
    let r = (k - 1) as u128;
    for i in 1..=r {
        let num = n as u128 + i;
        result = match result.checked_mul(num) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    result
}

/// Iterator over all compositions of `n` into `k` parts, in lexicographic
/// order starting from `(n, 0, …, 0)` and ending at `(0, …, 0, n)`.
pub struct CompositionIter {
    k: usize,
    current: Option<Vec<u64>>,
}

impl CompositionIter {
    pub fn new(n: u64, k: usize) -> Self {
        assert!(k >= 1);
        let mut first = vec![0u64; k];
        first[0] = n;
        Self {
            k,
            current: Some(first),
        }
    }
}

impl Iterator for CompositionIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let current = self.current.take()?;
        let out = current.clone();
        // Successor: move one unit from the rightmost positive entry that
        // is not the last cell, collecting everything to its right.
        let mut next = current;
        let k = self.k;
        if k == 1 {
            self.current = None;
            return Some(out);
        }
        let mut i = k - 1;
        let tail = next[k - 1];
        while i > 0 && next[i - 1] == 0 {
            i -= 1;
        }
        if i == 0 {
            self.current = None;
        } else {
            next[i - 1] -= 1;
            next[k - 1] = 0;
            next[i] = tail + 1;
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Iterator over all pmfs on `k` symbols whose entries are multiples of
/// `1/m`, in the deterministic order of [`CompositionIter`].
pub struct SimplexGrid {
    m: u64,
    inner: CompositionIter,
}

impl SimplexGrid {
    pub fn new(k: usize, m: u64) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::InvalidArgument(
                "simplex grid needs k >= 1 and m >= 1".into(),
            ));
        }
        let count = composition_count(m, k);
        if count > MAX_ENUMERATION as u128 {
            return Err(Error::GuardExceeded {
                what: "simplex grid",
                count,
                limit: MAX_ENUMERATION as u128,
            });
        }
        Ok(Self {
            m,
            inner: CompositionIter::new(m, k),
        })
    }
}

impl Iterator for SimplexGrid {
    type Item = Pmf;

    fn next(&mut self) -> Option<Pmf> {
        let counts = self.inner.next()?;
        let m = self.m as f64;
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
        // Counts sum exactly to m, so the pmf invariant holds by
        // construction.
        Some(Pmf::new(probs).expect("grid point is a valid pmf"))
    }
}

/// All pmfs on `k` symbols with entries that are multiples of `1/m`.
pub fn simplex_grid(k: usize, m: u64) -> Result<SimplexGrid> {
    SimplexGrid::new(k, m)
}
