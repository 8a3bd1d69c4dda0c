use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on probability mass sums.
pub const PROB_SUM_TOL: f64 = 1e-12;

fn check_mass(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    let mut sum = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {p} is negative or non-finite"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: mass sums to {sum}, not 1"
        )));
    }
    Ok(())
}

/// A probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_mass(&probs, "pmf")?;
        Ok(Self { probs })
    }

    /// Uniform distribution over `k` symbols.
    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// Point mass on `symbol`.
    pub fn point_mass(k: usize, symbol: usize) -> Self {
        assert!(symbol < k);
        let mut probs = vec![0.0; k];
        probs[symbol] = 1.0;
        Self { probs }
    }

    /// Normalize non-negative weights into a pmf.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }
}

/// A joint pmf over a product alphabet `X × Y`, stored row-major in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "joint pmf: {} entries for a {rows}x{cols} table",
                probs.len()
            )));
        }
        check_mass(&probs, "joint pmf")?;
        Ok(Self { rows, cols, probs })
    }

    /// Doubly symmetric binary source: `X` uniform, `Y = X ⊕ Bernoulli(p)`.
    pub fn dsbs(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::InvalidArgument(format!(
                "crossover {crossover} outside [0, 1]"
            )));
        }
        let same = 0.5 * (1.0 - crossover);
        let diff = 0.5 * crossover;
        Self::new(2, 2, vec![same, diff, diff, same])
    }

    /// Product of two marginals.
    pub fn product(px: &Pmf, py: &Pmf) -> Self {
        let mut probs = Vec::with_capacity(px.alphabet_size() * py.alphabet_size());
        for &a in px.probs() {
            for &b in py.probs() {
                probs.push(a * b);
            }
        }
        Self {
            rows: px.alphabet_size(),
            cols: py.alphabet_size(),
            probs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    pub fn x_marginal(&self) -> Pmf {
        let mut m = vec![0.0; self.rows];
        for x in 0..self.rows {
            for y in 0..self.cols {
                m[x] += self.prob(x, y);
            }
        }
        renormalize(&mut m);
        Pmf { probs: m }
    }

    pub fn y_marginal(&self) -> Pmf {
        let mut m = vec![0.0; self.cols];
        for x in 0..self.rows {
            for y in 0..self.cols {
                m[y] += self.prob(x, y);
            }
        }
        renormalize(&mut m);
        Pmf { probs: m }
    }

    /// Conditional of the row variable given the column variable, `P(x|y)`.
    ///
    /// Columns of zero mass get a uniform row so the result is a valid
    /// conditional pmf; such columns never contribute to any expectation.
    pub fn cond_x_given_y(&self) -> CondPmf {
        let py = self.y_marginal();
        let mut rows = Vec::with_capacity(self.cols);
        for y in 0..self.cols {
            let mass = py.prob(y);
            let mut row = vec![0.0; self.rows];
            if mass > 0.0 {
                for (x, r) in row.iter_mut().enumerate() {
                    *r = self.prob(x, y) / mass;
                }
                renormalize(&mut row);
            } else {
                row.fill(1.0 / self.rows as f64);
            }
            rows.push(Pmf { probs: row });
        }
        CondPmf {
            given_size: self.cols,
            out_size: self.rows,
            rows,
        }
    }

    /// Conditional of the column variable given the row variable, `P(y|x)`.
    pub fn cond_y_given_x(&self) -> CondPmf {
        self.transposed().cond_x_given_y()
    }

    pub fn transposed(&self) -> JointPmf {
        let mut probs = vec![0.0; self.probs.len()];
        for x in 0..self.rows {
            for y in 0..self.cols {
                probs[y * self.rows + x] = self.prob(x, y);
            }
        }
        JointPmf {
            rows: self.cols,
            cols: self.rows,
            probs,
        }
    }

    /// Couple a marginal on the row variable with a conditional on the
    /// column variable: `j(x, y) = px(x) · rows[x](y)`.
    pub fn from_marginal_and_conditional(px: &Pmf, cond: &CondPmf) -> Result<Self> {
        if cond.given_size() != px.alphabet_size() {
            return Err(Error::ShapeMismatch(format!(
                "marginal over {} symbols, conditional given {}",
                px.alphabet_size(),
                cond.given_size()
            )));
        }
        let rows = px.alphabet_size();
        let cols = cond.out_size();
        let mut probs = Vec::with_capacity(rows * cols);
        for x in 0..rows {
            for y in 0..cols {
                probs.push(px.prob(x) * cond.row(x).prob(y));
            }
        }
        Ok(Self { rows, cols, probs })
    }
}

fn renormalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && (s - 1.0).abs() > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

/// A conditional pmf: one output distribution per conditioning symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondPmf {
    given_size: usize,
    out_size: usize,
    rows: Vec<Pmf>,
}

impl CondPmf {
    pub fn new(rows: Vec<Pmf>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDistribution("conditional pmf: empty".into()));
        }
        let out_size = rows[0].alphabet_size();
        for (i, r) in rows.iter().enumerate() {
            if r.alphabet_size() != out_size {
                return Err(Error::ShapeMismatch(format!(
                    "conditional pmf row {i} has {} symbols, expected {out_size}",
                    r.alphabet_size()
                )));
            }
        }
        Ok(Self {
            given_size: rows.len(),
            out_size,
            rows,
        })
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::InvalidArgument(format!(
                "crossover {crossover} outside [0, 1]"
            )));
        }
        Self::new(vec![
            Pmf::new(vec![1.0 - crossover, crossover])?,
            Pmf::new(vec![crossover, 1.0 - crossover])?,
        ])
    }

    pub fn given_size(&self) -> usize {
        self.given_size
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn row(&self, given: usize) -> &Pmf {
        &self.rows[given]
    }

    #[inline]
    pub fn prob(&self, out: usize, given: usize) -> f64 {
        self.rows[given].prob(out)
    }
}

/// A joint pmf over three finite alphabets, stored as a dense tensor with
/// the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf3 {
    dims: (usize, usize, usize),
    probs: Vec<f64>,
}

impl JointPmf3 {
    pub fn new(dims: (usize, usize, usize), probs: Vec<f64>) -> Result<Self> {
        if probs.len() != dims.0 * dims.1 * dims.2 {
            return Err(Error::ShapeMismatch(format!(
                "3-way pmf: {} entries for dims {dims:?}",
                probs.len()
            )));
        }
        check_mass(&probs, "3-way pmf")?;
        Ok(Self { dims, probs })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    pub fn prob(&self, a: usize, b: usize, c: usize) -> f64 {
        self.probs[(a * self.dims.1 + b) * self.dims.2 + c]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over the first two axes.
    pub fn marginal_ab(&self) -> JointPmf {
        let mut probs = vec![0.0; self.dims.0 * self.dims.1];
        for a in 0..self.dims.0 {
            for b in 0..self.dims.1 {
                for c in 0..self.dims.2 {
                    probs[a * self.dims.1 + b] += self.prob(a, b, c);
                }
            }
        }
        JointPmf {
            rows: self.dims.0,
            cols: self.dims.1,
            probs,
        }
    }

    /// Marginal over the first and third axes.
    pub fn marginal_ac(&self) -> JointPmf {
        let mut probs = vec![0.0; self.dims.0 * self.dims.2];
        for a in 0..self.dims.0 {
            for b in 0..self.dims.1 {
                for c in 0..self.dims.2 {
                    probs[a * self.dims.2 + c] += self.prob(a, b, c);
                }
            }
        }
        JointPmf {
            rows: self.dims.0,
            cols: self.dims.2,
            probs,
        }
    }

    /// Marginal over the second and third axes.
    pub fn marginal_bc(&self) -> JointPmf {
        let mut probs = vec![0.0; self.dims.1 * self.dims.2];
        for a in 0..self.dims.0 {
            for b in 0..self.dims.1 {
                for c in 0..self.dims.2 {
                    probs[b * self.dims.2 + c] += self.prob(a, b, c);
                }
            }
        }
        JointPmf {
            rows: self.dims.1,
            cols: self.dims.2,
            probs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.5, 0.5]).is_ok());
        assert!(JointPmf::new(2, 2, vec![0.25; 4]).is_ok());
        assert!(JointPmf::new(2, 2, vec![0.25; 3]).is_err());
    }

    #[test]
    fn dsbs_marginals_are_uniform() {
        let j = JointPmf::dsbs(0.1).unwrap();
        assert_eq!(j.x_marginal().probs(), &[0.5, 0.5]);
        assert_eq!(j.y_marginal().probs(), &[0.5, 0.5]);
        let cond = j.cond_x_given_y();
        assert!((cond.prob(0, 0) - 0.9).abs() < 1e-12);
        assert!((cond.prob(1, 0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn marginals_consistent_with_conditionals() {
        let j = JointPmf::new(2, 3, vec![0.1, 0.2, 0.05, 0.25, 0.1, 0.3]).unwrap();
        let px = j.x_marginal();
        let pyx = j.cond_y_given_x();
        let rebuilt = JointPmf::from_marginal_and_conditional(&px, &pyx).unwrap();
        for (a, b) in rebuilt.probs().iter().zip(j.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_column_gets_uniform_conditional() {
        let j = JointPmf::new(2, 2, vec![0.6, 0.0, 0.4, 0.0]).unwrap();
        let cond = j.cond_x_given_y();
        assert_eq!(cond.row(1).probs(), &[0.5, 0.5]);
    }

    #[test]
    fn tensor_marginals_sum_correctly() {
        let probs: Vec<f64> = (1..=8).map(|i| i as f64 / 36.0).collect();
        let t = JointPmf3::new((2, 2, 2), probs).unwrap();
        let ab = t.marginal_ab();
        assert!((ab.prob(0, 0) - (1.0 + 2.0) / 36.0).abs() < 1e-12);
        let ac = t.marginal_ac();
        assert!((ac.prob(1, 0) - (5.0 + 7.0) / 36.0).abs() < 1e-12);
        let bc = t.marginal_bc();
        assert!((bc.prob(0, 1) - (2.0 + 6.0) / 36.0).abs() < 1e-12);
    }
}
