//! Operational verification: exact and Monte Carlo false-reject /
//! false-accept probabilities and key leakage for sampled codes, plus
//! empirical exponent fits.
//!
//! Everything is reproducible from `(config, master_seed)`: codes, trials
//! and decoder draws each live on their own derived stream, counts merge
//! order-independently, and wall-clock time is kept out of serialized
//! reports.

mod estimate;
mod exact;
mod fit;

pub use estimate::{ensemble_code, estimate_fa, estimate_fr, simulate};
pub use exact::{exact_fr, exact_leakage, MAX_EXACT_PAIRS};
pub use fit::{fit_exponent, ExponentFit};

use serde::{Deserialize, Serialize};

use crate::codec::RatePair;
use crate::measures::{CondPmf, JointPmf, Pmf, PROB_SUM_TOL};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// The discrete memoryless source emitting correlated pairs, with its
/// derived marginals and conditionals.
#[derive(Debug, Clone)]
pub struct SourceModel {
    p_xy: JointPmf,
    p_x: Pmf,
    p_y: Pmf,
    p_x_given_y: CondPmf,
    p_y_given_x: CondPmf,
    /// Flat CDF over (x, y) cells for sampling.
    cdf: Vec<f64>,
}

impl SourceModel {
    pub fn new(p_xy: JointPmf) -> Result<Self> {
        let p_x = p_xy.x_marginal();
        let p_y = p_xy.y_marginal();
        let p_x_given_y = p_xy.cond_x_given_y();
        let p_y_given_x = p_xy.cond_y_given_x();
        // Consistency of the derived objects with the joint.
        for x in 0..p_xy.rows() {
            for y in 0..p_xy.cols() {
                let rebuilt = p_x.prob(x) * p_y_given_x.prob(y, x);
                if (rebuilt - p_xy.prob(x, y)).abs() > 1e3 * PROB_SUM_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "inconsistent marginal/conditional factorization at ({x}, {y})"
                    )));
                }
            }
        }
        let mut cdf = Vec::with_capacity(p_xy.probs().len());
        let mut acc = 0.0;
        for &p in p_xy.probs() {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self {
            p_xy,
            p_x,
            p_y,
            p_x_given_y,
            p_y_given_x,
            cdf,
        })
    }

    /// Doubly symmetric binary source with the given crossover.
    pub fn dsbs(crossover: f64) -> Result<Self> {
        Self::new(JointPmf::dsbs(crossover)?)
    }

    /// Source with independent `Y` of no correlation, useful for tests.
    pub fn product(p_x: &Pmf, p_y: &Pmf) -> Result<Self> {
        Self::new(JointPmf::product(p_x, p_y))
    }

    pub fn joint(&self) -> &JointPmf {
        &self.p_xy
    }

    pub fn x_size(&self) -> usize {
        self.p_xy.rows()
    }

    pub fn y_size(&self) -> usize {
        self.p_xy.cols()
    }

    pub fn p_x(&self) -> &Pmf {
        &self.p_x
    }

    pub fn p_y(&self) -> &Pmf {
        &self.p_y
    }

    pub fn p_x_given_y(&self) -> &CondPmf {
        &self.p_x_given_y
    }

    pub fn p_y_given_x(&self) -> &CondPmf {
        &self.p_y_given_x
    }

    /// Draw one i.i.d. pair sequence of length `n` into the buffers.
    pub fn sample_pair_into(
        &self,
        rng: &mut SplitMix64,
        xs: &mut [usize],
        ys: &mut [usize],
    ) {
        debug_assert_eq!(xs.len(), ys.len());
        let cols = self.p_xy.cols();
        for i in 0..xs.len() {
            let u = rng.next_f64();
            let cell = match self
                .cdf
                .iter()
                .position(|&c| u < c)
            {
                Some(c) => c,
                None => self.cdf.len() - 1,
            };
            xs[i] = cell / cols;
            ys[i] = cell % cols;
        }
    }

    /// Draw one i.i.d. source sequence of length `n`.
    pub fn sample_x_into(&self, rng: &mut SplitMix64, xs: &mut [usize]) {
        let probs = self.p_x.probs();
        for slot in xs.iter_mut() {
            let u = rng.next_f64();
            let mut acc = 0.0;
            let mut chosen = probs.len() - 1;
            for (x, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = x;
                    break;
                }
            }
            *slot = chosen;
        }
    }
}

/// Two-sided 95% z quantile used by Wilson intervals.
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// A success-count estimate with its Wilson 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = WILSON_Z * WILSON_Z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            p_hat: p,
            lo: (center - half).max(0.0),
            hi: (center + half).min(1.0),
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        (self.lo..=self.hi).contains(&value)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// One simulation row: per `(n, rates, metric)` estimates with provenance.
///
/// Wall time is measurement-only and excluded from serialization so that
/// reports are bit-identical across replays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: u32,
    pub rates: RatePair,
    pub metric: String,
    pub num_codes: u32,
    pub trials_per_code: u64,
    pub fr: Option<Estimate>,
    pub fa: Option<Estimate>,
    /// Exact `I(S;W)` averaged over the sampled codes.
    pub leakage_nats: Option<f64>,
    pub master_seed: u64,
    #[serde(skip)]
    pub wall_time: Option<std::time::Duration>,
}
