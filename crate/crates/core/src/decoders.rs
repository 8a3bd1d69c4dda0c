//! The generalized stochastic likelihood decoder family, its MAP limit, and
//! the helper-only imposter estimator.
//!
//! A decoder is parameterized by a *decoding metric* `a(·)`, a function of
//! the joint empirical distribution of a candidate source vector and the
//! observation. Given `(y, w)` the decoder samples a key estimate from the
//! posterior proportional to `Σ_{x': f(x')=w, g(x')=s} exp{n·a(P̂_{x'y})}`.
//!
//! Zero-probability corner cases are resolved deterministically and flagged:
//! candidate vectors whose metric is `-∞` contribute zero weight; a bin whose
//! members are all at `-∞` falls back to a multiplicity-weighted posterior;
//! an empty helper bin yields a flagged uniform posterior. Ties always break
//! toward the smallest key index.

use std::collections::BTreeMap;
use std::fmt;

use crate::codec::BinningCode;
use crate::extreal::log_sum_exp2;
use crate::measures::{CondPmf, JointPmf, Pmf};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Guard on dense per-key posterior vectors.
const MAX_KEYS_DENSE: u64 = 1 << 24;

/// Key-tie tolerance of the MAP-limit posterior, per symbol of blocklength.
const MAP_TIE_EPS_PER_SYMBOL: f64 = 1e-9;

/// The decoding metric `a(·)` selecting a member of the decoder family.
///
/// `channel` rows are indexed by the observation symbol and hold a
/// distribution over source symbols (`P(x|y)` or a mismatched `P'(x|y)`).
#[derive(Debug, Clone, PartialEq)]
pub enum DecodingMetric {
    /// `a(q) = β · Σ q(x,y) ln P(x|y)`; `β = 1` is the plain likelihood
    /// decoder, `β → ∞` the MAP decoder.
    TemperedLikelihood { beta: f64, channel: CondPmf },
    /// Same form with a channel different from the source's.
    Mismatched { beta: f64, channel: CondPmf },
    /// `a(q) = -β · H_q(X|Y)`; large `β` approaches universal
    /// minimum-entropy decoding.
    MinEntropy { beta: f64 },
    /// The `β → ∞` limit of `base`: the posterior concentrates on the keys
    /// of the candidates maximizing the base metric.
    MapLimit { base: Box<DecodingMetric> },
}

impl DecodingMetric {
    pub fn tempered(beta: f64, channel: CondPmf) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::TemperedLikelihood { beta, channel })
    }

    pub fn mismatched(beta: f64, channel: CondPmf) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::Mismatched { beta, channel })
    }

    pub fn min_entropy(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::MinEntropy { beta })
    }

    pub fn map_limit(base: DecodingMetric) -> Result<Self> {
        if matches!(base, Self::MapLimit { .. }) {
            return Err(Error::InvalidArgument(
                "map_limit of map_limit is redundant".into(),
            ));
        }
        Ok(Self::MapLimit {
            base: Box::new(base),
        })
    }

    pub fn is_map_limit(&self) -> bool {
        matches!(self, Self::MapLimit { .. })
    }

    /// Evaluate `a(q)` on a joint distribution over `X × Y`.
    ///
    /// For the MAP limit this returns the base metric: the limit rescales
    /// the metric without changing its ordering, and consumers handle the
    /// concentration explicitly.
    pub fn value(&self, q: &JointPmf) -> f64 {
        match self {
            Self::TemperedLikelihood { beta, channel }
            | Self::Mismatched { beta, channel } => beta * expected_log_channel(q, channel),
            Self::MinEntropy { beta } => {
                -beta * crate::measures::cond_entropy(q)
            }
            Self::MapLimit { base } => base.value(q),
        }
    }

    /// The β-stripped direction functional of the metric (its value at
    /// `β = 1`); this is what survives as a constraint in β → ∞ limits.
    pub fn direction_value(&self, q: &JointPmf) -> f64 {
        match self {
            Self::TemperedLikelihood { channel, .. } | Self::Mismatched { channel, .. } => {
                expected_log_channel(q, channel)
            }
            Self::MinEntropy { .. } => -crate::measures::cond_entropy(q),
            Self::MapLimit { base } => base.direction_value(q),
        }
    }

    /// Compile the metric into a per-sequence evaluator of `n·a(P̂_{xy})`.
    pub fn evaluator(&self, x_alphabet: usize, y_alphabet: usize) -> Result<MetricEvaluator> {
        let kind = match self {
            Self::TemperedLikelihood { beta, channel } | Self::Mismatched { beta, channel } => {
                check_channel(channel, x_alphabet, y_alphabet)?;
                let mut ln_chan = vec![0.0f64; x_alphabet * y_alphabet];
                for y in 0..y_alphabet {
                    for x in 0..x_alphabet {
                        let p = channel.prob(x, y);
                        ln_chan[y * x_alphabet + x] =
                            if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
                    }
                }
                EvalKind::Linear {
                    beta: *beta,
                    ln_chan,
                }
            }
            Self::MinEntropy { beta } => EvalKind::CondEntropy { beta: *beta },
            Self::MapLimit { base } => {
                return base.evaluator(x_alphabet, y_alphabet);
            }
        };
        Ok(MetricEvaluator {
            x_alphabet,
            y_alphabet,
            kind,
        })
    }
}

impl fmt::Display for DecodingMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TemperedLikelihood { beta, .. } => write!(f, "tempered(beta={beta})"),
            Self::Mismatched { beta, .. } => write!(f, "mismatched(beta={beta})"),
            Self::MinEntropy { beta } => write!(f, "min_entropy(beta={beta})"),
            Self::MapLimit { base } => write!(f, "map_limit({base})"),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} must be finite and positive"
        )));
    }
    Ok(())
}

fn check_channel(channel: &CondPmf, x_alphabet: usize, y_alphabet: usize) -> Result<()> {
    if channel.given_size() != y_alphabet || channel.out_size() != x_alphabet {
        return Err(Error::ShapeMismatch(format!(
            "metric channel is ({} given {}), decoder needs ({x_alphabet} given {y_alphabet})",
            channel.out_size(),
            channel.given_size()
        )));
    }
    Ok(())
}

fn expected_log_channel(q: &JointPmf, channel: &CondPmf) -> f64 {
    let mut total = 0.0;
    for x in 0..q.rows() {
        for y in 0..q.cols() {
            let mass = q.prob(x, y);
            if mass == 0.0 {
                continue;
            }
            let p = channel.prob(x, y);
            if p == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += mass * p.ln();
        }
    }
    total
}

enum EvalKind {
    Linear { beta: f64, ln_chan: Vec<f64> },
    CondEntropy { beta: f64 },
}

/// Precompiled metric: evaluates `n · a(P̂_{xy})` for concrete sequences.
pub struct MetricEvaluator {
    x_alphabet: usize,
    y_alphabet: usize,
    kind: EvalKind,
}

impl MetricEvaluator {
    /// `n · a(P̂_{xy})` for the sequence pair; `-∞` when the metric hits a
    /// log of zero.
    pub fn log_weight(&self, xs: &[usize], ys: &[usize]) -> f64 {
        debug_assert_eq!(xs.len(), ys.len());
        match &self.kind {
            EvalKind::Linear { beta, ln_chan } => {
                let mut total = 0.0;
                for (&x, &y) in xs.iter().zip(ys) {
                    let v = ln_chan[y * self.x_alphabet + x];
                    if v == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    total += v;
                }
                beta * total
            }
            EvalKind::CondEntropy { beta } => {
                let mut counts = vec![0u32; self.x_alphabet * self.y_alphabet];
                let mut y_counts = vec![0u32; self.y_alphabet];
                for (&x, &y) in xs.iter().zip(ys) {
                    counts[x * self.y_alphabet + y] += 1;
                    y_counts[y] += 1;
                }
                // n·Ĥ(X|Y) = Σ_y c_y ln c_y − Σ_{x,y} c_{xy} ln c_{xy}
                let mut n_h = 0.0;
                for &c in &y_counts {
                    if c > 1 {
                        n_h += c as f64 * (c as f64).ln();
                    }
                }
                for &c in &counts {
                    if c > 1 {
                        n_h -= c as f64 * (c as f64).ln();
                    }
                }
                -beta * n_h.max(0.0)
            }
        }
    }
}

/// Why a posterior is not the plain metric-weighted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorFallback {
    /// Regular posterior.
    None,
    /// The helper bin contained no source vector; posterior is uniform.
    EmptyBin,
    /// Every bin member had metric `-∞`; posterior is multiplicity-weighted.
    AllNegInfMetric,
}

/// Posterior over the key alphabet for a given `(y, w)`.
#[derive(Debug, Clone)]
pub struct KeyPosterior {
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    fallback: PosteriorFallback,
}

impl KeyPosterior {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Extended-real log numerator masses, one per key. In the MAP limit
    /// these are log multiplicities of the metric-argmax set (the common
    /// diverging scale cancels in the posterior).
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn fallback(&self) -> PosteriorFallback {
        self.fallback
    }

    pub fn prob_of(&self, key: u32) -> f64 {
        self.probs[key as usize]
    }

    /// Inverse-CDF sample.
    pub fn sample(&self, rng: &mut SplitMix64) -> u32 {
        let u = rng.next_f64();
        let mut acc = 0.0;
        for (s, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return s as u32;
            }
        }
        (self.probs.len() - 1) as u32
    }
}

/// Normalize per-key log weights into a posterior.
///
/// `entries` are `(key, n·a)` pairs for the members of one helper bin, in
/// deterministic (rank) order. `map_tie_eps` switches on the MAP-limit
/// semantics: weight concentrates on the argmax set of the metric, keys
/// weighted by their multiplicity within `map_tie_eps` of the maximum.
pub(crate) fn posterior_from_entries(
    entries: &[(u32, f64)],
    num_keys: u64,
    map_tie_eps: Option<f64>,
) -> Result<KeyPosterior> {
    if num_keys > MAX_KEYS_DENSE {
        return Err(Error::GuardExceeded {
            what: "dense key posterior",
            count: num_keys as u128,
            limit: MAX_KEYS_DENSE as u128,
        });
    }
    let m_s = num_keys as usize;
    if entries.is_empty() {
        let p = 1.0 / m_s as f64;
        return Ok(KeyPosterior {
            log_weights: vec![f64::NEG_INFINITY; m_s],
            probs: vec![p; m_s],
            fallback: PosteriorFallback::EmptyBin,
        });
    }

    let mut log_weights = vec![f64::NEG_INFINITY; m_s];
    if let Some(eps) = map_tie_eps {
        let vmax = entries
            .iter()
            .map(|&(_, lw)| lw)
            .fold(f64::NEG_INFINITY, f64::max);
        if vmax > f64::NEG_INFINITY {
            let mut mult = vec![0u64; m_s];
            for &(s, lw) in entries {
                if lw >= vmax - eps {
                    mult[s as usize] += 1;
                }
            }
            for (s, &c) in mult.iter().enumerate() {
                if c > 0 {
                    log_weights[s] = (c as f64).ln();
                }
            }
            let probs = probs_from_log_weights(&log_weights);
            return Ok(KeyPosterior {
                log_weights,
                probs,
                fallback: PosteriorFallback::None,
            });
        }
        // All -inf: fall through to the multiplicity fallback below.
    } else {
        let mut any_finite = false;
        for &(s, lw) in entries {
            if lw == f64::NEG_INFINITY {
                continue;
            }
            any_finite = true;
            let slot = &mut log_weights[s as usize];
            *slot = log_sum_exp2(*slot, lw);
        }
        if any_finite {
            let probs = probs_from_log_weights(&log_weights);
            return Ok(KeyPosterior {
                log_weights,
                probs,
                fallback: PosteriorFallback::None,
            });
        }
    }

    // Whole bin at -inf: metric-free multiplicity posterior, flagged.
    let mut mult = vec![0u64; m_s];
    for &(s, _) in entries {
        mult[s as usize] += 1;
    }
    let mut log_weights = vec![f64::NEG_INFINITY; m_s];
    for (s, &c) in mult.iter().enumerate() {
        if c > 0 {
            log_weights[s] = (c as f64).ln();
        }
    }
    let probs = probs_from_log_weights(&log_weights);
    Ok(KeyPosterior {
        log_weights,
        probs,
        fallback: PosteriorFallback::AllNegInfMetric,
    })
}

fn probs_from_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let vmax = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(vmax > f64::NEG_INFINITY);
    let unnorm: Vec<f64> = log_weights.iter().map(|&lw| (lw - vmax).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    unnorm.iter().map(|&u| u / total).collect()
}

/// Per-bin `(key, n·a)` entries for every member of helper bin `w` given
/// the observation `y`, in rank order.
fn bin_entries(
    code: &BinningCode,
    eval: &MetricEvaluator,
    y: &[usize],
    w: u32,
) -> Result<Vec<(u32, f64)>> {
    if y.len() != code.n() as usize {
        return Err(Error::LengthMismatch(y.len(), code.n() as usize));
    }
    let mut entries = Vec::new();
    let mut x = vec![0usize; code.n() as usize];
    for rank in 0..code.num_vectors() {
        if code.helper_of(rank) != w {
            continue;
        }
        code.vector_of(rank, &mut x);
        entries.push((code.key_of(rank), eval.log_weight(&x, y)));
    }
    Ok(entries)
}

fn map_tie_eps_for(metric: &DecodingMetric, n: u32) -> Option<f64> {
    metric
        .is_map_limit()
        .then_some(MAP_TIE_EPS_PER_SYMBOL * n.max(1) as f64)
}

/// The decoder's posterior over keys given `(y, w)`.
pub fn key_posterior(
    code: &BinningCode,
    metric: &DecodingMetric,
    y: &[usize],
    y_alphabet: usize,
    w: u32,
) -> Result<KeyPosterior> {
    let eval = metric.evaluator(code.x_alphabet() as usize, y_alphabet)?;
    let entries = bin_entries(code, &eval, y, w)?;
    posterior_from_entries(&entries, code.num_keys(), map_tie_eps_for(metric, code.n()))
}

/// Sample a key estimate from the decoder posterior.
///
/// Fails with [`Error::EmptyBin`] when the helper bin has no members; this
/// can only happen for `w` values not produced by enrollment.
pub fn stochastic_decode(
    code: &BinningCode,
    metric: &DecodingMetric,
    y: &[usize],
    y_alphabet: usize,
    w: u32,
    rng: &mut SplitMix64,
) -> Result<u32> {
    let posterior = key_posterior(code, metric, y, y_alphabet, w)?;
    if posterior.fallback() == PosteriorFallback::EmptyBin {
        return Err(Error::EmptyBin { w });
    }
    Ok(posterior.sample(rng))
}

/// Deterministic MAP estimate of the key: maximizes the total posterior
/// source mass `Σ_{x': f(x')=w, g(x')=s} P(x'|y)` over keys, ties to the
/// smallest key index.
pub fn map_decode(
    code: &BinningCode,
    p_x_given_y: &CondPmf,
    y: &[usize],
    w: u32,
) -> Result<u32> {
    check_channel(
        p_x_given_y,
        code.x_alphabet() as usize,
        p_x_given_y.given_size(),
    )?;
    let eval = MetricEvaluator {
        x_alphabet: code.x_alphabet() as usize,
        y_alphabet: p_x_given_y.given_size(),
        kind: EvalKind::Linear {
            beta: 1.0,
            ln_chan: log_channel_table(p_x_given_y),
        },
    };
    let entries = bin_entries(code, &eval, y, w)?;
    argmax_key(&entries, w)
}

/// The imposter's helper-only estimate: maximizes
/// `Σ_{x: f(x)=w, g(x)=s} P(x)` over keys, ties to the smallest index.
pub fn imposter_decode(code: &BinningCode, w: u32, p_x: &Pmf) -> Result<u32> {
    if p_x.alphabet_size() != code.x_alphabet() as usize {
        return Err(Error::ShapeMismatch(format!(
            "source pmf over {} symbols, code alphabet {}",
            p_x.alphabet_size(),
            code.x_alphabet()
        )));
    }
    let ln_p: Vec<f64> = p_x
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut entries = Vec::new();
    let mut x = vec![0usize; code.n() as usize];
    for rank in 0..code.num_vectors() {
        if code.helper_of(rank) != w {
            continue;
        }
        code.vector_of(rank, &mut x);
        let mut lw = 0.0;
        for &sym in &x {
            let v = ln_p[sym];
            if v == f64::NEG_INFINITY {
                lw = f64::NEG_INFINITY;
                break;
            }
            lw += v;
        }
        entries.push((code.key_of(rank), lw));
    }
    argmax_key(&entries, w)
}

fn log_channel_table(channel: &CondPmf) -> Vec<f64> {
    let mut ln_chan = vec![0.0f64; channel.out_size() * channel.given_size()];
    for y in 0..channel.given_size() {
        for x in 0..channel.out_size() {
            let p = channel.prob(x, y);
            ln_chan[y * channel.out_size() + x] =
                if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
    }
    ln_chan
}

/// Arg-max of per-key accumulated log mass; keys scanned in increasing
/// index so exact ties keep the smallest.
fn argmax_key(entries: &[(u32, f64)], w: u32) -> Result<u32> {
    if entries.is_empty() {
        return Err(Error::EmptyBin { w });
    }
    let mut per_key: BTreeMap<u32, f64> = BTreeMap::new();
    for &(s, lw) in entries {
        let slot = per_key.entry(s).or_insert(f64::NEG_INFINITY);
        *slot = log_sum_exp2(*slot, lw);
    }
    let mut best_key = u32::MAX;
    let mut best = f64::NEG_INFINITY;
    let mut any_finite = false;
    for (&s, &lw) in &per_key {
        if lw > best {
            best = lw;
            best_key = s;
            any_finite = any_finite || lw > f64::NEG_INFINITY;
        }
    }
    if !any_finite {
        // Every candidate has zero mass; deterministic arbitrary choice.
        best_key = *per_key.keys().next().expect("non-empty");
    }
    Ok(best_key)
}
