//! Exact finite-blocklength quantities by full enumeration.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::codec::BinningCode;
use crate::decoders::{posterior_from_entries, DecodingMetric, KeyPosterior};
use crate::measures::Pmf;
use crate::{Error, Result};

/// Guard on `(|X||Y|)^n` for exact enumerations.
pub const MAX_EXACT_PAIRS: u64 = 1 << 24;

fn check_exact_guard(code: &BinningCode, y_size: usize) -> Result<()> {
    let pairs = (code.x_alphabet() as u128 * y_size as u128).pow(code.n());
    if pairs > MAX_EXACT_PAIRS as u128 {
        return Err(Error::GuardExceeded {
            what: "exact pair enumeration",
            count: pairs,
            limit: MAX_EXACT_PAIRS as u128,
        });
    }
    Ok(())
}

pub(crate) fn decode_rank(mut rank: u64, alphabet: u64, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = (rank % alphabet) as usize;
        rank /= alphabet;
    }
}

/// The decoder posteriors of every occupied helper bin for a fixed
/// observation, keyed by `w`. Shares the posterior construction (including
/// fallbacks) with the trial-level decoder.
pub(crate) fn posteriors_for_observation(
    code: &BinningCode,
    metric: &DecodingMetric,
    y: &[usize],
    y_size: usize,
) -> Result<BTreeMap<u32, KeyPosterior>> {
    let eval = metric.evaluator(code.x_alphabet() as usize, y_size)?;
    let tie = metric
        .is_map_limit()
        .then_some(1e-9 * code.n().max(1) as f64);
    let mut entries: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
    let mut x = vec![0usize; code.n() as usize];
    for rank in 0..code.num_vectors() {
        code.vector_of(rank, &mut x);
        let lw = eval.log_weight(&x, y);
        entries
            .entry(code.helper_of(rank))
            .or_default()
            .push((code.key_of(rank), lw));
    }
    let mut out = BTreeMap::new();
    for (w, e) in entries {
        out.insert(w, posterior_from_entries(&e, code.num_keys(), tie)?);
    }
    Ok(out)
}

/// Exact false-reject probability of one code under the stochastic
/// decoder: `Σ_{x,y} P(x,y) · (1 − P̃(g(x) | y, f(x)))`.
pub fn exact_fr(
    code: &BinningCode,
    model: &super::SourceModel,
    metric: &DecodingMetric,
) -> Result<f64> {
    if model.x_size() != code.x_alphabet() as usize {
        return Err(Error::ShapeMismatch(format!(
            "model alphabet {} vs code alphabet {}",
            model.x_size(),
            code.x_alphabet()
        )));
    }
    check_exact_guard(code, model.y_size())?;
    let n = code.n() as usize;
    let y_total = (model.y_size() as u64).pow(code.n());
    let x_total = code.num_vectors();

    // Per-y contributions computed in parallel, then summed in index order
    // so the result is independent of the thread schedule.
    let per_y: Vec<f64> = (0..y_total)
        .into_par_iter()
        .map(|y_rank| {
            let mut y = vec![0usize; n];
            decode_rank(y_rank, model.y_size() as u64, &mut y);
            let posteriors = posteriors_for_observation(code, metric, &y, model.y_size())
                .expect("guard already checked");
            let mut x = vec![0usize; n];
            let mut total = 0.0;
            for rank in 0..x_total {
                code.vector_of(rank, &mut x);
                let mut p = 1.0;
                for (&xi, &yi) in x.iter().zip(&y) {
                    p *= model.joint().prob(xi, yi);
                    if p == 0.0 {
                        break;
                    }
                }
                if p == 0.0 {
                    continue;
                }
                let w = code.helper_of(rank);
                let s = code.key_of(rank);
                let correct = posteriors[&w].prob_of(s);
                total += p * (1.0 - correct);
            }
            total
        })
        .collect();
    Ok(per_y.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Exact leakage `I(S;W)` of the joint distribution induced by pushing
/// `P_X^n` through the enrollment tables.
pub fn exact_leakage(code: &BinningCode, p_x: &Pmf) -> Result<f64> {
    if p_x.alphabet_size() != code.x_alphabet() as usize {
        return Err(Error::ShapeMismatch(format!(
            "source pmf over {} symbols, code alphabet {}",
            p_x.alphabet_size(),
            code.x_alphabet()
        )));
    }
    let n = code.n() as usize;
    // Sparse joint over (s, w): at most |X|^n occupied cells.
    let mut joint: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut x = vec![0usize; n];
    for rank in 0..code.num_vectors() {
        code.vector_of(rank, &mut x);
        let mut p = 1.0;
        for &xi in &x {
            p *= p_x.prob(xi);
            if p == 0.0 {
                break;
            }
        }
        if p == 0.0 {
            continue;
        }
        *joint
            .entry((code.key_of(rank), code.helper_of(rank)))
            .or_insert(0.0) += p;
    }
    let mut s_marg: BTreeMap<u32, f64> = BTreeMap::new();
    let mut w_marg: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(s, w), &p) in &joint {
        *s_marg.entry(s).or_insert(0.0) += p;
        *w_marg.entry(w).or_insert(0.0) += p;
    }
    let mut mi = 0.0;
    for (&(s, w), &p) in &joint {
        if p > 0.0 {
            mi += p * (p / (s_marg[&s] * w_marg[&w])).ln();
        }
    }
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{sample_code, RatePair};
    use crate::montecarlo::SourceModel;
    use std::f64::consts::LN_2;

    fn rates(r_s: f64, r_w: f64) -> RatePair {
        RatePair::new(r_s, r_w).unwrap()
    }

    #[test]
    fn single_key_means_no_false_reject() {
        let code = sample_code(3, 2, rates(0.0, 0.4), 11).unwrap();
        assert_eq!(code.num_keys(), 1);
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(1.0).unwrap();
        assert_eq!(exact_fr(&code, &model, &metric).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_matched_metric_is_error_free() {
        // Noiseless DSBS: the matched likelihood metric gives -inf weight
        // to every x' != y, so the posterior is a point mass on the true
        // key regardless of bin collisions.
        let model = SourceModel::dsbs(0.0).unwrap();
        let metric = DecodingMetric::tempered(1.0, model.p_x_given_y().clone()).unwrap();
        let code = sample_code(3, 2, rates(0.5, 0.3), 4).unwrap();
        let fr = exact_fr(&code, &model, &metric).unwrap();
        assert!(fr.abs() < 1e-12);
    }

    #[test]
    fn injective_helper_table_is_error_free_any_metric() {
        // With r_w >= ln|X| some seeds give every vector its own bin; then
        // every posterior is a point mass.
        let n = 3u32;
        let mut found = None;
        for seed in 0..200u64 {
            let code = sample_code(n, 2, rates(0.4, 1.2 * LN_2), seed).unwrap();
            let mut seen = std::collections::HashSet::new();
            if (0..code.num_vectors()).all(|r| seen.insert(code.helper_of(r))) {
                found = Some(code);
                break;
            }
        }
        let code = found.expect("some seed yields an injective helper table");
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(2.0).unwrap();
        assert_eq!(exact_fr(&code, &model, &metric).unwrap(), 0.0);
    }

    #[test]
    fn exact_fr_brute_force_oracle() {
        // Independent expansion of the definition with plain exponentials
        // at n = 2.
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::tempered(1.0, model.p_x_given_y().clone()).unwrap();
        let code = sample_code(2, 2, rates(0.5, 0.4), 77).unwrap();
        let eval = metric.evaluator(2, 2).unwrap();
        let mut oracle = 0.0;
        for y0 in 0..2usize {
            for y1 in 0..2usize {
                let y = [y0, y1];
                for x0 in 0..2usize {
                    for x1 in 0..2usize {
                        let x = [x0, x1];
                        let p = model.joint().prob(x0, y0) * model.joint().prob(x1, y1);
                        let rank = code.rank_of(&x).unwrap();
                        let (w, s) = (code.helper_of(rank), code.key_of(rank));
                        // Posterior of the true key by direct summation.
                        let mut num = 0.0;
                        let mut den = 0.0;
                        let mut xp = [0usize; 2];
                        for r in 0..code.num_vectors() {
                            if code.helper_of(r) != w {
                                continue;
                            }
                            code.vector_of(r, &mut xp);
                            let wgt = eval.log_weight(&xp, &y).exp();
                            den += wgt;
                            if code.key_of(r) == s {
                                num += wgt;
                            }
                        }
                        oracle += p * (1.0 - num / den);
                    }
                }
            }
        }
        let got = exact_fr(&code, &model, &metric).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn guard_rejects_large_exact_runs() {
        let code = sample_code(24, 2, rates(0.1, 0.1), 1).unwrap();
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(1.0).unwrap();
        assert!(matches!(
            exact_fr(&code, &model, &metric),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn leakage_degenerate_cases() {
        let p_x = Pmf::uniform(2);
        // Single key: I(S;W) = 0.
        let code = sample_code(4, 2, rates(0.0, 0.4), 5).unwrap();
        assert_eq!(exact_leakage(&code, &p_x).unwrap(), 0.0);
        // Single helper: I(S;W) = 0.
        let code = sample_code(4, 2, rates(0.4, 0.0), 5).unwrap();
        assert_eq!(exact_leakage(&code, &p_x).unwrap(), 0.0);
    }

    #[test]
    fn identical_tables_leak_the_whole_key() {
        // Overwrite the key table with the helper table through the dump
        // format: S = W deterministically, so I(S;W) = H(S).
        let code = sample_code(3, 2, rates(LN_2, LN_2), 21).unwrap();
        assert_eq!(code.num_keys(), code.num_helpers());
        let mut buf = Vec::new();
        crate::codec::write_code(&code, &mut buf).unwrap();
        let table_bytes = code.num_vectors() as usize * 4;
        let f_start = buf.len() - 2 * table_bytes;
        let (f_region, g_region) = buf[f_start..].split_at(table_bytes);
        let f_copy = f_region.to_vec();
        g_region.to_vec(); // length check only
        buf[f_start + table_bytes..].copy_from_slice(&f_copy);
        let twin = crate::codec::read_code(&buf[..]).unwrap();

        let p_x = Pmf::new(vec![0.3, 0.7]).unwrap();
        let leak = exact_leakage(&twin, &p_x).unwrap();
        // H(S) of the induced key distribution.
        let mut mass = std::collections::BTreeMap::new();
        let mut x = vec![0usize; 3];
        for rank in 0..twin.num_vectors() {
            twin.vector_of(rank, &mut x);
            let p: f64 = x.iter().map(|&xi| p_x.prob(xi)).product();
            *mass.entry(twin.key_of(rank)).or_insert(0.0) += p;
        }
        let h_s: f64 = mass.values().map(|&p| -crate::extreal::xlnx(p)).sum();
        assert!((leak - h_s).abs() < 1e-12);
    }

    #[test]
    fn leakage_bounded_by_log_alphabets() {
        let p_x = Pmf::new(vec![0.3, 0.7]).unwrap();
        for seed in 0..10u64 {
            let code = sample_code(5, 2, rates(0.25, 0.3), seed).unwrap();
            let l = exact_leakage(&code, &p_x).unwrap();
            let bound = (code.num_keys() as f64).ln().min((code.num_helpers() as f64).ln());
            assert!(l >= 0.0 && l <= bound + 1e-12, "seed {seed}: {l}");
        }
    }
}
