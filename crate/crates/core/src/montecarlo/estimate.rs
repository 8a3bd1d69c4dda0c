//! Monte Carlo estimation of false-reject and false-accept probabilities.
//!
//! Stream layout: code `c` is sampled from `(master, CODE, c)`, trial `t`
//! of code `c` from `(master, FR_TRIAL | FA_TRIAL, c, t)`. Each trial
//! draws its pair first and its decoder sample second from the same
//! stream, so caching posteriors by `(y, w)` does not change any outcome.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::codec::{sample_code, BinningCode, RatePair};
use crate::decoders::{imposter_decode, DecodingMetric, KeyPosterior};
use crate::rng::{stream_seed, SplitMix64};
use crate::{Error, Result};

use super::exact::posteriors_for_observation;
use super::{Estimate, SimulationReport, SourceModel};

const STREAM_CODE: u64 = 0x20;
const STREAM_FR_TRIAL: u64 = 0x21;
const STREAM_FA_TRIAL: u64 = 0x22;

/// Sample the code of index `code_idx` in a simulation ensemble: the code
/// stream is `(master_seed, CODE, code_idx)`, shared by every estimator so
/// exact and Monte Carlo paths see the same codes.
pub fn ensemble_code(
    model: &SourceModel,
    rates: RatePair,
    n: u32,
    master_seed: u64,
    code_idx: u32,
) -> Result<BinningCode> {
    sample_code(
        n,
        model.x_size() as u32,
        rates,
        stream_seed(master_seed, &[STREAM_CODE, code_idx as u64]),
    )
}

/// Ensemble-averaged empirical false-reject probability.
///
/// Per trial: draw `(x, y)`, enroll, sample the decoder, compare keys.
pub fn estimate_fr(
    model: &SourceModel,
    rates: RatePair,
    metric: &DecodingMetric,
    n: u32,
    num_codes: u32,
    trials_per_code: u64,
    master_seed: u64,
) -> Result<SimulationReport> {
    check_counts(num_codes, trials_per_code)?;
    let start = std::time::Instant::now();
    let errors: u64 = (0..num_codes)
        .into_par_iter()
        .map(|c| {
            let code = ensemble_code(model, rates, n, master_seed, c)
                .expect("guards checked by caller");
            fr_errors_for_code(model, &code, metric, trials_per_code, master_seed, c)
        })
        .sum();
    let trials = num_codes as u64 * trials_per_code;
    Ok(SimulationReport {
        n,
        rates,
        metric: metric.to_string(),
        num_codes,
        trials_per_code,
        fr: Some(Estimate::from_counts(errors, trials)),
        fa: None,
        leakage_nats: None,
        master_seed,
        wall_time: Some(start.elapsed()),
    })
}

fn fr_errors_for_code(
    model: &SourceModel,
    code: &BinningCode,
    metric: &DecodingMetric,
    trials: u64,
    master_seed: u64,
    code_idx: u32,
) -> u64 {
    let n = code.n() as usize;
    let y_size = model.y_size() as u64;
    // Pass 1: draw all trials, recording (y_rank, w, s_true, posterior u).
    let mut draws = Vec::with_capacity(trials as usize);
    let mut xs = vec![0usize; n];
    let mut ys = vec![0usize; n];
    for t in 0..trials {
        let mut rng =
            SplitMix64::from_path(master_seed, &[STREAM_FR_TRIAL, code_idx as u64, t]);
        model.sample_pair_into(&mut rng, &mut xs, &mut ys);
        let rank = code.rank_of(&xs).expect("sampled symbols are in-alphabet");
        let (w, s) = (code.helper_of(rank), code.key_of(rank));
        let mut y_rank = 0u64;
        for &yi in ys.iter() {
            y_rank = y_rank * y_size + yi as u64;
        }
        let u = rng.next_f64();
        draws.push((y_rank, w, s, u));
    }
    // Pass 2: posteriors for the distinct (y, w) pairs actually hit.
    let mut needed: Vec<u64> = draws.iter().map(|&(y, _, _, _)| y).collect();
    needed.sort_unstable();
    needed.dedup();
    let posteriors: HashMap<u64, std::collections::BTreeMap<u32, KeyPosterior>> = needed
        .par_iter()
        .map(|&y_rank| {
            let mut y = vec![0usize; n];
            super::exact::decode_rank(y_rank, y_size, &mut y);
            let p = posteriors_for_observation(code, metric, &y, model.y_size())
                .expect("evaluator shape already validated");
            (y_rank, p)
        })
        .collect();
    // Pass 3: count errors (integer merge, order-independent).
    let mut errors = 0u64;
    for &(y_rank, w, s, u) in &draws {
        let posterior = &posteriors[&y_rank][&w];
        let decoded = sample_with(posterior, u);
        if decoded != s {
            errors += 1;
        }
    }
    errors
}

/// Inverse-CDF draw from a posterior given a pre-drawn uniform.
fn sample_with(posterior: &KeyPosterior, u: f64) -> u32 {
    let mut acc = 0.0;
    for (s, &p) in posterior.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return s as u32;
        }
    }
    (posterior.probs().len() - 1) as u32
}

/// Ensemble-averaged empirical attack-success probability of the
/// helper-only imposter (the operational false-accept rate; larger is
/// worse for the defender).
///
/// Per trial: draw `x`, enroll, run the imposter on `w` alone, compare. A
/// flagged empty bin counts as a failed attack.
pub fn estimate_fa(
    model: &SourceModel,
    rates: RatePair,
    n: u32,
    num_codes: u32,
    trials_per_code: u64,
    master_seed: u64,
) -> Result<SimulationReport> {
    check_counts(num_codes, trials_per_code)?;
    let start = std::time::Instant::now();
    let successes: u64 = (0..num_codes)
        .into_par_iter()
        .map(|c| {
            let code = ensemble_code(model, rates, n, master_seed, c)
                .expect("guards checked by caller");
            fa_successes_for_code(model, &code, trials_per_code, master_seed, c)
        })
        .sum();
    let trials = num_codes as u64 * trials_per_code;
    Ok(SimulationReport {
        n,
        rates,
        metric: "imposter(map)".into(),
        num_codes,
        trials_per_code,
        fr: None,
        fa: Some(Estimate::from_counts(successes, trials)),
        leakage_nats: None,
        master_seed,
        wall_time: Some(start.elapsed()),
    })
}

fn fa_successes_for_code(
    model: &SourceModel,
    code: &BinningCode,
    trials: u64,
    master_seed: u64,
    code_idx: u32,
) -> u64 {
    let n = code.n() as usize;
    let mut guesses: HashMap<u32, Option<u32>> = HashMap::new();
    let mut successes = 0u64;
    let mut xs = vec![0usize; n];
    for t in 0..trials {
        let mut rng =
            SplitMix64::from_path(master_seed, &[STREAM_FA_TRIAL, code_idx as u64, t]);
        model.sample_x_into(&mut rng, &mut xs);
        let rank = code.rank_of(&xs).expect("sampled symbols are in-alphabet");
        let (w, s) = (code.helper_of(rank), code.key_of(rank));
        let guess = guesses.entry(w).or_insert_with(|| {
            match imposter_decode(code, w, model.p_x()) {
                Ok(g) => Some(g),
                Err(Error::EmptyBin { .. }) => None,
                Err(e) => panic!("imposter decode failed: {e}"),
            }
        });
        if *guess == Some(s) {
            successes += 1;
        }
    }
    successes
}

/// Combined report: FR and FA estimates plus the exact leakage averaged
/// over the ensemble codes.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    model: &SourceModel,
    rates: RatePair,
    metric: &DecodingMetric,
    n: u32,
    num_codes: u32,
    trials_per_code: u64,
    master_seed: u64,
) -> Result<SimulationReport> {
    let start = std::time::Instant::now();
    let fr = estimate_fr(model, rates, metric, n, num_codes, trials_per_code, master_seed)?;
    let fa = estimate_fa(model, rates, n, num_codes, trials_per_code, master_seed)?;
    let leakage: f64 = (0..num_codes)
        .into_par_iter()
        .map(|c| {
            let code = ensemble_code(model, rates, n, master_seed, c)
                .expect("guards checked by caller");
            super::exact_leakage(&code, model.p_x()).expect("alphabets already validated")
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(SimulationReport {
        n,
        rates,
        metric: metric.to_string(),
        num_codes,
        trials_per_code,
        fr: fr.fr,
        fa: fa.fa,
        leakage_nats: Some(leakage / num_codes as f64),
        master_seed,
        wall_time: Some(start.elapsed()),
    })
}

fn check_counts(num_codes: u32, trials: u64) -> Result<()> {
    if num_codes == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "need at least one code and one trial".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::exact_fr;

    fn rates(r_s: f64, r_w: f64) -> RatePair {
        RatePair::new(r_s, r_w).unwrap()
    }

    #[test]
    fn single_key_never_rejects() {
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(1.0).unwrap();
        let rep = estimate_fr(&model, rates(0.0, 0.4), &metric, 4, 2, 500, 9).unwrap();
        assert_eq!(rep.fr.unwrap().p_hat, 0.0);
    }

    #[test]
    fn single_key_always_accepted() {
        let model = SourceModel::dsbs(0.1).unwrap();
        let rep = estimate_fa(&model, rates(0.0, 0.4), 4, 2, 500, 9).unwrap();
        assert_eq!(rep.fa.unwrap().p_hat, 1.0);
    }

    #[test]
    fn replays_are_bit_identical() {
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::tempered(1.0, model.p_x_given_y().clone()).unwrap();
        let a = simulate(&model, rates(0.4, 0.4), &metric, 4, 3, 400, 123).unwrap();
        let b = simulate(&model, rates(0.4, 0.4), &metric, 4, 3, 400, 123).unwrap();
        assert_eq!(a.fr, b.fr);
        assert_eq!(a.fa, b.fa);
        assert_eq!(a.leakage_nats, b.leakage_nats);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn ci_width_shrinks_with_doubled_trials() {
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(2.0).unwrap();
        let small = estimate_fr(&model, rates(0.4, 0.4), &metric, 4, 2, 2_000, 5).unwrap();
        let large = estimate_fr(&model, rates(0.4, 0.4), &metric, 4, 2, 8_000, 5).unwrap();
        let ratio = large.fr.unwrap().width() / small.fr.unwrap().width();
        // Quadrupled trials: width ratio near 1/2.
        assert!(ratio > 0.35 && ratio < 0.65, "ratio {ratio}");
    }

    #[test]
    fn estimate_covers_exact_value_single_code() {
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(2.0).unwrap();
        let code = ensemble_code(&model, rates(0.4, 0.4), 4, 31, 0).unwrap();
        let exact = exact_fr(&code, &model, &metric).unwrap();
        let rep = estimate_fr(&model, rates(0.4, 0.4), &metric, 4, 1, 40_000, 31).unwrap();
        let est = rep.fr.unwrap();
        assert!(
            est.covers(exact),
            "exact {exact} outside [{}, {}]",
            est.lo,
            est.hi
        );
    }

    #[test]
    fn key_relabeling_leaves_estimates_statistically_unchanged() {
        // Relabeled keys permute per-draw outcomes, so the counts move
        // within noise; the two estimates must overlap in CI.
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::min_entropy(2.0).unwrap();
        let code = ensemble_code(&model, rates(0.4, 0.4), 4, 8, 0).unwrap();
        let mut buf = Vec::new();
        crate::codec::write_code(&code, &mut buf).unwrap();
        let table_bytes = code.num_vectors() as usize * 4;
        let g_start = buf.len() - table_bytes;
        let m_s = code.num_keys() as u32;
        for i in 0..code.num_vectors() as usize {
            let o = g_start + 4 * i;
            let v = u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
            buf[o..o + 4].copy_from_slice(&((v + 1) % m_s).to_le_bytes());
        }
        let relabeled = crate::codec::read_code(&buf[..]).unwrap();

        let trials = 40_000u64;
        let a = fr_errors_for_code(&model, &code, &metric, trials, 5, 0);
        let b = fr_errors_for_code(&model, &relabeled, &metric, trials, 5, 0);
        let ea = Estimate::from_counts(a, trials);
        let eb = Estimate::from_counts(b, trials);
        assert!(
            ea.lo <= eb.hi && eb.lo <= ea.hi,
            "estimates diverged: [{}, {}] vs [{}, {}]",
            ea.lo,
            ea.hi,
            eb.lo,
            eb.hi
        );
    }

    #[test]
    fn key_relabeling_leaves_exact_fr_unchanged() {
        // Permuting the key alphabet permutes the posterior; the reject
        // probability is label-invariant.
        let model = SourceModel::dsbs(0.1).unwrap();
        let metric = DecodingMetric::tempered(1.0, model.p_x_given_y().clone()).unwrap();
        let code = ensemble_code(&model, rates(0.4, 0.4), 4, 8, 0).unwrap();
        let base = exact_fr(&code, &model, &metric).unwrap();

        // Relabel keys through the dump format: s -> (s + 1) mod m_s.
        let mut buf = Vec::new();
        crate::codec::write_code(&code, &mut buf).unwrap();
        let table_bytes = code.num_vectors() as usize * 4;
        let g_start = buf.len() - table_bytes;
        let m_s = code.num_keys() as u32;
        for i in 0..code.num_vectors() as usize {
            let o = g_start + 4 * i;
            let v = u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
            buf[o..o + 4].copy_from_slice(&((v + 1) % m_s).to_le_bytes());
        }
        let relabeled = crate::codec::read_code(&buf[..]).unwrap();
        let permuted = exact_fr(&relabeled, &model, &metric).unwrap();
        assert!((base - permuted).abs() < 1e-15);
    }
}
