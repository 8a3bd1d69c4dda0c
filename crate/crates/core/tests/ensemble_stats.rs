//! Statistical checks of the random-binning ensemble across many seeds:
//! uniformity of bin assignments and the binomial law of type-class
//! occupancy.

use binauth::codec::{bin_occupancy, sample_code, RatePair};
use binauth::montecarlo::{ensemble_code, estimate_fr, exact_fr, SourceModel};
use std::f64::consts::LN_2;

/// Chi-square critical value, df = 3, p = 0.001.
const CHI2_DF3_P001: f64 = 16.266;
/// Chi-square critical value, df = 15, p = 0.001.
const CHI2_DF15_P001: f64 = 37.697;

#[test]
fn helper_bins_uniform_across_seeds() {
    // n = 2 at r_w = ln 2 gives exactly 4 helper bins; the bin of a fixed
    // vector across 10^4 independent codes is uniform (chi-square).
    let rates = RatePair::new(0.0, LN_2).unwrap();
    let mut counts = [0u64; 4];
    let draws = 10_000u64;
    for seed in 0..draws {
        let code = sample_code(2, 2, rates, seed).unwrap();
        counts[code.helper_of(1) as usize] += 1;
    }
    let expected = draws as f64 / 4.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < CHI2_DF3_P001, "chi2 = {chi2}");
}

#[test]
fn joint_bin_index_uniform_over_product_alphabet() {
    // n = 2, r_s = r_w = ln 2: the (w, s) pair of a fixed vector is
    // uniform over 16 cells across seeds.
    let rates = RatePair::new(LN_2, LN_2).unwrap();
    let mut counts = [0u64; 16];
    let draws = 10_000u64;
    for seed in 0..draws {
        let code = sample_code(2, 2, rates, seed).unwrap();
        let rank = 2u64;
        let cell = code.helper_of(rank) * 4 + code.key_of(rank);
        counts[cell as usize] += 1;
    }
    let expected = draws as f64 / 16.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < CHI2_DF15_P001, "chi2 = {chi2}");
}

#[test]
fn occupancy_is_binomial_in_mean_and_variance() {
    // Conditional class of 4 members at n = 4, m_w = 4: occupancy across
    // seeds is Binomial(4, 1/4). Mean and variance checked within 4σ of
    // their own sampling distributions, with exact binomial moments
    // enumerated in place as the oracle.
    let r_w = 4f64.ln() / 4.0;
    let rates = RatePair::new(0.0, r_w).unwrap();
    let y = [0usize, 0, 1, 1];
    let joint = [1u64, 1, 1, 1];
    let trials = 4.0f64;
    let p = 0.25f64;

    let seeds = 1500u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for seed in 0..seeds {
        let code = sample_code(4, 2, rates, seed).unwrap();
        let occ = bin_occupancy(&code, &joint, &y, 2, 1).unwrap() as f64;
        sum += occ;
        sum_sq += occ * occ;
    }
    let k = seeds as f64;
    let mean = sum / k;
    let var = (sum_sq - k * mean * mean) / (k - 1.0);

    // Exact binomial moments by enumeration.
    let mut mu = 0.0;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for i in 0..=4u32 {
        let prob = binomial_pmf(4, i, p);
        mu += prob * i as f64;
    }
    for i in 0..=4u32 {
        let prob = binomial_pmf(4, i, p);
        let d = i as f64 - mu;
        m2 += prob * d * d;
        m4 += prob * d * d * d * d;
    }
    assert!((mu - trials * p).abs() < 1e-12);

    let mean_sigma = (m2 / k).sqrt();
    assert!(
        (mean - mu).abs() <= 4.0 * mean_sigma,
        "mean {mean} vs {mu} (4σ = {})",
        4.0 * mean_sigma
    );
    let var_sigma = ((m4 - m2 * m2) / k).sqrt();
    assert!(
        (var - m2).abs() <= 4.0 * var_sigma,
        "variance {var} vs {m2} (4σ = {})",
        4.0 * var_sigma
    );
}

fn binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    let mut choose = 1.0;
    for i in 0..k {
        choose = choose * (n - i) as f64 / (i + 1) as f64;
    }
    choose * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

#[test]
fn wilson_interval_covers_exact_fr_in_ninety_percent_of_runs() {
    // CI coverage at n = 4: the exact value must fall inside the 95%
    // Wilson interval in at least 90% of 50 seeded repetitions.
    let model = SourceModel::dsbs(0.1).unwrap();
    let rates = RatePair::new(0.3, 0.35).unwrap();
    let metric =
        binauth::decoders::DecodingMetric::tempered(1.0, model.p_x_given_y().clone()).unwrap();
    let mut covered = 0u32;
    for rep in 0..50u64 {
        let code = ensemble_code(&model, rates, 4, rep, 0).unwrap();
        let exact = exact_fr(&code, &model, &metric).unwrap();
        let est = estimate_fr(&model, rates, &metric, 4, 1, 20_000, rep)
            .unwrap()
            .fr
            .unwrap();
        if est.covers(exact) {
            covered += 1;
        }
    }
    assert!(covered >= 45, "coverage {covered}/50");
}

#[test]
fn fa_decay_slope_stays_below_its_exponent() {
    // The imposter's success probability decays no faster than the
    // single-letter exponent predicts (the exponent upper-bounds the
    // ensemble decay, so the finite-n fitted slope sits below it).
    let model = SourceModel::dsbs(0.1).unwrap();
    let rates = RatePair::new(0.4, 0.3).unwrap();
    let e_fa = binauth::exponents::fa_exponent_types(
        model.p_x(),
        0.3,
        0.4,
        &binauth::exponents::GridOpts::with_resolution(60),
    )
    .unwrap()
    .value;
    let mut pts = Vec::new();
    for n in [4u32, 6, 8, 10] {
        let rep = binauth::montecarlo::estimate_fa(&model, rates, n, 10, 20_000, 2024).unwrap();
        pts.push((n, rep.fa.unwrap().p_hat));
    }
    let fit = binauth::montecarlo::fit_exponent(&pts).unwrap();
    assert!(
        fit.slope <= e_fa + 2.0 * fit.stderr + 0.02,
        "slope {} vs exponent {e_fa}",
        fit.slope
    );
}

#[test]
fn huge_helper_rate_makes_attacks_succeed() {
    // With every source vector in its own helper bin, the helper message
    // identifies the enrolled vector and the imposter recovers the key.
    let model = SourceModel::dsbs(0.1).unwrap();
    let rates = RatePair::new(0.4, 2.0 * LN_2).unwrap();
    let rep = binauth::montecarlo::estimate_fa(&model, rates, 4, 5, 2_000, 7).unwrap();
    let fa = rep.fa.unwrap();
    assert!(fa.p_hat > 0.9, "attack success {}", fa.p_hat);
}
