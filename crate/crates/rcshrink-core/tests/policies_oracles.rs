//! Threshold-policy oracles: the FDR step-up rule against an independent
//! enumeration, SURE against brute force over every candidate, and CV against
//! an exhaustive grid on its own objective.

use rcshrink_core::dwt::Boundary;
use rcshrink_core::policies::{
    cv_objective, cv_threshold, estimate_sigma, fdr_threshold, sure_objective, sure_threshold,
    universal_threshold, PolicyKind, PolicyScope, ThresholdPolicy,
};
use rcshrink_core::rng::{NoiseStream, TAG_NOISE};
use rcshrink_core::signals::rescale_to_sd;
use rcshrink_core::special::{norm_cdf, norm_quantile};
use rcshrink_core::{build_filter, dj_function, forward, select_threshold, DjFunction};

/// Independent FDR enumeration: sort the two-sided p-values, take the largest
/// k with p_(k) ≤ (k/m)·q, and invert that p-value back to a magnitude.
fn fdr_by_enumeration(details: &[f64], sigma: f64, q: f64) -> Option<f64> {
    let m = details.len();
    let mut ps: Vec<f64> = details.iter().map(|&d| 2.0 * norm_cdf(-d.abs() / sigma)).collect();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for k in (1..=m).rev() {
        let p = ps[k - 1];
        if p <= k as f64 / m as f64 * q {
            return Some(-sigma * norm_quantile(0.5 * p));
        }
    }
    None
}

/// A deterministic value spread for oracle inputs, scale-free in [−4, 4).
fn lcg_values(n: usize, mut state: u64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 8.0 - 4.0
        })
        .collect()
}

#[test]
fn fdr_matches_the_step_up_enumeration_on_a_lone_spike() {
    let mut details = vec![0.0; 100];
    details[37] = 10.0;
    let lambda = fdr_threshold(&details, 1.0, 0.05).unwrap();
    let oracle = fdr_by_enumeration(&details, 1.0, 0.05).unwrap();
    assert_eq!(lambda, oracle, "identical rule, identical arithmetic");
    assert!(lambda > 0.0 && lambda <= 10.0);
    // k* is the spike itself, so λ inverts back to its magnitude.
    assert!((lambda - 10.0).abs() < 1e-8, "λ = {lambda}");
}

#[test]
fn fdr_matches_enumeration_on_generic_data_and_ties_to_a_magnitude() {
    let mut details = lcg_values(256, 99);
    for (i, d) in details.iter_mut().enumerate().take(20) {
        *d += if i % 2 == 0 { 5.0 } else { -5.0 };
    }
    let lambda = fdr_threshold(&details, 1.0, 0.05).unwrap();
    let oracle = fdr_by_enumeration(&details, 1.0, 0.05).unwrap();
    assert_eq!(lambda, oracle);
    // The inverted p-value is some coefficient's standardized magnitude.
    let nearest = details
        .iter()
        .map(|d| (d.abs() - lambda).abs())
        .fold(f64::INFINITY, f64::min);
    assert!(nearest < 1e-8, "λ = {lambda} sits {nearest} from the closest |d|");
}

#[test]
fn fdr_is_scale_invariant() {
    let details = lcg_values(128, 7);
    let spiked: Vec<f64> = details.iter().map(|d| d * 2.5).collect();
    let base = fdr_threshold(&spiked, 1.0, 0.05).unwrap();
    let scaled: Vec<f64> = spiked.iter().map(|d| 3.0 * d).collect();
    let tripled = fdr_threshold(&scaled, 3.0, 0.05).unwrap();
    assert!(
        (tripled - 3.0 * base).abs() < 1e-10 * base.abs().max(1.0),
        "{tripled} vs 3·{base}"
    );
}

#[test]
fn fdr_threshold_weakly_decreases_in_q() {
    let mut details = lcg_values(128, 23);
    for (i, d) in details.iter_mut().enumerate().take(8) {
        *d = 4.0 + i as f64 * 0.8;
    }
    let mut last = f64::INFINITY;
    for q in [0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5] {
        let lambda = fdr_threshold(&details, 1.0, q).unwrap();
        assert!(lambda <= last + 1e-12, "λ({q}) = {lambda} rose above {last}");
        last = lambda;
    }
}

#[test]
fn fdr_falls_back_to_universal_when_nothing_rejects() {
    let details = vec![0.1, -0.05, 0.2, 0.0];
    let lambda = fdr_threshold(&details, 1.0, 0.05).unwrap();
    assert_eq!(lambda, universal_threshold(1.0, 4).unwrap());
}

#[test]
fn sure_minimizer_matches_brute_force_over_every_candidate() {
    let sigma = 1.0;
    let details: Vec<f64> = lcg_values(64, 41).iter().map(|d| d * 2.2).collect();

    // Confirm we exercise the dense branch, not the sparse fallback.
    let mean_square = details.iter().map(|d| d * d).sum::<f64>() / 64.0;
    assert!(mean_square - 1.0 > 64f64.log2().powf(1.5) / 8.0);

    let mut candidates: Vec<f64> = details.iter().map(|d| d.abs()).collect();
    candidates.push(0.0);
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (f64::INFINITY, 0.0);
    for &t in &candidates {
        // Brute force exactly as the published formula reads.
        let kept = details.iter().filter(|d| d.abs() <= t).count() as f64;
        let penalty: f64 = details.iter().map(|d| (d * d).min(t * t)).sum();
        let objective = 64.0 * sigma * sigma - 2.0 * sigma * sigma * kept + penalty;
        assert_eq!(
            objective,
            sure_objective(&details, sigma, t),
            "objective mismatch at t = {t}"
        );
        if objective < best.0 {
            best = (objective, t);
        }
    }
    assert_eq!(sure_threshold(&details, sigma).unwrap(), best.1);
}

#[test]
fn sure_falls_back_to_universal_on_sparse_levels() {
    let details = vec![0.0; 32];
    let lambda = sure_threshold(&details, 2.0).unwrap();
    assert!((lambda - 2.0 * (2.0 * 32f64.ln()).sqrt()).abs() < 1e-12);
}

#[test]
fn sure_by_level_selection_matches_per_level_thresholds() {
    let filter = build_filter(4).unwrap();
    let mut stream = NoiseStream::new(11, 1, 0, TAG_NOISE);
    let noisy: Vec<f64> = stream.standard_normal_vec(128).iter().map(|z| 3.0 * z).collect();
    let dec = forward(&noisy, &filter, 3, Boundary::Periodic).unwrap();
    let sigma = estimate_sigma(&dec).unwrap();

    let policy = ThresholdPolicy::new(PolicyKind::Sure).with_scope(PolicyScope::ByLevel);
    let lambdas = select_threshold(&dec, &policy, sigma, &filter).unwrap();
    assert_eq!(lambdas.len(), 4);
    for (j, level) in dec.levels() {
        assert_eq!(lambdas[&j], sure_threshold(level, sigma).unwrap(), "level {j}");
    }
}

#[test]
fn cv_stays_within_five_percent_of_the_grid_oracle_on_pure_noise() {
    let filter = build_filter(10).unwrap();
    let mut stream = NoiseStream::new(2024, 5, 0, TAG_NOISE);
    let noisy = stream.standard_normal_vec(512);
    let j0 = 3;

    let dec = forward(&noisy, &filter, j0, Boundary::Periodic).unwrap();
    let sigma = estimate_sigma(&dec).unwrap();
    let lambda_max = universal_threshold(sigma, 512).unwrap();
    let rescale = (1.0 - std::f64::consts::LN_2 / 512f64.ln()).powf(-0.5);

    let mut grid_best = (f64::INFINITY, 0.0);
    for i in 0..200 {
        let lambda = lambda_max * i as f64 / 199.0;
        let m = cv_objective(&noisy, &filter, j0, lambda).unwrap();
        if m < grid_best.0 {
            grid_best = (m, lambda);
        }
    }
    let oracle = grid_best.1 * rescale;
    let chosen = cv_threshold(&noisy, &filter, j0).unwrap();
    assert!(
        (chosen - oracle).abs() <= 0.05 * oracle,
        "chosen {chosen} vs grid oracle {oracle}"
    );

    // The refined λ can only improve on the exhaustive grid's objective.
    let m_chosen = cv_objective(&noisy, &filter, j0, chosen / rescale).unwrap();
    assert!(m_chosen <= grid_best.0 * (1.0 + 1e-12), "{m_chosen} vs {}", grid_best.0);
}

#[test]
fn cv_returns_a_negligible_threshold_on_a_noiseless_signal() {
    let heavisine = dj_function(DjFunction::Heavisine, 512).unwrap();
    let clean = rescale_to_sd(&heavisine.values, 7.0).unwrap();
    let filter = build_filter(10).unwrap();

    let chosen = cv_threshold(&clean, &filter, 3).unwrap();
    let dec = forward(&clean, &filter, 3, Boundary::Periodic).unwrap();
    let max_detail = dec
        .levels()
        .flat_map(|(_, level)| level.iter())
        .fold(0.0f64, |acc, &d| acc.max(d.abs()));
    assert!(chosen <= 0.01 * max_detail, "λ = {chosen} vs max |d| = {max_detail}");
}

#[test]
fn every_policy_returns_a_nonnegative_threshold() {
    let filter = build_filter(10).unwrap();
    let mut stream = NoiseStream::new(77, 3, 1, TAG_NOISE);
    let heavisine = dj_function(DjFunction::Heavisine, 256).unwrap();
    let clean = rescale_to_sd(&heavisine.values, 7.0).unwrap();
    let noisy: Vec<f64> =
        clean.iter().zip(stream.standard_normal_vec(256)).map(|(f, z)| f + 7.0 * z).collect();

    let dec = forward(&noisy, &filter, 3, Boundary::Periodic).unwrap();
    let sigma = estimate_sigma(&dec).unwrap();
    for kind in [PolicyKind::Universal, PolicyKind::Fdr, PolicyKind::Sure, PolicyKind::Cv] {
        let scope = if kind == PolicyKind::Sure { PolicyScope::ByLevel } else { PolicyScope::Global };
        let lambdas =
            select_threshold(&dec, &ThresholdPolicy::new(kind).with_scope(scope), sigma, &filter)
                .unwrap();
        assert!(!lambdas.is_empty());
        for (j, lambda) in lambdas {
            assert!(lambda >= 0.0, "{kind:?} level {j}: λ = {lambda}");
        }
    }
}
