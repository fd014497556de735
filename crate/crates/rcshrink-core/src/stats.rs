//! Order statistics and moments shared across modules. The median uses the
//! midpoint convention for even lengths throughout the crate.

use crate::quad::pairwise_sum;

/// Median with the even-length midpoint convention. Sorts in place;
/// callers guarantee a nonempty, NaN-free slice.
pub(crate) fn median_in_place(xs: &mut [f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.partial_cmp(b).expect("median input contains NaN"));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Population standard deviation (divisor n).
pub(crate) fn population_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let ss: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    (pairwise_sum(&ss) / n).sqrt()
}

/// Sample standard deviation (divisor n − 1); 0 for fewer than two values.
pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let ss: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    (pairwise_sum(&ss) / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_uses_midpoint_for_even_lengths() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_in_place(&mut [0.0, 1.0, 2.0, 3.0]), 1.5);
        assert_eq!(median_in_place(&mut [5.0]), 5.0);
    }

    #[test]
    fn standard_deviations_match_hand_values() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((population_sd(&xs) - 2.0).abs() < 1e-15);
        let expected_sample = (32.0f64 / 7.0).sqrt();
        assert!((sample_sd(&xs) - expected_sample).abs() < 1e-15);
        assert_eq!(sample_sd(&[1.0]), 0.0);
        assert_eq!(population_sd(&[3.0, 3.0, 3.0]), 0.0);
    }
}
