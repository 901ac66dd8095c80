//! Scoring of predictive reserve distributions and point forecasts.
//!
//! Distribution scores: the sample CRPS, and interval score / coverage for
//! central prediction intervals. Point scores: bias, MAE, RMSE and sMAPE.
//! Empirical quantiles use the type-7 convention throughout.

use serde::{Deserialize, Serialize};

use crate::stats::quantile_of;

/// Sample continuous ranked probability score:
///
/// ```text
/// (1/N) sum_i |d_i - truth| - (1/(2 N^2)) sum_i sum_r |d_i - d_r|
/// ```
///
/// Zero exactly when every draw equals the truth; lower is better.
pub fn crps(draws: &[f64], truth: f64) -> f64 {
    assert!(!draws.is_empty(), "crps needs at least one draw");
    let n = draws.len() as f64;
    let first: f64 = draws.iter().map(|d| (d - truth).abs()).sum::<f64>() / n;
    let mut spread = 0.0;
    for (i, di) in draws.iter().enumerate() {
        for dr in &draws[i + 1..] {
            spread += (di - dr).abs();
        }
    }
    // The double sum counts each unordered pair twice; diagonal terms are 0.
    first - spread / (n * n)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalScore {
    /// Mean width of the central `[1-alpha, alpha]` interval.
    pub interval_score: f64,
    /// Fraction of truths covered by their interval.
    pub picp: f64,
}

/// Central-interval width and coverage over a set of claims.
///
/// For each claim the empirical `1-alpha` and `alpha` quantiles of its
/// draws bound the interval; `IS` averages the widths and `PICP` the
/// coverage indicators.
pub fn interval_score_and_picp(
    draws_per_claim: &[Vec<f64>],
    truths: &[f64],
    alpha: f64,
) -> IntervalScore {
    assert_eq!(draws_per_claim.len(), truths.len(), "claims and truths misaligned");
    assert!(!draws_per_claim.is_empty(), "no claims to score");
    assert!(0.5 < alpha && alpha < 1.0, "alpha must lie in (0.5, 1)");
    let mut width_sum = 0.0;
    let mut covered = 0usize;
    for (draws, &truth) in draws_per_claim.iter().zip(truths) {
        assert!(draws.len() >= 2, "interval score needs at least 2 draws per claim");
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let lo = crate::stats::quantile_type7(&sorted, 1.0 - alpha);
        let hi = crate::stats::quantile_type7(&sorted, alpha);
        width_sum += hi - lo;
        if lo <= truth && truth <= hi {
            covered += 1;
        }
    }
    IntervalScore {
        interval_score: width_sum / draws_per_claim.len() as f64,
        picp: covered as f64 / truths.len() as f64,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointwiseMetrics {
    /// Sum of (truth - prediction); sign convention: positive means the
    /// predictions fall short in aggregate.
    pub bias: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Mean of `200 |truth - pred| / (truth + pred)`, as printed; pairs
    /// with a zero denominator are skipped and counted, pairs with a
    /// negative denominator are kept but counted as suspect.
    pub smape: f64,
    pub smape_skipped_zero_denominator: usize,
    pub smape_negative_denominator: usize,
}

/// Pointwise accuracy of predictive means against observed reserves.
pub fn pointwise_metrics(predictions: &[f64], truths: &[f64]) -> PointwiseMetrics {
    assert_eq!(predictions.len(), truths.len(), "predictions and truths misaligned");
    assert!(!predictions.is_empty(), "no pairs to score");
    let n = predictions.len() as f64;
    let mut bias = 0.0;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut smape_sum = 0.0;
    let mut smape_n = 0usize;
    let mut skipped = 0usize;
    let mut negative = 0usize;
    for (&pred, &truth) in predictions.iter().zip(truths) {
        let err = truth - pred;
        bias += err;
        abs_sum += err.abs();
        sq_sum += err * err;
        let denom = truth + pred;
        if denom == 0.0 {
            skipped += 1;
        } else {
            if denom < 0.0 {
                negative += 1;
            }
            smape_sum += 200.0 * err.abs() / denom;
            smape_n += 1;
        }
    }
    PointwiseMetrics {
        bias,
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        smape: if smape_n > 0 { smape_sum / smape_n as f64 } else { f64::NAN },
        smape_skipped_zero_denominator: skipped,
        smape_negative_denominator: negative,
    }
}

/// Mean of a draw vector; convenience for reporting.
pub fn predictive_mean(draws: &[f64]) -> f64 {
    crate::stats::mean(draws)
}

/// Summary quantiles used in the tabular reports.
pub fn summary_quantiles(draws: &[f64], probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|&p| quantile_of(draws, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn crps_point_mass_at_truth_is_zero() {
        assert_relative_eq!(crps(&[3.0, 3.0, 3.0], 3.0), 0.0);
    }

    #[test]
    fn crps_single_draw_is_absolute_error() {
        assert_relative_eq!(crps(&[5.0], 2.0), 3.0);
    }

    #[test]
    fn crps_two_draw_example() {
        // (|0-1| + |2-1|)/2 - (1/(2*4)) * (|0-2| + |2-0|) = 1 - 0.5
        assert_relative_eq!(crps(&[0.0, 2.0], 1.0), 0.5);
    }

    #[test]
    fn interval_degenerate_draws_cover_truth_with_zero_width() {
        let score = interval_score_and_picp(&[vec![7.0; 10]], &[7.0], 0.95);
        assert_relative_eq!(score.interval_score, 0.0);
        assert_relative_eq!(score.picp, 1.0);
    }

    #[test]
    fn picp_zero_when_truths_escape_all_intervals() {
        let draws = vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]];
        let score = interval_score_and_picp(&draws, &[50.0, -50.0], 0.95);
        assert_relative_eq!(score.picp, 0.0);
        assert!(score.interval_score > 0.0);
    }

    #[test]
    fn uniform_draw_interval_matches_analytic_width() {
        // Uniform(0,1) draws: the central 95% interval is ~[0.05, 0.95].
        let mut rng = crate::rng::substream(11, "eval-uniform", &[]);
        use rand::Rng;
        let draws: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let score = interval_score_and_picp(&[draws], &[0.5], 0.95);
        assert_relative_eq!(score.picp, 1.0);
        assert!((score.interval_score - 0.90).abs() < 0.02, "IS {}", score.interval_score);
    }

    #[test]
    fn pointwise_perfect_predictions_are_zero() {
        let m = pointwise_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_relative_eq!(m.bias, 0.0);
        assert_relative_eq!(m.mae, 0.0);
        assert_relative_eq!(m.rmse, 0.0);
        assert_relative_eq!(m.smape, 0.0);
    }

    #[test]
    fn smape_contribution_example() {
        // truth 100, prediction 300: 200*|100-300|/(100+300) = 100.
        let m = pointwise_metrics(&[300.0], &[100.0]);
        assert_relative_eq!(m.smape, 100.0);
        assert_relative_eq!(m.bias, -200.0);
    }

    #[test]
    fn smape_zero_denominators_are_skipped_and_counted() {
        let m = pointwise_metrics(&[-1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(m.smape_skipped_zero_denominator, 1);
        assert_relative_eq!(m.smape, 0.0);
    }

    #[test]
    fn smape_negative_denominators_are_counted_not_absolutized() {
        let m = pointwise_metrics(&[-3.0], &[-1.0]);
        assert_eq!(m.smape_negative_denominator, 1);
        assert_relative_eq!(m.smape, 200.0 * 2.0 / -4.0);
    }

    #[test]
    fn rmse_dominates_absolute_mean_error() {
        let m = pointwise_metrics(&[1.0, 5.0, 2.0], &[2.0, 1.0, 7.0]);
        assert!(m.rmse >= (m.bias / 3.0).abs());
    }

    proptest! {
        #[test]
        fn crps_nonnegative_and_translation_invariant(
            draws in proptest::collection::vec(-1e4..1e4f64, 1..40),
            truth in -1e4..1e4f64,
            shift in -1e3..1e3f64,
        ) {
            let score = crps(&draws, truth);
            prop_assert!(score >= -1e-9);
            let shifted: Vec<f64> = draws.iter().map(|d| d + shift).collect();
            let shifted_score = crps(&shifted, truth + shift);
            prop_assert!((score - shifted_score).abs() <= 1e-7 * (1.0 + score.abs()));
        }

        #[test]
        fn crps_invariant_under_draw_permutation(
            draws in proptest::collection::vec(-1e3..1e3f64, 2..30),
            truth in -1e3..1e3f64,
        ) {
            let mut reversed = draws.clone();
            reversed.reverse();
            prop_assert!((crps(&draws, truth) - crps(&reversed, truth)).abs() < 1e-9);
        }
    }
}
