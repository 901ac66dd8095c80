//! Small shared statistics helpers.

/// Type-7 empirical quantile (linear interpolation between order statistics,
/// the convention used for every interval and summary in this crate).
///
/// `p` is clamped to [0, 1]. Panics on an empty sample.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let p = p.clamp(0.0, 1.0);
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Sorts a copy and applies [`quantile_type7`].
pub fn quantile_of(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    quantile_type7(&sorted, p)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantile_matches_hand_values() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile_of(&v, 0.0), 1.0);
        assert_relative_eq!(quantile_of(&v, 1.0), 4.0);
        assert_relative_eq!(quantile_of(&v, 0.5), 2.5);
        // type-7 on {1..4} at p=0.25: h = 0.75 -> 1 + 0.75
        assert_relative_eq!(quantile_of(&v, 0.25), 1.75);
    }

    #[test]
    fn quantile_monotone_in_p() {
        let v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 100) as f64).collect();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=20 {
            let q = quantile_of(&v, i as f64 / 20.0);
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn moments() {
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_relative_eq!(mean(&v), 5.0);
        assert_relative_eq!(variance(&v), 32.0 / 7.0);
    }
}
