//! Data-driven binning of continuous predictors.
//!
//! Replaces the linearity assumption on a continuous variable by a small
//! set of categories found in six steps: bootstrap resamples; quantile
//! groups with median representatives; a multinomial regression of the
//! transition type on the group indicators (plus the state-time levels);
//! local-regression smoothing of the per-group effects; greedy 1-D
//! regression-tree splits per hazard; and a merge of all split lists into
//! one specification per variable.
//!
//! The tree stage is exact greedy variance-reduction splitting on one
//! variable rather than a stochastic search; on a single dimension the
//! full candidate scan is cheap and deterministic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::glm::{fit_multinomial, Encoder, FitOptions};
use crate::rng::substream_str;
use crate::stats::quantile_type7;

/// Final binning of one continuous variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinningSpec {
    pub variable: String,
    /// Strictly increasing thresholds; `k` splits make `k + 1` bins.
    pub split_points: Vec<f64>,
    pub min_bin_count: u32,
    pub n_target_bins: u32,
}

impl BinningSpec {
    /// Bin index of `value`: bin `l` covers `[split[l-1], split[l])`, with
    /// the outer bins open. Total on all reals and idempotent.
    pub fn bin_of(&self, value: f64) -> usize {
        self.split_points.partition_point(|&s| s <= value)
    }

    pub fn n_bins(&self) -> usize {
        self.split_points.len() + 1
    }

    /// Human-readable level label, also used as the encoder category.
    pub fn bin_label(&self, value: f64) -> String {
        let bin = self.bin_of(value);
        if self.split_points.is_empty() {
            return "all".to_string();
        }
        if bin == 0 {
            format!("<{}", self.split_points[0])
        } else if bin == self.split_points.len() {
            format!(">={}", self.split_points[bin - 1])
        } else {
            format!("[{},{})", self.split_points[bin - 1], self.split_points[bin])
        }
    }
}

/// Quantile groups of a continuous sample.
#[derive(Debug, Clone)]
pub struct QuantileGroups {
    /// Group boundaries (a value belongs to the last group whose boundary
    /// does not exceed it).
    pub boundaries: Vec<f64>,
    /// Median representative of each group.
    pub mediods: Vec<f64>,
    /// Members per group, sorted.
    pub members: Vec<Vec<f64>>,
}

impl QuantileGroups {
    pub fn group_of(&self, value: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= value).min(self.mediods.len() - 1)
    }

    pub fn n_groups(&self) -> usize {
        self.mediods.len()
    }
}

/// Splits a sample into (up to) 40 groups bounded by the 0.025, 0.05, ...,
/// 0.975 quantiles, each represented by its median. Samples with fewer
/// than 40 distinct values fall back to one group per distinct value.
pub fn quantile_groups(values: &[f64]) -> Result<QuantileGroups> {
    if values.is_empty() {
        return Err(Error::Validation("cannot group an empty sample".to_string()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut distinct = sorted.clone();
    distinct.dedup();

    let boundaries: Vec<f64> = if distinct.len() < 40 {
        distinct[1..].to_vec()
    } else {
        let mut bs: Vec<f64> =
            (1..40).map(|i| quantile_type7(&sorted, i as f64 * 0.025)).collect();
        bs.dedup();
        bs
    };

    // Assign members; drop groups left empty by duplicate quantiles.
    let n_slots = boundaries.len() + 1;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_slots];
    for &v in &sorted {
        let g = boundaries.partition_point(|&b| b <= v).min(n_slots - 1);
        members[g].push(v);
    }
    let mut kept_boundaries = Vec::new();
    let mut kept_members: Vec<Vec<f64>> = Vec::new();
    for (g, group) in members.into_iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        if !kept_members.is_empty() {
            // Boundary separating this group from the previous kept one.
            kept_boundaries.push(if g == 0 { boundaries[0] } else { boundaries[g - 1] });
        }
        kept_members.push(group);
    }
    let mediods = kept_members.iter().map(|g| quantile_type7(g, 0.5)).collect();
    Ok(QuantileGroups { boundaries: kept_boundaries, mediods, members: kept_members })
}

/// Locally-weighted linear regression (tricube weights) of `effects` on
/// `mediods`, evaluated at `eval_points`. With fewer than four groups the
/// effects pass through piecewise-constant (nearest mediod).
pub fn smooth_effects(
    mediods: &[f64],
    effects: &[f64],
    eval_points: &[f64],
    span: f64,
) -> Vec<f64> {
    assert_eq!(mediods.len(), effects.len(), "mediods and effects misaligned");
    let g = mediods.len();
    if g < 4 {
        return eval_points
            .iter()
            .map(|&x| {
                let nearest = (0..g)
                    .min_by(|&a, &b| (mediods[a] - x).abs().total_cmp(&(mediods[b] - x).abs()))
                    .unwrap_or(0);
                effects[nearest]
            })
            .collect();
    }
    let k = ((span * g as f64).ceil() as usize).clamp(3, g);
    eval_points
        .iter()
        .map(|&x| {
            // k nearest mediods by distance.
            let mut order: Vec<usize> = (0..g).collect();
            order.sort_by(|&a, &b| (mediods[a] - x).abs().total_cmp(&(mediods[b] - x).abs()));
            let neighbors = &order[..k];
            let dmax = (mediods[neighbors[k - 1]] - x).abs();
            if dmax == 0.0 {
                return effects[neighbors[0]];
            }
            // Weighted least squares of degree 1.
            let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &i in neighbors {
                let d = ((mediods[i] - x).abs() / dmax).min(1.0);
                let w = (1.0 - d.powi(3)).powi(3);
                let xi = mediods[i];
                let yi = effects[i];
                sw += w;
                swx += w * xi;
                swy += w * yi;
                swxx += w * xi * xi;
                swxy += w * xi * yi;
            }
            let det = sw * swxx - swx * swx;
            if det.abs() < 1e-12 * (sw * swxx).abs().max(1e-300) {
                return swy / sw;
            }
            let slope = (sw * swxy - swx * swy) / det;
            let intercept = (swy - slope * swx) / sw;
            intercept + slope * x
        })
        .collect()
}

/// Greedy variance-reduction splitting of weighted `(value, effect)` pairs
/// into at most `n_target_bins` leaves with at least `min_bin_count`
/// observations per leaf. `values` must be sorted ascending with
/// `effects`/`counts` aligned. Returns the interior split points
/// (midpoints between adjacent distinct values); empty when no admissible
/// split exists.
pub fn tree_split(
    values: &[f64],
    effects: &[f64],
    counts: &[u64],
    n_target_bins: u32,
    min_bin_count: u32,
) -> Vec<f64> {
    assert_eq!(values.len(), effects.len());
    assert_eq!(values.len(), counts.len());
    let n = values.len();
    if n < 2 || n_target_bins < 2 {
        return Vec::new();
    }
    debug_assert!(values.windows(2).all(|w| w[0] <= w[1]), "values must be sorted");

    // Prefix sums over weighted effects for O(1) segment SSE.
    let mut w_pre = vec![0.0; n + 1];
    let mut s1_pre = vec![0.0; n + 1];
    let mut s2_pre = vec![0.0; n + 1];
    for i in 0..n {
        let w = counts[i] as f64;
        w_pre[i + 1] = w_pre[i] + w;
        s1_pre[i + 1] = s1_pre[i] + w * effects[i];
        s2_pre[i + 1] = s2_pre[i] + w * effects[i] * effects[i];
    }
    let sse = |lo: usize, hi: usize| -> f64 {
        let w = w_pre[hi] - w_pre[lo];
        if w <= 0.0 {
            return 0.0;
        }
        let s1 = s1_pre[hi] - s1_pre[lo];
        let s2 = s2_pre[hi] - s2_pre[lo];
        (s2 - s1 * s1 / w).max(0.0)
    };
    let count = |lo: usize, hi: usize| (w_pre[hi] - w_pre[lo]) as u64;

    // Best split of segment [lo, hi): (gain, cut index, split value).
    let best_split = |lo: usize, hi: usize| -> Option<(f64, usize, f64)> {
        let base = sse(lo, hi);
        let mut best: Option<(f64, usize, f64)> = None;
        for cut in (lo + 1)..hi {
            if values[cut] == values[cut - 1] {
                continue; // identical values cannot be separated
            }
            if count(lo, cut) < u64::from(min_bin_count)
                || count(cut, hi) < u64::from(min_bin_count)
            {
                continue;
            }
            let gain = base - sse(lo, cut) - sse(cut, hi);
            let better = match best {
                Some((g, _, _)) => gain > g + 1e-15,
                None => gain > 1e-12,
            };
            if better {
                best = Some((gain, cut, 0.5 * (values[cut - 1] + values[cut])));
            }
        }
        best
    };

    let mut leaves: Vec<(usize, usize)> = vec![(0, n)];
    let mut splits = Vec::new();
    while leaves.len() < n_target_bins as usize {
        let mut candidate: Option<(f64, usize, usize, f64)> = None;
        for (idx, &(lo, hi)) in leaves.iter().enumerate() {
            if let Some((gain, cut, at)) = best_split(lo, hi) {
                if candidate.is_none_or(|(g, ..)| gain > g) {
                    candidate = Some((gain, idx, cut, at));
                }
            }
        }
        let Some((_, leaf_idx, cut, at)) = candidate else { break };
        let (lo, hi) = leaves[leaf_idx];
        leaves[leaf_idx] = (lo, cut);
        leaves.insert(leaf_idx + 1, (cut, hi));
        splits.push(at);
    }
    splits.sort_by(|a, b| a.total_cmp(b));
    splits
}

/// Merges per-hazard split lists into one [`BinningSpec`]: union, sort,
/// dedupe within a relative tolerance of 1e-9, then repeatedly merge any
/// bin with fewer than `min_bin_count` training rows into its smaller
/// neighbor.
pub fn merge_splits(
    variable: &str,
    split_lists: &[Vec<f64>],
    training_values: &[f64],
    min_bin_count: u32,
    n_target_bins: u32,
) -> BinningSpec {
    let mut splits: Vec<f64> = split_lists.iter().flatten().copied().collect();
    splits.sort_by(|a, b| a.total_cmp(b));
    splits.dedup_by(|b, a| (*b - *a).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0));

    let mut sorted = training_values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));

    loop {
        if splits.is_empty() {
            break;
        }
        // Row count per bin.
        let mut counts = Vec::with_capacity(splits.len() + 1);
        let mut prev = 0usize;
        for &s in &splits {
            let at = sorted.partition_point(|&v| v < s);
            counts.push(at - prev);
            prev = at;
        }
        counts.push(sorted.len() - prev);

        let Some(worst) = (0..counts.len())
            .filter(|&b| counts[b] < min_bin_count as usize)
            .min_by_key(|&b| counts[b])
        else {
            break;
        };
        // Remove the split towards the smaller neighbor.
        let remove = if worst == 0 {
            0
        } else if worst == counts.len() - 1 {
            splits.len() - 1
        } else if counts[worst - 1] <= counts[worst + 1] {
            worst - 1
        } else {
            worst
        };
        splits.remove(remove);
    }

    BinningSpec {
        variable: variable.to_string(),
        split_points: splits,
        min_bin_count,
        n_target_bins,
    }
}

/// Runs the whole six-step procedure for one continuous variable.
///
/// `values`, `state_time` (the state-time covariate, already capped) and
/// `response` (class labels with class 0 the no-event reference) are
/// row-aligned. Bootstrap resamples run on deterministic substreams of
/// `seed`.
pub fn bin_continuous_variable(
    variable: &str,
    values: &[f64],
    state_time: &[u32],
    response: &[usize],
    n_classes: usize,
    config: &ModelConfig,
    seed: u64,
) -> Result<BinningSpec> {
    let n = values.len();
    if n == 0 || state_time.len() != n || response.len() != n {
        return Err(Error::Validation("binning inputs are misaligned".to_string()));
    }
    let min_bin = config.preprocessing.n_min_lev;
    let n_target = config.preprocessing.n_groups;
    let mut split_lists: Vec<Vec<f64>> = Vec::new();

    for b in 0..config.binning.n_bootstrap {
        let mut rng = substream_str(seed, "binning", variable, &[u64::from(b)]);
        let m = (config.binning.bootstrap_sample_size as usize).min(n);
        let picks: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();

        let sample_values: Vec<f64> = picks.iter().map(|&i| values[i]).collect();
        let groups = quantile_groups(&sample_values)?;
        if groups.n_groups() < 2 {
            continue; // constant resample, nothing to split
        }

        // Multinomial fit: transition ~ group + stateTime.
        let grp_col: Vec<String> =
            picks.iter().map(|&i| format!("g{}", groups.group_of(values[i]))).collect();
        let x7_col: Vec<String> =
            picks.iter().map(|&i| format!("t{}", state_time[i])).collect();
        let encoder = Encoder::fit(
            &["grp", "x7"],
            &[grp_col.clone(), x7_col.clone()],
            &[1, config.time.n_min_time_lev],
        )?;
        let label_rows: Vec<Vec<String>> =
            grp_col.into_iter().zip(x7_col).map(|(g, t)| vec![g, t]).collect();
        let y: Vec<usize> = picks.iter().map(|&i| response[i]).collect();
        let class_names: Vec<String> = (0..n_classes).map(|c| format!("c{c}")).collect();
        let design = encoder.design(&label_rows, y, class_names)?.collapse();
        if design.observed_classes() < 2 {
            continue;
        }
        let fit = match fit_multinomial(&design, FitOptions::default()) {
            Ok(f) => f,
            Err(_) => continue, // degenerate resample
        };

        // Distinct values of the resample, with multiplicities.
        let mut sorted = sample_values.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut distinct: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for &v in &sorted {
            if distinct.last() == Some(&v) {
                *counts.last_mut().unwrap() += 1;
            } else {
                distinct.push(v);
                counts.push(1);
            }
        }

        // Per hazard class: per-group effect -> smoothed curve -> splits.
        for class in 1..n_classes {
            let effects: Vec<f64> = (0..groups.n_groups())
                .map(|g| {
                    encoder
                        .coefficient_index("grp", &format!("g{g}"))
                        .map_or(0.0, |idx| fit.coefficients[class - 1][idx])
                })
                .collect();
            let smoothed =
                smooth_effects(&groups.mediods, &effects, &distinct, config.binning.loess_span);
            let splits = tree_split(&distinct, &smoothed, &counts, n_target, min_bin);
            if !splits.is_empty() {
                split_lists.push(splits);
            }
        }
    }

    Ok(merge_splits(variable, &split_lists, values, min_bin, n_target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn uniform_sample_groups_at_even_quantiles() {
        let values: Vec<f64> = (1..=4000).map(|i| i as f64).collect();
        let groups = quantile_groups(&values).unwrap();
        assert_eq!(groups.n_groups(), 40);
        // Boundaries near 100, 200, ...; mediods near group centers.
        assert!((groups.boundaries[0] - 100.0).abs() <= 1.0);
        assert!((groups.boundaries[19] - 2000.0).abs() <= 1.0);
        let direct = quantile_type7(&{
            let mut s = values.clone();
            s.sort_by(|a, b| a.total_cmp(b));
            s
        }, 0.025);
        assert_relative_eq!(groups.boundaries[0], direct);
        assert!((groups.mediods[0] - 50.0).abs() <= 2.0);
    }

    #[test]
    fn constant_sample_is_a_single_group() {
        let groups = quantile_groups(&[7.0; 100]).unwrap();
        assert_eq!(groups.n_groups(), 1);
        assert_relative_eq!(groups.mediods[0], 7.0);
    }

    #[test]
    fn few_distinct_values_get_one_group_each() {
        let values: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let groups = quantile_groups(&values).unwrap();
        assert_eq!(groups.n_groups(), 10);
        for (g, mediod) in groups.mediods.iter().enumerate() {
            assert_relative_eq!(*mediod, g as f64);
        }
        assert_eq!(groups.group_of(0.0), 0);
        assert_eq!(groups.group_of(9.0), 9);
    }

    #[test]
    fn loess_is_exact_on_linear_effects() {
        let mediods: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let effects: Vec<f64> = mediods.iter().map(|m| 2.0 * m - 3.0).collect();
        let eval: Vec<f64> = (0..40).map(|i| i as f64 / 2.0).collect();
        let smoothed = smooth_effects(&mediods, &effects, &eval, 0.75);
        for (x, s) in eval.iter().zip(&smoothed) {
            assert_relative_eq!(*s, 2.0 * x - 3.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn loess_tracks_a_noisy_quadratic() {
        let mut rng = crate::rng::substream(21, "loess-quadratic", &[]);
        let mediods: Vec<f64> = (0..40).map(|i| i as f64 / 4.0).collect();
        let truth: Vec<f64> = mediods.iter().map(|m| 0.5 * m * m - m).collect();
        let noisy: Vec<f64> =
            truth.iter().map(|t| t + (rng.random::<f64>() - 0.5) * 0.2).collect();
        let smoothed = smooth_effects(&mediods, &noisy, &mediods, 0.4);
        for (s, t) in smoothed.iter().zip(&truth) {
            assert!((s - t).abs() < 0.6, "smoothed {s} vs truth {t}");
        }
    }

    #[test]
    fn three_groups_pass_through() {
        let smoothed = smooth_effects(&[0.0, 1.0, 2.0], &[5.0, 6.0, 7.0], &[0.9, 1.9], 0.75);
        assert_relative_eq!(smoothed[0], 6.0);
        assert_relative_eq!(smoothed[1], 7.0);
    }

    #[test]
    fn tree_recovers_a_single_jump() {
        let values: Vec<f64> = (0..200).map(|i| i as f64 / 10.0).collect();
        let effects: Vec<f64> =
            values.iter().map(|&v| if v < 10.0 { 0.0 } else { 1.0 }).collect();
        let counts = vec![1u64; values.len()];
        let splits = tree_split(&values, &effects, &counts, 5, 10);
        assert_eq!(splits.len(), 1);
        assert!((splits[0] - 10.0).abs() <= 0.1, "split at {}", splits[0]);
    }

    #[test]
    fn greedy_first_split_matches_exhaustive_search() {
        let mut rng = crate::rng::substream(31, "tree-oracle", &[]);
        for _ in 0..10 {
            let n = 200;
            let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let effects: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let counts = vec![1u64; n];
            let min_count = 25u32;
            let splits = tree_split(&values, &effects, &counts, 2, min_count);

            // Exhaustive scan under the same count constraint.
            let total_sse = |lo: usize, hi: usize| {
                let seg = &effects[lo..hi];
                let m = crate::stats::mean(seg);
                seg.iter().map(|e| (e - m).powi(2)).sum::<f64>()
            };
            let mut best_sse = f64::INFINITY;
            let mut best_cut = None;
            for cut in (min_count as usize)..=(n - min_count as usize) {
                let s = total_sse(0, cut) + total_sse(cut, n);
                if s < best_sse {
                    best_sse = s;
                    best_cut = Some(cut);
                }
            }
            assert_eq!(splits.len(), 1);
            let expected = 0.5 * (values[best_cut.unwrap() - 1] + values[best_cut.unwrap()]);
            assert_relative_eq!(splits[0], expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_effects_give_no_split() {
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let splits = tree_split(&values, &[1.0; 100], &[1u64; 100], 5, 10);
        assert!(splits.is_empty());
    }

    #[test]
    fn monotone_effects_fill_the_target_bins() {
        let values: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let effects: Vec<f64> = values.iter().map(|v| v * 0.01).collect();
        let splits = tree_split(&values, &effects, &vec![1u64; 500], 5, 30);
        assert_eq!(splits.len(), 4);
        // Leaves respect the count floor.
        let spec = BinningSpec {
            variable: "v".to_string(),
            split_points: splits,
            min_bin_count: 30,
            n_target_bins: 5,
        };
        let mut counts = vec![0usize; spec.n_bins()];
        for &v in &values {
            counts[spec.bin_of(v)] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 30), "bin counts {counts:?}");
    }

    #[test]
    fn merge_unions_and_dedupes() {
        let training: Vec<f64> = (0..300).map(|i| i as f64 / 10.0).collect();
        let spec =
            merge_splits("v", &[vec![10.0], vec![10.0 + 1e-12], vec![20.0]], &training, 5, 5);
        assert_eq!(spec.split_points.len(), 2);
        assert_relative_eq!(spec.split_points[0], 10.0);
        assert_relative_eq!(spec.split_points[1], 20.0);
    }

    #[test]
    fn merge_of_empty_lists_is_empty_spec() {
        let spec = merge_splits("v", &[], &[1.0, 2.0], 5, 5);
        assert!(spec.split_points.is_empty());
        assert_eq!(spec.bin_of(123.0), 0);
        assert_eq!(spec.bin_label(1.0), "all");
    }

    #[test]
    fn merge_collapses_underfilled_bins_into_smaller_neighbor() {
        // 100 values below 10, only 3 between 10 and 11, 100 above.
        let mut training: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        training.extend([10.2, 10.5, 10.8]);
        training.extend((0..100).map(|i| 11.0 + i as f64 / 10.0));
        let spec = merge_splits("v", &[vec![10.0], vec![11.0]], &training, 30, 5);
        assert_eq!(spec.split_points.len(), 1);
    }

    #[test]
    fn binning_is_total_and_idempotent() {
        let spec = BinningSpec {
            variable: "deltPay".to_string(),
            split_points: vec![586.20, 1247.06, 2584.57, 7955.07],
            min_bin_count: 30,
            n_target_bins: 5,
        };
        assert_eq!(spec.bin_of(-1e18), 0);
        assert_eq!(spec.bin_of(0.0), 0);
        assert_eq!(spec.bin_of(586.20), 1); // left-closed
        assert_eq!(spec.bin_of(600.0), 1);
        assert_eq!(spec.bin_of(9999.0), 4);
        assert_eq!(spec.bin_of(1e18), 4);
        for v in [-5.0, 586.2, 700.0, 2584.57, 1e6] {
            let b = spec.bin_of(v);
            assert_eq!(spec.bin_of(v), b);
        }
    }

    proptest::proptest! {
        #[test]
        fn binning_total_and_idempotent_on_arbitrary_values(
            mut splits in proptest::collection::vec(-1e7..1e7f64, 0..6),
            values in proptest::collection::vec(-1e9..1e9f64, 1..50),
        ) {
            splits.sort_by(|a, b| a.total_cmp(b));
            splits.dedup();
            let spec = BinningSpec {
                variable: "v".to_string(),
                split_points: splits,
                min_bin_count: 1,
                n_target_bins: 6,
            };
            for v in values {
                let bin = spec.bin_of(v);
                proptest::prop_assert!(bin < spec.n_bins());
                proptest::prop_assert_eq!(spec.bin_of(v), bin);
                // The label maps back to the same bin.
                if bin > 0 {
                    proptest::prop_assert!(v >= spec.split_points[bin - 1]);
                }
                if bin < spec.split_points.len() {
                    proptest::prop_assert!(v < spec.split_points[bin]);
                }
            }
        }
    }

    #[test]
    fn pipeline_recovers_a_piecewise_constant_breakpoint() {
        // Ground truth: probability of the event class jumps at 2000.
        let mut rng = crate::rng::substream(77, "binning-recovery", &[]);
        let n = 4000;
        let mut cfg = ModelConfig::default();
        cfg.binning.n_bootstrap = 4;
        cfg.binning.bootstrap_sample_size = 4000;
        let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4000.0).collect();
        let state_time: Vec<u32> = (0..n).map(|i| (i % 3 + 1) as u32).collect();
        let response: Vec<usize> = values
            .iter()
            .map(|&v| {
                let eta: f64 = if v < 2000.0 { -1.0 } else { 1.0 };
                let p = 1.0 / (1.0 + (-eta).exp());
                usize::from(rng.random::<f64>() < p)
            })
            .collect();
        let spec =
            bin_continuous_variable("v", &values, &state_time, &response, 2, &cfg, 99).unwrap();
        assert!(!spec.split_points.is_empty());
        let closest = spec
            .split_points
            .iter()
            .map(|s| (s - 2000.0).abs())
            .fold(f64::INFINITY, f64::min);
        // One quantile-group width is ~100 here.
        assert!(closest <= 150.0, "splits {:?}", spec.split_points);
    }
}
