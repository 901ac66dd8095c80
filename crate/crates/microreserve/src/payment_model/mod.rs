//! Spliced payment severities.
//!
//! The payment size of a claim in state `S_j` follows an `L`-component
//! mixture: a generalized Pareto tail below the first split point
//! (fitted on reflected exceedances), truncated normals on the interior
//! bins `[b_{l-1}, b_l)`, and a generalized Pareto tail above the last
//! split point. The mixture weights are a multinomial-logit function of
//! the claim covariates with the first bin as reference, so the expected
//! payment is the weight/mean dot product.

mod gpd;
mod truncated_normal;

pub use gpd::{fit_gpd, Gpd, GpdFit, SHAPE_MAX, SHAPE_MIN};
pub use truncated_normal::{fit_truncated_normal, TruncatedNormal, TruncatedNormalFit};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::claims_data::CovariateVector;
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::glm::{fit_multinomial, DesignMatrix, Encoder, FitOptions, MultinomialFit};
use crate::schema::{Fallback, FeatureSchema};
use crate::stats::{mean, quantile_of};

/// One mixture component on its bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PaymentComponent {
    /// Lower tail: `b1 - Y` follows the GPD for `Y < b1`.
    LeftTail { location: f64, gpd: Gpd, mean: f64 },
    /// Interior bin `[lo, hi)`.
    Body { dist: TruncatedNormal, mean: f64, empirical: bool },
    /// Upper tail: `Y - b_{L-1}` follows the GPD for `Y >= b_{L-1}`.
    RightTail { location: f64, gpd: Gpd, mean: f64 },
    /// Thin bin kept as a point mass at its empirical mean.
    Degenerate { mean: f64 },
    /// No training observations; weight is structurally zero.
    Empty,
}

impl PaymentComponent {
    pub fn mean(&self) -> f64 {
        match self {
            PaymentComponent::LeftTail { mean, .. }
            | PaymentComponent::Body { mean, .. }
            | PaymentComponent::RightTail { mean, .. }
            | PaymentComponent::Degenerate { mean } => *mean,
            PaymentComponent::Empty => 0.0,
        }
    }

    /// Density at `y` (components integrate to one over their own bin).
    pub fn pdf(&self, y: f64) -> f64 {
        match self {
            PaymentComponent::LeftTail { location, gpd, .. } => {
                if y < *location {
                    gpd.pdf(location - y)
                } else {
                    0.0
                }
            }
            PaymentComponent::Body { dist, .. } => dist.pdf(y),
            PaymentComponent::RightTail { location, gpd, .. } => {
                if y >= *location {
                    gpd.pdf(y - location)
                } else {
                    0.0
                }
            }
            PaymentComponent::Degenerate { .. } | PaymentComponent::Empty => 0.0,
        }
    }

    pub fn sample(&self, u: f64) -> f64 {
        match self {
            PaymentComponent::LeftTail { location, gpd, .. } => {
                let exc = gpd.quantile(u).max(f64::MIN_POSITIVE);
                location - exc
            }
            PaymentComponent::Body { dist, .. } => dist.quantile(u),
            PaymentComponent::RightTail { location, gpd, .. } => location + gpd.quantile(u),
            PaymentComponent::Degenerate { mean } => *mean,
            PaymentComponent::Empty => 0.0,
        }
    }
}

/// The covariate-driven mixture-weight model over the present bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightModel {
    /// Bin indices (0-based into the `L` bins) with training rows, in
    /// order; classes of `fit` align with this list.
    pub present_bins: Vec<usize>,
    pub fit: MultinomialFit,
    pub encoder: Option<Encoder>,
    pub fallback: Fallback,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplicedPaymentModel {
    /// Model slot (pooled states share the last slot).
    pub state_slot: usize,
    /// Split points in currency units, strictly increasing.
    pub split_points: Vec<f64>,
    /// One component per bin (`split_points.len() + 1`).
    pub components: Vec<PaymentComponent>,
    /// Component means, aligned with `components`.
    pub component_means: Vec<f64>,
    pub schema: FeatureSchema,
    pub weights: WeightModel,
    /// Rows per bin at fit time.
    pub bin_counts: Vec<u64>,
    /// Mean-excess diagnostic rows (side, threshold, mean excess, count)
    /// for manual threshold review.
    pub mean_excess_table: Vec<(String, f64, f64, usize)>,
    pub flags: Vec<String>,
}

impl SplicedPaymentModel {
    /// A model with covariate-free mixture weights, assembled from parts.
    /// Zero-weight bins become structurally absent.
    pub fn with_constant_weights(
        state_slot: usize,
        split_points: Vec<f64>,
        components: Vec<PaymentComponent>,
        weights: &[f64],
    ) -> Result<SplicedPaymentModel> {
        if components.len() != split_points.len() + 1 || weights.len() != components.len() {
            return Err(Error::Validation("spliced model parts are misaligned".to_string()));
        }
        if split_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("split points must strictly increase".to_string()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Validation("weights must be nonnegative, not all zero".to_string()));
        }
        let present: Vec<(usize, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(b, &w)| (b, w / total))
            .collect();
        let class_names: Vec<String> =
            present.iter().map(|&(b, _)| format!("B{}", b + 1)).collect();
        let probs: Vec<f64> = present.iter().map(|&(_, w)| w).collect();
        let fit = MultinomialFit::constant(class_names, &probs)?;
        let schema =
            FeatureSchema::for_state(0, None, None, vec![], false, &ModelConfig::default());
        Ok(SplicedPaymentModel {
            state_slot,
            component_means: components.iter().map(PaymentComponent::mean).collect(),
            bin_counts: vec![0; components.len()],
            mean_excess_table: Vec::new(),
            split_points,
            components,
            schema,
            weights: WeightModel {
                present_bins: present.iter().map(|&(b, _)| b).collect(),
                fit,
                encoder: None,
                fallback: Fallback::NoCovariates,
            },
            flags: Vec::new(),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.split_points.len() + 1
    }

    /// Bin of a payment `y`: `[b_{l-1}, b_l)` interior convention.
    pub fn bin_of(&self, y: f64) -> usize {
        self.split_points.partition_point(|&s| s <= y)
    }

    /// Mixture weights at covariates `x`, as a full `L`-vector (absent
    /// bins get probability zero).
    pub fn mixture_weights(&self, x: &CovariateVector) -> Vec<f64> {
        let probs = match &self.weights.encoder {
            Some(encoder) => {
                let labels = self.schema.labels(x);
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                self.weights.fit.predict(&encoder.encode_row(&refs))
            }
            None => self.weights.fit.predict(&[1.0]),
        };
        let mut full = vec![0.0; self.n_bins()];
        for (&bin, &p) in self.weights.present_bins.iter().zip(&probs) {
            full[bin] = p;
        }
        full
    }

    /// Expected payment: dot product of predicted bin probabilities and
    /// component means.
    pub fn expected_payment(&self, x: &CovariateVector) -> f64 {
        self.mixture_weights(x)
            .iter()
            .zip(&self.component_means)
            .map(|(w, m)| w * m)
            .sum()
    }

    /// Draws a payment: bin from the covariate-driven weights, then the
    /// bin's component law by inverse CDF.
    pub fn sample_payment(&self, x: &CovariateVector, rng: &mut impl Rng) -> f64 {
        let weights = self.mixture_weights(x);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut bin = self.n_bins() - 1;
        for (l, &w) in weights.iter().enumerate() {
            acc += w;
            if u <= acc {
                bin = l;
                break;
            }
        }
        self.components[bin].sample(rng.random())
    }

    /// Mixture density at `y` for weights `w` (used by the normalization
    /// checks; tails have closed-form unit mass on their bins).
    pub fn density_with_weights(&self, weights: &[f64], y: f64) -> f64 {
        weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.pdf(y))
            .sum()
    }
}

/// Outcome of the split-point selection, including the mean-excess
/// diagnostic table for manual threshold review.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSelection {
    pub split_points: Vec<f64>,
    /// Rows `(side, threshold, mean excess, count)` with side "left"
    /// (reflected sample) or "right".
    pub mean_excess_table: Vec<(String, f64, f64, usize)>,
    pub flags: Vec<String>,
}

/// Selects the `nBins - 1` split points of a payment sample.
///
/// The outer thresholds sit at the configured tail quantiles; the zero
/// split is fixed whenever the sample has both signs (so the interior
/// bins read as negative/positive payments); any remaining interior
/// splits spread evenly over the quantile range. A per-state config
/// override replaces the automatic choice entirely.
pub fn select_split_points(
    payments: &[f64],
    config: &ModelConfig,
    state_slot: usize,
) -> Result<SplitSelection> {
    if payments.is_empty() {
        return Err(Error::Fit("no payments to split".to_string()));
    }
    let l = config.payment.n_bins as usize;
    let mut flags = Vec::new();

    let overridden = config
        .payment
        .split_overrides
        .get(state_slot)
        .filter(|s| !s.is_empty())
        .cloned();
    let split_points = match overridden {
        Some(splits) => {
            if splits.len() != l - 1 {
                return Err(Error::Config(format!(
                    "state {state_slot}: split override has {} points, nBins={l} needs {}",
                    splits.len(),
                    l - 1
                )));
            }
            if splits.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "state {state_slot}: split override is not strictly increasing"
                )));
            }
            splits
        }
        None => automatic_splits(payments, l, config, &mut flags)?,
    };

    let min_pay = payments.iter().cloned().fold(f64::INFINITY, f64::min);
    if split_points[0] <= min_pay {
        flags.push(format!(
            "state {state_slot}: left threshold {} at or below the sample minimum; \
             left bins are empty",
            split_points[0]
        ));
    }

    Ok(SplitSelection {
        split_points,
        mean_excess_table: mean_excess_table(payments),
        flags,
    })
}

fn automatic_splits(
    payments: &[f64],
    l: usize,
    config: &ModelConfig,
    flags: &mut Vec<String>,
) -> Result<Vec<f64>> {
    let lo = quantile_of(payments, config.payment.tail_quantile_lo);
    let hi = quantile_of(payments, config.payment.tail_quantile_hi);
    let min = payments.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = payments.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mixed_signs = min < 0.0 && max > 0.0;

    let mut splits = vec![lo];
    let n_interior = l - 3;
    if l >= 4 && mixed_signs && lo < 0.0 && hi > 0.0 {
        // Zero split second, remaining interior splits at even quantiles
        // of the positive range.
        splits.push(0.0);
        for i in 1..n_interior {
            let q = config.payment.tail_quantile_lo
                + (config.payment.tail_quantile_hi - config.payment.tail_quantile_lo)
                    * (i as f64 / n_interior as f64);
            splits.push(quantile_of(payments, q).max(0.0));
        }
    } else {
        if l >= 4 && !mixed_signs {
            flags.push("single-signed sample: zero split omitted".to_string());
        }
        for i in 1..=n_interior {
            let q = config.payment.tail_quantile_lo
                + (config.payment.tail_quantile_hi - config.payment.tail_quantile_lo)
                    * (i as f64 / (n_interior + 1) as f64);
            splits.push(quantile_of(payments, q));
        }
    }
    splits.push(hi);
    splits.sort_by(|a, b| a.total_cmp(b));

    // Ties (heavy point masses) make quantile splits collide; nudge them
    // apart so bins stay well-defined.
    for i in 1..splits.len() {
        if splits[i] <= splits[i - 1] {
            let bump = (splits[i - 1].abs() * 1e-9).max(1e-9);
            splits[i] = splits[i - 1] + bump;
            flags.push(format!("split {i} nudged above split {} (tied quantiles)", i - 1));
        }
    }
    Ok(splits)
}

/// Mean excesses over a ladder of thresholds, for both tails.
fn mean_excess_table(payments: &[f64]) -> Vec<(String, f64, f64, usize)> {
    let mut rows = Vec::new();
    let probs: Vec<f64> = (0..=18).map(|i| 0.50 + i as f64 * 0.025).collect();
    for &p in &probs {
        let threshold = quantile_of(payments, p);
        let excesses: Vec<f64> =
            payments.iter().filter(|&&y| y > threshold).map(|&y| y - threshold).collect();
        if !excesses.is_empty() {
            rows.push(("right".to_string(), threshold, mean(&excesses), excesses.len()));
        }
        let reflected = quantile_of(payments, 1.0 - p);
        let left: Vec<f64> =
            payments.iter().filter(|&&y| y < reflected).map(|&y| reflected - y).collect();
        if !left.is_empty() {
            rows.push(("left".to_string(), reflected, mean(&left), left.len()));
        }
    }
    rows
}

/// Fits the per-bin components of the spliced distribution.
///
/// Tail bins fit a GPD on (reflected) exceedances past the outer splits;
/// interior bins fit truncated normals; bins with fewer than 30 rows fall
/// back to their empirical mean, empty bins stay structurally empty.
pub fn fit_components(
    payments: &[f64],
    split_points: &[f64],
) -> Result<(Vec<PaymentComponent>, Vec<u64>, Vec<String>)> {
    let l = split_points.len() + 1;
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); l];
    for &y in payments {
        per_bin[split_points.partition_point(|&s| s <= y)].push(y);
    }
    let bin_counts: Vec<u64> = per_bin.iter().map(|b| b.len() as u64).collect();
    let mut flags = Vec::new();
    let mut components = Vec::with_capacity(l);

    for (bin, sample) in per_bin.iter().enumerate() {
        if sample.is_empty() {
            flags.push(format!("bin {bin} has no observations"));
            components.push(PaymentComponent::Empty);
            continue;
        }
        let component = if bin == 0 {
            let location = split_points[0];
            let excesses: Vec<f64> = sample.iter().map(|&y| location - y).collect();
            let fit = fit_gpd(&excesses)?;
            if fit.exponential_fallback {
                flags.push(format!("left tail: exponential fallback ({} rows)", sample.len()));
            }
            if fit.shape_capped {
                flags.push("left tail: shape capped, empirical mean substituted".to_string());
            }
            PaymentComponent::LeftTail {
                location,
                gpd: fit.gpd,
                mean: location - fit.component_mean_excess(),
            }
        } else if bin == l - 1 {
            let location = split_points[l - 2];
            let excesses: Vec<f64> = sample.iter().map(|&y| y - location).collect();
            let fit = fit_gpd(&excesses)?;
            if fit.exponential_fallback {
                flags.push(format!("right tail: exponential fallback ({} rows)", sample.len()));
            }
            if fit.shape_capped {
                flags.push("right tail: shape capped, empirical mean substituted".to_string());
            }
            PaymentComponent::RightTail {
                location,
                gpd: fit.gpd,
                mean: location + fit.component_mean_excess(),
            }
        } else {
            let (lo, hi) = (split_points[bin - 1], split_points[bin]);
            match fit_truncated_normal(sample, lo, hi) {
                Ok(fit) if !fit.empirical_fallback => PaymentComponent::Body {
                    dist: fit.dist,
                    mean: fit.component_mean(),
                    empirical: false,
                },
                Ok(fit) => {
                    flags.push(format!(
                        "bin {bin}: empirical mean fallback ({} rows)",
                        sample.len()
                    ));
                    PaymentComponent::Body {
                        dist: fit.dist,
                        mean: fit.component_mean(),
                        empirical: true,
                    }
                }
                Err(_) => {
                    flags.push(format!("bin {bin}: degenerate sample, point mass"));
                    PaymentComponent::Degenerate { mean: mean(sample) }
                }
            }
        };
        // A component whose mean cannot be used degrades to a point mass
        // at the empirical bin mean.
        let component = if component.mean().is_finite() {
            component
        } else {
            flags.push(format!("bin {bin}: non-finite fitted mean, empirical fallback"));
            PaymentComponent::Degenerate { mean: mean(sample) }
        };
        components.push(component);
    }
    Ok((components, bin_counts, flags))
}

/// Fits the multinomial mixture weights with the standard fallback chain:
/// covariate model when `rows >= max(nMinModP, p * nTimesParamsP)`,
/// intercept-only when `rows >= nMinNoModP`, otherwise `None` so the
/// caller reuses the previous state's model.
pub fn fit_mixture_weights(
    design: Option<&DesignMatrix>,
    bin_counts_present: &[(usize, f64)],
    encoder: Option<&Encoder>,
    config: &ModelConfig,
) -> Result<Option<WeightModel>> {
    let n_rows: f64 = bin_counts_present.iter().map(|&(_, c)| c).sum();
    let present_bins: Vec<usize> = bin_counts_present.iter().map(|&(b, _)| b).collect();
    let class_names: Vec<String> =
        present_bins.iter().map(|b| format!("B{}", b + 1)).collect();

    if present_bins.len() < 2 {
        // All payments in one bin: a constant, trivially converged model.
        if n_rows < f64::from(config.payment.n_min_no_mod_p) {
            return Ok(None);
        }
        let fit = MultinomialFit::constant(class_names, &[1.0])?;
        return Ok(Some(WeightModel {
            present_bins,
            fit,
            encoder: None,
            fallback: Fallback::NoCovariates,
        }));
    }

    if let (Some(design), Some(encoder)) = (design, encoder) {
        let p = design.p;
        let needed = f64::from(config.payment.n_min_mod_p)
            .max((p as f64) * f64::from(config.payment.n_times_params_p));
        if n_rows >= needed {
            let fit = fit_multinomial(&design.collapse(), FitOptions::default())?;
            return Ok(Some(WeightModel {
                present_bins,
                fit,
                encoder: Some(encoder.clone()),
                fallback: Fallback::Full,
            }));
        }
    }
    if n_rows >= f64::from(config.payment.n_min_no_mod_p) {
        let counts: Vec<f64> = bin_counts_present.iter().map(|&(_, c)| c).collect();
        let design = DesignMatrix::intercept_only(&counts, class_names)?;
        let fit = fit_multinomial(&design, FitOptions::default())?;
        return Ok(Some(WeightModel {
            present_bins,
            fit,
            encoder: None,
            fallback: Fallback::NoCovariates,
        }));
    }
    Ok(None)
}

/// The per-state payment models; pooled states share the last slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaymentModelSet {
    pub models: Vec<SplicedPaymentModel>,
}

impl PaymentModelSet {
    pub fn for_state(&self, state_index: u32) -> &SplicedPaymentModel {
        let slot = crate::claims_data::model_slot(state_index, self.models.len() as u32);
        &self.models[slot]
    }
}

/// Fits one spliced payment model per state slot. Covariate schemas (and
/// the payment-history binning) are shared with the state's time model,
/// plus the terminal-payment indicator. States with too few payment rows
/// reuse the previous state's model.
pub fn fit_payment_models(
    datasets: &crate::claims_data::StateDatasets,
    time_models: &crate::time_model::TimeModelSet,
    config: &ModelConfig,
) -> Result<PaymentModelSet> {
    let mut models: Vec<SplicedPaymentModel> = Vec::with_capacity(datasets.payment_rows.len());
    for (slot, rows) in datasets.payment_rows.iter().enumerate() {
        let pool_previous = |models: &Vec<SplicedPaymentModel>| -> Result<SplicedPaymentModel> {
            let previous = models.last().ok_or_else(|| {
                Error::Fit(format!(
                    "state S_0 has {} payment rows, below nMinNoModP={}",
                    rows.len(),
                    config.payment.n_min_no_mod_p
                ))
            })?;
            let mut pooled = previous.clone();
            pooled.state_slot = slot;
            pooled.weights.fallback = Fallback::Pooled;
            Ok(pooled)
        };

        if (rows.len() as u32) < config.payment.n_min_no_mod_p {
            models.push(pool_previous(&models)?);
            continue;
        }

        let payments: Vec<f64> =
            rows.iter().map(|r| r.payment.expect("payment row").to_units()).collect();
        let selection = select_split_points(&payments, config, slot)?;
        let (components, bin_counts, mut flags) =
            fit_components(&payments, &selection.split_points)?;
        flags.extend(selection.flags.clone());

        let mut schema = time_models.models[slot].schema.clone();
        schema.with_terminal_flag = true;

        let present: Vec<(usize, f64)> = bin_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(b, &c)| (b, c as f64))
            .collect();

        // Covariate design over the present bins.
        let names = schema.feature_names();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let columns = crate::time_model::label_columns(&schema, rows);
        let encoder = Encoder::fit(&name_refs, &columns, &schema.min_counts(config))?;
        let bin_index_of: std::collections::BTreeMap<usize, usize> =
            present.iter().enumerate().map(|(class, &(b, _))| (b, class)).collect();
        let label_rows: Vec<Vec<String>> =
            rows.iter().map(|r| schema.labels(&r.covariates)).collect();
        let splits = &selection.split_points;
        let y: Vec<usize> = payments
            .iter()
            .map(|&p| bin_index_of[&splits.partition_point(|&s| s <= p)])
            .collect();
        let class_names: Vec<String> =
            present.iter().map(|&(b, _)| format!("B{}", b + 1)).collect();
        let design = if present.len() >= 2 {
            Some(encoder.design(&label_rows, y, class_names)?)
        } else {
            None
        };

        match fit_mixture_weights(design.as_ref(), &present, Some(&encoder), config)? {
            Some(weights) => {
                let component_means: Vec<f64> =
                    components.iter().map(PaymentComponent::mean).collect();
                models.push(SplicedPaymentModel {
                    state_slot: slot,
                    split_points: selection.split_points,
                    components,
                    component_means,
                    schema,
                    weights,
                    bin_counts,
                    mean_excess_table: selection.mean_excess_table,
                    flags,
                });
            }
            None => models.push(pool_previous(&models)?),
        }
    }
    Ok(PaymentModelSet { models })
}
