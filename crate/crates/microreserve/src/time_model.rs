//! Per-state discrete-time transition hazards and the reporting model.
//!
//! Each payment state gets a multinomial-logit model over the transition
//! types observed there, with the no-event class as reference; the
//! no-event probability is always computed as the complement of the three
//! exit hazards. States too thin for a covariate model fall back to
//! observed frequencies, and states below even that threshold reuse the
//! previous state's model.
//!
//! Two modifications act on an estimated hazard vector during simulation:
//! a claim that sat in its state too long has the stay mass redistributed
//! equally onto the three exits, and a claim in the last payment state has
//! the next-state mass folded into the terminal-payment hazard. Their
//! composition forces a terminal transition outright.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binning::bin_continuous_variable;
use crate::claims_data::{CovariateVector, PeriodRow, StateDatasets, TransitionType};
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::glm::{
    fit_binomial, fit_multinomial, DesignMatrix, Encoder, FitOptions, MultinomialFit,
};
use crate::schema::{Fallback, FeatureSchema};

/// Transition probabilities in canonical order (N, P, TN, TP).
pub type HazardVector = [f64; 4];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardModel {
    pub state_slot: usize,
    pub schema: FeatureSchema,
    /// Absent for intercept-only fits.
    pub encoder: Option<Encoder>,
    /// Fit over the observed classes only; class names are a subset of
    /// `["N", "P", "TN", "TP"]` in that order.
    pub fit: MultinomialFit,
    /// Which of the four transition types appeared in training.
    pub observed: [bool; 4],
    pub fallback: Fallback,
    pub n_rows: usize,
}

impl HazardModel {
    /// Transition probabilities at covariates `x`. Classes absent from
    /// training get probability zero; the stay probability is the
    /// complement of the exit hazards.
    pub fn hazards_for(&self, x: &CovariateVector) -> HazardVector {
        let labels = self.schema.labels(x);
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        self.hazards_for_labels(&refs)
    }

    /// Same as [`HazardModel::hazards_for`] from pre-extracted labels
    /// (used by the marginal-effect tables).
    pub fn hazards_for_labels(&self, labels: &[&str]) -> HazardVector {
        let probs = match &self.encoder {
            Some(encoder) => self.fit.predict(&encoder.encode_row(labels)),
            None => self.fit.predict(&[1.0]),
        };
        let mut out = [0.0; 4];
        let mut class = 0;
        for (slot, &seen) in self.observed.iter().enumerate() {
            if seen {
                out[slot] = probs[class];
                class += 1;
            }
        }
        if self.observed[0] {
            // The no-event probability as the complement of the exits.
            out[0] = (1.0 - out[1] - out[2] - out[3]).max(0.0);
        }
        out
    }
}

/// Redistributes the stay mass equally onto the three exit hazards
/// (applied once a claim has spent the maximum time in its state).
pub fn force_state_exit(h: HazardVector) -> HazardVector {
    let third = h[0] / 3.0;
    [0.0, h[1] + third, h[2] + third, h[3] + third]
}

/// Folds the next-state mass into the terminal-payment hazard (applied in
/// the last payment state, which has no further payment state to enter).
pub fn force_terminal_only(h: HazardVector) -> HazardVector {
    [h[0], 0.0, h[2], h[3] + h[1]]
}

/// Both modifications in order: no staying, no further payment state, all
/// mass on the terminal transitions.
pub fn force_process_exit(h: HazardVector) -> HazardVector {
    force_terminal_only(force_state_exit(h))
}

/// Draws a transition from a hazard vector.
pub fn sample_transition(h: &HazardVector, rng: &mut impl Rng) -> TransitionType {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for t in TransitionType::ALL {
        acc += h[t.index()];
        if u <= acc {
            return t;
        }
    }
    // Round the trailing mass onto the last positive entry.
    *TransitionType::ALL
        .iter()
        .rev()
        .find(|t| h[t.index()] > 0.0)
        .unwrap_or(&TransitionType::Tn)
}

/// Empirical transition mix of a row set (N, P, TN, TP fractions).
pub fn transition_mix(rows: &[PeriodRow]) -> HazardVector {
    let mut counts = [0usize; 4];
    for row in rows {
        counts[row.transition.index()] += 1;
    }
    let total = counts.iter().sum::<usize>().max(1) as f64;
    [
        counts[0] as f64 / total,
        counts[1] as f64 / total,
        counts[2] as f64 / total,
        counts[3] as f64 / total,
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeModelSet {
    /// One model per slot `S_0 .. S_{maxMod-1}+`.
    pub models: Vec<HazardModel>,
}

impl TimeModelSet {
    pub fn for_state(&self, state_index: u32) -> &HazardModel {
        let slot = crate::claims_data::model_slot(state_index, self.models.len() as u32);
        &self.models[slot]
    }
}

fn observed_mask(rows: &[PeriodRow]) -> ([bool; 4], [f64; 4]) {
    let mut counts = [0.0f64; 4];
    for row in rows {
        counts[row.transition.index()] += 1.0;
    }
    let mask = [counts[0] > 0.0, counts[1] > 0.0, counts[2] > 0.0, counts[3] > 0.0];
    (mask, counts)
}

fn class_names_of(mask: &[bool; 4]) -> Vec<String> {
    TransitionType::ALL
        .iter()
        .filter(|t| mask[t.index()])
        .map(|t| t.as_str().to_string())
        .collect()
}

fn class_index_of(mask: &[bool; 4], t: TransitionType) -> usize {
    (0..t.index()).filter(|&i| mask[i]).count()
}

/// Fits the per-state hazard models with the threshold fallback chain:
/// covariate fit when `rows >= max(nMinModT, p * nTimesParamsT)`,
/// intercept-only when `rows >= nMinNoModT`, otherwise the previous
/// state's model is reused. A first state below `nMinNoModT` is a hard
/// error (the portfolio cannot be modeled).
///
/// Continuous payment-history covariates are binned here (per state, on
/// that state's rows) and the specs travel with the model schema so the
/// payment models and the simulator share them.
pub fn fit_time_models(
    datasets: &StateDatasets,
    config: &ModelConfig,
    seed: u64,
) -> Result<TimeModelSet> {
    let mut models: Vec<HazardModel> = Vec::with_capacity(datasets.time_rows.len());
    for (slot, rows) in datasets.time_rows.iter().enumerate() {
        let n = rows.len();
        if slot == 0 && (n as u32) < config.time.n_min_no_mod_t {
            return Err(Error::Fit(format!(
                "state S_0 has {n} rows, below nMinNoModT={}; portfolio too small to model",
                config.time.n_min_no_mod_t
            )));
        }
        if (n as u32) < config.time.n_min_no_mod_t {
            let previous = models
                .last()
                .ok_or_else(|| Error::Fit("no previous state model to pool into".to_string()))?;
            models.push(HazardModel {
                state_slot: slot,
                fallback: Fallback::Pooled,
                n_rows: n,
                ..previous.clone()
            });
            continue;
        }

        let (observed, counts) = observed_mask(rows);
        let class_names = class_names_of(&observed);
        // Binning only pays off when this state can reach a covariate fit
        // (here or in its payment model).
        let with_bins =
            n as u32 >= config.time.n_min_mod_t.min(config.payment.n_min_mod_p);
        let schema = schema_for_slot(slot, rows, false, with_bins, config, seed)?;

        // Covariate route if the row count supports the parameter count.
        let mut fitted: Option<(MultinomialFit, Option<Encoder>, Fallback)> = None;
        if class_names.len() >= 2 {
            let label_columns = label_columns(&schema, rows);
            let names = schema.feature_names();
            let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let encoder = Encoder::fit(&name_refs, &label_columns, &schema.min_counts(config))?;
            let p = encoder.n_columns() + 1;
            let needed = f64::from(config.time.n_min_mod_t)
                .max(p as f64 * f64::from(config.time.n_times_params_t));
            if n as f64 >= needed {
                let label_rows: Vec<Vec<String>> =
                    rows.iter().map(|r| schema.labels(&r.covariates)).collect();
                let y: Vec<usize> =
                    rows.iter().map(|r| class_index_of(&observed, r.transition)).collect();
                let design = encoder.design(&label_rows, y, class_names.clone())?.collapse();
                let fit = fit_multinomial(&design, FitOptions::default())?;
                fitted = Some((fit, Some(encoder), Fallback::Full));
            }
        }
        let (fit, encoder, fallback) = match fitted {
            Some(f) => f,
            None => {
                // Intercept-only: observed class frequencies.
                let present: Vec<f64> = TransitionType::ALL
                    .iter()
                    .filter(|t| observed[t.index()])
                    .map(|t| counts[t.index()])
                    .collect();
                let fit = if class_names.len() < 2 {
                    MultinomialFit::constant(class_names.clone(), &present)?
                } else {
                    let design = DesignMatrix::intercept_only(&present, class_names.clone())?;
                    fit_multinomial(&design, FitOptions::default())?
                };
                (fit, None, Fallback::NoCovariates)
            }
        };
        models.push(HazardModel {
            state_slot: slot,
            schema,
            encoder,
            fit,
            observed,
            fallback,
            n_rows: n,
        });
    }
    Ok(TimeModelSet { models })
}

/// Schema of a state's models; bins the payment-history covariates on the
/// state's own rows when `with_bins` is set.
pub(crate) fn schema_for_slot(
    slot: usize,
    rows: &[PeriodRow],
    with_terminal_flag: bool,
    with_bins: bool,
    config: &ModelConfig,
    seed: u64,
) -> Result<FeatureSchema> {
    let mut static_names: Vec<String> = Vec::new();
    for row in rows {
        for name in row.covariates.base.keys() {
            if !static_names.contains(name) {
                static_names.push(name.clone());
            }
        }
    }
    static_names.sort();

    let (delt_pay_bins, cum_pay_bins) = if slot == 0 || rows.is_empty() || !with_bins {
        (None, None)
    } else {
        let state_time: Vec<u32> = rows
            .iter()
            .map(|r| r.covariates.in_state_time.min(config.time.n_max_lev_in_state))
            .collect();
        let response: Vec<usize> = rows.iter().map(|r| r.transition.index()).collect();
        let delt_pay: Vec<f64> = rows
            .iter()
            .map(|r| r.covariates.delt1_pay.map_or(0.0, |m| m.to_units()))
            .collect();
        let cum_pay: Vec<f64> =
            rows.iter().map(|r| r.covariates.cum_delt1_pay.to_units()).collect();
        let delt_spec = bin_continuous_variable(
            &format!("deltPay_s{slot}"),
            &delt_pay,
            &state_time,
            &response,
            4,
            config,
            seed,
        )?;
        let cum_spec = bin_continuous_variable(
            &format!("cumDeltPay_s{slot}"),
            &cum_pay,
            &state_time,
            &response,
            4,
            config,
            seed,
        )?;
        (Some(delt_spec), Some(cum_spec))
    };
    Ok(FeatureSchema::for_state(
        slot,
        delt_pay_bins,
        cum_pay_bins,
        static_names,
        with_terminal_flag,
        config,
    ))
}

pub(crate) fn label_columns(schema: &FeatureSchema, rows: &[PeriodRow]) -> Vec<Vec<String>> {
    let n_features = schema.feature_names().len();
    let mut columns: Vec<Vec<String>> = vec![Vec::with_capacity(rows.len()); n_features];
    for row in rows {
        for (f, label) in schema.labels(&row.covariates).into_iter().enumerate() {
            columns[f].push(label);
        }
    }
    columns
}

/// Per-period reporting probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportingModel {
    /// Probability that an unreported claim reports in the next period.
    pub lambda: f64,
    /// Intercept-only binomial fit backing `lambda` (absent for constant
    /// models).
    pub fit: Option<MultinomialFit>,
    pub n_claims: usize,
}

impl ReportingModel {
    pub fn constant(lambda: f64) -> Result<ReportingModel> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Validation(format!(
                "reporting probability {lambda} not in (0,1]"
            )));
        }
        Ok(ReportingModel { lambda, fit: None, n_claims: 0 })
    }
}

/// Fits the per-period Bernoulli reporting model from observed reporting
/// delays (periods, >= 1): a claim with delay `d` contributes `d - 1`
/// non-reporting periods and one reporting period. `reportingLambda` in
/// the config short-circuits to a constant model.
pub fn fit_reporting_model(delays: &[u32], config: &ModelConfig) -> Result<ReportingModel> {
    if let Some(lambda) = config.simulation.reporting_lambda {
        return ReportingModel::constant(lambda);
    }
    if delays.is_empty() {
        return Err(Error::Fit("no reporting delays to fit".to_string()));
    }
    if delays.contains(&0) {
        return Err(Error::Validation("reporting delays are 1-based".to_string()));
    }
    let successes = delays.len() as f64;
    let failures: f64 = delays.iter().map(|&d| f64::from(d - 1)).sum();
    if failures == 0.0 {
        // Every claim reported within its first period.
        return Ok(ReportingModel { lambda: 1.0, fit: None, n_claims: delays.len() });
    }
    let design = DesignMatrix::intercept_only(
        &[failures, successes],
        vec!["wait".to_string(), "report".to_string()],
    )?;
    let fit = fit_binomial(&design, FitOptions::default())?;
    let lambda = fit.predict(&[1.0])[1];
    Ok(ReportingModel { lambda, fit: Some(fit), n_claims: delays.len() })
}
