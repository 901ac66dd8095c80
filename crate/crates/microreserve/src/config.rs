//! Engine configuration.
//!
//! One TOML file with a section per model stage. Key names follow the
//! hyper-parameter names used throughout the pipeline (`perLen`,
//! `minPayVal`, `nMinLev`, ...) so a tuning table can be transcribed
//! directly. Every field has a default; an empty file is a valid config.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// chrono format string for all date columns.
    #[serde(rename = "dateFormat")]
    pub date_format: String,
    /// Field delimiter for tabular inputs and outputs.
    pub delimiter: char,
    /// Evaluation date (tau). Usually supplied via `--as-of`.
    #[serde(rename = "evalDate")]
    pub eval_date: Option<NaiveDate>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { date_format: "%d-%m-%Y".to_string(), delimiter: ',', eval_date: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessingConfig {
    /// Days per discrete period.
    #[serde(rename = "perLen")]
    pub per_len: u32,
    /// Minimum absolute cumulative-payment change (currency units) that
    /// counts as a payment transition.
    #[serde(rename = "minPayVal")]
    pub min_pay_val: f64,
    /// Minimum observations per categorical level before merging.
    #[serde(rename = "nMinLev")]
    pub n_min_lev: u32,
    /// Target number of bins for a binned continuous predictor.
    #[serde(rename = "nGroups")]
    pub n_groups: u32,
}

impl Default for PreprocessingConfig {
    fn default() -> Self {
        PreprocessingConfig { per_len: 30, min_pay_val: 200.0, n_min_lev: 30, n_groups: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    /// Number of bootstrap resamples feeding the split search.
    #[serde(rename = "nBootstrap")]
    pub n_bootstrap: u32,
    /// Rows per bootstrap resample (capped at the dataset size).
    #[serde(rename = "bootstrapSampleSize")]
    pub bootstrap_sample_size: u32,
    /// Span of the local regression smoothing the per-group effects.
    #[serde(rename = "loessSpan")]
    pub loess_span: f64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { n_bootstrap: 10, bootstrap_sample_size: 100_000, loess_span: 0.75 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeProcessConfig {
    /// Minimum observations per level of a categorized time variable.
    #[serde(rename = "nMinTimeLev")]
    pub n_min_time_lev: u32,
    /// Cap (periods) on the state-time covariate levels.
    #[serde(rename = "nMaxLevInState")]
    pub n_max_lev_in_state: u32,
    /// Cap (periods) on the process-time covariate levels.
    #[serde(rename = "nMaxLevInProc")]
    pub n_max_lev_in_proc: u32,
    /// Number of distinct per-state models; later states reuse the last one.
    #[serde(rename = "maxMod")]
    pub max_mod: u32,
    /// Minimum rows for a covariate time model.
    #[serde(rename = "nMinModT")]
    pub n_min_mod_t: u32,
    /// Minimum rows for an intercept-only time model.
    #[serde(rename = "nMinNoModT")]
    pub n_min_no_mod_t: u32,
    /// Required rows per fitted parameter in a covariate time model.
    #[serde(rename = "nTimesParamsT")]
    pub n_times_params_t: u32,
}

impl Default for TimeProcessConfig {
    fn default() -> Self {
        TimeProcessConfig {
            n_min_time_lev: 30,
            n_max_lev_in_state: 12,
            n_max_lev_in_proc: 24,
            max_mod: 6,
            n_min_mod_t: 500,
            n_min_no_mod_t: 50,
            n_times_params_t: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaymentProcessConfig {
    /// Number of mixture components L (two tails + L-2 body bins).
    #[serde(rename = "nBins")]
    pub n_bins: u32,
    /// Minimum rows for a covariate mixture-weight model.
    #[serde(rename = "nMinModP")]
    pub n_min_mod_p: u32,
    /// Minimum rows for an intercept-only mixture-weight model.
    #[serde(rename = "nMinNoModP")]
    pub n_min_no_mod_p: u32,
    /// Required rows per fitted parameter in a covariate weight model.
    #[serde(rename = "nTimesParamsP")]
    pub n_times_params_p: u32,
    /// Quantile of the payment sample placed at the left tail threshold.
    #[serde(rename = "tailQuantileLo")]
    pub tail_quantile_lo: f64,
    /// Quantile of the payment sample placed at the right tail threshold.
    #[serde(rename = "tailQuantileHi")]
    pub tail_quantile_hi: f64,
    /// Per-state split-point overrides (currency units), outermost first;
    /// entry `i` applies to state `S_i`. Empty inner lists fall back to the
    /// automatic quantile rule.
    #[serde(rename = "splitOverrides")]
    pub split_overrides: Vec<Vec<f64>>,
}

impl Default for PaymentProcessConfig {
    fn default() -> Self {
        PaymentProcessConfig {
            n_bins: 4,
            n_min_mod_p: 500,
            n_min_no_mod_p: 50,
            n_times_params_p: 5,
            tail_quantile_lo: 0.05,
            tail_quantile_hi: 0.95,
            split_overrides: Vec::new(),
        }
    }
}

/// How the IBNR claim count enters each portfolio replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IbnrCountMode {
    /// A fresh negative-binomial draw per replication (count uncertainty
    /// propagates into the reserve distribution).
    Draw,
    /// The expected count, rounded, fixed across replications.
    Mean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Trajectories per claim / portfolio replications.
    #[serde(rename = "nSims")]
    pub n_sims: u32,
    /// Periods after which a claim is forced to exit its current state.
    #[serde(rename = "fixedTimeMax")]
    pub fixed_time_max: u32,
    /// Maximum number of payment states; state `npmax - 1` only allows
    /// terminal transitions.
    #[serde(rename = "npmax")]
    pub npmax: u32,
    /// Periods in the whole process after which a terminal draw is forced.
    #[serde(rename = "procTimeMax")]
    pub proc_time_max: u32,
    /// Sample payment amounts from the spliced distribution instead of
    /// using expected payments.
    #[serde(rename = "samplePayments")]
    pub sample_payments: bool,
    /// IBNR count coupling, see [`IbnrCountMode`].
    #[serde(rename = "ibnrCountMode")]
    pub ibnr_count_mode: IbnrCountMode,
    /// Predictive draws when summarizing the IBNR count distribution.
    #[serde(rename = "ibnrDraws")]
    pub ibnr_draws: u32,
    /// Constant per-period reporting probability; overrides the fitted
    /// reporting model when set.
    #[serde(rename = "reportingLambda")]
    pub reporting_lambda: Option<f64>,
    /// Hard cap on simulated reporting delays (periods past tau).
    #[serde(rename = "maxReportingDelay")]
    pub max_reporting_delay: u32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_sims: 100,
            fixed_time_max: 24,
            npmax: 50,
            proc_time_max: 180,
            sample_payments: false,
            ibnr_count_mode: IbnrCountMode::Draw,
            ibnr_draws: 1000,
            reporting_lambda: None,
            max_reporting_delay: 600,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub data: DataConfig,
    pub preprocessing: PreprocessingConfig,
    pub binning: BinningConfig,
    #[serde(rename = "time_process")]
    pub time: TimeProcessConfig,
    #[serde(rename = "payment_process")]
    pub payment: PaymentProcessConfig,
    pub simulation: SimulationConfig,
    /// Base RNG seed; usually supplied via `--seed`.
    #[serde(rename = "rngSeed")]
    pub rng_seed: Option<u64>,
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<ModelConfig> {
        let cfg: ModelConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<ModelConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: u32) -> Result<()> {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
            Ok(())
        }
        positive("perLen", self.preprocessing.per_len)?;
        positive("nMinLev", self.preprocessing.n_min_lev)?;
        positive("nGroups", self.preprocessing.n_groups)?;
        positive("nBootstrap", self.binning.n_bootstrap)?;
        positive("bootstrapSampleSize", self.binning.bootstrap_sample_size)?;
        positive("nMinTimeLev", self.time.n_min_time_lev)?;
        positive("nMaxLevInState", self.time.n_max_lev_in_state)?;
        positive("nMaxLevInProc", self.time.n_max_lev_in_proc)?;
        positive("maxMod", self.time.max_mod)?;
        positive("nMinModT", self.time.n_min_mod_t)?;
        positive("nMinNoModT", self.time.n_min_no_mod_t)?;
        positive("nTimesParamsT", self.time.n_times_params_t)?;
        positive("nMinModP", self.payment.n_min_mod_p)?;
        positive("nMinNoModP", self.payment.n_min_no_mod_p)?;
        positive("nTimesParamsP", self.payment.n_times_params_p)?;
        positive("nSims", self.simulation.n_sims)?;
        positive("fixedTimeMax", self.simulation.fixed_time_max)?;
        positive("npmax", self.simulation.npmax)?;
        positive("procTimeMax", self.simulation.proc_time_max)?;
        positive("ibnrDraws", self.simulation.ibnr_draws)?;
        if self.preprocessing.min_pay_val < 0.0 {
            return Err(Error::Config("minPayVal must be nonnegative".to_string()));
        }
        if self.payment.n_bins < 3 {
            return Err(Error::Config("nBins must be at least 3".to_string()));
        }
        if self.time.max_mod > self.simulation.npmax {
            return Err(Error::Config("maxMod must not exceed npmax".to_string()));
        }
        let (lo, hi) = (self.payment.tail_quantile_lo, self.payment.tail_quantile_hi);
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(
                "tail quantiles must satisfy 0 < lo < hi < 1".to_string(),
            ));
        }
        if !(0.0 < self.binning.loess_span && self.binning.loess_span <= 1.0) {
            return Err(Error::Config("loessSpan must lie in (0, 1]".to_string()));
        }
        if let Some(l) = self.simulation.reporting_lambda {
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::Config("reportingLambda must lie in (0, 1]".to_string()));
            }
        }
        Ok(())
    }

    /// `minPayVal` as exact cents (the transition-detection threshold).
    pub fn min_pay_val_money(&self) -> Money {
        Money::from_units(self.preprocessing.min_pay_val)
    }

    pub fn eval_date(&self) -> Result<NaiveDate> {
        self.data
            .eval_date
            .ok_or_else(|| Error::Config("evaluation date (tau) is not set".to_string()))
    }
}
