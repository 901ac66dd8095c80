//! Feature schemas: from covariate vectors to categorical labels.
//!
//! Every regression in the engine sees categorical levels only. Time
//! variables are capped integers, money variables go through their
//! [`BinningSpec`], static covariates pass through as-is. One schema per
//! state describes the covariate set of that state's models; state `S_0`
//! carries no payment history and its state time duplicates the process
//! time, so both are omitted there.

use serde::{Deserialize, Serialize};

use crate::binning::BinningSpec;
use crate::claims_data::CovariateVector;
use crate::config::ModelConfig;

/// Which fitting route a per-state model ended up on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fallback {
    /// Enough rows for the full covariate model.
    Full,
    /// Intercept-only, observed class frequencies.
    NoCovariates,
    /// Too few rows even for that; the previous state's model is reused.
    Pooled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSchema {
    /// Payment-history covariates are available (states past `S_0`).
    pub include_payment_history: bool,
    pub delt_rep_cap: u32,
    pub proc_time_cap: u32,
    pub state_time_cap: u32,
    pub delt_pay_bins: Option<BinningSpec>,
    pub cum_delt_pay_bins: Option<BinningSpec>,
    pub static_names: Vec<String>,
    /// Payment models add the terminal-payment indicator.
    pub with_terminal_flag: bool,
}

impl FeatureSchema {
    pub fn for_state(
        slot: usize,
        delt_pay_bins: Option<BinningSpec>,
        cum_delt_pay_bins: Option<BinningSpec>,
        static_names: Vec<String>,
        with_terminal_flag: bool,
        config: &ModelConfig,
    ) -> FeatureSchema {
        FeatureSchema {
            include_payment_history: slot > 0,
            delt_rep_cap: config.time.n_max_lev_in_proc,
            proc_time_cap: config.time.n_max_lev_in_proc,
            state_time_cap: config.time.n_max_lev_in_state,
            delt_pay_bins: if slot > 0 { delt_pay_bins } else { None },
            cum_delt_pay_bins: if slot > 0 { cum_delt_pay_bins } else { None },
            static_names,
            with_terminal_flag,
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = vec![
            "deltRep".to_string(),
            "fastRep".to_string(),
            "procTime".to_string(),
        ];
        if self.include_payment_history {
            names.push("stateTime".to_string());
            if self.delt_pay_bins.is_some() {
                names.push("deltPay".to_string());
            }
            if self.cum_delt_pay_bins.is_some() {
                names.push("cumDeltPay".to_string());
            }
        }
        names.extend(self.static_names.iter().cloned());
        if self.with_terminal_flag {
            names.push("terminalPay".to_string());
        }
        names
    }

    /// Per-feature minimum level counts for the encoder (time variables use
    /// `nMinTimeLev`, everything else `nMinLev`).
    pub fn min_counts(&self, config: &ModelConfig) -> Vec<u32> {
        let time = config.time.n_min_time_lev;
        let lev = config.preprocessing.n_min_lev;
        let mut counts = vec![time, lev, time];
        if self.include_payment_history {
            counts.push(time);
            if self.delt_pay_bins.is_some() {
                counts.push(lev);
            }
            if self.cum_delt_pay_bins.is_some() {
                counts.push(lev);
            }
        }
        counts.extend(self.static_names.iter().map(|_| lev));
        if self.with_terminal_flag {
            counts.push(1);
        }
        counts
    }

    /// Categorical labels of one covariate vector, aligned with
    /// [`FeatureSchema::feature_names`].
    pub fn labels(&self, x: &CovariateVector) -> Vec<String> {
        let mut labels = vec![
            format!("d{}", x.delt_rep.min(self.delt_rep_cap)),
            if x.fast_rep { "1" } else { "0" }.to_string(),
            format!("p{}", x.in_proc_time.min(self.proc_time_cap)),
        ];
        if self.include_payment_history {
            labels.push(format!("s{}", x.in_state_time.min(self.state_time_cap)));
            if let Some(bins) = &self.delt_pay_bins {
                labels.push(match x.delt1_pay {
                    Some(p) => bins.bin_label(p.to_units()),
                    None => "NA".to_string(),
                });
            }
            if let Some(bins) = &self.cum_delt_pay_bins {
                labels.push(if x.no_prior_payment() {
                    "NA".to_string()
                } else {
                    bins.bin_label(x.cum_delt1_pay.to_units())
                });
            }
        }
        for name in &self.static_names {
            labels.push(x.base.get(name).cloned().unwrap_or_default());
        }
        if self.with_terminal_flag {
            labels.push(if x.terminal_payment_flag { "1" } else { "0" }.to_string());
        }
        labels
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::money::Money;

    fn vector(state_time: u32, pay: Option<i64>) -> CovariateVector {
        CovariateVector {
            delt_rep: 3,
            fast_rep: false,
            in_proc_time: 30,
            delt1_pay: pay.map(Money::from_cents),
            delt1_pay_time: pay.map(|_| state_time),
            cum_delt1_pay: pay.map_or(Money::ZERO, Money::from_cents),
            in_state_time: state_time,
            base: Arc::new(BTreeMap::from([("lob".to_string(), "motor".to_string())])),
            terminal_payment_flag: false,
        }
    }

    #[test]
    fn state_zero_schema_has_no_payment_history() {
        let cfg = ModelConfig::default();
        let schema = FeatureSchema::for_state(0, None, None, vec!["lob".to_string()], false, &cfg);
        assert_eq!(schema.feature_names(), vec!["deltRep", "fastRep", "procTime", "lob"]);
        let labels = schema.labels(&vector(30, None));
        // procTime capped at nMaxLevInProc = 24.
        assert_eq!(labels, vec!["d3", "0", "p24", "motor"]);
    }

    #[test]
    fn later_states_bin_payment_history() {
        let cfg = ModelConfig::default();
        let bins = BinningSpec {
            variable: "deltPay".to_string(),
            split_points: vec![0.0, 1000.0],
            min_bin_count: 30,
            n_target_bins: 5,
        };
        let schema = FeatureSchema::for_state(
            1,
            Some(bins.clone()),
            Some(bins),
            vec![],
            true,
            &cfg,
        );
        let labels = schema.labels(&vector(15, Some(50_000)));
        // stateTime capped at 12; 500.00 falls in [0, 1000).
        assert_eq!(labels, vec!["d3", "0", "p24", "s12", "[0,1000)", "[0,1000)", "0"]);
    }
}
