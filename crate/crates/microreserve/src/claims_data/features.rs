//! Covariate engineering from a claim's event history.
//!
//! Both the discretizer and the trajectory simulator derive covariates
//! through [`engineer_features`], so a simulated trajectory replayed
//! through this function reproduces the covariates the simulator used.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::money::Money;

use super::CovariateVector;

/// A claim's event history in period units: the reporting delay and the
/// recorded payments (period index, lumped amount). Payment periods are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimTimeline {
    pub delt_rep: u32,
    pub fast_rep: bool,
    pub payments: Vec<(u32, Money)>,
}

impl ClaimTimeline {
    pub fn new(acc_date: NaiveDate, rep_date: NaiveDate, per_len: u32) -> ClaimTimeline {
        let days = (rep_date - acc_date).num_days().max(0) as u64;
        ClaimTimeline {
            delt_rep: periods_ceil(days, per_len).max(1),
            fast_rep: rep_date == acc_date,
            payments: Vec::new(),
        }
    }

    /// A timeline seen from a simulated reporting delay (periods).
    pub fn from_delay(delay_periods: u32, fast_rep: bool) -> ClaimTimeline {
        ClaimTimeline { delt_rep: delay_periods.max(1), fast_rep, payments: Vec::new() }
    }

    pub fn record_payment(&mut self, period: u32, amount: Money) {
        debug_assert!(
            self.payments.last().is_none_or(|&(p, _)| p < period),
            "payment periods must increase"
        );
        self.payments.push((period, amount));
    }

    /// Payments recorded strictly before `period`.
    fn prior_payments(&self, period: u32) -> &[(u32, Money)] {
        let cut = self.payments.partition_point(|&(p, _)| p < period);
        &self.payments[..cut]
    }

    /// Number of payments recorded strictly before `period` (the state
    /// index of that period's row).
    pub fn state_at(&self, period: u32) -> u32 {
        self.prior_payments(period).len() as u32
    }
}

/// Number of whole periods covering `days` (ceiling).
pub fn periods_ceil(days: u64, per_len: u32) -> u32 {
    (days.div_ceil(per_len as u64)) as u32
}

/// Covariates of the row for `period`, derived from the events strictly
/// before it.
pub fn engineer_features(
    timeline: &ClaimTimeline,
    period: u32,
    base: Arc<BTreeMap<String, String>>,
) -> CovariateVector {
    debug_assert!(period >= 1, "periods are 1-based");
    let prior = timeline.prior_payments(period);
    let last = prior.last();
    let since_last = last.map(|&(p, _)| period - p);
    CovariateVector {
        delt_rep: timeline.delt_rep,
        fast_rep: timeline.fast_rep,
        in_proc_time: period,
        delt1_pay: last.map(|&(_, amount)| amount),
        delt1_pay_time: since_last,
        cum_delt1_pay: prior.iter().map(|&(_, a)| a).sum(),
        in_state_time: since_last.unwrap_or(period),
        base,
        terminal_payment_flag: false,
    }
}
