//! Claim ingestion, discretization and covariate engineering.
//!
//! Raw booking-level transaction logs are grouped per policy, cut into
//! fixed-length periods starting at the reporting date, and turned into
//! one observation row per period. A change of the cumulative payment by
//! more than `minPayVal` in absolute value between period ends counts as a
//! payment transition; smaller changes are lumped into the next payment
//! (or into the terminal payment at closure). Each row carries the
//! engineered covariate vector used by the transition and payment models.

mod datasets;
mod discretize;
mod features;
mod parse;

pub use datasets::{
    build_state_datasets, build_triangle, model_slot, read_period_rows, write_period_rows,
    StateDatasets,
};
pub use discretize::{discretize_claim, ClaimDevelopment};
pub use features::{engineer_features, ClaimTimeline};
pub use parse::{parse_transactions, Anomaly, ParseOutput};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// One raw booking row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimTransaction {
    pub policy_id: String,
    /// Cumulative amount paid as of `book_date` (may be negative).
    pub cum_pay: Money,
    pub book_date: NaiveDate,
    pub acc_date: NaiveDate,
    pub rep_date: NaiveDate,
    pub closed: bool,
    pub closed_date: Option<NaiveDate>,
    pub static_covariates: BTreeMap<String, String>,
}

/// All bookings of one policy, sorted by booking date.
#[derive(Debug, Clone)]
pub struct Claim {
    pub policy_id: String,
    pub acc_date: NaiveDate,
    pub rep_date: NaiveDate,
    /// Set only when the status history reaches Closed.
    pub closed_date: Option<NaiveDate>,
    pub transactions: Vec<ClaimTransaction>,
    pub static_covariates: Arc<BTreeMap<String, String>>,
}

impl Claim {
    /// Cumulative payment at the last booking on or before `date`
    /// (zero before the first booking).
    pub fn cum_paid_at(&self, date: NaiveDate) -> Money {
        self.transactions
            .iter()
            .rev()
            .find(|t| t.book_date <= date)
            .map_or(Money::ZERO, |t| t.cum_pay)
    }

    pub fn final_cum_paid(&self) -> Money {
        self.transactions.last().map_or(Money::ZERO, |t| t.cum_pay)
    }
}

/// The four period-level transition labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionType {
    /// No event this period.
    N,
    /// Intermediate payment; the claim advances one payment state.
    P,
    /// Terminal without a payment this period.
    Tn,
    /// Terminal with a payment this period.
    Tp,
}

impl TransitionType {
    pub const ALL: [TransitionType; 4] =
        [TransitionType::N, TransitionType::P, TransitionType::Tn, TransitionType::Tp];

    pub fn index(self) -> usize {
        match self {
            TransitionType::N => 0,
            TransitionType::P => 1,
            TransitionType::Tn => 2,
            TransitionType::Tp => 3,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TransitionType::Tn | TransitionType::Tp)
    }

    pub fn has_payment(self) -> bool {
        matches!(self, TransitionType::P | TransitionType::Tp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionType::N => "N",
            TransitionType::P => "P",
            TransitionType::Tn => "TN",
            TransitionType::Tp => "TP",
        }
    }

    pub fn parse(s: &str) -> Result<TransitionType> {
        match s {
            "N" => Ok(TransitionType::N),
            "P" => Ok(TransitionType::P),
            "TN" => Ok(TransitionType::Tn),
            "TP" => Ok(TransitionType::Tp),
            other => Err(Error::Validation(format!("unknown transition type {other:?}"))),
        }
    }
}

impl fmt::Display for TransitionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Engineered covariates of one period row.
///
/// Time variables are 1-based period counts. The previous-payment fields
/// are absent exactly while no payment has been recorded (state `S_0`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateVector {
    /// Reporting delay in periods (`deltRep`), at least 1.
    pub delt_rep: u32,
    /// Reported on the accident date (`fastRep`).
    pub fast_rep: bool,
    /// Periods since reporting (`procTime`), at least 1.
    pub in_proc_time: u32,
    /// Amount of the previous recorded payment (`deltPay`).
    pub delt1_pay: Option<Money>,
    /// Periods since the previous recorded payment (`deltPayTime`).
    pub delt1_pay_time: Option<u32>,
    /// Sum of recorded payments so far (`cumDeltPay`); zero while absent.
    pub cum_delt1_pay: Money,
    /// Periods spent in the current state (`stateTime`); equals
    /// `in_proc_time` in state `S_0`.
    pub in_state_time: u32,
    /// Static claim information.
    pub base: Arc<BTreeMap<String, String>>,
    /// Set on payment-model rows for terminal payments.
    pub terminal_payment_flag: bool,
}

impl CovariateVector {
    /// True while no payment has been recorded.
    pub fn no_prior_payment(&self) -> bool {
        self.delt1_pay.is_none()
    }
}

/// One discretized observation: a claim, a period, the covariates seen at
/// the start of that period, and the transition observed at its end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub policy_id: String,
    /// Number of payment transitions before this period (the state
    /// `S_{state_index}` the claim occupies).
    pub state_index: u32,
    /// 1-based period counter since reporting.
    pub period_index: u32,
    pub covariates: CovariateVector,
    pub transition: TransitionType,
    /// Present iff `transition` has a payment.
    pub payment: Option<Money>,
}
