//! Discretization of one claim into period rows.

use chrono::{Days, NaiveDate};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::money::Money;

use super::features::{engineer_features, periods_ceil, ClaimTimeline};
use super::{Claim, PeriodRow, TransitionType};

/// A claim's observed development up to the evaluation date.
#[derive(Debug, Clone)]
pub struct ClaimDevelopment {
    pub policy_id: String,
    pub rows: Vec<PeriodRow>,
    /// Event history backing the rows; the simulator extends it.
    pub timeline: ClaimTimeline,
    /// Payment state after the observed rows.
    pub state_index: u32,
    /// Complete periods observed (0 for a claim reported just before tau).
    pub completed_periods: u32,
    /// Terminal transition when the claim closed on or before tau.
    pub closed: Option<TransitionType>,
    /// Cumulative amount paid at tau, read from the booking ledger.
    pub cum_paid_at_eval: Money,
}

impl ClaimDevelopment {
    pub fn is_open(&self) -> bool {
        self.closed.is_none()
    }

    /// Completed periods in the current state.
    pub fn periods_in_state(&self) -> u32 {
        match self.timeline.payments.last() {
            Some(&(p, _)) => self.completed_periods - p,
            None => self.completed_periods,
        }
    }
}

fn add_days(date: NaiveDate, days: u64) -> NaiveDate {
    date.checked_add_days(Days::new(days)).expect("date overflow")
}

/// Cuts one claim into period rows.
///
/// The period grid starts at the reporting date with a step of `perLen`
/// days; the cumulative payment is read at the last booking on or before
/// each period boundary. A change of more than `minPayVal` in absolute
/// value against the last recorded level is a payment transition; the
/// period containing the closing date ends the claim with `TP` when any
/// net remainder exists and `TN` otherwise. Claims still open at tau are
/// censored at the last complete period boundary.
pub fn discretize_claim(claim: &Claim, config: &ModelConfig) -> Result<ClaimDevelopment> {
    let tau = config.eval_date()?;
    let per_len = config.preprocessing.per_len;
    let threshold = config.min_pay_val_money();

    if claim.rep_date < claim.acc_date {
        return Err(Error::Validation(format!(
            "claim {} reported before its accident date",
            claim.policy_id
        )));
    }
    if claim.rep_date > tau {
        return Err(Error::Validation(format!(
            "claim {} is reported after the evaluation date",
            claim.policy_id
        )));
    }
    if let Some(closed) = claim.closed_date {
        if closed < claim.rep_date {
            return Err(Error::Validation(format!(
                "claim {} closed before it was reported",
                claim.policy_id
            )));
        }
    }

    let closes_by_tau = claim.closed_date.is_some_and(|d| d <= tau);
    let last_period = if closes_by_tau {
        let closed = claim.closed_date.unwrap();
        let days = (closed - claim.rep_date).num_days() as u64;
        periods_ceil(days, per_len).max(1)
    } else {
        // Censored: only complete periods up to tau contribute rows.
        let days = (tau - claim.rep_date).num_days() as u64;
        (days / per_len as u64) as u32
    };

    let mut timeline = ClaimTimeline::new(claim.acc_date, claim.rep_date, per_len);
    let mut rows = Vec::with_capacity(last_period as usize);
    let mut recorded = Money::ZERO;
    let mut closed_as = None;

    for period in 1..=last_period {
        let boundary = add_days(claim.rep_date, u64::from(period) * u64::from(per_len));
        let covariates = engineer_features(&timeline, period, claim.static_covariates.clone());
        let state_index = timeline.state_at(period);

        let terminal_here = closes_by_tau && period == last_period;
        let (transition, payment) = if terminal_here {
            // Flush the whole net remainder into the terminal row.
            let delta = claim.final_cum_paid() - recorded;
            if delta.is_zero() {
                (TransitionType::Tn, None)
            } else {
                (TransitionType::Tp, Some(delta))
            }
        } else {
            let cum = claim.cum_paid_at(boundary);
            let delta = cum - recorded;
            if delta.abs() > threshold {
                recorded = cum;
                (TransitionType::P, Some(delta))
            } else {
                (TransitionType::N, None)
            }
        };

        rows.push(PeriodRow {
            policy_id: claim.policy_id.clone(),
            state_index,
            period_index: period,
            covariates,
            transition,
            payment,
        });

        if let Some(amount) = payment {
            timeline.record_payment(period, amount);
        }
        if transition.is_terminal() {
            closed_as = Some(transition);
        }
    }

    let state_index = timeline.state_at(last_period + 1);
    Ok(ClaimDevelopment {
        policy_id: claim.policy_id.clone(),
        rows,
        timeline,
        state_index,
        completed_periods: last_period,
        closed: closed_as,
        cum_paid_at_eval: claim.cum_paid_at(tau),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::claims_data::ClaimTransaction;

    fn date(d: &str) -> NaiveDate {
        NaiveDate::parse_from_str(d, "%d-%m-%Y").unwrap()
    }

    fn config_at(tau: &str) -> ModelConfig {
        let mut cfg = ModelConfig::default();
        cfg.data.eval_date = Some(date(tau));
        cfg
    }

    fn claim(bookings: &[(&str, i64)], acc: &str, rep: &str, closed: Option<&str>) -> Claim {
        let statics = Arc::new(BTreeMap::new());
        let closed_date = closed.map(date);
        let transactions: Vec<ClaimTransaction> = bookings
            .iter()
            .map(|&(book, cents)| ClaimTransaction {
                policy_id: "k1".to_string(),
                cum_pay: Money::from_cents(cents),
                book_date: date(book),
                acc_date: date(acc),
                rep_date: date(rep),
                closed: closed_date.is_some_and(|c| c == date(book)),
                closed_date,
                static_covariates: BTreeMap::new(),
            })
            .collect();
        Claim {
            policy_id: "k1".to_string(),
            acc_date: date(acc),
            rep_date: date(rep),
            closed_date,
            transactions,
            static_covariates: statics,
        }
    }

    /// The worked bodily-injury example: five bookings, two payments, a
    /// quiet stretch, then closure without a final payment.
    fn worked_example() -> Claim {
        claim(
            &[
                ("09-01-2012", 408761),
                ("10-01-2012", 412711),
                ("02-02-2012", 712),
                ("07-02-2012", 29712),
                ("28-08-2012", 29712),
            ],
            "01-01-2012",
            "02-01-2012",
            Some("28-08-2012"),
        )
    }

    #[test]
    fn worked_example_produces_eight_rows() {
        let dev = discretize_claim(&worked_example(), &config_at("31-12-2012")).unwrap();
        let rows = &dev.rows;
        assert_eq!(rows.len(), 8);

        let transitions: Vec<_> = rows.iter().map(|r| r.transition).collect();
        assert_eq!(
            transitions,
            vec![
                TransitionType::P,
                TransitionType::P,
                TransitionType::N,
                TransitionType::N,
                TransitionType::N,
                TransitionType::N,
                TransitionType::N,
                TransitionType::Tn,
            ]
        );

        assert_eq!(rows[0].payment, Some(Money::from_cents(412711)));
        assert_eq!(rows[1].payment, Some(Money::from_cents(-382999)));
        assert_eq!(rows[0].state_index, 0);
        assert_eq!(rows[1].state_index, 1);
        assert_eq!(rows[7].state_index, 2);

        // Covariate table, row by row.
        for (i, row) in rows.iter().enumerate() {
            let x = &row.covariates;
            assert_eq!(x.delt_rep, 1);
            assert!(!x.fast_rep);
            assert_eq!(x.in_proc_time as usize, i + 1);
        }
        assert!(rows[0].covariates.no_prior_payment());
        assert_eq!(rows[1].covariates.delt1_pay, Some(Money::from_cents(412711)));
        assert_eq!(rows[1].covariates.cum_delt1_pay, Money::from_cents(412711));
        assert_eq!(rows[1].covariates.in_state_time, 1);
        for (offset, row) in rows[2..].iter().enumerate() {
            assert_eq!(row.covariates.delt1_pay, Some(Money::from_cents(-382999)));
            assert_eq!(row.covariates.cum_delt1_pay, Money::from_cents(29712));
            assert_eq!(row.covariates.in_state_time as usize, offset + 1);
        }
        assert_eq!(dev.closed, Some(TransitionType::Tn));
    }

    #[test]
    fn sub_threshold_payment_lumps_into_terminal() {
        // A single 150.00 payment never crosses minPayVal=200, so closure
        // carries it as a TP remainder.
        let c = claim(
            &[("10-01-2012", 15000), ("15-03-2012", 15000)],
            "01-01-2012",
            "02-01-2012",
            Some("15-03-2012"),
        );
        let dev = discretize_claim(&c, &config_at("31-12-2012")).unwrap();
        assert!(dev.rows.iter().all(|r| r.transition != TransitionType::P));
        let last = dev.rows.last().unwrap();
        assert_eq!(last.transition, TransitionType::Tp);
        assert_eq!(last.payment, Some(Money::from_cents(15000)));
    }

    #[test]
    fn same_period_report_and_closure_is_one_tn_row() {
        let c = claim(&[("05-01-2012", 0)], "01-01-2012", "02-01-2012", Some("10-01-2012"));
        let dev = discretize_claim(&c, &config_at("31-12-2012")).unwrap();
        assert_eq!(dev.rows.len(), 1);
        assert_eq!(dev.rows[0].transition, TransitionType::Tn);
    }

    #[test]
    fn closure_on_reporting_date_is_one_row() {
        let c = claim(&[("02-01-2012", 50000)], "01-01-2012", "02-01-2012", Some("02-01-2012"));
        let dev = discretize_claim(&c, &config_at("31-12-2012")).unwrap();
        assert_eq!(dev.rows.len(), 1);
        assert_eq!(dev.rows[0].transition, TransitionType::Tp);
        assert_eq!(dev.rows[0].payment, Some(Money::from_cents(50000)));
    }

    #[test]
    fn open_claim_censors_at_complete_periods() {
        let c = claim(&[("02-01-2012", 0)], "01-01-2012", "02-01-2012", None);
        // tau 100 days after reporting -> 3 complete 30-day periods.
        let dev = discretize_claim(&c, &config_at("11-04-2012")).unwrap();
        assert_eq!(dev.rows.len(), 3);
        assert!(dev.rows.iter().all(|r| r.transition == TransitionType::N));
        assert!(dev.is_open());
        assert_eq!(dev.state_index, 0);
        assert_eq!(dev.periods_in_state(), 3);
    }

    #[test]
    fn claim_reported_just_before_tau_has_no_rows_but_a_state() {
        let c = claim(&[("28-12-2012", 0)], "20-12-2012", "28-12-2012", None);
        let dev = discretize_claim(&c, &config_at("31-12-2012")).unwrap();
        assert!(dev.rows.is_empty());
        assert_eq!(dev.completed_periods, 0);
        assert!(dev.is_open());
    }

    #[test]
    fn rejects_inverted_dates() {
        let c = claim(&[("05-01-2012", 0)], "10-01-2012", "05-01-2012", None);
        assert!(discretize_claim(&c, &config_at("31-12-2012")).is_err());
        let c = claim(&[("05-01-2012", 0)], "01-01-2012", "05-01-2012", Some("03-01-2012"));
        assert!(discretize_claim(&c, &config_at("31-12-2012")).is_err());
    }

    #[test]
    fn recorded_payments_sum_to_final_cumulative() {
        let c = worked_example();
        let dev = discretize_claim(&c, &config_at("31-12-2012")).unwrap();
        let total: Money = dev.rows.iter().filter_map(|r| r.payment).sum();
        assert_eq!(total, c.final_cum_paid());
    }

    #[test]
    fn process_time_strictly_increases_and_state_never_decreases() {
        let dev = discretize_claim(&worked_example(), &config_at("31-12-2012")).unwrap();
        for pair in dev.rows.windows(2) {
            assert_eq!(pair[1].covariates.in_proc_time, pair[0].covariates.in_proc_time + 1);
            assert!(pair[1].state_index >= pair[0].state_index);
        }
    }
}
