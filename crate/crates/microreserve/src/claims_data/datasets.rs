//! Per-state training sets, the period-row text format and triangle
//! tabulation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::triangle::RunoffTriangle;

use super::{Claim, CovariateVector, PeriodRow, TransitionType};

/// Model slot for a payment state: states at or beyond the last slot pool
/// into it (the "S_{maxMod-1}+" data set).
pub fn model_slot(state_index: u32, max_mod: u32) -> usize {
    state_index.min(max_mod - 1) as usize
}

/// Per-slot training data for the time and payment models.
#[derive(Debug, Clone)]
pub struct StateDatasets {
    /// One entry per model slot `S_0 .. S_{maxMod-1}+`; all rows of the
    /// state(s) pooled into that slot.
    pub time_rows: Vec<Vec<PeriodRow>>,
    /// Same slots, restricted to rows with a payment (`P` or `TP`).
    pub payment_rows: Vec<Vec<PeriodRow>>,
}

impl StateDatasets {
    pub fn slot_label(&self, slot: usize) -> String {
        if slot + 1 == self.time_rows.len() && self.time_rows.len() > 1 {
            format!("S_{slot}+")
        } else {
            format!("S_{slot}")
        }
    }
}

/// Splits period rows into per-state training sets with tail pooling.
pub fn build_state_datasets(rows: &[PeriodRow], config: &ModelConfig) -> StateDatasets {
    let max_mod = config.time.max_mod;
    let mut time_rows: Vec<Vec<PeriodRow>> = vec![Vec::new(); max_mod as usize];
    let mut payment_rows: Vec<Vec<PeriodRow>> = vec![Vec::new(); max_mod as usize];
    for row in rows {
        let slot = model_slot(row.state_index, max_mod);
        time_rows[slot].push(row.clone());
        if row.transition.has_payment() {
            let mut pay_row = row.clone();
            pay_row.covariates.terminal_payment_flag = row.transition == TransitionType::Tp;
            payment_rows[slot].push(pay_row);
        }
    }
    StateDatasets { time_rows, payment_rows }
}

const NA: &str = "NA";

/// Writes period rows as delimiter-separated text with the standard
/// column names (`deltRep fastRep procTime deltPay deltPayTime cumDeltPay
/// stateTime state`), one row per period, static covariates appended as
/// extra columns.
pub fn write_period_rows(rows: &[PeriodRow], delimiter: char) -> String {
    let mut static_names: Vec<String> = Vec::new();
    for row in rows {
        for name in row.covariates.base.keys() {
            if !static_names.contains(name) {
                static_names.push(name.clone());
            }
        }
    }
    static_names.sort();

    let mut out = String::new();
    let d = delimiter;
    let _ = write!(
        out,
        "polNumb{d}periodIndex{d}transType{d}payment{d}deltRep{d}fastRep{d}procTime{d}\
         deltPay{d}deltPayTime{d}cumDeltPay{d}stateTime{d}state"
    );
    for name in &static_names {
        let _ = write!(out, "{d}{name}");
    }
    out.push('\n');

    for row in rows {
        let x = &row.covariates;
        let _ = write!(out, "{}{d}{}{d}{}", row.policy_id, row.period_index, row.transition);
        match row.payment {
            Some(p) => {
                let _ = write!(out, "{d}{p}");
            }
            None => {
                let _ = write!(out, "{d}{NA}");
            }
        }
        let _ = write!(out, "{d}{}{d}{}{d}{}", x.delt_rep, u8::from(x.fast_rep), x.in_proc_time);
        match x.delt1_pay {
            Some(p) => {
                let _ = write!(out, "{d}{p}");
            }
            None => {
                let _ = write!(out, "{d}{NA}");
            }
        }
        match x.delt1_pay_time {
            Some(t) => {
                let _ = write!(out, "{d}{t}");
            }
            None => {
                let _ = write!(out, "{d}{NA}");
            }
        }
        if x.no_prior_payment() {
            let _ = write!(out, "{d}{NA}");
        } else {
            let _ = write!(out, "{d}{}", x.cum_delt1_pay);
        }
        let _ = write!(out, "{d}{}{d}S_{}", x.in_state_time, row.state_index);
        for name in &static_names {
            let _ = write!(out, "{d}{}", x.base.get(name).map_or("", String::as_str));
        }
        out.push('\n');
    }
    out
}

/// Reads period rows written by [`write_period_rows`].
pub fn read_period_rows(text: &str, delimiter: char) -> Result<Vec<PeriodRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut col_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (idx, name) in headers.iter().enumerate() {
        col_of.insert(name, idx);
    }
    const FIXED: [&str; 12] = [
        "polNumb",
        "periodIndex",
        "transType",
        "payment",
        "deltRep",
        "fastRep",
        "procTime",
        "deltPay",
        "deltPayTime",
        "cumDeltPay",
        "stateTime",
        "state",
    ];
    for name in FIXED {
        if !col_of.contains_key(name) {
            return Err(Error::Validation(format!("period data is missing column {name:?}")));
        }
    }
    let static_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, n)| !FIXED.contains(n))
        .map(|(i, n)| (i, n.to_string()))
        .collect();

    // Rows of one claim share the static map.
    type StaticCache = BTreeMap<Vec<(String, String)>, Arc<BTreeMap<String, String>>>;
    let mut static_cache: StaticCache = BTreeMap::new();

    let mut rows = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = rec_idx + 2;
        let get = |name: &str| record.get(col_of[name]).unwrap_or("");
        let opt_money = |name: &str| -> Result<Option<Money>> {
            let v = get(name);
            if v == NA {
                Ok(None)
            } else {
                Money::parse(v)
                    .map(Some)
                    .map_err(|e| Error::parse(line, format!("{name}: {e}")))
            }
        };
        let int = |name: &str| -> Result<u32> {
            get(name)
                .parse()
                .map_err(|_| Error::parse(line, format!("{name}: bad integer {:?}", get(name))))
        };

        let state_raw = get("state");
        let state_index: u32 = state_raw
            .strip_prefix("S_")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(line, format!("state: bad label {state_raw:?}")))?;
        let delt1_pay = opt_money("deltPay")?;
        let delt1_pay_time = match get("deltPayTime") {
            NA => None,
            v => Some(
                v.parse::<u32>()
                    .map_err(|_| Error::parse(line, format!("deltPayTime: bad value {v:?}")))?,
            ),
        };
        let cum_delt1_pay = opt_money("cumDeltPay")?.unwrap_or(Money::ZERO);

        let mut statics: Vec<(String, String)> = Vec::new();
        for (idx, name) in &static_cols {
            let v = record.get(*idx).unwrap_or("");
            if !v.is_empty() {
                statics.push((name.clone(), v.to_string()));
            }
        }
        let base = static_cache
            .entry(statics.clone())
            .or_insert_with(|| Arc::new(statics.iter().cloned().collect()))
            .clone();

        rows.push(PeriodRow {
            policy_id: get("polNumb").to_string(),
            state_index,
            period_index: int("periodIndex")?,
            covariates: CovariateVector {
                delt_rep: int("deltRep")?,
                fast_rep: int("fastRep")? != 0,
                in_proc_time: int("procTime")?,
                delt1_pay,
                delt1_pay_time,
                cum_delt1_pay,
                in_state_time: int("stateTime")?,
                base,
                terminal_payment_flag: false,
            },
            transition: TransitionType::parse(get("transType"))
                .map_err(|e| Error::parse(line, e.to_string()))?,
            payment: opt_money("payment")?,
        });
    }
    Ok(rows)
}

/// Tabulates reported claims into an accident-year x development-year
/// count triangle as of `tau`. Claims reported after `tau` are unobserved.
/// Returns the triangle and any clamping warnings (delays beyond the last
/// development column when `max_dev_years` is given).
pub fn build_triangle(
    claims: &[Claim],
    tau: NaiveDate,
    max_dev_years: Option<usize>,
) -> Result<(RunoffTriangle, Vec<String>)> {
    let eval_year = tau.year();
    let first_year = claims
        .iter()
        .filter(|c| c.acc_date <= tau)
        .map(|c| c.acc_date.year())
        .min()
        .ok_or_else(|| Error::Validation("no claims occurred before tau".to_string()))?;
    let i_years = (eval_year - first_year + 1) as usize;
    let j_years = max_dev_years.unwrap_or(i_years).min(i_years);

    let mut cells: Vec<Vec<u64>> =
        (0..i_years).map(|i| vec![0u64; j_years.min(i_years - i)]).collect();
    let mut warnings = Vec::new();
    for claim in claims {
        if claim.acc_date > tau || claim.rep_date > tau {
            continue; // not observed in the triangle
        }
        let i = (claim.acc_date.year() - first_year) as usize;
        let delay = (claim.rep_date.year() - claim.acc_date.year()).max(0) as usize;
        let row_len = cells[i].len();
        let j = if delay >= row_len {
            warnings.push(format!(
                "claim {}: reporting delay {delay} beyond development year {}; \
                 assigned to the last column",
                claim.policy_id,
                row_len - 1
            ));
            row_len - 1
        } else {
            delay
        };
        cells[i][j] += 1;
    }
    Ok((RunoffTriangle::new(first_year, cells, j_years)?, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims_data::{parse_transactions, ClaimTimeline};

    fn date(d: &str) -> NaiveDate {
        NaiveDate::parse_from_str(d, "%d-%m-%Y").unwrap()
    }

    fn mk_claim(id: &str, acc: &str, rep: &str) -> Claim {
        Claim {
            policy_id: id.to_string(),
            acc_date: date(acc),
            rep_date: date(rep),
            closed_date: None,
            transactions: Vec::new(),
            static_covariates: Arc::new(BTreeMap::new()),
        }
    }

    #[test]
    fn single_same_year_claim() {
        let claims = vec![mk_claim("a", "05-03-2012", "10-03-2012")];
        let (t, warnings) = build_triangle(&claims, date("31-12-2012"), None).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(t.accident_years, 1);
        assert_eq!(t.cells[0], vec![1]);
    }

    #[test]
    fn triangle_matches_independent_tabulation() {
        // Brute-force oracle: count (acc year, delay) pairs directly.
        let mut claims = Vec::new();
        let mut expected: BTreeMap<(i32, usize), u64> = BTreeMap::new();
        let seed_pairs = [
            (2010, 0),
            (2010, 0),
            (2010, 1),
            (2010, 2),
            (2011, 0),
            (2011, 1),
            (2011, 1),
            (2012, 0),
            (2012, 0),
            (2012, 0),
        ];
        for (idx, &(year, delay)) in seed_pairs.iter().enumerate() {
            let acc = NaiveDate::from_ymd_opt(year, 6, 1).unwrap();
            let rep = NaiveDate::from_ymd_opt(year + delay as i32, 7, 1).unwrap();
            claims.push(mk_claim(
                &format!("c{idx}"),
                &acc.format("%d-%m-%Y").to_string(),
                &rep.format("%d-%m-%Y").to_string(),
            ));
            *expected.entry((year, delay)).or_insert(0) += 1;
        }
        let tau = date("31-12-2012");
        let (t, _) = build_triangle(&claims, tau, None).unwrap();
        for (&(year, delay), &count) in &expected {
            let i = (year - t.first_accident_year) as usize;
            assert_eq!(t.get(i, delay), Some(count), "cell ({year},{delay})");
        }
        let total: u64 = t.observed_row_totals().iter().sum();
        assert_eq!(total, claims.len() as u64);
    }

    #[test]
    fn late_reported_claims_stay_out_of_the_triangle() {
        let claims = vec![
            mk_claim("a", "05-03-2012", "10-03-2012"),
            mk_claim("b", "05-03-2012", "10-03-2013"), // after tau
        ];
        let (t, _) = build_triangle(&claims, date("31-12-2012"), None).unwrap();
        let total: u64 = t.observed_row_totals().iter().sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn excess_delay_clamps_with_warning() {
        let claims = vec![
            mk_claim("a", "05-03-2010", "10-03-2010"),
            mk_claim("b", "05-03-2010", "10-03-2012"), // delay 2 with J=2
            mk_claim("c", "05-03-2012", "10-03-2012"),
        ];
        let (t, warnings) = build_triangle(&claims, date("31-12-2012"), Some(2)).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(t.get(0, 1), Some(1));
    }

    #[test]
    fn state_datasets_pool_the_tail_and_filter_payments() {
        let cfg = {
            let mut c = ModelConfig::default();
            c.time.max_mod = 3;
            c
        };
        let base = Arc::new(BTreeMap::new());
        let mk_row = |state: u32, transition: TransitionType| PeriodRow {
            policy_id: "p".to_string(),
            state_index: state,
            period_index: 1,
            covariates: CovariateVector {
                delt_rep: 1,
                fast_rep: false,
                in_proc_time: 1,
                delt1_pay: None,
                delt1_pay_time: None,
                cum_delt1_pay: Money::ZERO,
                in_state_time: 1,
                base: base.clone(),
                terminal_payment_flag: false,
            },
            transition,
            payment: transition.has_payment().then_some(Money::from_cents(50000)),
        };
        let rows = vec![
            mk_row(0, TransitionType::P),
            mk_row(1, TransitionType::N),
            mk_row(2, TransitionType::P),
            mk_row(5, TransitionType::Tp),
            mk_row(7, TransitionType::N),
        ];
        let ds = build_state_datasets(&rows, &cfg);
        assert_eq!(ds.time_rows.len(), 3);
        assert_eq!(ds.time_rows[2].len(), 3); // states 2, 5, 7 pool into slot 2
        assert_eq!(ds.payment_rows[2].len(), 2);
        assert!(ds.payment_rows[2][1].covariates.terminal_payment_flag);
        assert_eq!(ds.slot_label(2), "S_2+");
    }

    #[test]
    fn period_rows_round_trip_through_text() {
        let cfg = {
            let mut c = ModelConfig::default();
            c.data.eval_date = Some(date("31-12-2012"));
            c
        };
        let text = "\
PolNumb,cumPay,bookDate,accDate,repDate,Status,closedDate,lob
2640440,4087.61,09-01-2012,01-01-2012,02-01-2012,O,28-08-2012,motor
2640440,4127.11,10-01-2012,01-01-2012,02-01-2012,O,28-08-2012,motor
2640440,297.12,07-02-2012,01-01-2012,02-01-2012,O,28-08-2012,motor
2640440,297.12,28-08-2012,01-01-2012,02-01-2012,C,28-08-2012,motor
";
        let parsed = parse_transactions(text.as_bytes(), &cfg).unwrap();
        let dev = crate::claims_data::discretize_claim(&parsed.claims[0], &cfg).unwrap();
        let written = write_period_rows(&dev.rows, ',');
        let reread = read_period_rows(&written, ',').unwrap();
        assert_eq!(reread, dev.rows);
        assert!(written.contains("NA"));
        assert!(written.contains("S_2"));
        let _ = ClaimTimeline::from_delay(1, false);
    }
}
