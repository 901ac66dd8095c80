//! Transaction-log ingestion.

use std::collections::BTreeMap;
use std::io::Read;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::money::Money;

use super::{Claim, ClaimTransaction};

/// A structurally valid row set that fails a claim-level consistency rule.
/// Quarantined claims never enter the training data silently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Anomaly {
    pub policy_id: String,
    pub reason: String,
}

#[derive(Debug)]
pub struct ParseOutput {
    /// Claims grouped by policy id, transactions sorted by booking date,
    /// in first-appearance order of the policy.
    pub claims: Vec<Claim>,
    pub anomalies: Vec<Anomaly>,
}

const REQUIRED: [&str; 7] =
    ["polnumb", "cumpay", "bookdate", "accdate", "repdate", "status", "closeddate"];

/// Parses a delimiter-separated booking log.
///
/// The header must name the seven booking columns (match is
/// case-insensitive); any extra columns are captured as static claim
/// covariates. Malformed cells fail hard with their line number;
/// inconsistent claims (reported before occurrence, closed before
/// reported, conflicting dates across bookings) are quarantined into the
/// anomaly report instead.
pub fn parse_transactions(source: impl Read, config: &ModelConfig) -> Result<ParseOutput> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(config.data.delimiter as u8)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let mut col_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut extra_cols: Vec<(usize, String)> = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        let key = name.trim().to_lowercase();
        if REQUIRED.contains(&key.as_str()) {
            col_of.insert(key, idx);
        } else if !name.trim().is_empty() {
            extra_cols.push((idx, name.trim().to_string()));
        }
    }
    for required in REQUIRED {
        if !col_of.contains_key(required) {
            return Err(Error::Validation(format!("input is missing column {required:?}")));
        }
    }

    let date_format = config.data.date_format.as_str();
    let parse_date = |s: &str, line: usize, what: &str| -> Result<NaiveDate> {
        NaiveDate::parse_from_str(s, date_format)
            .map_err(|_| Error::parse(line, format!("malformed {what} {s:?}")))
    };

    let mut order: Vec<String> = Vec::new();
    let mut by_policy: BTreeMap<String, Vec<ClaimTransaction>> = BTreeMap::new();

    for (rec_idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = rec_idx + 2; // header is line 1
        let field = |key: &str| record.get(col_of[key]).unwrap_or("");

        let policy_id = field("polnumb").to_string();
        if policy_id.is_empty() {
            return Err(Error::parse(line, "empty policy id"));
        }
        let cum_pay = Money::parse(field("cumpay"))
            .map_err(|e| Error::parse(line, format!("cumPay: {e}")))?;
        let book_date = parse_date(field("bookdate"), line, "bookDate")?;
        let acc_date = parse_date(field("accdate"), line, "accDate")?;
        let rep_date = parse_date(field("repdate"), line, "repDate")?;
        let closed = match field("status") {
            "C" | "c" | "Closed" | "closed" | "CLOSED" => true,
            "O" | "o" | "Open" | "open" | "OPEN" => false,
            other => return Err(Error::parse(line, format!("unknown status {other:?}"))),
        };
        let closed_raw = field("closeddate");
        let closed_date = if closed_raw.is_empty() {
            None
        } else {
            Some(parse_date(closed_raw, line, "closedDate")?)
        };

        let mut statics = BTreeMap::new();
        for (idx, name) in &extra_cols {
            let value = record.get(*idx).unwrap_or("").to_string();
            if !value.is_empty() {
                statics.insert(name.clone(), value);
            }
        }

        if !by_policy.contains_key(&policy_id) {
            order.push(policy_id.clone());
        }
        by_policy.entry(policy_id.clone()).or_default().push(ClaimTransaction {
            policy_id,
            cum_pay,
            book_date,
            acc_date,
            rep_date,
            closed,
            closed_date,
            static_covariates: statics,
        });
    }

    let mut claims = Vec::with_capacity(order.len());
    let mut anomalies = Vec::new();
    for policy_id in order {
        let mut txns = by_policy.remove(&policy_id).unwrap();
        txns.sort_by_key(|t| t.book_date);

        let first = &txns[0];
        let acc_date = first.acc_date;
        let rep_date = first.rep_date;
        if txns.iter().any(|t| t.acc_date != acc_date || t.rep_date != rep_date) {
            anomalies.push(Anomaly {
                policy_id,
                reason: "conflicting accident or reporting dates across bookings".to_string(),
            });
            continue;
        }
        // The closure date counts only once the status history reaches C.
        let reaches_closed = txns.iter().any(|t| t.closed);
        let closed_date = if reaches_closed {
            match txns.iter().filter_map(|t| t.closed_date).max() {
                Some(d) => Some(d),
                None => {
                    anomalies.push(Anomaly {
                        policy_id,
                        reason: "status reaches Closed but no closedDate given".to_string(),
                    });
                    continue;
                }
            }
        } else {
            None
        };

        if rep_date < acc_date {
            anomalies.push(Anomaly {
                policy_id,
                reason: "reported before the accident date".to_string(),
            });
            continue;
        }
        if let Some(closed) = closed_date {
            if closed < rep_date {
                anomalies.push(Anomaly {
                    policy_id,
                    reason: "closed before it was reported".to_string(),
                });
                continue;
            }
        }

        let static_covariates = Arc::new(txns[0].static_covariates.clone());
        claims.push(Claim {
            policy_id,
            acc_date,
            rep_date,
            closed_date,
            transactions: txns,
            static_covariates,
        });
    }

    Ok(ParseOutput { claims, anomalies })
}
