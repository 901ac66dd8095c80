//! Pipeline orchestration: ingestion products, model fitting, artifact
//! persistence, and the marginal-effect tables behind the reports.
//!
//! Every stage works through files so later stages never refit: ingestion
//! writes the period data, the open-claim snapshot and the count triangle;
//! fitting writes the serialized models; simulation and reporting consume
//! those artifacts only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::claims_data::{
    build_state_datasets, build_triangle, discretize_claim, Anomaly, Claim, ClaimTimeline,
    PeriodRow,
};
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::money::Money;
use crate::payment_model::fit_payment_models;
use crate::simulator::{ClaimState, FittedModels, Phase};
use crate::time_model::{fit_reporting_model, fit_time_models, HazardModel};
use crate::triangle::RunoffTriangle;

/// Everything the ingest stage derives from a booking log at `tau`.
pub struct IngestOutput {
    /// Training rows from all claims reported by `tau`.
    pub rows: Vec<PeriodRow>,
    /// Claims still open at `tau`, ready for simulation.
    pub rbns: Vec<ClaimState>,
    /// Reporting delay (periods) per reported claim.
    pub reporting_delays: Vec<u32>,
    pub triangle: RunoffTriangle,
    pub anomalies: Vec<Anomaly>,
    pub warnings: Vec<String>,
}

/// Discretizes every claim reported by `tau` and assembles the training
/// rows, the open-claim snapshot, and the count triangle. Claims that
/// fail a consistency rule end up in the anomaly list, never silently
/// dropped.
pub fn ingest_claims(
    claims: &[Claim],
    anomalies: Vec<Anomaly>,
    config: &ModelConfig,
) -> Result<IngestOutput> {
    let tau = config.eval_date()?;
    let mut rows = Vec::new();
    let mut rbns = Vec::new();
    let mut delays = Vec::new();
    let mut anomalies = anomalies;
    for claim in claims {
        if claim.rep_date > tau {
            continue; // unreported at tau: lives only in the triangle's future
        }
        match discretize_claim(claim, config) {
            Ok(dev) => {
                delays.push(dev.timeline.delt_rep);
                if dev.is_open() {
                    rbns.push(ClaimState::from_development(
                        &dev,
                        claim.static_covariates.clone(),
                    ));
                }
                rows.extend(dev.rows);
            }
            Err(e) => anomalies.push(Anomaly {
                policy_id: claim.policy_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    // Canonical ordering regardless of input order: rows by
    // (policy, period), open claims by policy.
    rows.sort_by(|a, b| {
        a.policy_id.cmp(&b.policy_id).then(a.period_index.cmp(&b.period_index))
    });
    rbns.sort_by(|a, b| a.policy_id.cmp(&b.policy_id));
    let (triangle, warnings) = build_triangle(claims, tau, None)?;
    Ok(IngestOutput { rows, rbns, reporting_delays: delays, triangle, anomalies, warnings })
}

/// Fits the full model stack from training rows and reporting delays.
pub fn fit_models(
    rows: &[PeriodRow],
    reporting_delays: &[u32],
    config: &ModelConfig,
    seed: u64,
) -> Result<FittedModels> {
    let datasets = build_state_datasets(rows, config);
    let time = fit_time_models(&datasets, config, seed)?;
    let payments = fit_payment_models(&datasets, &time, config)?;
    let reporting = fit_reporting_model(reporting_delays, config)?;
    Ok(FittedModels { time, payments, reporting })
}

const MODELS_FILE: &str = "models.json";

pub fn save_models(models: &FittedModels, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(models)?;
    std::fs::write(dir.join(MODELS_FILE), text)?;
    Ok(())
}

pub fn load_models(dir: &Path) -> Result<FittedModels> {
    let path = dir.join(MODELS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|_| {
        Error::MissingArtifact(format!("models not found at {}; run fit first", path.display()))
    })?;
    Ok(serde_json::from_str(&text)?)
}

// --- open-claim snapshot text format -----------------------------------

/// Writes the open-claim snapshot: one row per claim with its state, the
/// recorded payment history (`period:amount;...`), and the static
/// covariates.
pub fn write_rbns_snapshot(states: &[ClaimState], delimiter: char) -> String {
    let mut static_names: Vec<String> = Vec::new();
    for s in states {
        for name in s.base.keys() {
            if !static_names.contains(name) {
                static_names.push(name.clone());
            }
        }
    }
    static_names.sort();

    let d = delimiter;
    let mut out = String::new();
    let _ = write!(
        out,
        "polNumb{d}stateIndex{d}periodsInProcess{d}deltRep{d}fastRep{d}cumPaid{d}payments"
    );
    for name in &static_names {
        let _ = write!(out, "{d}{name}");
    }
    out.push('\n');
    for s in states {
        let payments = s
            .timeline
            .payments
            .iter()
            .map(|(p, a)| format!("{p}:{a}"))
            .collect::<Vec<_>>()
            .join(";");
        let _ = write!(
            out,
            "{}{d}{}{d}{}{d}{}{d}{}{d}{}{d}{}",
            s.policy_id,
            s.state_index,
            s.periods_in_process,
            s.timeline.delt_rep,
            u8::from(s.timeline.fast_rep),
            s.cum_paid,
            payments
        );
        for name in &static_names {
            let _ = write!(out, "{d}{}", s.base.get(name).map_or("", String::as_str));
        }
        out.push('\n');
    }
    out
}

pub fn read_rbns_snapshot(text: &str, delimiter: char) -> Result<Vec<ClaimState>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col_of: BTreeMap<&str, usize> =
        headers.iter().enumerate().map(|(i, n)| (n, i)).collect();
    const FIXED: [&str; 7] = [
        "polNumb",
        "stateIndex",
        "periodsInProcess",
        "deltRep",
        "fastRep",
        "cumPaid",
        "payments",
    ];
    for name in FIXED {
        if !col_of.contains_key(name) {
            return Err(Error::Validation(format!("snapshot is missing column {name:?}")));
        }
    }
    let static_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, n)| !FIXED.contains(n))
        .map(|(i, n)| (i, n.to_string()))
        .collect();

    let mut states = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = rec_idx + 2;
        let get = |name: &str| record.get(col_of[name]).unwrap_or("");
        let int = |name: &str| -> Result<u32> {
            get(name).parse().map_err(|_| Error::parse(line, format!("bad {name}")))
        };
        let mut timeline = ClaimTimeline::from_delay(int("deltRep")?, get("fastRep") == "1");
        let payments_raw = get("payments");
        if !payments_raw.is_empty() {
            for part in payments_raw.split(';') {
                let (period, amount) = part
                    .split_once(':')
                    .ok_or_else(|| Error::parse(line, format!("bad payment entry {part:?}")))?;
                let period: u32 = period
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad payment period {period:?}")))?;
                timeline.record_payment(period, Money::parse(amount)?);
            }
        }
        let mut base = BTreeMap::new();
        for (idx, name) in &static_cols {
            let v = record.get(*idx).unwrap_or("");
            if !v.is_empty() {
                base.insert(name.clone(), v.to_string());
            }
        }
        states.push(ClaimState {
            policy_id: get("polNumb").to_string(),
            state_index: int("stateIndex")?,
            periods_in_process: int("periodsInProcess")?,
            cum_paid: Money::parse(get("cumPaid"))?,
            timeline,
            base: Arc::new(base),
            phase: Phase::Open,
        });
    }
    Ok(states)
}

// --- marginal effects ---------------------------------------------------

/// One row of a marginal-effect (partial-dependence) table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalEffect {
    pub level: String,
    /// Average predicted (N, P, TN, TP) with every row forced to `level`.
    pub probabilities: [f64; 4],
}

/// Marginal effect of one feature on a state's transition probabilities:
/// every training row is forced to each level of the feature in turn and
/// the predictions are averaged. Rows are subsampled deterministically
/// beyond `max_rows`.
pub fn marginal_transition_effects(
    model: &HazardModel,
    rows: &[PeriodRow],
    feature: &str,
    max_rows: usize,
) -> Result<Vec<MarginalEffect>> {
    let names = model.schema.feature_names();
    let Some(feature_idx) = names.iter().position(|n| n == feature) else {
        return Err(Error::Validation(format!(
            "feature {feature:?} is not part of the state's schema ({names:?})"
        )));
    };
    let levels: Vec<String> = match &model.encoder {
        Some(encoder) => encoder
            .features
            .get(feature_idx)
            .map(|f| f.levels.clone())
            .unwrap_or_default(),
        None => Vec::new(),
    };
    if levels.is_empty() {
        return Err(Error::Validation(format!(
            "state S_{} has no covariate fit; no marginal effects for {feature:?}",
            model.state_slot
        )));
    }
    let stride = (rows.len() / max_rows.max(1)).max(1);
    let sample: Vec<&PeriodRow> = rows.iter().step_by(stride).collect();
    if sample.is_empty() {
        return Err(Error::Validation("no rows to marginalize over".to_string()));
    }

    let mut out = Vec::with_capacity(levels.len());
    for level in &levels {
        let mut acc = [0.0f64; 4];
        for row in &sample {
            let mut labels = model.schema.labels(&row.covariates);
            labels[feature_idx] = level.clone();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let h = model.hazards_for_labels(&refs);
            for (a, v) in acc.iter_mut().zip(&h) {
                *a += v;
            }
        }
        let n = sample.len() as f64;
        out.push(MarginalEffect {
            level: level.clone(),
            probabilities: [acc[0] / n, acc[1] / n, acc[2] / n, acc[3] / n],
        });
    }
    Ok(out)
}
