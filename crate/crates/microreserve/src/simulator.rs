//! Monte-Carlo reserve simulation for open and unreported claims.
//!
//! Each trajectory walks a claim forward one period at a time: evaluate
//! the state's hazard model at the current covariates, apply the forcing
//! rules (state exit after `fixedTimeMax` periods in a state, terminal
//! only in the last payment state, outright process exit at the process
//! cap), draw the transition, and on a payment add the expected payment of
//! the state's spliced model (or a sampled payment behind the config
//! switch). Unreported claims first run a per-period Bernoulli reporting
//! chain, then develop like open claims.
//!
//! Replications and claims draw from substreams keyed by
//! `(seed, role, claim, replication)`, so results are byte-identical for
//! any worker count.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::claims_data::{engineer_features, ClaimTimeline, TransitionType};
use crate::config::{IbnrCountMode, ModelConfig};
use crate::error::{Error, Result};
use crate::ibnr::{expected_ibnr, sample_ibnr_draw, IbnrCountModel};
use crate::money::Money;
use crate::payment_model::PaymentModelSet;
use crate::rng::{substream, substream_str};
use crate::stats::quantile_of;
use crate::time_model::{
    force_process_exit, force_state_exit, force_terminal_only, sample_transition, ReportingModel,
    TimeModelSet,
};

/// Everything the simulator needs from the fitting stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModels {
    pub time: TimeModelSet,
    pub payments: PaymentModelSet,
    pub reporting: ReportingModel,
}

/// Where a claim stands at the evaluation date (or at a trajectory's end).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Occurred but not yet reported; `elapsed_periods` since occurrence.
    Unreported { elapsed_periods: u32 },
    Open,
    ClosedTn,
    ClosedTp,
}

/// A claim's simulation starting point.
#[derive(Debug, Clone)]
pub struct ClaimState {
    pub policy_id: String,
    /// Payments made so far (the state `S_j`).
    pub state_index: u32,
    /// Event history backing the covariates.
    pub timeline: ClaimTimeline,
    /// Completed periods since reporting.
    pub periods_in_process: u32,
    /// Cumulative paid at the evaluation date.
    pub cum_paid: Money,
    pub base: Arc<BTreeMap<String, String>>,
    pub phase: Phase,
}

impl ClaimState {
    /// Snapshot of an observed open claim.
    pub fn from_development(
        dev: &crate::claims_data::ClaimDevelopment,
        base: Arc<BTreeMap<String, String>>,
    ) -> ClaimState {
        ClaimState {
            policy_id: dev.policy_id.clone(),
            state_index: dev.state_index,
            timeline: dev.timeline.clone(),
            periods_in_process: dev.completed_periods,
            cum_paid: dev.cum_paid_at_eval,
            base,
            phase: Phase::Open,
        }
    }

    /// Completed periods in the current state.
    pub fn periods_in_state(&self) -> u32 {
        match self.timeline.payments.last() {
            Some(&(p, _)) => self.periods_in_process - p,
            None => self.periods_in_process,
        }
    }
}

/// One event of a simulated trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryEvent {
    pub period: u32,
    pub transition: TransitionType,
    pub payment: Option<Money>,
}

/// One total-cost draw.
#[derive(Debug, Clone)]
pub struct TrajectoryDraw {
    /// Cumulative paid at closure.
    pub total_cost: Money,
    /// Total cost minus the amount paid at the evaluation date.
    pub reserve: Money,
    pub final_phase: Phase,
    pub events: Vec<TrajectoryEvent>,
}

/// Simulates one total-cost draw for an open claim.
pub fn simulate_rbns_trajectory(
    claim: &ClaimState,
    models: &FittedModels,
    config: &ModelConfig,
    rng: &mut impl Rng,
) -> TrajectoryDraw {
    let mut timeline = claim.timeline.clone();
    let mut state = claim.state_index;
    let mut cum = claim.cum_paid;
    let mut period = claim.periods_in_process + 1;
    let mut events = Vec::new();

    loop {
        let x = engineer_features(&timeline, period, claim.base.clone());
        let mut hazards = models.time.for_state(state).hazards_for(&x);

        let completed_in_state = x.in_state_time - 1;
        let completed_in_process = period - 1;
        if completed_in_process >= config.simulation.proc_time_max {
            hazards = force_process_exit(hazards);
        } else {
            if completed_in_state >= config.simulation.fixed_time_max {
                hazards = force_state_exit(hazards);
            }
            if state >= config.simulation.npmax - 1 {
                hazards = force_terminal_only(hazards);
            }
        }

        let transition = sample_transition(&hazards, rng);
        let payment = if transition.has_payment() {
            let mut xp = x.clone();
            xp.terminal_payment_flag = transition == TransitionType::Tp;
            let model = models.payments.for_state(state);
            let units = if config.simulation.sample_payments {
                model.sample_payment(&xp, rng)
            } else {
                model.expected_payment(&xp)
            };
            Some(Money::from_units(units))
        } else {
            None
        };
        events.push(TrajectoryEvent { period, transition, payment });
        if let Some(amount) = payment {
            cum += amount;
            timeline.record_payment(period, amount);
        }
        match transition {
            TransitionType::N => period += 1,
            TransitionType::P => {
                state += 1;
                period += 1;
            }
            TransitionType::Tn => {
                return TrajectoryDraw {
                    total_cost: cum,
                    reserve: cum - claim.cum_paid,
                    final_phase: Phase::ClosedTn,
                    events,
                };
            }
            TransitionType::Tp => {
                return TrajectoryDraw {
                    total_cost: cum,
                    reserve: cum - claim.cum_paid,
                    final_phase: Phase::ClosedTp,
                    events,
                };
            }
        }
    }
}

/// Simulates one total-cost draw for an unreported claim: Bernoulli
/// reporting per period until reported (capped, flagged via the returned
/// bool), then the open-claim development from state `S_0`.
pub fn simulate_ibnr_claim(
    skeleton: &ClaimState,
    models: &FittedModels,
    config: &ModelConfig,
    rng: &mut impl Rng,
) -> (TrajectoryDraw, u32, bool) {
    let elapsed = match skeleton.phase {
        Phase::Unreported { elapsed_periods } => elapsed_periods,
        _ => panic!("simulate_ibnr_claim needs an unreported claim"),
    };
    let lambda = models.reporting.lambda;
    let mut extra = 0u32;
    let mut capped = true;
    for _ in 0..config.simulation.max_reporting_delay {
        extra += 1;
        if rng.random::<f64>() < lambda {
            capped = false;
            break;
        }
    }
    let delay = elapsed + extra;
    let reported = ClaimState {
        policy_id: skeleton.policy_id.clone(),
        state_index: 0,
        timeline: ClaimTimeline::from_delay(delay, false),
        periods_in_process: 0,
        cum_paid: Money::ZERO,
        base: skeleton.base.clone(),
        phase: Phase::Open,
    };
    (simulate_rbns_trajectory(&reported, models, config, rng), delay, capped)
}

/// Predictive reserve distribution of a portfolio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReserveDistribution {
    pub policy_ids: Vec<String>,
    /// `per_claim[k][r]`: reserve draw of claim `k` in replication `r`,
    /// currency units.
    pub per_claim: Vec<Vec<f64>>,
    /// Unreported-claim total per replication.
    pub ibnr_component: Vec<f64>,
    /// Portfolio total per replication (claims plus unreported).
    pub portfolio: Vec<f64>,
    pub n_sims: usize,
    /// Reporting-delay draws that hit the hard cap.
    pub capped_reporting_draws: u64,
}

impl ReserveDistribution {
    pub fn portfolio_mean(&self) -> f64 {
        crate::stats::mean(&self.portfolio)
    }

    pub fn portfolio_quantile(&self, p: f64) -> f64 {
        quantile_of(&self.portfolio, p)
    }

    pub fn claim_mean(&self, k: usize) -> f64 {
        crate::stats::mean(&self.per_claim[k])
    }

    /// Histogram of the portfolio totals: `bins` equal-width cells over
    /// the draw range, returned as (left edge, count).
    pub fn portfolio_histogram(&self, bins: usize) -> Vec<(f64, usize)> {
        let min = self.portfolio.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = self.portfolio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = ((max - min) / bins as f64).max(1e-9);
        let mut out: Vec<(f64, usize)> =
            (0..bins).map(|b| (min + b as f64 * width, 0)).collect();
        for &v in &self.portfolio {
            let b = (((v - min) / width) as usize).min(bins - 1);
            out[b].1 += 1;
        }
        out
    }
}

/// Inputs for the unreported-claim component of a portfolio run.
#[derive(Debug, Clone)]
pub struct IbnrSetup<'a> {
    pub count_model: &'a IbnrCountModel,
    pub tau: NaiveDate,
}

/// Simulates the whole portfolio: every open claim once per replication,
/// plus freshly instantiated unreported claims (count per accident year
/// from the count model: a fresh draw per replication, or its rounded
/// mean, per config). Replications run in parallel on independent
/// substreams; output is independent of the worker count.
pub fn simulate_portfolio(
    rbns: &[ClaimState],
    ibnr: Option<IbnrSetup<'_>>,
    models: &FittedModels,
    config: &ModelConfig,
    seed: u64,
) -> Result<ReserveDistribution> {
    for claim in rbns {
        if claim.phase != Phase::Open {
            return Err(Error::Validation(format!(
                "claim {} is not open at the evaluation date",
                claim.policy_id
            )));
        }
    }
    let n_sims = config.simulation.n_sims as usize;
    let mean_counts: Option<Vec<u64>> = match (&ibnr, config.simulation.ibnr_count_mode) {
        (Some(setup), IbnrCountMode::Mean) => Some(
            expected_ibnr(setup.count_model)
                .by_year
                .iter()
                .map(|&e| e.round().max(0.0) as u64)
                .collect(),
        ),
        _ => None,
    };

    struct Replication {
        claim_draws: Vec<f64>,
        ibnr_total: f64,
        capped: u64,
    }

    let replications: Vec<Replication> = (0..n_sims)
        .into_par_iter()
        .map(|r| -> Result<Replication> {
            let r_idx = r as u64;
            let mut claim_draws = Vec::with_capacity(rbns.len());
            for claim in rbns {
                let mut rng = substream_str(seed, "rbns", &claim.policy_id, &[r_idx]);
                let draw = simulate_rbns_trajectory(claim, models, config, &mut rng);
                claim_draws.push(draw.reserve.to_units());
            }

            let mut ibnr_total = 0.0;
            let mut capped = 0u64;
            if let Some(setup) = &ibnr {
                let counts: Vec<u64> = match &mean_counts {
                    Some(means) => means.clone(),
                    None => {
                        let mut rng = substream(seed, "ibnr-counts", &[r_idx]);
                        sample_ibnr_draw(setup.count_model, &mut rng)?.by_year
                    }
                };
                for (year_idx, &count) in counts.iter().enumerate() {
                    for i in 0..count {
                        let mut rng =
                            substream(seed, "ibnr-claim", &[r_idx, year_idx as u64, i]);
                        let skeleton =
                            ibnr_skeleton(setup, year_idx, i, rbns, config, &mut rng);
                        let (draw, _, was_capped) =
                            simulate_ibnr_claim(&skeleton, models, config, &mut rng);
                        if was_capped {
                            capped += 1;
                        }
                        ibnr_total += draw.total_cost.to_units();
                    }
                }
            }
            Ok(Replication { claim_draws, ibnr_total, capped })
        })
        .collect::<Result<_>>()?;

    let mut per_claim = vec![Vec::with_capacity(n_sims); rbns.len()];
    let mut portfolio = Vec::with_capacity(n_sims);
    let mut ibnr_component = Vec::with_capacity(n_sims);
    let mut capped_total = 0u64;
    for rep in &replications {
        for (k, &draw) in rep.claim_draws.iter().enumerate() {
            per_claim[k].push(draw);
        }
        let rbns_total: f64 = rep.claim_draws.iter().sum();
        portfolio.push(rbns_total + rep.ibnr_total);
        ibnr_component.push(rep.ibnr_total);
        capped_total += rep.capped;
    }

    Ok(ReserveDistribution {
        policy_ids: rbns.iter().map(|c| c.policy_id.clone()).collect(),
        per_claim,
        ibnr_component,
        portfolio,
        n_sims,
        capped_reporting_draws: capped_total,
    })
}

/// Builds an unreported-claim skeleton for one drawn count: a uniform
/// accident period within the accident year (before tau) and static
/// covariates resampled from the open-claim pool.
fn ibnr_skeleton(
    setup: &IbnrSetup<'_>,
    year_idx: usize,
    unit: u64,
    pool: &[ClaimState],
    config: &ModelConfig,
    rng: &mut impl Rng,
) -> ClaimState {
    let per_len = i64::from(config.preprocessing.per_len);
    let year = setup.count_model.first_accident_year + year_idx as i32;
    let year_start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    let year_end = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year");
    let latest = setup.tau.min(year_end);
    let max_elapsed = ((setup.tau - year_start).num_days() / per_len).max(0) as u32;
    let min_elapsed = if setup.tau.year() == year {
        0
    } else {
        ((setup.tau - latest).num_days() / per_len).max(0) as u32
    };
    let elapsed = if max_elapsed > min_elapsed {
        rng.random_range(min_elapsed..=max_elapsed)
    } else {
        min_elapsed
    };
    let base = if pool.is_empty() {
        Arc::new(BTreeMap::new())
    } else {
        pool[rng.random_range(0..pool.len())].base.clone()
    };
    ClaimState {
        policy_id: format!("ibnr-y{year}-{unit}"),
        state_index: 0,
        timeline: ClaimTimeline::from_delay(elapsed.max(1), false),
        periods_in_process: 0,
        cum_paid: Money::ZERO,
        base,
        phase: Phase::Unreported { elapsed_periods: elapsed },
    }
}
