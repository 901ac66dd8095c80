//! In-process pipeline test: generate, ingest, fit, simulate, score.

use chrono::{Days, NaiveDate};
use microreserve::config::ModelConfig;
use microreserve::evaluation::{crps, pointwise_metrics};
use microreserve::ibnr::estimate_reporting_probs;
use microreserve::pipeline::{fit_models, ingest_claims};
use microreserve::simulator::{simulate_portfolio, IbnrSetup};
use microreserve::synthetic::{generate_portfolio, toy_spec, PortfolioSpec};

fn config_at(tau: NaiveDate) -> ModelConfig {
    let mut cfg = ModelConfig::default();
    cfg.data.eval_date = Some(tau);
    cfg.time.max_mod = 3;
    cfg.time.n_min_mod_t = 300;
    cfg.payment.n_min_mod_p = 300;
    cfg.binning.n_bootstrap = 2;
    cfg.binning.bootstrap_sample_size = 4000;
    cfg.simulation.n_sims = 100;
    cfg
}

#[test]
fn portfolio_pipeline_estimates_a_sane_reserve() {
    // Period-aligned evaluation date three years into the window.
    let start = NaiveDate::from_ymd_opt(2010, 1, 5).unwrap();
    let tau = start.checked_add_days(Days::new(36 * 30)).unwrap();
    let spec = PortfolioSpec {
        accident_end: tau,
        ..toy_spec(4000)
    };
    let cfg = config_at(tau);

    let portfolio = generate_portfolio(&spec, &cfg, 31).unwrap();
    let ingest = ingest_claims(&portfolio.claims, Vec::new(), &cfg).unwrap();
    assert!(ingest.anomalies.is_empty(), "{:?}", ingest.anomalies);
    assert!(ingest.rbns.len() > 100, "too few open claims: {}", ingest.rbns.len());

    let models = fit_models(&ingest.rows, &ingest.reporting_delays, &cfg, 31).unwrap();
    let count_model = estimate_reporting_probs(&ingest.triangle).unwrap();
    let dist = simulate_portfolio(
        &ingest.rbns,
        Some(IbnrSetup { count_model: &count_model, tau }),
        &models,
        &cfg,
        31,
    )
    .unwrap();

    // The portfolio estimate lands within 25% of the known truth (a loose
    // sanity band; the acceptance suite pins the calibrated one).
    let (_, _, truth_total) = portfolio.truth.reserves_at(tau);
    let truth = truth_total.to_units();
    let estimate = dist.portfolio_mean();
    let pe = (estimate - truth) / truth;
    assert!(pe.abs() < 0.25, "estimate {estimate} vs truth {truth} (PE {pe:.3})");

    // Per-claim scores run end to end on the same artifacts.
    let open_truth: std::collections::BTreeMap<&str, f64> = portfolio
        .truth
        .claims
        .iter()
        .map(|c| (c.policy_id.as_str(), c.reserve_at(tau).to_units()))
        .collect();
    let mut means = Vec::new();
    let mut truths = Vec::new();
    let mut crps_sum = 0.0;
    for (k, id) in dist.policy_ids.iter().enumerate() {
        let t = open_truth[id.as_str()];
        means.push(dist.claim_mean(k));
        truths.push(t);
        crps_sum += crps(&dist.per_claim[k], t);
    }
    assert!(crps_sum.is_finite() && crps_sum >= 0.0);
    let metrics = pointwise_metrics(&means, &truths);
    assert!(metrics.rmse.is_finite());
}

#[test]
fn reruns_are_bit_identical() {
    let start = NaiveDate::from_ymd_opt(2010, 1, 5).unwrap();
    let tau = start.checked_add_days(Days::new(24 * 30)).unwrap();
    let spec = PortfolioSpec { accident_end: tau, ..toy_spec(800) };
    let cfg = config_at(tau);

    let run = || {
        let portfolio = generate_portfolio(&spec, &cfg, 77).unwrap();
        let ingest = ingest_claims(&portfolio.claims, Vec::new(), &cfg).unwrap();
        let models = fit_models(&ingest.rows, &ingest.reporting_delays, &cfg, 77).unwrap();
        let dist = simulate_portfolio(&ingest.rbns, None, &models, &cfg, 77).unwrap();
        dist.portfolio
    };
    assert_eq!(run(), run());
}
