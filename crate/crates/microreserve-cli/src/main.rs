//! Command-line pipeline: ingest -> fit -> simulate -> evaluate -> report,
//! plus triangle utilities and the synthetic generator.
//!
//! Every subcommand reads and writes plain-text artifacts in the output
//! directory, is deterministic given (inputs, config, seed), and never
//! overwrites an existing artifact without `--force`.

mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use microreserve::chain_ladder::{cl_project, odp_bootstrap};
use microreserve::claims_data::{parse_transactions, read_period_rows, write_period_rows};
use microreserve::config::ModelConfig;
use microreserve::evaluation::{crps, interval_score_and_picp, pointwise_metrics};
use microreserve::ibnr::{estimate_reporting_probs, expected_ibnr, sample_ibnr};
use microreserve::pipeline::{
    fit_models, ingest_claims, load_models, marginal_transition_effects, read_rbns_snapshot,
    save_models, write_rbns_snapshot,
};
use microreserve::simulator::{simulate_portfolio, IbnrSetup};
use microreserve::stats::quantile_of;
use microreserve::synthetic::{generate_portfolio, write_transactions, PortfolioSpec};
use microreserve::time_model::transition_mix;
use microreserve::triangle::RunoffTriangle;

use table::{money, percent, Table};

#[derive(Parser)]
#[command(
    name = "microreserve",
    about = "Multi-state micro-level claims reserving pipeline",
    version
)]
struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluation date (tau), in the configured date format or ISO.
    #[arg(long = "as-of", global = true)]
    as_of: Option<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic portfolio: writes transactions.csv and truth.json.
    Generate {
        /// Portfolio specification (TOML).
        #[arg(long)]
        spec: PathBuf,
    },
    /// Discretize a booking log: writes periods.csv, rbns_snapshot.csv,
    /// triangle.csv, anomalies.csv and meta.json.
    Ingest {
        /// Booking log (delimiter-separated text).
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit all models from periods.csv: writes models.json.
    Fit,
    /// IBNR claim counts from the triangle: writes ibnr_summary.csv and
    /// ibnr_draws.csv.
    Ibnr {
        /// Triangle file (defaults to the ingested one).
        #[arg(long)]
        triangle: Option<PathBuf>,
        /// Predictive draws (defaults to the configured value).
        #[arg(long)]
        draws: Option<u32>,
    },
    /// Chain-ladder projection and bootstrap: writes
    /// chainladder_projection.csv and chainladder_bootstrap.csv.
    Chainladder {
        /// Triangle file (defaults to the ingested one).
        #[arg(long)]
        triangle: Option<PathBuf>,
        /// Bootstrap resamples (0 disables the bootstrap).
        #[arg(long, default_value_t = 1000)]
        bootstrap: u32,
    },
    /// Simulate the portfolio reserve distribution: writes
    /// reserve_portfolio.csv, reserve_claims.csv, reserve_histogram.csv
    /// (and reserve_draws.csv with --dump-draws).
    Simulate {
        /// Also dump the full per-claim draw matrix.
        #[arg(long)]
        dump_draws: bool,
        /// Skip the unreported-claim component.
        #[arg(long)]
        no_ibnr: bool,
    },
    /// Score simulated reserves against known truths: appends to
    /// metrics.csv.
    Evaluate {
        /// truth.json from generate, or a CSV with polNumb,reserve.
        #[arg(long)]
        truth: PathBuf,
        /// Method label for the metrics table.
        #[arg(long, default_value = "microreserve")]
        label: String,
    },
    /// Render the summary tables from persisted artifacts.
    Report {
        /// Also write marginal-effect tables per state and covariate.
        #[arg(long)]
        pdp: bool,
    },
}

/// Ingestion metadata shared by later stages.
#[derive(Serialize, Deserialize)]
struct Meta {
    tau: NaiveDate,
    n_claims: usize,
    n_rows: usize,
    n_open: usize,
    n_anomalies: usize,
    reporting_delays: Vec<u32>,
    config: ModelConfig,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("worker pool")?;
    }
    let mut config = match &cli.config {
        Some(path) => ModelConfig::from_path(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => ModelConfig::default(),
    };
    if let Some(raw) = &cli.as_of {
        config.data.eval_date = Some(parse_date(raw, &config)?);
    }
    let seed = cli.seed.or(config.rng_seed);
    let out = cli.out_dir.clone();

    match cli.command {
        Command::Generate { spec } => cmd_generate(&spec, &config, seed, &out, cli.force),
        Command::Ingest { input } => cmd_ingest(&input, &config, &out, cli.force),
        Command::Fit => cmd_fit(&config, seed, &out, cli.force),
        Command::Ibnr { triangle, draws } => {
            cmd_ibnr(triangle.as_deref(), draws, &config, seed, &out, cli.force)
        }
        Command::Chainladder { triangle, bootstrap } => {
            cmd_chainladder(triangle.as_deref(), bootstrap, seed, &out, cli.force)
        }
        Command::Simulate { dump_draws, no_ibnr } => cmd_simulate(
            &config,
            seed,
            cli.as_of.is_some(),
            dump_draws,
            no_ibnr,
            &out,
            cli.force,
        ),
        Command::Evaluate { truth, label } => cmd_evaluate(&truth, &label, &out, cli.force),
        Command::Report { pdp } => cmd_report(&out, pdp, cli.force),
    }
}

fn parse_date(raw: &str, config: &ModelConfig) -> anyhow::Result<NaiveDate> {
    NaiveDate::parse_from_str(raw, &config.data.date_format)
        .or_else(|_| NaiveDate::parse_from_str(raw, "%Y-%m-%d"))
        .map_err(|_| anyhow!("cannot parse date {raw:?}"))
}

/// Writes an artifact, refusing to overwrite without `--force`.
fn write_artifact(path: &Path, content: &str, force: bool) -> anyhow::Result<()> {
    if path.exists() && !force {
        bail!("{} already exists; pass --force to overwrite", path.display());
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

fn read_artifact(path: &Path, hint: &str) -> anyhow::Result<String> {
    fs::read_to_string(path)
        .map_err(|_| anyhow!("missing artifact {}; run `{hint}` first", path.display()))
}

fn load_meta(out: &Path) -> anyhow::Result<Meta> {
    let text = read_artifact(&out.join("meta.json"), "ingest")?;
    Ok(serde_json::from_str(&text)?)
}

fn require_seed(seed: Option<u64>, what: &str) -> anyhow::Result<u64> {
    seed.ok_or_else(|| anyhow!("{what} requires --seed (or rngSeed in the config)"))
}

fn cmd_generate(
    spec_path: &Path,
    config: &ModelConfig,
    seed: Option<u64>,
    out: &Path,
    force: bool,
) -> anyhow::Result<()> {
    let seed = require_seed(seed, "generate")?;
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("reading spec {}", spec_path.display()))?;
    let spec = PortfolioSpec::from_toml_str(&text)?;
    let portfolio = generate_portfolio(&spec, config, seed)?;
    write_artifact(
        &out.join("transactions.csv"),
        &write_transactions(&portfolio.claims, config),
        force,
    )?;
    write_artifact(
        &out.join("truth.json"),
        &serde_json::to_string_pretty(&portfolio.truth)?,
        force,
    )?;
    println!(
        "generated {} claims into {}",
        portfolio.claims.len(),
        out.join("transactions.csv").display()
    );
    Ok(())
}

fn cmd_ingest(
    input: &Path,
    config: &ModelConfig,
    out: &Path,
    force: bool,
) -> anyhow::Result<()> {
    let tau = config
        .eval_date()
        .map_err(|_| anyhow!("ingest requires --as-of (or evalDate in the config)"))?;
    let file = fs::File::open(input)
        .with_context(|| format!("opening booking log {}", input.display()))?;
    let parsed = parse_transactions(file, config)?;
    let ingest = ingest_claims(&parsed.claims, parsed.anomalies, config)?;

    let delimiter = config.data.delimiter;
    write_artifact(&out.join("periods.csv"), &write_period_rows(&ingest.rows, delimiter), force)?;
    write_artifact(
        &out.join("rbns_snapshot.csv"),
        &write_rbns_snapshot(&ingest.rbns, delimiter),
        force,
    )?;
    write_artifact(&out.join("triangle.csv"), &ingest.triangle.to_csv_string(delimiter), force)?;
    let mut anomalies = String::from("polNumb,reason\n");
    for a in &ingest.anomalies {
        anomalies.push_str(&format!("{},{}\n", a.policy_id, a.reason.replace(',', ";")));
    }
    write_artifact(&out.join("anomalies.csv"), &anomalies, force)?;
    let meta = Meta {
        tau,
        n_claims: parsed.claims.len(),
        n_rows: ingest.rows.len(),
        n_open: ingest.rbns.len(),
        n_anomalies: ingest.anomalies.len(),
        reporting_delays: ingest.reporting_delays.clone(),
        config: config.clone(),
    };
    write_artifact(&out.join("meta.json"), &serde_json::to_string_pretty(&meta)?, force)?;
    for warning in &ingest.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "ingested {} claims as of {tau}: {} period rows, {} open, {} anomalies",
        meta.n_claims, meta.n_rows, meta.n_open, meta.n_anomalies
    );
    Ok(())
}

fn cmd_fit(
    config: &ModelConfig,
    seed: Option<u64>,
    out: &Path,
    force: bool,
) -> anyhow::Result<()> {
    let meta = load_meta(out)?;
    let seed = seed.unwrap_or(0);
    let rows = read_period_rows(
        &read_artifact(&out.join("periods.csv"), "ingest")?,
        config.data.delimiter,
    )?;
    let models = fit_models(&rows, &meta.reporting_delays, config, seed)?;
    if out.join("models.json").exists() && !force {
        bail!("{} already exists; pass --force to overwrite", out.join("models.json").display());
    }
    save_models(&models, out)?;
    for model in &models.time.models {
        println!(
            "time model S_{}: {} rows, fallback {:?}",
            model.state_slot, model.n_rows, model.fallback
        );
    }
    println!(
        "payment models: {}; reporting lambda {:.4}",
        models.payments.models.len(),
        models.reporting.lambda
    );
    Ok(())
}

fn load_triangle(
    explicit: Option<&Path>,
    out: &Path,
    delimiter: char,
) -> anyhow::Result<RunoffTriangle> {
    let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| out.join("triangle.csv"));
    let text = read_artifact(&path, "ingest (or pass --triangle)")?;
    Ok(RunoffTriangle::from_csv_str(&text, delimiter)?)
}

fn cmd_ibnr(
    triangle: Option<&Path>,
    draws: Option<u32>,
    config: &ModelConfig,
    seed: Option<u64>,
    out: &Path,
    force: bool,
) -> anyhow::Result<()> {
    let seed = require_seed(seed, "ibnr")?;
    let triangle = load_triangle(triangle, out, config.data.delimiter)?;
    let model = estimate_reporting_probs(&triangle)?;
    let expected = expected_ibnr(&model);
    let n_draws = draws.unwrap_or(config.simulation.ibnr_draws) as usize;
    let all_draws = sample_ibnr(&model, n_draws, seed)?;

    let totals: Vec<f64> = all_draws.iter().map(|d| d.total() as f64).collect();
    let mut summary = String::from("accidentYear,observed,reportedMass,expectedIbnr,mean,q95\n");
    for (i, &observed) in model.observed.iter().enumerate() {
        let year = model.first_accident_year + i as i32;
        let year_draws: Vec<f64> = all_draws.iter().map(|d| d.by_year[i] as f64).collect();
        summary.push_str(&format!(
            "{year},{observed},{:.6},{:.4},{:.4},{:.1}\n",
            model.observed_mass[i],
            expected.by_year[i],
            microreserve::stats::mean(&year_draws),
            quantile_of(&year_draws, 0.95),
        ));
    }
    summary.push_str(&format!(
        "total,{},,{:.4},{:.4},{:.1}\n",
        model.observed.iter().sum::<u64>(),
        expected.total,
        microreserve::stats::mean(&totals),
        quantile_of(&totals, 0.95),
    ));
    write_artifact(&out.join("ibnr_summary.csv"), &summary, force)?;

    let mut dump = String::from("draw,accidentYear,dev,count\n");
    for (r, draw) in all_draws.iter().enumerate() {
        for (i, cells) in draw.cells.iter().enumerate() {
            let year = model.first_accident_year + i as i32;
            for (offset, &count) in cells.iter().enumerate() {
                if count > 0 {
                    let dev = model.unobserved_devs(i).start + offset;
                    dump.push_str(&format!("{r},{year},{dev},{count}\n"));
                }
            }
        }
    }
    write_artifact(&out.join("ibnr_draws.csv"), &dump, force)?;
    println!(
        "expected IBNR {:.2}, predictive mean {:.2}, 95% {:.1} ({n_draws} draws)",
        expected.total,
        microreserve::stats::mean(&totals),
        quantile_of(&totals, 0.95)
    );
    Ok(())
}

fn cmd_chainladder(
    triangle: Option<&Path>,
    bootstrap: u32,
    seed: Option<u64>,
    out: &Path,
    force: bool,
) -> anyhow::Result<()> {
    let triangle = load_triangle(triangle, out, ',')?;
    let projection = cl_project(&triangle)?;

    let mut text = String::from("accidentYear,latest,ultimate,ibnr\n");
    for (i, row) in projection.completed.iter().enumerate() {
        let latest = row[triangle.observed_devs(i) - 1];
        text.push_str(&format!(
            "{},{:.4},{:.4},{:.4}\n",
            triangle.first_accident_year + i as i32,
            latest,
            row.last().unwrap(),
            projection.ibnr_by_year[i]
        ));
    }
    text.push_str(&format!("total,,,{:.4}\n", projection.total_ibnr));
    write_artifact(&out.join("chainladder_projection.csv"), &text, force)?;

    if bootstrap > 0 {
        let seed = require_seed(seed, "chainladder --bootstrap")?;
        let boot = odp_bootstrap(&triangle, bootstrap as usize, seed)?;
        let mut btext = String::from("statistic,value\n");
        btext.push_str(&format!("mean,{:.4}\n", boot.mean));
        btext.push_str(&format!("scale,{:.6}\n", boot.scale));
        for p in [0.05, 0.25, 0.5, 0.75, 0.95, 0.995] {
            btext.push_str(&format!("q{p},{:.4}\n", boot.quantile(p)));
        }
        write_artifact(&out.join("chainladder_bootstrap.csv"), &btext, force)?;
        println!(
            "chain ladder: total IBNR {:.2}; bootstrap mean {:.2}, 95% {:.2}",
            projection.total_ibnr,
            boot.mean,
            boot.quantile(0.95)
        );
    } else {
        println!("chain ladder: total IBNR {:.2}", projection.total_ibnr);
    }
    Ok(())
}

fn cmd_simulate(
    config: &ModelConfig,
    seed: Option<u64>,
    as_of_given: bool,
    dump_draws: bool,
    no_ibnr: bool,
    out: &Path,
    force: bool,
) -> anyhow::Result<()> {
    if !as_of_given {
        bail!("simulate requires --as-of");
    }
    let tau = config.eval_date()?;
    let seed = require_seed(seed, "simulate")?;
    let models = load_models(out)?;
    let rbns = read_rbns_snapshot(
        &read_artifact(&out.join("rbns_snapshot.csv"), "ingest")?,
        config.data.delimiter,
    )?;

    let count_model = if no_ibnr {
        None
    } else {
        let triangle = load_triangle(None, out, config.data.delimiter)?;
        Some(estimate_reporting_probs(&triangle)?)
    };
    let ibnr = count_model.as_ref().map(|m| IbnrSetup { count_model: m, tau });
    let dist = simulate_portfolio(&rbns, ibnr, &models, config, seed)?;

    let mut portfolio = String::from("replication,total,ibnrComponent\n");
    for (r, (&total, &ib)) in dist.portfolio.iter().zip(&dist.ibnr_component).enumerate() {
        portfolio.push_str(&format!("{r},{total:.2},{ib:.2}\n"));
    }
    write_artifact(&out.join("reserve_portfolio.csv"), &portfolio, force)?;

    let mut claims = String::from("polNumb,mean,q05,q25,q50,q75,q95\n");
    for (k, id) in dist.policy_ids.iter().enumerate() {
        let draws = &dist.per_claim[k];
        claims.push_str(&format!(
            "{id},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
            microreserve::stats::mean(draws),
            quantile_of(draws, 0.05),
            quantile_of(draws, 0.25),
            quantile_of(draws, 0.50),
            quantile_of(draws, 0.75),
            quantile_of(draws, 0.95),
        ));
    }
    write_artifact(&out.join("reserve_claims.csv"), &claims, force)?;

    let mut hist = String::from("binLeft,count\n");
    for (left, count) in dist.portfolio_histogram(40) {
        hist.push_str(&format!("{left:.2},{count}\n"));
    }
    write_artifact(&out.join("reserve_histogram.csv"), &hist, force)?;

    if dump_draws {
        let mut dump = String::from("polNumb,replication,reserve\n");
        for (k, id) in dist.policy_ids.iter().enumerate() {
            for (r, &v) in dist.per_claim[k].iter().enumerate() {
                dump.push_str(&format!("{id},{r},{v:.2}\n"));
            }
        }
        write_artifact(&out.join("reserve_draws.csv"), &dump, force)?;
    }
    if dist.capped_reporting_draws > 0 {
        eprintln!(
            "warning: {} reporting-delay draws hit the cap",
            dist.capped_reporting_draws
        );
    }
    println!(
        "simulated {} claims x {} replications: mean total {:.2}, 5% {:.2}, 95% {:.2}",
        rbns.len(),
        dist.n_sims,
        dist.portfolio_mean(),
        dist.portfolio_quantile(0.05),
        dist.portfolio_quantile(0.95)
    );
    Ok(())
}

/// Per-claim truths: either the synthetic truth file or a plain CSV.
fn load_truths(path: &Path, out: &Path) -> anyhow::Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading truth file {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let truth: microreserve::synthetic::PortfolioTruth = serde_json::from_str(&text)?;
        let meta = load_meta(out)?;
        Ok(truth
            .claims
            .iter()
            .map(|c| (c.policy_id.clone(), c.reserve_at(meta.tau).to_units()))
            .collect())
    } else {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let (id, value) = line
                .split_once(',')
                .ok_or_else(|| anyhow!("truth line {} is not polNumb,reserve", i + 1))?;
            map.insert(id.trim().to_string(), value.trim().parse()?);
        }
        Ok(map)
    }
}

fn cmd_evaluate(truth: &Path, label: &str, out: &Path, force: bool) -> anyhow::Result<()> {
    let draws_text = fs::read_to_string(out.join("reserve_draws.csv")).map_err(|_| {
        anyhow!(
            "missing {}; rerun simulate with --dump-draws",
            out.join("reserve_draws.csv").display()
        )
    })?;
    let mut per_claim: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in draws_text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let id = parts.next().unwrap_or_default().to_string();
        let _rep = parts.next();
        let value: f64 = parts.next().unwrap_or("0").parse()?;
        per_claim.entry(id).or_default().push(value);
    }
    let truths = load_truths(truth, out)?;

    let mut draw_sets = Vec::new();
    let mut truth_values = Vec::new();
    let mut means = Vec::new();
    let mut missing = 0usize;
    for (id, draws) in &per_claim {
        match truths.get(id) {
            Some(&t) => {
                truth_values.push(t);
                means.push(microreserve::stats::mean(draws));
                draw_sets.push(draws.clone());
            }
            None => missing += 1,
        }
    }
    if draw_sets.is_empty() {
        bail!("no claims in common between the draws and the truth file");
    }
    if missing > 0 {
        eprintln!("warning: {missing} simulated claims have no truth entry");
    }

    let crps_values: Vec<f64> = draw_sets
        .iter()
        .zip(&truth_values)
        .map(|(draws, &t)| crps(draws, t))
        .collect();
    let is95 = interval_score_and_picp(&draw_sets, &truth_values, 0.95);
    let is99 = interval_score_and_picp(&draw_sets, &truth_values, 0.99);
    let points = pointwise_metrics(&means, &truth_values);

    let header = "label,nClaims,meanCRPS,medianCRPS,PICP_95,IS_95,PICP_99,IS_99,bias,MAE,RMSE,sMAPE\n";
    let row = format!(
        "{label},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
        draw_sets.len(),
        microreserve::stats::mean(&crps_values),
        quantile_of(&crps_values, 0.5),
        is95.picp,
        is95.interval_score,
        is99.picp,
        is99.interval_score,
        points.bias,
        points.mae,
        points.rmse,
        points.smape,
    );
    let path = out.join("metrics.csv");
    let mut content = match fs::read_to_string(&path) {
        Ok(existing) => existing,
        Err(_) => header.to_string(),
    };
    if content.lines().skip(1).any(|l| l.starts_with(&format!("{label},"))) {
        if !force {
            bail!("metrics.csv already has a row for {label:?}; pass --force to replace");
        }
        content = content
            .lines()
            .filter(|l| !l.starts_with(&format!("{label},")))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
    }
    content.push_str(&row);
    fs::write(&path, content)?;
    println!(
        "{label}: mean CRPS {:.2}, PICP95 {:.3}, bias {:.2} over {} claims",
        microreserve::stats::mean(&crps_values),
        is95.picp,
        points.bias,
        draw_sets.len()
    );
    Ok(())
}

fn cmd_report(out: &Path, pdp: bool, force: bool) -> anyhow::Result<()> {
    let meta = load_meta(out)?;
    let config = &meta.config;
    let mut report = String::new();
    report.push_str(&format!(
        "Reserving report (as of {}; {} claims, {} open)\n\n",
        meta.tau, meta.n_claims, meta.n_open
    ));

    // Transition mix and dataset sizes per state.
    let rows = read_period_rows(
        &read_artifact(&out.join("periods.csv"), "ingest")?,
        config.data.delimiter,
    )?;
    let datasets = microreserve::claims_data::build_state_datasets(&rows, config);
    let mut mix_table = Table::new(vec!["state", "rows", "payRows", "N", "P", "TN", "TP"]);
    for (slot, slot_rows) in datasets.time_rows.iter().enumerate() {
        let mix = transition_mix(slot_rows);
        mix_table.row(vec![
            datasets.slot_label(slot),
            slot_rows.len().to_string(),
            datasets.payment_rows[slot].len().to_string(),
            percent(mix[0]),
            percent(mix[1]),
            percent(mix[2]),
            percent(mix[3]),
        ]);
    }
    report.push_str("Transitions in the training data\n");
    report.push_str(&mix_table.render());
    report.push('\n');

    // Model tables.
    if let Ok(models) = load_models(out) {
        let mut splits = Table::new(vec!["state", "splitPoints"]);
        let mut means = Table::new(vec!["state", "componentMeans"]);
        let mut shares = Table::new(vec!["state", "binShares"]);
        for model in &models.payments.models {
            let label = format!("S_{}", model.state_slot);
            splits.row(vec![
                label.clone(),
                model
                    .split_points
                    .iter()
                    .map(|s| money(*s))
                    .collect::<Vec<_>>()
                    .join(", "),
            ]);
            means.row(vec![
                label.clone(),
                model
                    .component_means
                    .iter()
                    .map(|m| money(*m))
                    .collect::<Vec<_>>()
                    .join(", "),
            ]);
            let total: u64 = model.bin_counts.iter().sum();
            shares.row(vec![
                label,
                model
                    .bin_counts
                    .iter()
                    .map(|&c| percent(c as f64 / total.max(1) as f64))
                    .collect::<Vec<_>>()
                    .join(", "),
            ]);
        }
        report.push_str("Payment split points\n");
        report.push_str(&splits.render());
        report.push_str("\nMean payment per bin\n");
        report.push_str(&means.render());
        report.push_str("\nShare of payments per bin\n");
        report.push_str(&shares.render());
        report.push('\n');

        let mut binning = Table::new(vec!["state", "variable", "splitPoints"]);
        for model in &models.time.models {
            for (name, spec) in [
                ("deltPay", &model.schema.delt_pay_bins),
                ("cumDeltPay", &model.schema.cum_delt_pay_bins),
            ] {
                if let Some(spec) = spec {
                    binning.row(vec![
                        format!("S_{}", model.state_slot),
                        name.to_string(),
                        spec.split_points
                            .iter()
                            .map(|s| money(*s))
                            .collect::<Vec<_>>()
                            .join(", "),
                    ]);
                }
            }
        }
        report.push_str("Covariate binning\n");
        report.push_str(&binning.render());
        report.push('\n');

        // Mean-excess diagnostics back the manual threshold choice.
        for model in &models.payments.models {
            if model.mean_excess_table.is_empty() {
                continue;
            }
            let mut text = String::from("side,threshold,meanExcess,count\n");
            for (side, threshold, excess, count) in &model.mean_excess_table {
                text.push_str(&format!("{side},{threshold:.2},{excess:.2},{count}\n"));
            }
            write_artifact(
                &out.join(format!("mean_excess_s{}.csv", model.state_slot)),
                &text,
                force,
            )?;
        }
        report.push_str("Mean-excess diagnostics written as mean_excess_s<state>.csv\n\n");

        if pdp {
            for model in &models.time.models {
                if model.encoder.is_none() {
                    continue;
                }
                for feature in model.schema.feature_names() {
                    let Ok(effects) =
                        marginal_transition_effects(model, &rows, &feature, 2000)
                    else {
                        continue;
                    };
                    let mut text = String::from("level,N,P,TN,TP\n");
                    for e in &effects {
                        text.push_str(&format!(
                            "{},{:.6},{:.6},{:.6},{:.6}\n",
                            e.level,
                            e.probabilities[0],
                            e.probabilities[1],
                            e.probabilities[2],
                            e.probabilities[3]
                        ));
                    }
                    write_artifact(
                        &out.join(format!("pdp_s{}_{feature}.csv", model.state_slot)),
                        &text,
                        force,
                    )?;
                }
            }
            report.push_str("Marginal-effect tables written as pdp_s<state>_<feature>.csv\n\n");
        }
    }

    // Optional artifacts from other subcommands.
    for (file, title) in [
        ("ibnr_summary.csv", "IBNR claim counts"),
        ("chainladder_projection.csv", "Chain-ladder projection"),
        ("chainladder_bootstrap.csv", "Chain-ladder bootstrap"),
        ("metrics.csv", "Scoring (metric x method)"),
    ] {
        if let Ok(text) = fs::read_to_string(out.join(file)) {
            report.push_str(title);
            report.push('\n');
            report.push_str(&csv_as_table(&text));
            report.push('\n');
        }
    }

    if let Ok(text) = fs::read_to_string(out.join("reserve_portfolio.csv")) {
        let totals: Vec<f64> = text
            .lines()
            .skip(1)
            .filter_map(|l| l.split(',').nth(1)?.parse().ok())
            .collect();
        if !totals.is_empty() {
            let mut t = Table::new(vec!["statistic", "value"]);
            t.row(vec!["mean".to_string(), money(microreserve::stats::mean(&totals))]);
            for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
                t.row(vec![format!("q{p}"), money(quantile_of(&totals, p))]);
            }
            report.push_str("Best-estimate distribution\n");
            report.push_str(&t.render());
            report.push('\n');
        }
    }

    write_artifact(&out.join("report.txt"), &report, force)?;
    print!("{report}");
    Ok(())
}

fn csv_as_table(text: &str) -> String {
    let mut lines = text.lines();
    let Some(header) = lines.next() else { return String::new() };
    let mut table = Table::new(header.split(',').collect::<Vec<_>>());
    for line in lines {
        if !line.trim().is_empty() {
            table.row(line.split(',').collect::<Vec<_>>());
        }
    }
    table.render()
}
