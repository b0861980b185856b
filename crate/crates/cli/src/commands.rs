//! One function per subcommand. Each command is a thin pipeline: load,
//! compute through the library, write artifacts. All numbers in the output
//! files come straight from library results, never recomputed here.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sharpefolio_core::backtest::{run_backtest, BacktestResult};
use sharpefolio_core::cluster::{build_features, kmeans_fit, FeatureKind, KMeansConfig};
use sharpefolio_core::market::{
    descriptive_stats, forward_fill, log_returns, slice_period, ReturnMatrix,
};
use sharpefolio_core::metrics::{performance_report, MetricsConfig};
use sharpefolio_core::optimizer::{maximize_sharpe, OptimizationProblem, SolverConfig};

use crate::chart;
use crate::config::RunConfig;
use crate::csvio;
use crate::error::{at_stage, CliError, Result};
use crate::synth::{generate, SyntheticSpec};

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Optional half-open analysis window for the standalone commands; `None`
/// ends default to the full extent of the data.
#[derive(Debug, Clone, Copy, Default)]
pub struct Window {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

fn apply_window(returns: ReturnMatrix, window: &Window) -> Result<ReturnMatrix> {
    if window.start.is_none() && window.end.is_none() {
        return Ok(returns);
    }
    let first = returns.dates()[0];
    let last = *returns.dates().last().expect("non-empty returns");
    let start = window.start.unwrap_or(first);
    let end = window.end.unwrap_or(last + chrono::Days::new(1));
    slice_period(&returns, start, end)
        .map_err(|e| CliError::usage("window", format!("{e} (data spans {first} .. {last})")))
}

fn train_stats(input: &Path, window: &Window) -> Result<sharpefolio_core::market::DescriptiveStats> {
    let prices = csvio::load_prices_csv(input)?;
    let clean = forward_fill(&prices).map_err(at_stage("clean"))?;
    let returns = log_returns(&clean).map_err(at_stage("returns"))?;
    let windowed = apply_window(returns, window)?;
    descriptive_stats(&windowed).map_err(at_stage("stats"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime("write", format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))?;
    std::fs::write(path, body + "\n")
        .map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body)
        .map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn cmd_synth(spec_path: &Path, output: &Path) -> Result<()> {
    let spec = SyntheticSpec::from_file(spec_path)?;
    let prices = generate(&spec)?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    csvio::write_prices_csv(output, &prices)?;
    println!(
        "wrote {} rows x {} tickers to {}",
        prices.n_rows(),
        prices.n_assets(),
        output.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

pub fn cmd_stats(input: &Path, out_dir: &Path, window: Window) -> Result<()> {
    let stats = train_stats(input, &window)?;
    ensure_dir(out_dir)?;
    csvio::write_stats_csv(&out_dir.join("stats.csv"), &stats.tickers, &stats.mean, &stats.std)?;
    csvio::write_matrix_csv(&out_dir.join("correlation.csv"), &stats.tickers, &stats.correlation)?;
    csvio::write_matrix_csv(&out_dir.join("covariance.csv"), &stats.tickers, &stats.covariance)?;
    println!("wrote stats for {} tickers to {}", stats.tickers.len(), out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

pub fn cmd_cluster(
    input: &Path,
    out_dir: &Path,
    window: Window,
    config: KMeansConfig,
    features: FeatureKind,
) -> Result<()> {
    let stats = train_stats(input, &window)?;
    if config.k > stats.tickers.len() {
        return Err(CliError::usage(
            "config",
            format!("k = {} exceeds the {} tickers in the input", config.k, stats.tickers.len()),
        ));
    }
    let feature_matrix = build_features(&stats, features);
    let model = kmeans_fit(&feature_matrix, &config).map_err(at_stage("cluster"))?;

    ensure_dir(out_dir)?;
    csvio::write_membership_csv(&out_dir.join("clusters.csv"), &stats.tickers, &model.assignments)?;
    write_json(
        &out_dir.join("cluster_model.json"),
        &serde_json::json!({
            "k": model.k,
            "seed": model.seed,
            "inertia": model.inertia,
            "iterations": model.iterations,
        }),
    )?;
    println!(
        "clustered {} tickers into k={} (inertia {:.6}) in {}",
        stats.tickers.len(),
        model.k,
        model.inertia,
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

pub fn cmd_optimize(
    input: &Path,
    out_dir: &Path,
    window: Window,
    tickers: Option<Vec<String>>,
    risk_free: f64,
    solver: SolverConfig,
) -> Result<()> {
    let stats = train_stats(input, &window)?;
    let selected: Vec<usize> = match &tickers {
        None => (0..stats.tickers.len()).collect(),
        Some(names) => names
            .iter()
            .map(|name| {
                stats.tickers.iter().position(|t| t == name).ok_or_else(|| {
                    CliError::usage("config", format!("ticker `{name}` is not in the input"))
                })
            })
            .collect::<Result<_>>()?,
    };

    let subset: Vec<String> = selected.iter().map(|&i| stats.tickers[i].clone()).collect();
    let mean: Vec<f64> = selected.iter().map(|&i| stats.mean[i]).collect();
    let covariance = stats
        .covariance
        .principal_submatrix(&selected)
        .map_err(at_stage("optimize"))?;
    let problem =
        OptimizationProblem::new(subset, mean, covariance, risk_free).map_err(at_stage("optimize"))?;
    let (weights, diagnostics) = maximize_sharpe(&problem, &solver).map_err(at_stage("optimize"))?;

    ensure_dir(out_dir)?;
    csvio::write_weights_csv(&out_dir.join("weights.csv"), weights.tickers(), weights.weights())?;
    write_json(
        &out_dir.join("optimize.json"),
        &serde_json::json!({
            "sharpe": diagnostics.sharpe,
            "iterations": diagnostics.iterations,
            "converged": diagnostics.converged,
        }),
    )?;
    println!(
        "optimized {} assets: daily sharpe {:.6} in {}",
        weights.tickers().len(),
        diagnostics.sharpe,
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// backtest
// ---------------------------------------------------------------------------

pub fn cmd_backtest(config: &RunConfig) -> Result<PathBuf> {
    let (input, out_dir) = config.validate()?;
    let prices = csvio::load_prices_csv(&input)?;
    if config.backtest.k > prices.n_assets() {
        return Err(CliError::usage(
            "config",
            format!(
                "k = {} exceeds the {} tickers in {}",
                config.backtest.k,
                prices.n_assets(),
                input.display()
            ),
        ));
    }

    let result = run_backtest(&prices, &config.backtest).map_err(at_stage("backtest"))?;
    ensure_dir(&out_dir)?;
    write_backtest_artifacts(&out_dir, &result, config.charts)?;

    let best = &result.reports[result.best_cluster];
    println!(
        "best cluster: cluster_{} (test sharpe {:.2}); artifacts in {}",
        result.best_cluster,
        best.sharpe,
        out_dir.display()
    );
    Ok(out_dir)
}

fn write_backtest_artifacts(out_dir: &Path, result: &BacktestResult, charts: bool) -> Result<()> {
    let stats = &result.train_stats;
    csvio::write_stats_csv(&out_dir.join("stats.csv"), &stats.tickers, &stats.mean, &stats.std)?;
    csvio::write_matrix_csv(&out_dir.join("correlation.csv"), &stats.tickers, &stats.correlation)?;
    csvio::write_matrix_csv(&out_dir.join("covariance.csv"), &stats.tickers, &stats.covariance)?;
    csvio::write_membership_csv(
        &out_dir.join("clusters.csv"),
        &stats.tickers,
        &result.model.assignments,
    )?;
    write_json(
        &out_dir.join("cluster_model.json"),
        &serde_json::json!({
            "k": result.model.k,
            "seed": result.model.seed,
            "inertia": result.model.inertia,
            "iterations": result.model.iterations,
        }),
    )?;
    for (c, weights) in result.cluster_weights.iter().enumerate() {
        csvio::write_weights_csv(
            &out_dir.join(format!("weights_cluster_{c}.csv")),
            weights.tickers(),
            weights.weights(),
        )?;
        let diag = &result.cluster_diagnostics[c];
        write_json(
            &out_dir.join(format!("optimize_cluster_{c}.json")),
            &serde_json::json!({
                "sharpe": diag.sharpe,
                "iterations": diag.iterations,
                "converged": diag.converged,
            }),
        )?;
    }

    let all_tracks: Vec<&sharpefolio_core::backtest::PortfolioTrack> = result
        .cluster_tracks
        .iter()
        .chain(std::iter::once(&result.benchmark_track))
        .chain(result.cluster_benchmarks.iter())
        .collect();
    let rows: Vec<csvio::TrackRows<'_>> = all_tracks
        .iter()
        .map(|t| csvio::TrackRows {
            label: &t.label,
            dates: &t.dates,
            cumulative: &t.cumulative,
        })
        .collect();
    csvio::write_tracks_csv(&out_dir.join("tracks.csv"), &rows)?;
    csvio::write_summary_csv(&out_dir.join("summary.csv"), &result.reports)?;

    if charts {
        write_text(
            &out_dir.join("correlation_heatmap.svg"),
            &chart::correlation_heatmap_svg(&stats.tickers, &stats.correlation),
        )?;
        let mut with_benchmark: Vec<&sharpefolio_core::backtest::PortfolioTrack> =
            result.cluster_tracks.iter().collect();
        with_benchmark.push(&result.benchmark_track);
        write_text(
            &out_dir.join("clusters_vs_benchmark.svg"),
            &chart::tracks_svg("Clusters vs benchmark portfolio", &with_benchmark),
        )?;
        let best = &result.cluster_tracks[result.best_cluster];
        write_text(
            &out_dir.join("best_vs_benchmark.svg"),
            &chart::tracks_svg(
                &format!("Best cluster (cluster_{}) vs benchmark", result.best_cluster),
                &[best, &result.benchmark_track],
            ),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Daily returns from a cumulative line: the first day's return is the
/// first cumulative value, after that r_t = (1+c_t)/(1+c_{t-1}) - 1.
fn daily_from_cumulative(cumulative: &[f64]) -> Vec<f64> {
    let mut daily = Vec::with_capacity(cumulative.len());
    let mut prev = 1.0;
    for &c in cumulative {
        daily.push((1.0 + c) / prev - 1.0);
        prev = 1.0 + c;
    }
    daily
}

pub fn cmd_report(tracks_path: &Path, output: &Path, metrics: MetricsConfig) -> Result<()> {
    let tracks = csvio::read_tracks_csv(tracks_path)?;
    let mut reports = Vec::with_capacity(tracks.len());
    for track in &tracks {
        if track.dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::usage(
                "load",
                format!("track `{}`: dates are not strictly increasing", track.label),
            ));
        }
        let daily = daily_from_cumulative(&track.cumulative);
        reports.push(performance_report(&track.label, &daily, &metrics).map_err(at_stage("report"))?);
    }
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    csvio::write_summary_csv(output, &reports)?;
    println!("wrote {} portfolio rows to {}", reports.len(), output.display());
    Ok(())
}

// ---------------------------------------------------------------------------
