//! End-to-end backtest: estimate on a training window, cluster, optimize
//! per cluster, then walk the held-out test window.
//!
//! Estimation (mean, covariance, correlation features) uses log returns
//! from the training window only; test-window evaluation compounds simple
//! returns. Cluster weights are computed once on training data and then
//! held constant through the test period, re-applied daily (a buy-and-hold
//! variant is available through the config). The benchmark is the
//! equal-weight portfolio over the full ticker universe.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::cluster::{build_features, cluster_members, kmeans_fit, ClusterModel, FeatureKind, KMeansConfig};
use crate::error::{Error, Result};
use crate::market::{
    descriptive_stats, forward_fill, log_returns, simple_returns, slice_period, DescriptiveStats,
    PriceMatrix, ReturnMatrix,
};
use crate::metrics::{performance_report, MetricsConfig, PerformanceReport, SharpeConvention};
use crate::optimizer::{
    equal_weights, maximize_sharpe, OptimizationProblem, PortfolioWeights, SolveDiagnostics,
    SolverConfig,
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// How daily portfolio returns compound over the test window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compounding {
    /// Weights re-applied every day.
    #[default]
    DailyRebalanced,
    /// Initial allocation drifts with prices.
    BuyAndHold,
}

/// Which benchmark tracks are produced beside the portfolio tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BenchmarkScope {
    /// One equal-weight benchmark over every ticker.
    #[default]
    AllTickers,
    /// The all-ticker benchmark plus an equal-weight track per cluster.
    PerCluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    pub k: usize,
    pub seed: u64,
    pub features: FeatureKind,
    /// Per-day risk-free rate, shared by the solver and the metrics.
    pub risk_free: f64,
    pub trading_days_per_year: f64,
    pub sharpe_convention: SharpeConvention,
    pub compounding: Compounding,
    pub benchmark: BenchmarkScope,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub kmeans_restarts: usize,
    pub solver: SolverConfig,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid literal date")
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            train_start: ymd(2010, 1, 1),
            train_end: ymd(2020, 1, 1),
            test_start: ymd(2020, 1, 1),
            test_end: ymd(2024, 1, 1),
            k: 3,
            seed: 0,
            features: FeatureKind::CorrelationRows,
            risk_free: 0.0,
            trading_days_per_year: crate::metrics::DEFAULT_TRADING_DAYS,
            sharpe_convention: SharpeConvention::Arithmetic,
            compounding: Compounding::DailyRebalanced,
            benchmark: BenchmarkScope::AllTickers,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-6,
            kmeans_restarts: 10,
            solver: SolverConfig::default(),
        }
    }
}

impl BacktestConfig {
    pub fn metrics_config(&self) -> MetricsConfig {
        MetricsConfig {
            trading_days_per_year: self.trading_days_per_year,
            risk_free: self.risk_free,
            sharpe: self.sharpe_convention,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.train_start >= self.train_end {
            return Err(Error::InvalidInput {
                field: "train window".into(),
                reason: format!("{} must be before {}", self.train_start, self.train_end),
            });
        }
        if self.test_start >= self.test_end {
            return Err(Error::InvalidInput {
                field: "test window".into(),
                reason: format!("{} must be before {}", self.test_start, self.test_end),
            });
        }
        // estimation must never see test data
        if self.train_end > self.test_start {
            return Err(Error::InvalidInput {
                field: "windows".into(),
                reason: format!(
                    "training ends {} after testing starts {}",
                    self.train_end, self.test_start
                ),
            });
        }
        if self.k == 0 {
            return Err(Error::InvalidInput {
                field: "k".into(),
                reason: "k must be at least 1".into(),
            });
        }
        if !(self.trading_days_per_year > 0.0) {
            return Err(Error::InvalidInput {
                field: "trading_days_per_year".into(),
                reason: "must be positive".into(),
            });
        }
        if !self.risk_free.is_finite() {
            return Err(Error::InvalidInput {
                field: "risk_free".into(),
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tracks
// ---------------------------------------------------------------------------

/// One cumulative performance path over the test window.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioTrack {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub daily_returns: Vec<f64>,
    /// cumulative[t] = prod_{s<=t} (1 + daily[s]) - 1
    pub cumulative: Vec<f64>,
}

/// Everything a backtest run produces. Track and report vectors keep
/// cluster order: clusters 0..k first, then the benchmark, then any
/// per-cluster benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub model: ClusterModel,
    pub train_stats: DescriptiveStats,
    pub members: Vec<Vec<String>>,
    pub cluster_weights: Vec<PortfolioWeights>,
    pub cluster_diagnostics: Vec<SolveDiagnostics>,
    pub cluster_tracks: Vec<PortfolioTrack>,
    pub benchmark_track: PortfolioTrack,
    pub cluster_benchmarks: Vec<PortfolioTrack>,
    pub reports: Vec<PerformanceReport>,
    pub best_cluster: usize,
}

fn weight_columns(weights: &PortfolioWeights, returns: &ReturnMatrix) -> Result<Vec<usize>> {
    weights
        .tickers()
        .iter()
        .map(|t| {
            returns.ticker_index(t).ok_or_else(|| Error::InvalidInput {
                field: "weights".into(),
                reason: format!("ticker {t} is not in the return matrix"),
            })
        })
        .collect()
}

/// Constant-weight track: the portfolio return on each day is the
/// weighted sum of that day's asset returns (weights re-applied daily).
pub fn evaluate_track(
    label: &str,
    weights: &PortfolioWeights,
    returns: &ReturnMatrix,
) -> Result<PortfolioTrack> {
    if returns.n_rows() == 0 {
        return Err(Error::EmptyInput("test returns".into()));
    }
    let cols = weight_columns(weights, returns)?;
    let w = weights.weights();
    let mut daily = Vec::with_capacity(returns.n_rows());
    let mut cumulative = Vec::with_capacity(returns.n_rows());
    let mut acc = 1.0;
    for r in 0..returns.n_rows() {
        let mut day = 0.0;
        for (i, &c) in cols.iter().enumerate() {
            day += w[i] * returns.get(r, c);
        }
        acc *= 1.0 + day;
        daily.push(day);
        cumulative.push(acc - 1.0);
    }
    Ok(PortfolioTrack {
        label: label.into(),
        dates: returns.dates().to_vec(),
        daily_returns: daily,
        cumulative,
    })
}

/// Buy-and-hold track: the initial allocation drifts, so each asset's
/// weight is its compounded share of portfolio value.
pub fn evaluate_track_buy_and_hold(
    label: &str,
    weights: &PortfolioWeights,
    returns: &ReturnMatrix,
) -> Result<PortfolioTrack> {
    if returns.n_rows() == 0 {
        return Err(Error::EmptyInput("test returns".into()));
    }
    let cols = weight_columns(weights, returns)?;
    let w = weights.weights();
    let mut growth = alloc::vec![1.0; cols.len()];
    let mut daily = Vec::with_capacity(returns.n_rows());
    let mut cumulative = Vec::with_capacity(returns.n_rows());
    let mut prev_value = 1.0;
    for r in 0..returns.n_rows() {
        let mut value = 0.0;
        for (i, &c) in cols.iter().enumerate() {
            growth[i] *= 1.0 + returns.get(r, c);
            value += w[i] * growth[i];
        }
        daily.push(value / prev_value - 1.0);
        cumulative.push(value - 1.0);
        prev_value = value;
    }
    Ok(PortfolioTrack {
        label: label.into(),
        dates: returns.dates().to_vec(),
        daily_returns: daily,
        cumulative,
    })
}

/// Equal weights over the given tickers.
pub fn make_benchmark(tickers: &[String]) -> Result<PortfolioWeights> {
    PortfolioWeights::new(tickers.to_vec(), equal_weights(tickers.len())?)
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

fn track_for(
    label: &str,
    weights: &PortfolioWeights,
    returns: &ReturnMatrix,
    compounding: Compounding,
) -> Result<PortfolioTrack> {
    match compounding {
        Compounding::DailyRebalanced => evaluate_track(label, weights, returns),
        Compounding::BuyAndHold => evaluate_track_buy_and_hold(label, weights, returns),
    }
}

pub fn run_backtest(prices: &PriceMatrix, config: &BacktestConfig) -> Result<BacktestResult> {
    config.validate()?;

    let clean = forward_fill(prices)?;
    let log_all = log_returns(&clean)?;
    let train = slice_period(&log_all, config.train_start, config.train_end)?;
    let stats = descriptive_stats(&train)?;

    let features = build_features(&stats, config.features);
    let model = kmeans_fit(
        &features,
        &KMeansConfig {
            k: config.k,
            seed: config.seed,
            max_iter: config.kmeans_max_iter,
            tol: config.kmeans_tol,
            n_init: config.kmeans_restarts,
        },
    )?;
    let members = cluster_members(&model, &stats.tickers);

    let mut cluster_weights = Vec::with_capacity(config.k);
    let mut cluster_diagnostics = Vec::with_capacity(config.k);
    for group in &members {
        let idx: Vec<usize> = group
            .iter()
            .map(|t| stats.tickers.iter().position(|x| x == t).expect("member ticker"))
            .collect();
        let mean: Vec<f64> = idx.iter().map(|&i| stats.mean[i]).collect();
        let cov = stats.covariance.principal_submatrix(&idx)?;
        let problem = OptimizationProblem::new(group.clone(), mean, cov, config.risk_free)?;
        let (weights, diagnostics) = maximize_sharpe(&problem, &config.solver)?;
        cluster_weights.push(weights);
        cluster_diagnostics.push(diagnostics);
    }

    let simple_all = simple_returns(&clean)?;
    let test = slice_period(&simple_all, config.test_start, config.test_end)?;

    let mut cluster_tracks = Vec::with_capacity(config.k);
    for (c, weights) in cluster_weights.iter().enumerate() {
        cluster_tracks.push(track_for(
            &format!("cluster_{c}"),
            weights,
            &test,
            config.compounding,
        )?);
    }
    let benchmark_weights = make_benchmark(test.tickers())?;
    let benchmark_track = track_for("benchmark", &benchmark_weights, &test, config.compounding)?;

    let mut cluster_benchmarks = Vec::new();
    if config.benchmark == BenchmarkScope::PerCluster {
        for (c, group) in members.iter().enumerate() {
            let w = make_benchmark(group)?;
            cluster_benchmarks.push(track_for(
                &format!("benchmark_cluster_{c}"),
                &w,
                &test,
                config.compounding,
            )?);
        }
    }

    let metrics_config = config.metrics_config();
    let mut reports = Vec::new();
    for track in cluster_tracks
        .iter()
        .chain(core::iter::once(&benchmark_track))
        .chain(cluster_benchmarks.iter())
    {
        reports.push(performance_report(
            &track.label,
            &track.daily_returns,
            &metrics_config,
        )?);
    }

    // argmax over the cluster tracks' annualized Sharpe, ties to the
    // lowest cluster index (strict comparison keeps the first)
    let mut best_cluster = 0;
    for c in 1..config.k {
        if reports[c].sharpe > reports[best_cluster].sharpe {
            best_cluster = c;
        }
    }

    Ok(BacktestResult {
        model,
        train_stats: stats,
        members,
        cluster_weights,
        cluster_diagnostics,
        cluster_tracks,
        benchmark_track,
        cluster_benchmarks,
        reports,
        best_cluster,
    })
}
