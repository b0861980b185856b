//! Flat key=value run configuration: loadable from a file, overridable by
//! flags, validated before any computation starts.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored, later assignments win. Unknown keys are usage errors
//! so a typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sharpefolio_core::backtest::{BacktestConfig, BenchmarkScope, Compounding};
use sharpefolio_core::cluster::FeatureKind;
use sharpefolio_core::metrics::SharpeConvention;
use sharpefolio_core::optimizer::SolverConfig;

use crate::error::{CliError, Result};

// ---------------------------------------------------------------------------
// Key=value scanning (shared with the synthetic-data spec format)
// ---------------------------------------------------------------------------

/// Split a config text into (key, value) pairs, in file order.
pub fn parse_key_values(text: &str, stage: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(CliError::usage(
                stage,
                format!("line {}: expected `key = value`, found `{line}`", i + 1),
            ));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(CliError::usage(stage, format!("line {}: empty key", i + 1)));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// Typed value parsers
// ---------------------------------------------------------------------------

pub fn parse_date(stage: &str, key: &str, value: &str) -> Result<NaiveDate> {
    value.parse().map_err(|_| {
        CliError::usage(stage, format!("key {key}: `{value}` is not an ISO-8601 date"))
    })
}

pub fn parse_f64(stage: &str, key: &str, value: &str) -> Result<f64> {
    let parsed: f64 = value
        .parse()
        .map_err(|_| CliError::usage(stage, format!("key {key}: `{value}` is not a number")))?;
    if !parsed.is_finite() {
        return Err(CliError::usage(stage, format!("key {key}: `{value}` is not finite")));
    }
    Ok(parsed)
}

pub fn parse_usize(stage: &str, key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| {
        CliError::usage(stage, format!("key {key}: `{value}` is not a non-negative integer"))
    })
}

pub fn parse_u64(stage: &str, key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| {
        CliError::usage(stage, format!("key {key}: `{value}` is not a non-negative integer"))
    })
}

pub fn parse_bool(stage: &str, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(CliError::usage(
            stage,
            format!("key {key}: `{value}` is not a boolean (true/false)"),
        )),
    }
}

pub fn parse_features(stage: &str, key: &str, value: &str) -> Result<FeatureKind> {
    match value {
        "correlation_rows" => Ok(FeatureKind::CorrelationRows),
        "raw_stats" => Ok(FeatureKind::RawStats),
        _ => Err(CliError::usage(
            stage,
            format!("key {key}: `{value}` must be correlation_rows or raw_stats"),
        )),
    }
}

pub fn parse_sharpe(stage: &str, key: &str, value: &str) -> Result<SharpeConvention> {
    match value {
        "arithmetic" => Ok(SharpeConvention::Arithmetic),
        "geometric" => Ok(SharpeConvention::Geometric),
        _ => Err(CliError::usage(
            stage,
            format!("key {key}: `{value}` must be arithmetic or geometric"),
        )),
    }
}

pub fn parse_compounding(stage: &str, key: &str, value: &str) -> Result<Compounding> {
    match value {
        "rebalanced" => Ok(Compounding::DailyRebalanced),
        "buy_and_hold" => Ok(Compounding::BuyAndHold),
        _ => Err(CliError::usage(
            stage,
            format!("key {key}: `{value}` must be rebalanced or buy_and_hold"),
        )),
    }
}

pub fn parse_benchmark(stage: &str, key: &str, value: &str) -> Result<BenchmarkScope> {
    match value {
        "all" => Ok(BenchmarkScope::AllTickers),
        "per_cluster" => Ok(BenchmarkScope::PerCluster),
        _ => Err(CliError::usage(
            stage,
            format!("key {key}: `{value}` must be all or per_cluster"),
        )),
    }
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

const STAGE: &str = "config";

/// Everything a full backtest run needs. Starts from the library defaults;
/// a config file and then flags overwrite individual fields.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub charts: bool,
    pub backtest: BacktestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out_dir: None,
            charts: true,
            backtest: BacktestConfig::default(),
        }
    }
}

impl RunConfig {
    /// Apply one `key = value` assignment. Both the config file and the
    /// command-line overrides funnel through here, so values are parsed and
    /// rejected identically no matter where they came from.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let b = &mut self.backtest;
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "charts" => self.charts = parse_bool(STAGE, key, value)?,
            "train_start" => b.train_start = parse_date(STAGE, key, value)?,
            "train_end" => b.train_end = parse_date(STAGE, key, value)?,
            "test_start" => b.test_start = parse_date(STAGE, key, value)?,
            "test_end" => b.test_end = parse_date(STAGE, key, value)?,
            "k" => b.k = parse_usize(STAGE, key, value)?,
            "seed" => b.seed = parse_u64(STAGE, key, value)?,
            "features" => b.features = parse_features(STAGE, key, value)?,
            "risk_free" => b.risk_free = parse_f64(STAGE, key, value)?,
            "trading_days_per_year" => b.trading_days_per_year = parse_f64(STAGE, key, value)?,
            "sharpe" => b.sharpe_convention = parse_sharpe(STAGE, key, value)?,
            "compounding" => b.compounding = parse_compounding(STAGE, key, value)?,
            "benchmark" => b.benchmark = parse_benchmark(STAGE, key, value)?,
            "kmeans_max_iter" => b.kmeans_max_iter = parse_usize(STAGE, key, value)?,
            "kmeans_tol" => b.kmeans_tol = parse_f64(STAGE, key, value)?,
            "kmeans_restarts" => b.kmeans_restarts = parse_usize(STAGE, key, value)?,
            "solver_max_iter" => b.solver.max_iter = parse_usize(STAGE, key, value)?,
            "solver_tol" => b.solver.tol = parse_f64(STAGE, key, value)?,
            _ => {
                return Err(CliError::usage(STAGE, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(STAGE, format!("cannot read {}: {e}", path.display()))
        })?;
        for (key, value) in parse_key_values(&text, STAGE)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    /// Reject invalid combinations before any data is touched.
    pub fn validate(&self) -> Result<(PathBuf, PathBuf)> {
        let input = self
            .input
            .clone()
            .ok_or_else(|| CliError::usage(STAGE, "no input price CSV (key `input`)"))?;
        let out_dir = self
            .out_dir
            .clone()
            .ok_or_else(|| CliError::usage(STAGE, "no output directory (key `out_dir`)"))?;
        let b = &self.backtest;
        if b.train_start >= b.train_end {
            return Err(CliError::usage(
                STAGE,
                format!("train window {} .. {} is empty", b.train_start, b.train_end),
            ));
        }
        if b.test_start >= b.test_end {
            return Err(CliError::usage(
                STAGE,
                format!("test window {} .. {} is empty", b.test_start, b.test_end),
            ));
        }
        if b.train_end > b.test_start {
            return Err(CliError::usage(
                STAGE,
                format!(
                    "training ends {} after testing starts {}: the estimation window must not overlap the test window",
                    b.train_end, b.test_start
                ),
            ));
        }
        if b.k == 0 {
            return Err(CliError::usage(STAGE, "k must be at least 1"));
        }
        if !(b.trading_days_per_year > 0.0) {
            return Err(CliError::usage(STAGE, "trading_days_per_year must be positive"));
        }
        if b.kmeans_restarts == 0 || b.kmeans_max_iter == 0 {
            return Err(CliError::usage(
                STAGE,
                "kmeans_restarts and kmeans_max_iter must be at least 1",
            ));
        }
        if b.kmeans_tol < 0.0 || b.solver.tol < 0.0 {
            return Err(CliError::usage(STAGE, "tolerances must be non-negative"));
        }
        if b.solver.max_iter == 0 {
            return Err(CliError::usage(STAGE, "solver_max_iter must be at least 1"));
        }
        Ok((input, out_dir))
    }
}

/// Default solver settings, re-exported for standalone `optimize` runs.
pub fn default_solver() -> SolverConfig {
    SolverConfig::default()
}

// ---------------------------------------------------------------------------
