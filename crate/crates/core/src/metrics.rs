//! Performance metrics over a daily simple-return series.
//!
//! Conventions, fixed across the pipeline:
//! total return compounds geometrically; annualized return is the
//! geometric rate ((1 + total)^(1/years) - 1) with years = n / 252;
//! volatility is the sample std of daily returns scaled by sqrt(252).
//! The Sharpe ratio annualizes arithmetically by default,
//! (mean_daily - rf) * D / (std_daily * sqrt(D)), which is the usual
//! reporting convention; a geometric variant (annualized return over
//! annualized volatility) is available through the config.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

pub const DEFAULT_TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SharpeConvention {
    #[default]
    Arithmetic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub trading_days_per_year: f64,
    /// Per-day risk-free rate.
    pub risk_free: f64,
    pub sharpe: SharpeConvention,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            trading_days_per_year: DEFAULT_TRADING_DAYS,
            risk_free: 0.0,
            sharpe: SharpeConvention::Arithmetic,
        }
    }
}

/// The four headline numbers for one return series, plus the horizon they
/// were measured over.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub label: String,
    pub total_return: f64,
    pub annualized_return: f64,
    pub annualized_volatility: f64,
    pub sharpe: f64,
    pub n_days: usize,
    pub years: f64,
}

/// Compounded total return of a daily series.
pub fn total_return(daily: &[f64]) -> Result<f64> {
    if daily.is_empty() {
        return Err(Error::EmptyInput("daily returns".into()));
    }
    let mut acc = 1.0;
    for &r in daily {
        if !r.is_finite() || r <= -1.0 {
            return Err(Error::Numeric(format!(
                "daily return {r} is outside (-1, inf)"
            )));
        }
        acc *= 1.0 + r;
    }
    Ok(acc - 1.0)
}

/// Geometric annualization: (1 + total)^(1/years) - 1 with
/// years = n_days / trading_days_per_year.
pub fn annualized_return(total_return: f64, n_days: usize, trading_days_per_year: f64) -> Result<f64> {
    if n_days == 0 {
        return Err(Error::InsufficientData {
            context: "annualized return".into(),
            required: 1,
            available: 0,
        });
    }
    if !(trading_days_per_year > 0.0) {
        return Err(Error::InvalidInput {
            field: "trading_days_per_year".into(),
            reason: "must be positive".into(),
        });
    }
    if total_return <= -1.0 {
        return Err(Error::Numeric(format!(
            "total return {total_return} is at or below -100%"
        )));
    }
    let years = n_days as f64 / trading_days_per_year;
    Ok(math::powf(1.0 + total_return, 1.0 / years) - 1.0)
}

/// Sample std of daily returns scaled by sqrt(trading days per year).
pub fn annualized_volatility(daily: &[f64], trading_days_per_year: f64) -> Result<f64> {
    if daily.len() < 2 {
        return Err(Error::InsufficientData {
            context: "annualized volatility".into(),
            required: 2,
            available: daily.len(),
        });
    }
    if !(trading_days_per_year > 0.0) {
        return Err(Error::InvalidInput {
            field: "trading_days_per_year".into(),
            reason: "must be positive".into(),
        });
    }
    Ok(math::sample_std(daily) * math::sqrt(trading_days_per_year))
}

/// Annualized Sharpe ratio of a daily series under the configured
/// convention. Zero daily variance is an error.
pub fn annualized_sharpe(daily: &[f64], config: &MetricsConfig) -> Result<f64> {
    if daily.len() < 2 {
        return Err(Error::InsufficientData {
            context: "sharpe ratio".into(),
            required: 2,
            available: daily.len(),
        });
    }
    // same zero-variance floor as descriptive stats: below this is
    // indistinguishable from a constant series plus rounding noise
    let variance = math::sample_variance(daily);
    if variance <= 1e-24 {
        return Err(Error::Numeric(
            "daily volatility is zero; sharpe is undefined".into(),
        ));
    }
    let sd = math::sqrt(variance);
    let d = config.trading_days_per_year;
    match config.sharpe {
        SharpeConvention::Arithmetic => {
            let excess = math::mean(daily) - config.risk_free;
            Ok(excess * d / (sd * math::sqrt(d)))
        }
        SharpeConvention::Geometric => {
            let total = total_return(daily)?;
            let ann_ret = annualized_return(total, daily.len(), d)?;
            let ann_rf = math::powf(1.0 + config.risk_free, d) - 1.0;
            Ok((ann_ret - ann_rf) / (sd * math::sqrt(d)))
        }
    }
}

/// All metrics for one labeled series.
pub fn performance_report(label: &str, daily: &[f64], config: &MetricsConfig) -> Result<PerformanceReport> {
    let total = total_return(daily)?;
    let annualized = annualized_return(total, daily.len(), config.trading_days_per_year)?;
    let volatility = annualized_volatility(daily, config.trading_days_per_year)?;
    let sharpe = annualized_sharpe(daily, config)?;
    Ok(PerformanceReport {
        label: label.into(),
        total_return: total,
        annualized_return: annualized,
        annualized_volatility: volatility,
        sharpe,
        n_days: daily.len(),
        years: daily.len() as f64 / config.trading_days_per_year,
    })
}

/// Convenience: reports for several labeled series in order.
pub fn performance_reports(
    series: &[(String, Vec<f64>)],
    config: &MetricsConfig,
) -> Result<Vec<PerformanceReport>> {
    series
        .iter()
        .map(|(label, daily)| performance_report(label, daily, config))
        .collect()
}
