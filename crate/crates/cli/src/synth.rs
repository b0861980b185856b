//! Seeded synthetic price generation: correlated geometric Brownian motion
//! on a weekday calendar, P_{t+1} = P_t * exp(r_t) with r_t drawn from the
//! configured per-day mean and covariance. Deterministic per seed, so a
//! fixture file can be regenerated from its spec at any time.

use chrono::{Datelike, NaiveDate, Weekday};
use sharpefolio_core::market::PriceMatrix;
use sharpefolio_core::matrix::Matrix;
use sharpefolio_core::rng;

use crate::config::{parse_date, parse_f64, parse_key_values, parse_u64, parse_usize};
use crate::error::{CliError, Result};

const STAGE: &str = "synth";

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

/// Parsed `synth` spec file. Drift and covariance are per-day quantities in
/// log-return space.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub tickers: Vec<String>,
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    pub s0: Vec<f64>,
    pub drift: Vec<f64>,
    pub covariance: Matrix,
}

impl SyntheticSpec {
    /// Keys: `tickers` (comma list), `start` (ISO date), `days` (>= 2),
    /// `seed`, `s0`, `drift`, and either `cov` (rows split by `;`) or
    /// `vol` plus `corr` (scalar off-diagonal or full matrix).
    pub fn from_str(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text, STAGE)?;
        let known = [
            "tickers", "start", "days", "seed", "s0", "drift", "vol", "corr", "cov",
        ];
        for (key, _) in &pairs {
            if !known.contains(&key.as_str()) {
                return Err(CliError::usage(STAGE, format!("unknown key `{key}`")));
            }
        }
        // last assignment wins, matching the run-config convention
        let take = |key: &str| -> Option<&str> {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let require = |key: &'static str| -> Result<&str> {
            take(key).ok_or_else(|| CliError::usage(STAGE, format!("missing required key `{key}`")))
        };

        let tickers: Vec<String> = require("tickers")?
            .split(',')
            .map(|t| t.trim().to_string())
            .collect();
        if tickers.iter().any(String::is_empty) {
            return Err(CliError::usage(STAGE, "key tickers: empty ticker name"));
        }
        for i in 0..tickers.len() {
            if tickers[i + 1..].contains(&tickers[i]) {
                return Err(CliError::usage(
                    STAGE,
                    format!("key tickers: duplicate ticker `{}`", tickers[i]),
                ));
            }
        }
        let n = tickers.len();

        let start = parse_date(STAGE, "start", require("start")?)?;
        let days = parse_usize(STAGE, "days", require("days")?)?;
        if days < 2 {
            return Err(CliError::usage(STAGE, "key days: need at least 2 price rows"));
        }
        let seed = match take("seed") {
            Some(v) => parse_u64(STAGE, "seed", v)?,
            None => 0,
        };
        let s0 = scalar_or_list("s0", take("s0").unwrap_or("100"), n)?;
        if s0.iter().any(|&p| p <= 0.0) {
            return Err(CliError::usage(STAGE, "key s0: starting prices must be positive"));
        }
        let drift = scalar_or_list("drift", take("drift").unwrap_or("0"), n)?;

        let covariance = match take("cov") {
            Some(value) => {
                if take("vol").is_some() || take("corr").is_some() {
                    return Err(CliError::usage(
                        STAGE,
                        "give either `cov` or `vol`/`corr`, not both",
                    ));
                }
                square_matrix("cov", value, n)?
            }
            None => {
                let vol = scalar_or_list("vol", take("vol").unwrap_or("0"), n)?;
                if vol.iter().any(|&v| v < 0.0) {
                    return Err(CliError::usage(STAGE, "key vol: volatilities must be >= 0"));
                }
                let corr = match take("corr") {
                    None => Matrix::identity(n),
                    Some(value) if !value.contains(',') && !value.contains(';') => {
                        let c = parse_f64(STAGE, "corr", value)?;
                        let mut m = Matrix::identity(n);
                        for i in 0..n {
                            for j in 0..n {
                                if i != j {
                                    m.set(i, j, c);
                                }
                            }
                        }
                        m
                    }
                    Some(value) => square_matrix("corr", value, n)?,
                };
                let mut cov = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        cov.set(i, j, vol[i] * corr.get(i, j) * vol[j]);
                    }
                }
                cov
            }
        };
        if !covariance.is_symmetric(1e-12) {
            return Err(CliError::usage(STAGE, "covariance must be symmetric"));
        }

        Ok(SyntheticSpec {
            tickers,
            start,
            days,
            seed,
            s0,
            drift,
            covariance,
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(STAGE, format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }
}

fn scalar_or_list(key: &str, value: &str, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    let parsed: Vec<f64> = parts
        .iter()
        .map(|p| parse_f64(STAGE, key, p))
        .collect::<Result<_>>()?;
    match parsed.len() {
        1 => Ok(vec![parsed[0]; n]),
        len if len == n => Ok(parsed),
        len => Err(CliError::usage(
            STAGE,
            format!("key {key}: expected 1 or {n} values, found {len}"),
        )),
    }
}

fn square_matrix(key: &str, value: &str, n: usize) -> Result<Matrix> {
    let rows: Vec<&str> = value.split(';').map(str::trim).collect();
    if rows.len() != n {
        return Err(CliError::usage(
            STAGE,
            format!("key {key}: expected {n} rows separated by `;`, found {}", rows.len()),
        ));
    }
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != n {
            return Err(CliError::usage(
                STAGE,
                format!("key {key}: expected {n} values per row, found {}", cells.len()),
            ));
        }
        for cell in cells {
            data.push(parse_f64(STAGE, key, cell)?);
        }
    }
    Matrix::from_vec(n, n, data).map_err(|e| CliError::usage(STAGE, e))
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Trading calendar: `days` consecutive weekdays starting at the first
/// weekday on or after `start`.
pub fn weekday_calendar(start: NaiveDate, days: usize) -> Vec<NaiveDate> {
    let mut dates = Vec::with_capacity(days);
    let mut day = start;
    while dates.len() < days {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day = day.succ_opt().expect("date range");
    }
    dates
}

pub fn generate(spec: &SyntheticSpec) -> Result<PriceMatrix> {
    let n = spec.tickers.len();
    // a non-PSD covariance cannot describe any return distribution
    let chol = spec
        .covariance
        .cholesky_psd(1e-10)
        .map_err(|e| CliError::usage(STAGE, e))?;

    let dates = weekday_calendar(spec.start, spec.days);
    let mut generator = rng::seeded(spec.seed, 0);
    let mut level = spec.s0.clone();
    let mut values = Vec::with_capacity(spec.days * n);
    values.extend_from_slice(&level);
    let mut z = vec![0.0; n];
    for _ in 1..spec.days {
        for slot in z.iter_mut() {
            *slot = rng::standard_normal(&mut generator);
        }
        let shock = chol.matvec(&z);
        for i in 0..n {
            level[i] *= (spec.drift[i] + shock[i]).exp();
            values.push(level[i]);
        }
    }
    PriceMatrix::new(dates, spec.tickers.clone(), values)
        .map_err(|e| CliError::runtime(STAGE, e))
}

// ---------------------------------------------------------------------------
