//! Price and return matrices plus the estimation transforms built on them.
//!
//! Prices arrive as a date-by-ticker table where a missing observation is
//! stored as NaN. `forward_fill` produces the cleaned, fully observed
//! matrix everything downstream works from: log returns feed estimation
//! (mean, std, covariance, correlation), simple returns feed compounding.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Sample variance at or below this is treated as zero variance.
/// Well above accumulated rounding noise (~1e-30 for daily-return scales),
/// well below any real return variance.
const ZERO_VARIANCE_EPS: f64 = 1e-24;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Date-by-ticker price table. NaN marks a missing observation; every
/// present value is finite and strictly positive, dates strictly increase.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Vec<f64>, // row-major, dates x tickers
}

/// Which return definition a `ReturnMatrix` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    /// ln(P_t / P_{t-1}), used for estimation.
    Log,
    /// P_t / P_{t-1} - 1, used for compounding.
    Simple,
}

/// Date-by-ticker return table; always fully observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Vec<f64>,
    kind: ReturnKind,
}

/// Per-asset sample moments plus the sample covariance and correlation of
/// a return window.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveStats {
    pub tickers: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub covariance: Matrix,
    pub correlation: Matrix,
}

// ---------------------------------------------------------------------------
// PriceMatrix
// ---------------------------------------------------------------------------

impl PriceMatrix {
    /// Validates shape, strictly increasing dates, unique non-empty tickers,
    /// and that every present cell is finite and > 0 (NaN = missing).
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::EmptyInput("ticker list".into()));
        }
        if dates.is_empty() {
            return Err(Error::EmptyInput("date rows".into()));
        }
        if values.len() != dates.len() * tickers.len() {
            return Err(Error::InvalidInput {
                field: "values".into(),
                reason: format!(
                    "expected {} cells for {} dates x {} tickers, got {}",
                    dates.len() * tickers.len(),
                    dates.len(),
                    tickers.len(),
                    values.len()
                ),
            });
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput {
                    field: "dates".into(),
                    reason: format!("dates must strictly increase ({} then {})", w[0], w[1]),
                });
            }
        }
        for (i, t) in tickers.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::InvalidInput {
                    field: "tickers".into(),
                    reason: "empty ticker name".into(),
                });
            }
            if tickers[..i].contains(t) {
                return Err(Error::InvalidInput {
                    field: "tickers".into(),
                    reason: format!("duplicate ticker {t}"),
                });
            }
        }
        for (idx, &v) in values.iter().enumerate() {
            if v.is_nan() {
                continue; // missing
            }
            if !v.is_finite() || v <= 0.0 {
                let r = idx / tickers.len();
                let c = idx % tickers.len();
                return Err(Error::Data(format!(
                    "price for {} on {} must be finite and > 0, got {v}",
                    tickers[c], dates[r]
                )));
            }
        }
        Ok(PriceMatrix {
            dates,
            tickers,
            values,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.tickers.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.tickers.len();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_nan())
    }
}

// ---------------------------------------------------------------------------
// ReturnMatrix
// ---------------------------------------------------------------------------

impl ReturnMatrix {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn kind(&self) -> ReturnKind {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.tickers.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.tickers.len();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dates.len()).map(|r| self.get(r, col)).collect()
    }

    /// Column index of a ticker, if present.
    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Carries the last observed price forward per ticker, then drops the
/// leading rows where any ticker is still unobserved. A ticker with no
/// observations at all is an error. Idempotent on complete matrices.
pub fn forward_fill(prices: &PriceMatrix) -> Result<PriceMatrix> {
    let n_rows = prices.n_rows();
    let n_assets = prices.n_assets();
    let mut filled = prices.values.clone();
    let mut first_seen = alloc::vec![n_rows; n_assets];
    for c in 0..n_assets {
        let mut last = f64::NAN;
        for r in 0..n_rows {
            let idx = r * n_assets + c;
            if filled[idx].is_nan() {
                filled[idx] = last;
            } else {
                if first_seen[c] == n_rows {
                    first_seen[c] = r;
                }
                last = filled[idx];
            }
        }
        if first_seen[c] == n_rows {
            return Err(Error::Data(format!(
                "ticker {} has no observed prices",
                prices.tickers[c]
            )));
        }
    }
    let cut = first_seen.iter().copied().max().unwrap_or(0);
    if cut >= n_rows {
        return Err(Error::EmptyInput(
            "no rows remain after dropping the leading gap".into(),
        ));
    }
    PriceMatrix::new(
        prices.dates[cut..].to_vec(),
        prices.tickers.clone(),
        filled[cut * n_assets..].to_vec(),
    )
}

fn returns_of(prices: &PriceMatrix, kind: ReturnKind) -> Result<ReturnMatrix> {
    if !prices.is_complete() {
        return Err(Error::InvalidInput {
            field: "prices".into(),
            reason: "matrix has missing cells; forward_fill first".into(),
        });
    }
    if prices.n_rows() < 2 {
        return Err(Error::InsufficientData {
            context: "returns".into(),
            required: 2,
            available: prices.n_rows(),
        });
    }
    let n_assets = prices.n_assets();
    let n_out = prices.n_rows() - 1;
    let mut values = Vec::with_capacity(n_out * n_assets);
    for r in 0..n_out {
        for c in 0..n_assets {
            let ratio = prices.get(r + 1, c) / prices.get(r, c);
            values.push(match kind {
                ReturnKind::Log => math::ln(ratio),
                ReturnKind::Simple => ratio - 1.0,
            });
        }
    }
    Ok(ReturnMatrix {
        dates: prices.dates[1..].to_vec(),
        tickers: prices.tickers.clone(),
        values,
        kind,
    })
}

/// ln(P_t / P_{t-1}); each return row carries the later of its two dates.
pub fn log_returns(prices: &PriceMatrix) -> Result<ReturnMatrix> {
    returns_of(prices, ReturnKind::Log)
}

/// P_t / P_{t-1} - 1; each return row carries the later of its two dates.
pub fn simple_returns(prices: &PriceMatrix) -> Result<ReturnMatrix> {
    returns_of(prices, ReturnKind::Simple)
}

/// Rows with start <= date < end. Reversed or empty windows are errors.
pub fn slice_period(returns: &ReturnMatrix, start: NaiveDate, end: NaiveDate) -> Result<ReturnMatrix> {
    if start >= end {
        return Err(Error::InvalidInput {
            field: "window".into(),
            reason: format!("start {start} must be before end {end}"),
        });
    }
    let lo = returns.dates.partition_point(|d| *d < start);
    let hi = returns.dates.partition_point(|d| *d < end);
    if lo == hi {
        return Err(Error::EmptyInput(format!(
            "no return rows in [{start}, {end})"
        )));
    }
    let n = returns.n_assets();
    Ok(ReturnMatrix {
        dates: returns.dates[lo..hi].to_vec(),
        tickers: returns.tickers.clone(),
        values: returns.values[lo * n..hi * n].to_vec(),
        kind: returns.kind,
    })
}

/// Sample mean and std per ticker plus sample covariance and correlation
/// (N-1 denominators). A zero-variance ticker is rejected by name: its
/// correlation row would be undefined.
pub fn descriptive_stats(returns: &ReturnMatrix) -> Result<DescriptiveStats> {
    let n_rows = returns.n_rows();
    let n_assets = returns.n_assets();
    if n_rows < 2 {
        return Err(Error::InsufficientData {
            context: "descriptive stats".into(),
            required: 2,
            available: n_rows,
        });
    }
    let columns: Vec<Vec<f64>> = (0..n_assets).map(|c| returns.column(c)).collect();
    let mean: Vec<f64> = columns.iter().map(|col| math::mean(col)).collect();
    let mut var = Vec::with_capacity(n_assets);
    for (c, col) in columns.iter().enumerate() {
        let v = math::sample_variance(col);
        if v <= ZERO_VARIANCE_EPS {
            return Err(Error::Data(format!(
                "ticker {} has zero return variance in the window",
                returns.tickers[c]
            )));
        }
        var.push(v);
    }
    let std: Vec<f64> = var.iter().map(|&v| math::sqrt(v)).collect();
    let mut covariance = Matrix::zeros(n_assets, n_assets);
    for i in 0..n_assets {
        for j in i..n_assets {
            let mut acc = 0.0;
            for r in 0..n_rows {
                acc += (columns[i][r] - mean[i]) * (columns[j][r] - mean[j]);
            }
            let cov = acc / (n_rows - 1) as f64;
            covariance.set(i, j, cov);
            covariance.set(j, i, cov);
        }
    }
    let mut correlation = Matrix::zeros(n_assets, n_assets);
    for i in 0..n_assets {
        correlation.set(i, i, 1.0); // set exactly, not computed
        for j in (i + 1)..n_assets {
            let rho = (covariance.get(i, j) / (std[i] * std[j])).clamp(-1.0, 1.0);
            correlation.set(i, j, rho);
            correlation.set(j, i, rho);
        }
    }
    Ok(DescriptiveStats {
        tickers: returns.tickers.clone(),
        mean,
        std,
        covariance,
        correlation,
    })
}
