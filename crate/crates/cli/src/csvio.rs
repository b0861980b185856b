//! CSV readers and writers for every pipeline artifact.
//!
//! Numeric cells are written with Rust's shortest-round-trip `Display`
//! formatting unless a format is explicitly fixed (weights at 4 decimals,
//! the summary table at 2), so a write/read cycle reproduces the same f64
//! bits. Input problems are usage errors (stage `load`), output problems
//! are runtime errors (stage `write`).

use std::path::Path;

use chrono::NaiveDate;
use sharpefolio_core::market::PriceMatrix;
use sharpefolio_core::matrix::Matrix;
use sharpefolio_core::metrics::PerformanceReport;

use crate::error::{CliError, Result};

// ---------------------------------------------------------------------------
// Prices
// ---------------------------------------------------------------------------

/// Load a price CSV: header `date,<ticker>,...`, ISO-8601 dates, one row per
/// day. Empty cells are missing values; rows may arrive in any order and are
/// sorted by date. Duplicate dates, non-positive or non-finite prices are
/// rejected.
pub fn load_prices_csv(path: &Path) -> Result<PriceMatrix> {
    let usage = |message: String| CliError::usage("load", message);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(rec)) => rec,
        Some(Err(e)) => return Err(usage(format!("{}: {e}", path.display()))),
        None => return Err(usage(format!("{}: file is empty", path.display()))),
    };

    let mut fields: Vec<String> = header.iter().map(|f| f.trim().to_string()).collect();
    if let Some(first) = fields.first_mut() {
        // tolerate a UTF-8 byte-order mark in front of the header
        *first = first.trim_start_matches('\u{feff}').to_string();
    }
    if fields.is_empty() || !fields[0].eq_ignore_ascii_case("date") {
        return Err(usage(format!(
            "{}: first header column must be `date`, found `{}`",
            path.display(),
            fields.first().map(String::as_str).unwrap_or("")
        )));
    }
    let tickers: Vec<String> = fields[1..].to_vec();
    if tickers.is_empty() {
        return Err(usage(format!("{}: no ticker columns", path.display())));
    }

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for (line, record) in records.enumerate() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let row_no = line + 2; // 1-based, after the header
        if record.len() != tickers.len() + 1 {
            return Err(usage(format!(
                "{}: row {row_no} has {} fields, expected {}",
                path.display(),
                record.len(),
                tickers.len() + 1
            )));
        }
        let date: NaiveDate = record[0].trim().parse().map_err(|_| {
            usage(format!(
                "{}: row {row_no}: `{}` is not an ISO-8601 date",
                path.display(),
                &record[0]
            ))
        })?;
        let mut values = Vec::with_capacity(tickers.len());
        for (c, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                values.push(f64::NAN);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| {
                usage(format!(
                    "{}: row {row_no}, column {}: `{cell}` is not a number",
                    path.display(),
                    &tickers[c]
                ))
            })?;
            if !value.is_finite() {
                return Err(usage(format!(
                    "{}: row {row_no}, column {}: non-finite price `{cell}`",
                    path.display(),
                    &tickers[c]
                )));
            }
            if value <= 0.0 {
                return Err(usage(format!(
                    "{}: row {row_no}, column {}: price {value} must be positive",
                    path.display(),
                    &tickers[c]
                )));
            }
            values.push(value);
        }
        rows.push((date, values));
    }
    if rows.is_empty() {
        return Err(usage(format!("{}: no data rows", path.display())));
    }

    rows.sort_by_key(|(date, _)| *date);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(usage(format!(
                "{}: duplicate date {}",
                path.display(),
                pair[0].0
            )));
        }
    }

    let dates: Vec<NaiveDate> = rows.iter().map(|(d, _)| *d).collect();
    let mut values = Vec::with_capacity(dates.len() * tickers.len());
    for (_, row) in rows {
        values.extend(row);
    }
    PriceMatrix::new(dates, tickers, values).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn write_prices_csv(path: &Path, prices: &PriceMatrix) -> Result<()> {
    let mut writer = open_writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(prices.tickers().iter().cloned());
    push_record(&mut writer, path, &header)?;
    for r in 0..prices.n_rows() {
        let mut record = vec![prices.dates()[r].to_string()];
        for c in 0..prices.n_assets() {
            let v = prices.get(r, c);
            record.push(if v.is_nan() { String::new() } else { format!("{v}") });
        }
        push_record(&mut writer, path, &record)?;
    }
    finish_writer(writer, path)
}

// ---------------------------------------------------------------------------
// Stats tables
// ---------------------------------------------------------------------------

pub fn write_stats_csv(path: &Path, tickers: &[String], mean: &[f64], std: &[f64]) -> Result<()> {
    let mut writer = open_writer(path)?;
    push_record(&mut writer, path, &["ticker", "mean", "std"])?;
    for (i, ticker) in tickers.iter().enumerate() {
        push_record(&mut writer, path, &[ticker.clone(), format!("{}", mean[i]), format!("{}", std[i])])?;
    }
    finish_writer(writer, path)
}

/// Square matrix with a ticker header row and a ticker label column.
pub fn write_matrix_csv(path: &Path, tickers: &[String], matrix: &Matrix) -> Result<()> {
    let mut writer = open_writer(path)?;
    let mut header = vec!["ticker".to_string()];
    header.extend(tickers.iter().cloned());
    push_record(&mut writer, path, &header)?;
    for (i, ticker) in tickers.iter().enumerate() {
        let mut record = vec![ticker.clone()];
        for j in 0..tickers.len() {
            record.push(format!("{}", matrix.get(i, j)));
        }
        push_record(&mut writer, path, &record)?;
    }
    finish_writer(writer, path)
}

// ---------------------------------------------------------------------------
// Clusters and weights
// ---------------------------------------------------------------------------

pub fn write_membership_csv(path: &Path, tickers: &[String], assignments: &[usize]) -> Result<()> {
    let mut writer = open_writer(path)?;
    push_record(&mut writer, path, &["ticker", "cluster"])?;
    for (ticker, cluster) in tickers.iter().zip(assignments) {
        push_record(&mut writer, path, &[ticker.clone(), cluster.to_string()])?;
    }
    finish_writer(writer, path)
}

pub fn write_weights_csv(path: &Path, tickers: &[String], weights: &[f64]) -> Result<()> {
    let mut writer = open_writer(path)?;
    push_record(&mut writer, path, &["ticker", "weight"])?;
    for (ticker, weight) in tickers.iter().zip(weights) {
        push_record(&mut writer, path, &[ticker.clone(), format!("{weight:.4}")])?;
    }
    finish_writer(writer, path)
}

// ---------------------------------------------------------------------------
// Tracks and summaries
// ---------------------------------------------------------------------------

/// One cumulative series per track, long format: `date,label,cumulative`.
pub struct TrackRows<'a> {
    pub label: &'a str,
    pub dates: &'a [NaiveDate],
    pub cumulative: &'a [f64],
}

pub fn write_tracks_csv(path: &Path, tracks: &[TrackRows<'_>]) -> Result<()> {
    let mut writer = open_writer(path)?;
    push_record(&mut writer, path, &["date", "label", "cumulative"])?;
    for track in tracks {
        for (date, value) in track.dates.iter().zip(track.cumulative) {
            push_record(
                &mut writer,
                path,
                &[date.to_string(), track.label.to_string(), format!("{value}")],
            )?;
        }
    }
    finish_writer(writer, path)
}

/// A track read back from CSV, in file order.
pub struct LoadedTrack {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub cumulative: Vec<f64>,
}

pub fn read_tracks_csv(path: &Path) -> Result<Vec<LoadedTrack>> {
    let usage = |message: String| CliError::usage("load", message);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;

    let mut tracks: Vec<LoadedTrack> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if line == 0 {
            let header: Vec<&str> = record.iter().map(str::trim).collect();
            if header != ["date", "label", "cumulative"] {
                return Err(usage(format!(
                    "{}: expected header `date,label,cumulative`",
                    path.display()
                )));
            }
            continue;
        }
        if record.len() != 3 {
            return Err(usage(format!("{}: row {} malformed", path.display(), line + 1)));
        }
        let date: NaiveDate = record[0].trim().parse().map_err(|_| {
            usage(format!("{}: row {}: bad date `{}`", path.display(), line + 1, &record[0]))
        })?;
        let label = record[1].trim().to_string();
        let value: f64 = record[2].trim().parse().map_err(|_| {
            usage(format!("{}: row {}: bad number `{}`", path.display(), line + 1, &record[2]))
        })?;
        match tracks.iter_mut().find(|t| t.label == label) {
            Some(track) => {
                track.dates.push(date);
                track.cumulative.push(value);
            }
            None => tracks.push(LoadedTrack {
                label,
                dates: vec![date],
                cumulative: vec![value],
            }),
        }
    }
    if tracks.is_empty() {
        return Err(usage(format!("{}: no track rows", path.display())));
    }
    Ok(tracks)
}

/// The headline table: percentages and Sharpe at 2 decimals.
pub fn write_summary_csv(path: &Path, reports: &[PerformanceReport]) -> Result<()> {
    let mut writer = open_writer(path)?;
    push_record(
        &mut writer,
        path,
        &[
            "portfolio",
            "total_return_pct",
            "annualized_return_pct",
            "volatility_pct",
            "sharpe_ratio",
        ],
    )?;
    for report in reports {
        push_record(
            &mut writer,
            path,
            &[
                report.label.clone(),
                format!("{:.2}", report.total_return * 100.0),
                format!("{:.2}", report.annualized_return * 100.0),
                format!("{:.2}", report.annualized_volatility * 100.0),
                format!("{:.2}", report.sharpe),
            ],
        )?;
    }
    finish_writer(writer, path)
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| CliError::runtime("write", format!("cannot write {}: {e}", path.display())))
}

fn push_record<S: AsRef<[u8]>>(
    writer: &mut csv::Writer<std::fs::File>,
    path: &Path,
    record: &[S],
) -> Result<()> {
    writer
        .write_record(record.iter())
        .map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

fn finish_writer(mut writer: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    writer
        .flush()
        .map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn prices_round_trip_is_bit_exact() {
        let dir = tmp();
        let path = dir.path().join("prices.csv");
        let prices = PriceMatrix::new(
            vec![ymd(2020, 1, 1), ymd(2020, 1, 2), ymd(2020, 1, 3)],
            vec!["AA".into(), "BB".into()],
            vec![100.123456789012345, 50.5, f64::NAN, 51.25, 101.0, 52.0],
        )
        .unwrap();
        write_prices_csv(&path, &prices).unwrap();
        let loaded = load_prices_csv(&path).unwrap();
        assert_eq!(loaded.dates(), prices.dates());
        assert_eq!(loaded.tickers(), prices.tickers());
        for r in 0..3 {
            for c in 0..2 {
                let (a, b) = (prices.get(r, c), loaded.get(r, c));
                assert!(
                    (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits(),
                    "cell ({r},{c}): {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn unsorted_rows_are_sorted_by_date() {
        let dir = tmp();
        let path = dir.path().join("prices.csv");
        fs::write(&path, "date,X\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n").unwrap();
        let loaded = load_prices_csv(&path).unwrap();
        assert_eq!(
            loaded.dates(),
            &[ymd(2020, 1, 1), ymd(2020, 1, 2), ymd(2020, 1, 3)]
        );
        assert_eq!(
            (loaded.get(0, 0), loaded.get(1, 0), loaded.get(2, 0)),
            (1.0, 2.0, 3.0)
        );
    }

    #[test]
    fn bad_inputs_are_usage_errors() {
        let dir = tmp();
        let write = |name: &str, body: &str| {
            let p = dir.path().join(name);
            fs::write(&p, body).unwrap();
            p
        };
        let cases = [
            ("empty.csv", "", "file is empty"),
            ("dup.csv", "date,X\n2020-01-01,1\n2020-01-01,2\n", "duplicate date"),
            ("neg.csv", "date,X\n2020-01-01,-5\n", "must be positive"),
            ("zero.csv", "date,X\n2020-01-01,0\n", "must be positive"),
            ("inf.csv", "date,X\n2020-01-01,inf\n", "non-finite"),
            ("nan.csv", "date,X\n2020-01-01,NaN\n", "non-finite"),
            ("word.csv", "date,X\n2020-01-01,abc\n", "not a number"),
            ("head.csv", "time,X\n2020-01-01,1\n", "must be `date`"),
            ("nodata.csv", "date,X\n", "no data rows"),
            ("notick.csv", "date\n2020-01-01\n", "no ticker columns"),
            ("baddate.csv", "date,X\n01/02/2020,1\n", "ISO-8601"),
        ];
        for (name, body, needle) in cases {
            let err = load_prices_csv(&write(name, body)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{name} should be a usage error");
            assert!(
                err.message.contains(needle),
                "{name}: `{}` should mention `{needle}`",
                err.message
            );
        }
        let err = load_prices_csv(&dir.path().join("missing.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message.contains("cannot read"));
    }

    #[test]
    fn tracks_round_trip_preserves_order_and_values() {
        let dir = tmp();
        let path = dir.path().join("tracks.csv");
        let dates = vec![ymd(2020, 1, 2), ymd(2020, 1, 3)];
        let a = [0.01, 0.0203];
        let b = [-0.005, 0.001];
        write_tracks_csv(
            &path,
            &[
                TrackRows { label: "cluster_0", dates: &dates, cumulative: &a },
                TrackRows { label: "benchmark", dates: &dates, cumulative: &b },
            ],
        )
        .unwrap();
        let loaded = read_tracks_csv(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].label, "cluster_0");
        assert_eq!(loaded[1].label, "benchmark");
        assert_eq!(loaded[0].cumulative, a);
        assert_eq!(loaded[1].cumulative, b);
        assert_eq!(loaded[0].dates, dates);
    }

    #[test]
    fn summary_has_fixed_columns_and_two_decimals() {
        let dir = tmp();
        let path = dir.path().join("summary.csv");
        let report = PerformanceReport {
            label: "cluster_1".into(),
            total_return: 1.4098,
            annualized_return: 0.24593461009271356,
            annualized_volatility: 0.29312,
            sharpe: 0.8449,
            n_days: 1008,
            years: 4.0,
        };
        write_summary_csv(&path, &[report]).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(
            body,
            "portfolio,total_return_pct,annualized_return_pct,volatility_pct,sharpe_ratio\n\
             cluster_1,140.98,24.59,29.31,0.84\n"
        );
    }

    #[test]
    fn weights_are_written_at_four_decimals() {
        let dir = tmp();
        let path = dir.path().join("weights.csv");
        write_weights_csv(&path, &["A".into(), "B".into()], &[0.42105263, 0.57894737]).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(body, "ticker,weight\nA,0.4211\nB,0.5789\n");
    }

    #[test]
    fn matrix_csv_has_ticker_row_and_column() {
        let dir = tmp();
        let path = dir.path().join("corr.csv");
        let m = Matrix::from_vec(2, 2, vec![1.0, -0.25, -0.25, 1.0]).unwrap();
        write_matrix_csv(&path, &["A".into(), "B".into()], &m).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(body, "ticker,A,B\nA,1,-0.25\nB,-0.25,1\n");
    }
}
