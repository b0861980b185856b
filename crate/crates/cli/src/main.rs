//! Argument parsing and dispatch. Exit codes: 0 success, 1 pipeline
//! failure, 2 usage or config error. Every failure is a single
//! `ERROR <stage>: <message>` line on stderr.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use sharpefolio::commands::{self, Window};
use sharpefolio::config::{self, RunConfig};
use sharpefolio::error::{CliError, Result};
use sharpefolio_core::cluster::KMeansConfig;
use sharpefolio_core::metrics::MetricsConfig;
use sharpefolio_core::optimizer::SolverConfig;

#[derive(Parser)]
#[command(
    name = "sharpefolio",
    version,
    about = "Cluster assets by return correlation, optimize per-cluster Sharpe portfolios, and backtest them against an equal-weighted benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic price CSV from a seeded GBM spec file
    Synth {
        /// Spec file (key = value; see README for the grammar)
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Output price CSV path
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Descriptive statistics of daily log returns
    Stats {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// Window start date, inclusive (ISO-8601)
        #[arg(long, value_name = "DATE")]
        start: Option<String>,
        /// Window end date, exclusive (ISO-8601)
        #[arg(long, value_name = "DATE")]
        end: Option<String>,
    },
    /// K-means cluster assets on their return correlations
    Cluster {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, value_name = "DATE")]
        start: Option<String>,
        #[arg(long, value_name = "DATE")]
        end: Option<String>,
        /// Number of clusters
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// correlation_rows or raw_stats
        #[arg(long, value_name = "KIND")]
        features: Option<String>,
        #[arg(long, value_name = "N")]
        kmeans_max_iter: Option<usize>,
        #[arg(long, value_name = "TOL")]
        kmeans_tol: Option<f64>,
        #[arg(long, value_name = "N")]
        kmeans_restarts: Option<usize>,
    },
    /// Maximize the Sharpe ratio over a set of assets (long-only)
    Optimize {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, value_name = "DATE")]
        start: Option<String>,
        #[arg(long, value_name = "DATE")]
        end: Option<String>,
        /// Comma-separated subset of tickers (default: all)
        #[arg(long, value_name = "LIST")]
        tickers: Option<String>,
        /// Per-day risk-free rate
        #[arg(long, value_name = "RATE")]
        risk_free: Option<f64>,
        #[arg(long, value_name = "N")]
        solver_max_iter: Option<usize>,
        #[arg(long, value_name = "TOL")]
        solver_tol: Option<f64>,
    },
    /// Full pipeline: cluster on the training window, optimize each
    /// cluster, evaluate on the test window, emit tables and charts
    Backtest {
        /// Run-config file; flags below override its keys
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        input: Option<String>,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<String>,
        #[arg(long, value_name = "DATE")]
        train_start: Option<String>,
        #[arg(long, value_name = "DATE")]
        train_end: Option<String>,
        #[arg(long, value_name = "DATE")]
        test_start: Option<String>,
        #[arg(long, value_name = "DATE")]
        test_end: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        /// correlation_rows or raw_stats
        #[arg(long, value_name = "KIND")]
        features: Option<String>,
        #[arg(long, value_name = "RATE")]
        risk_free: Option<String>,
        #[arg(long, value_name = "N")]
        trading_days: Option<String>,
        /// arithmetic or geometric
        #[arg(long, value_name = "KIND")]
        sharpe: Option<String>,
        /// rebalanced or buy_and_hold
        #[arg(long, value_name = "KIND")]
        compounding: Option<String>,
        /// all or per_cluster
        #[arg(long, value_name = "SCOPE")]
        benchmark: Option<String>,
        /// true/false: emit SVG charts
        #[arg(long, value_name = "BOOL")]
        charts: Option<String>,
        #[arg(long, value_name = "N")]
        kmeans_max_iter: Option<String>,
        #[arg(long, value_name = "TOL")]
        kmeans_tol: Option<String>,
        #[arg(long, value_name = "N")]
        kmeans_restarts: Option<String>,
        #[arg(long, value_name = "N")]
        solver_max_iter: Option<String>,
        #[arg(long, value_name = "TOL")]
        solver_tol: Option<String>,
    },
    /// Summarize a tracks CSV into the headline performance table
    Report {
        /// Input tracks CSV (date,label,cumulative)
        #[arg(long, value_name = "FILE")]
        tracks: PathBuf,
        /// Output summary CSV path
        #[arg(long, value_name = "FILE")]
        output: PathBuf,
        #[arg(long, value_name = "N")]
        trading_days: Option<f64>,
        #[arg(long, value_name = "RATE")]
        risk_free: Option<f64>,
        /// arithmetic or geometric
        #[arg(long, value_name = "KIND")]
        sharpe: Option<String>,
    },
}

fn window_from(start: &Option<String>, end: &Option<String>) -> Result<Window> {
    Ok(Window {
        start: match start {
            Some(s) => Some(config::parse_date("config", "start", s)?),
            None => None,
        },
        end: match end {
            Some(s) => Some(config::parse_date("config", "end", s)?),
            None => None,
        },
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { spec, output } => commands::cmd_synth(&spec, &output),
        Command::Stats { input, out_dir, start, end } => {
            commands::cmd_stats(&input, &out_dir, window_from(&start, &end)?)
        }
        Command::Cluster {
            input,
            out_dir,
            start,
            end,
            k,
            seed,
            features,
            kmeans_max_iter,
            kmeans_tol,
            kmeans_restarts,
        } => {
            let defaults = KMeansConfig::default();
            let kmeans = KMeansConfig {
                k: k.unwrap_or(defaults.k),
                seed: seed.unwrap_or(defaults.seed),
                max_iter: kmeans_max_iter.unwrap_or(defaults.max_iter),
                tol: kmeans_tol.unwrap_or(defaults.tol),
                n_init: kmeans_restarts.unwrap_or(defaults.n_init),
            };
            let kind = match &features {
                Some(v) => config::parse_features("config", "features", v)?,
                None => sharpefolio_core::cluster::FeatureKind::CorrelationRows,
            };
            commands::cmd_cluster(&input, &out_dir, window_from(&start, &end)?, kmeans, kind)
        }
        Command::Optimize {
            input,
            out_dir,
            start,
            end,
            tickers,
            risk_free,
            solver_max_iter,
            solver_tol,
        } => {
            let defaults = SolverConfig::default();
            let solver = SolverConfig {
                max_iter: solver_max_iter.unwrap_or(defaults.max_iter),
                tol: solver_tol.unwrap_or(defaults.tol),
            };
            let subset = tickers.map(|list| {
                list.split(',')
                    .map(|t| t.trim().to_string())
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>()
            });
            commands::cmd_optimize(
                &input,
                &out_dir,
                window_from(&start, &end)?,
                subset,
                risk_free.unwrap_or(0.0),
                solver,
            )
        }
        Command::Backtest {
            config: config_path,
            input,
            out_dir,
            train_start,
            train_end,
            test_start,
            test_end,
            k,
            seed,
            features,
            risk_free,
            trading_days,
            sharpe,
            compounding,
            benchmark,
            charts,
            kmeans_max_iter,
            kmeans_tol,
            kmeans_restarts,
            solver_max_iter,
            solver_tol,
        } => {
            let mut run_config = RunConfig::default();
            if let Some(path) = config_path {
                run_config.apply_file(&path)?;
            }
            // flags override the file; both funnel through the same parser
            let overrides = [
                ("input", input),
                ("out_dir", out_dir),
                ("train_start", train_start),
                ("train_end", train_end),
                ("test_start", test_start),
                ("test_end", test_end),
                ("k", k),
                ("seed", seed),
                ("features", features),
                ("risk_free", risk_free),
                ("trading_days_per_year", trading_days),
                ("sharpe", sharpe),
                ("compounding", compounding),
                ("benchmark", benchmark),
                ("charts", charts),
                ("kmeans_max_iter", kmeans_max_iter),
                ("kmeans_tol", kmeans_tol),
                ("kmeans_restarts", kmeans_restarts),
                ("solver_max_iter", solver_max_iter),
                ("solver_tol", solver_tol),
            ];
            for (key, value) in overrides {
                if let Some(value) = value {
                    run_config.set(key, &value)?;
                }
            }
            commands::cmd_backtest(&run_config).map(|_| ())
        }
        Command::Report { tracks, output, trading_days, risk_free, sharpe } => {
            let mut metrics = MetricsConfig::default();
            if let Some(v) = trading_days {
                if !(v > 0.0) {
                    return Err(CliError::usage("config", "trading_days must be positive"));
                }
                metrics.trading_days_per_year = v;
            }
            if let Some(v) = risk_free {
                metrics.risk_free = v;
            }
            if let Some(v) = &sharpe {
                metrics.sharpe = config::parse_sharpe("config", "sharpe", v)?;
            }
            commands::cmd_report(&tracks, &output, metrics)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                err.print().expect("write help");
                std::process::exit(0);
            }
            let first = err
                .to_string()
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim()
                .to_string();
            eprintln!("ERROR usage: {first}");
            std::process::exit(2);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
