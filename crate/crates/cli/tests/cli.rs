//! End-to-end tests of the `sharpefolio` binary: every pipeline stage runs
//! standalone on the previous stage's artifacts, outputs match direct
//! library calls bit-exactly, and exit codes follow the 0/1/2 contract.

use std::path::{Path, PathBuf};
use std::process::Output;

use sharpefolio_core::market::{descriptive_stats, forward_fill, log_returns};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sharpefolio")
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_ok(output: &Output, context: &str) {
    assert!(
        output.status.success(),
        "{context} failed with {:?}: {}",
        output.status.code(),
        stderr_of(output)
    );
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// Four tickers in two planted groups, ~320 weekdays from 2015-01-01.
fn write_small_spec(dir: &Path) -> PathBuf {
    let path = dir.join("spec.txt");
    std::fs::write(
        &path,
        "tickers = AA,BB,CC,DD\nstart = 2015-01-01\ndays = 320\nseed = 5\n\
         s0 = 50,60,70,80\ndrift = 0.002,0.002,0,0\nvol = 0.01,0.01,0.02,0.02\n\
         corr = 1,0.75,0,0; 0.75,1,0,0; 0,0,1,0.75; 0,0,0.75,1\n",
    )
    .unwrap();
    path
}

fn synth_prices(dir: &Path) -> PathBuf {
    let spec = write_small_spec(dir);
    let prices = dir.join("prices.csv");
    let out = run(&["synth", "--spec", spec.to_str().unwrap(), "--output", prices.to_str().unwrap()]);
    assert_ok(&out, "synth");
    prices
}

// ---------------------------------------------------------------------------
// Pipeline composition
// ---------------------------------------------------------------------------

#[test]
fn stages_compose_on_each_others_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let prices = synth_prices(dir.path());
    let out_dir = dir.path().join("out");
    let od = out_dir.to_str().unwrap();
    let input = prices.to_str().unwrap();

    assert_ok(&run(&["stats", "--input", input, "--out-dir", od]), "stats");
    for file in ["stats.csv", "correlation.csv", "covariance.csv"] {
        assert!(out_dir.join(file).is_file(), "{file} missing");
    }

    assert_ok(
        &run(&["cluster", "--input", input, "--out-dir", od, "--k", "2", "--seed", "0"]),
        "cluster",
    );
    let membership = std::fs::read_to_string(out_dir.join("clusters.csv")).unwrap();
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("cluster_model.json")).unwrap())
            .unwrap();
    assert_eq!(model["k"], 2);
    assert!(model["inertia"].as_f64().unwrap() >= 0.0);

    // optimize exactly the cluster that holds AA, passing its members through
    let aa_cluster = membership
        .lines()
        .find(|l| l.starts_with("AA,"))
        .and_then(|l| l.split(',').nth(1))
        .unwrap()
        .to_string();
    let members: Vec<&str> = membership
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(&format!(",{aa_cluster}")))
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert!(!members.is_empty());
    assert_ok(
        &run(&["optimize", "--input", input, "--out-dir", od, "--tickers", &members.join(",")]),
        "optimize",
    );
    let weights = std::fs::read_to_string(out_dir.join("weights.csv")).unwrap();
    let total: f64 = weights
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() <= 1e-3, "4-decimal weights sum to {total}");
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("optimize.json")).unwrap())
            .unwrap();
    assert!(diag["sharpe"].as_f64().unwrap().is_finite());
    assert!(diag["converged"].is_boolean());

    // composite backtest, then summarize its own tracks with `report`
    let bt_dir = dir.path().join("bt");
    assert_ok(
        &run(&[
            "backtest", "--input", input, "--out-dir", bt_dir.to_str().unwrap(),
            "--k", "2", "--seed", "0",
            "--train-start", "2015-01-01", "--train-end", "2015-09-01",
            "--test-start", "2015-09-01", "--test-end", "2016-12-31",
        ]),
        "backtest",
    );
    let summary_path = bt_dir.join("summary.csv");
    let resummary_path = dir.path().join("resummary.csv");
    assert_ok(
        &run(&[
            "report", "--tracks", bt_dir.join("tracks.csv").to_str().unwrap(),
            "--output", resummary_path.to_str().unwrap(),
        ]),
        "report",
    );

    // `report` rebuilds daily returns from the cumulative lines, so its
    // 2-decimal table must agree with the backtest's own summary
    let summary = std::fs::read_to_string(&summary_path).unwrap();
    let resummary = std::fs::read_to_string(&resummary_path).unwrap();
    let parse = |body: &str| -> Vec<Vec<String>> {
        body.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
    };
    let (a, b) = (parse(&summary), parse(&resummary));
    assert_eq!(a.len(), b.len());
    assert_eq!(a[0], b[0], "headers must match");
    for (row_a, row_b) in a.iter().zip(&b).skip(1) {
        assert_eq!(row_a[0], row_b[0], "portfolio order must match");
        for (cell_a, cell_b) in row_a.iter().zip(row_b).skip(1) {
            let (x, y) = (cell_a.parse::<f64>().unwrap(), cell_b.parse::<f64>().unwrap());
            assert!((x - y).abs() <= 0.011, "{} vs {}", cell_a, cell_b);
        }
    }
}

// ---------------------------------------------------------------------------
// CLI/library parity
// ---------------------------------------------------------------------------

#[test]
fn stats_output_matches_the_library_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let prices_path = synth_prices(dir.path());
    let out_dir = dir.path().join("out");
    assert_ok(
        &run(&["stats", "--input", prices_path.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]),
        "stats",
    );

    let prices = sharpefolio::csvio::load_prices_csv(&prices_path).unwrap();
    let stats = descriptive_stats(&log_returns(&forward_fill(&prices).unwrap()).unwrap()).unwrap();

    let body = std::fs::read_to_string(out_dir.join("stats.csv")).unwrap();
    for (i, line) in body.lines().skip(1).enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], stats.tickers[i]);
        assert_eq!(
            cells[1].parse::<f64>().unwrap().to_bits(),
            stats.mean[i].to_bits(),
            "mean[{i}] must round-trip bit-exactly"
        );
        assert_eq!(cells[2].parse::<f64>().unwrap().to_bits(), stats.std[i].to_bits());
    }
    let corr = std::fs::read_to_string(out_dir.join("correlation.csv")).unwrap();
    for (i, line) in corr.lines().skip(1).enumerate() {
        for (j, cell) in line.split(',').skip(1).enumerate() {
            assert_eq!(
                cell.parse::<f64>().unwrap().to_bits(),
                stats.correlation.get(i, j).to_bits(),
                "correlation[{i}][{j}]"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Determinism and toggles
// ---------------------------------------------------------------------------

#[test]
fn synth_is_deterministic_and_skips_weekends() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_small_spec(dir.path());
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&p1, &p2] {
        assert_ok(
            &run(&["synth", "--spec", spec.to_str().unwrap(), "--output", p.to_str().unwrap()]),
            "synth",
        );
    }
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b, "same spec, same bytes");

    let body = String::from_utf8(a).unwrap();
    assert_eq!(body.lines().count(), 321, "header plus 320 rows");
    for line in body.lines().skip(1) {
        let date: chrono::NaiveDate = line.split(',').next().unwrap().parse().unwrap();
        let weekday = chrono::Datelike::weekday(&date);
        assert!(
            !matches!(weekday, chrono::Weekday::Sat | chrono::Weekday::Sun),
            "{date} is a weekend"
        );
    }
}

#[test]
fn compounding_and_benchmark_flags_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let prices = synth_prices(dir.path());
    let input = prices.to_str().unwrap();
    let base = [
        "backtest", "--input", input, "--k", "2", "--seed", "0",
        "--train-start", "2015-01-01", "--train-end", "2015-09-01",
        "--test-start", "2015-09-01", "--test-end", "2016-12-31",
    ];

    let reb = dir.path().join("reb");
    let bah = dir.path().join("bah");
    let per = dir.path().join("per");
    let mut args = base.to_vec();
    args.extend(["--out-dir", reb.to_str().unwrap()]);
    assert_ok(&run(&args), "rebalanced");

    let mut args = base.to_vec();
    args.extend(["--out-dir", bah.to_str().unwrap(), "--compounding", "buy_and_hold"]);
    assert_ok(&run(&args), "buy and hold");

    let mut args = base.to_vec();
    args.extend(["--out-dir", per.to_str().unwrap(), "--benchmark", "per_cluster"]);
    assert_ok(&run(&args), "per-cluster benchmark");

    let tracks = |d: &Path| std::fs::read_to_string(d.join("tracks.csv")).unwrap();
    assert_ne!(tracks(&reb), tracks(&bah), "compounding must change the tracks");
    assert!(
        tracks(&per).contains("benchmark_cluster_0"),
        "per-cluster benchmark tracks missing"
    );
    assert!(!tracks(&reb).contains("benchmark_cluster_0"));
}

#[test]
fn charts_toggle_controls_svg_emission() {
    let dir = tempfile::tempdir().unwrap();
    let prices = synth_prices(dir.path());
    let input = prices.to_str().unwrap();
    let window = [
        "--train-start", "2015-01-01", "--train-end", "2015-09-01",
        "--test-start", "2015-09-01", "--test-end", "2016-12-31",
    ];

    for (name, charts, expect) in [("on", "true", true), ("off", "false", false)] {
        let out_dir = dir.path().join(name);
        let mut args = vec![
            "backtest", "--input", input, "--out-dir", out_dir.to_str().unwrap(),
            "--k", "2", "--charts", charts,
        ];
        args.extend(window);
        assert_ok(&run(&args), "backtest");
        for svg in ["correlation_heatmap.svg", "clusters_vs_benchmark.svg", "best_vs_benchmark.svg"] {
            assert_eq!(out_dir.join(svg).is_file(), expect, "{svg} with charts={charts}");
        }
    }
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let prices = synth_prices(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let config_path = dir.path().join("run.conf");
    std::fs::write(
        &config_path,
        format!(
            "input = {}\nout_dir = {}\nk = 2\nseed = 3\ncharts = false\n\
             train_start = 2015-01-01\ntrain_end = 2015-09-01\n\
             test_start = 2015-09-01\ntest_end = 2016-12-31\n",
            prices.display(),
            out_a.display()
        ),
    )
    .unwrap();

    assert_ok(&run(&["backtest", "--config", config_path.to_str().unwrap()]), "config run");
    assert!(out_a.join("summary.csv").is_file());
    assert!(!out_a.join("correlation_heatmap.svg").exists(), "charts=false in file");

    // --out-dir and --seed flags override the file's values
    assert_ok(
        &run(&[
            "backtest", "--config", config_path.to_str().unwrap(),
            "--out-dir", out_b.to_str().unwrap(), "--seed", "4",
        ]),
        "override run",
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_b.join("cluster_model.json")).unwrap())
            .unwrap();
    assert_eq!(model["seed"], 4);
}

// ---------------------------------------------------------------------------
// Exit codes and diagnostics
// ---------------------------------------------------------------------------

#[test]
fn exit_codes_follow_the_zero_one_two_contract() {
    let dir = tempfile::tempdir().unwrap();
    let prices = synth_prices(dir.path());
    let input = prices.to_str().unwrap();
    let od = dir.path().join("x");
    let od = od.to_str().unwrap();

    // usage and config problems: exit 2
    let missing = run(&["stats", "--input", "/no/such/file.csv", "--out-dir", od]);
    assert_eq!(code(&missing), 2);
    assert!(stderr_of(&missing).starts_with("ERROR load:"), "{}", stderr_of(&missing));

    let too_many = run(&["backtest", "--input", input, "--out-dir", od, "--k", "99"]);
    assert_eq!(code(&too_many), 2);
    assert!(stderr_of(&too_many).contains("ERROR config:"));
    assert!(stderr_of(&too_many).contains("exceeds"));

    let bad_value = run(&["backtest", "--input", input, "--out-dir", od, "--k", "two"]);
    assert_eq!(code(&bad_value), 2);
    assert!(stderr_of(&bad_value).starts_with("ERROR config:"));

    let unknown_flag = run(&["stats", "--input", input, "--out-dir", od, "--frobnicate"]);
    assert_eq!(code(&unknown_flag), 2);
    assert!(stderr_of(&unknown_flag).starts_with("ERROR usage:"));

    let no_subcommand = run(&[]);
    assert_eq!(code(&no_subcommand), 2);
    assert!(stderr_of(&no_subcommand).starts_with("ERROR usage:"));

    let empty_window = run(&["stats", "--input", input, "--out-dir", od, "--start", "2050-01-01"]);
    assert_eq!(code(&empty_window), 2);
    assert!(stderr_of(&empty_window).starts_with("ERROR window:"));

    let overlapping = run(&[
        "backtest", "--input", input, "--out-dir", od,
        "--train-end", "2015-10-01", "--test-start", "2015-09-01", "--test-end", "2016-12-31",
    ]);
    assert_eq!(code(&overlapping), 2);
    assert!(stderr_of(&overlapping).contains("must not overlap"));

    let bad_spec = dir.path().join("bad_spec.txt");
    std::fs::write(&bad_spec, "tickers = A,B\nstart = 2020-01-01\ndays = 9\ncov = 1,2;2,1\n").unwrap();
    let non_psd = run(&["synth", "--spec", bad_spec.to_str().unwrap(), "--output", od]);
    assert_eq!(code(&non_psd), 2);
    assert!(stderr_of(&non_psd).starts_with("ERROR synth:"));

    // pipeline failures on valid usage: exit 1
    let flat_spec = dir.path().join("flat_spec.txt");
    std::fs::write(&flat_spec, "tickers = A,B\nstart = 2020-01-01\ndays = 30\n").unwrap();
    let flat_csv = dir.path().join("flat.csv");
    assert_ok(
        &run(&["synth", "--spec", flat_spec.to_str().unwrap(), "--output", flat_csv.to_str().unwrap()]),
        "flat synth",
    );
    let zero_var = run(&["stats", "--input", flat_csv.to_str().unwrap(), "--out-dir", od]);
    assert_eq!(code(&zero_var), 1, "{}", stderr_of(&zero_var));
    assert!(stderr_of(&zero_var).starts_with("ERROR stats:"));

    // every diagnostic is a single line
    for output in [&missing, &too_many, &bad_value, &empty_window, &non_psd, &zero_var] {
        assert_eq!(stderr_of(output).trim_end().lines().count(), 1);
    }

    // help and version: exit 0
    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("Usage"));
    assert_eq!(code(&run(&["--version"])), 0);
}
