use std::path::Path;
use std::process::{Command, Output};

use carfollow_cli::csv::{FREQ_HEADER, SWEEP_HEADER, TRACE_HEADER};

fn carfollow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carfollow"))
        .args(args)
        .current_dir(dir)
        .env_remove("CARFOLLOW_CONFIG")
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).expect("output file exists")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn simulate_writes_full_trace_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = carfollow(
        &["simulate", "--scenario", "fig4", "--out", "fig4.csv", "--svg", "fig4.svg"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path().join("fig4.csv"));
    assert_eq!(csv.lines().next(), Some(TRACE_HEADER));
    assert_eq!(csv.lines().count() - 1, 4001);
    assert_eq!(column(&csv, "t").last(), Some(&40.0));
    let svg = read(dir.path().join("fig4.svg"));
    assert!(svg.starts_with("<svg") && svg.contains(r#"version="1.1""#));
    for panel in ["distance", "speed", "acceleration"] {
        assert!(svg.contains(panel), "{panel}");
    }
    assert!(stdout(&out).contains("settled at"));
}

#[test]
fn linear_controller_brakes_hard() {
    let dir = tempfile::tempdir().unwrap();
    let out = carfollow(
        &["simulate", "--scenario", "fig4", "--controller", "linear", "--out", "lin.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let a_des = column(&read(dir.path().join("lin.csv")), "a_des");
    assert!(a_des.iter().cloned().fold(f64::INFINITY, f64::min) < -5.0);
}

#[test]
fn plant_override_runs_lag_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = carfollow(
        &["simulate", "--scenario", "fig4", "--plant", "lag", "--out", "lag.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let a_f = column(&read(dir.path().join("lag.csv")), "a_F");
    assert_eq!(a_f.len(), 4001);
}

#[test]
fn usage_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate", "--scenario", "fig99", "--out", "x.csv"][..],
        &["simulate", "--scenario", "fig4", "--controller", "fuzzy", "--out", "x.csv"],
        &["simulate", "--scenario", "fig4", "--plant", "boat", "--out", "x.csv"],
        &["simulate", "--out", "x.csv"],
        &["simulate", "--scenario", "fig4"],
        &["sweep", "--k1-range", "3:1", "--out", "x.csv"],
        &["sweep", "--grid", "0", "--out", "x.csv"],
        &["freq", "--k1", "-1", "--k2", "1", "--t-h", "1", "--out", "x.csv"],
        &["reproduce", "--figure", "fig2", "--outdir", "x"],
        &["launch"],
    ] {
        let out = carfollow(args, dir.path());
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_file_and_environment_default() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# short fig6 run\nscenario.base = fig6\nscenario.duration = 5 s\nk1 = 1.5 1/s\n",
    )
    .unwrap();
    let out = carfollow(&["simulate", "--config", "run.cfg", "--out", "a.csv"], dir.path());
    assert_eq!(code(&out), 0);
    let a = read(dir.path().join("a.csv"));
    assert_eq!(a.lines().count() - 1, 501);

    let out = Command::new(env!("CARGO_BIN_EXE_carfollow"))
        .args(["simulate", "--out", "b.csv"])
        .current_dir(dir.path())
        .env("CARFOLLOW_CONFIG", dir.path().join("run.cfg"))
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(a, read(dir.path().join("b.csv")));

    std::fs::write(dir.path().join("bad.cfg"), "k1 = 1.5 m\n").unwrap();
    let out = carfollow(&["simulate", "--config", "bad.cfg", "--out", "c.csv"], dir.path());
    assert_eq!(code(&out), 2);
    let out = carfollow(&["simulate", "--config", "missing.cfg", "--out", "c.csv"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("c.csv").exists());
}

#[test]
fn aborted_run_exits_1_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    // A stiff lag at a coarse step diverges within the first steps.
    std::fs::write(
        dir.path().join("stiff.cfg"),
        "scenario.base = fig10b\nscenario.tau = 0.001 s\nscenario.dt = 0.1 s\n",
    )
    .unwrap();
    let out = carfollow(&["simulate", "--config", "stiff.cfg", "--out", "p.csv"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("partial trace"));
    let csv = read(dir.path().join("p.csv"));
    assert_eq!(csv.lines().next(), Some(TRACE_HEADER));
    assert!(csv.lines().count() < 10);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["one", "two"] {
        let out = carfollow(
            &["simulate", "--scenario", "fig9b", "--out", &format!("{name}.csv")],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
        let out = carfollow(
            &["sweep", "--grid", "40", "--out", &format!("{name}-sweep.csv")],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
    }
    let p = |n: &str| dir.path().join(n);
    assert_eq!(std::fs::read(p("one.csv")).unwrap(), std::fs::read(p("two.csv")).unwrap());
    assert_eq!(
        std::fs::read(p("one-sweep.csv")).unwrap(),
        std::fs::read(p("two-sweep.csv")).unwrap()
    );
}

#[test]
fn sweep_reports_regions_and_guideline() {
    let dir = tempfile::tempdir().unwrap();
    let out = carfollow(&["sweep", "--out", "sweep.csv"], dir.path());
    assert_eq!(code(&out), 0);
    let csv = read(dir.path().join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4 * 200 * 200);
    assert!(rows.iter().any(|r| r[..5] == ["1", "1", "1.5", "true", "true"]));

    let mut counts = Vec::new();
    for (t_h, k2_star) in [("1", "1"), ("0.5", "2"), ("0.4", "2.5"), ("0.2", "5")] {
        let block: Vec<_> = rows.iter().filter(|r| r[0] == t_h).collect();
        assert_eq!(block.len(), 200 * 200);
        assert!(block.iter().all(|r| r[5] == k2_star), "t_h = {t_h}");
        counts.push(block.iter().filter(|r| r[4] == "true").count());
    }
    assert!(counts.windows(2).all(|w| w[0] > w[1]), "{counts:?}");
}

#[test]
fn freq_response_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = carfollow(
        &["freq", "--k1", "1.5", "--k2", "1", "--t-h", "1", "--oracle", "--out", "freq.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let csv = read(dir.path().join("freq.csv"));
    assert_eq!(csv.lines().next(), Some(FREQ_HEADER));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let num = |s: &str| s.parse::<f64>().unwrap();
    assert_eq!(num(rows[0][0]), 0.0);
    assert!((num(rows[0][2]) - 1.0).abs() <= 1e-9);
    assert!(rows[1..].iter().all(|r| num(r[2]) < 1.0));
    let omegas: Vec<f64> = rows.iter().map(|r| num(r[0])).collect();
    assert!(omegas.windows(2).all(|w| w[0] <= w[1]));

    let oracle: Vec<_> = rows.iter().filter(|r| !r[3].is_empty()).collect();
    assert_eq!(oracle.len(), 4);
    let at_005 = oracle
        .iter()
        .find(|r| (num(r[0]) - std::f64::consts::TAU * 0.05).abs() < 1e-6)
        .expect("0.05 Hz row");
    assert!((num(at_005[3]) - num(at_005[2])).abs() < 0.02);
}

#[test]
fn oracle_failure_exits_1_with_diagnostic_row() {
    let dir = tempfile::tempdir().unwrap();
    // Very slow gains are still decaying when the oracle starts measuring.
    let out = carfollow(
        &["freq", "--k1", "0.01", "--k2", "0.01", "--t-h", "1", "--oracle", "--out", "slow.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    let csv = read(dir.path().join("slow.csv"));
    assert!(csv.lines().any(|l| l.ends_with(",nan")));
}

#[test]
fn reproduce_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = carfollow(&["reproduce", "--figure", "fig3", "--outdir", "f3"], dir.path());
    assert_eq!(code(&out), 0);
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("f3"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["fig3_th0.2.csv", "fig3_th0.4.csv", "fig3_th0.5.csv", "fig3_th1.csv"]);

    let out = carfollow(&["reproduce", "--figure", "fig6", "--outdir", "f6"], dir.path());
    assert_eq!(code(&out), 0);
    for f in ["fig6.csv", "fig6.svg", "fig6-linear.csv", "fig6-linear.svg"] {
        assert!(dir.path().join("f6").join(f).exists(), "{f}");
    }
    let summary = stdout(&out);
    let fig6 = summary.lines().find(|l| l.starts_with("fig6:")).unwrap();
    let min_h = number_after(fig6, "min h ");
    assert!((6.0..=8.0).contains(&min_h), "{fig6}");
    assert!(fig6.contains("a_des in ["));

    let out = carfollow(&["reproduce", "--figure", "fig8", "--outdir", "f8"], dir.path());
    assert_eq!(code(&out), 0);
    let summary = stdout(&out);
    assert_eq!(summary.lines().count(), 2);
    for line in summary.lines() {
        let h = number_after(line, "final h ");
        assert!((h - 5.0).abs() <= 0.2, "{line}");
    }
}

fn number_after(line: &str, key: &str) -> f64 {
    let rest = &line[line.find(key).unwrap_or_else(|| panic!("{key} in {line}")) + key.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}
