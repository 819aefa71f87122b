use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const PLAN: &str = r#"
axis = "snr_db"
values = [0.0, 10.0]
estimators = ["music", "pr-dml", "pr-wsf", "pr-ccf", "pr-ucf", "dml-grid2"]
runs = 4
grid = "30:70:161"

[scenario]
sensors = 8
doas = [45.0, 55.0]
snr_db = 0.0
snapshots = 30
seed = 42
"#;

const SCENARIO: &str = r#"
sensors = 8
doas = [40.0, 60.0]
snr_db = 20.0
snapshots = 200
seed = 3
"#;

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doa-bench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn doa-bench")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "doa-bench failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn workdir() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("plan.toml"), PLAN).unwrap();
    fs::write(dir.path().join("scenario.toml"), SCENARIO).unwrap();
    dir
}

#[test]
fn run_writes_one_row_per_estimator_and_axis_value() {
    let dir = workdir();
    let csv = ok(&bench(&["run", "plan.toml"], dir.path()));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("estimator,axis_name,axis_value,rmse_deg,mean_time_s,failures,runs_used")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6 * 2);
    for row in &rows {
        assert_eq!(row.len(), 7);
        assert_eq!(row[1], "snr_db");
        assert!(row[3].parse::<f64>().unwrap() >= 0.0);
        assert_eq!(row[4], "", "timing column is empty unless requested");
        let used: usize = row[6].parse().unwrap();
        let failed: usize = row[5].parse().unwrap();
        assert_eq!(used + failed, 4);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = workdir();
    ok(&bench(&["run", "plan.toml", "--out", "a.csv"], dir.path()));
    ok(&bench(
        &["run", "plan.toml", "--out", "b.csv", "--threads", "1"],
        dir.path(),
    ));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn seed_and_runs_flags_override_the_plan() {
    let dir = workdir();
    let base = ok(&bench(&["run", "plan.toml"], dir.path()));
    let reseeded = ok(&bench(&["run", "plan.toml", "--seed", "7"], dir.path()));
    assert_ne!(base, reseeded);
    let two = ok(&bench(&["run", "plan.toml", "--runs", "2"], dir.path()));
    for line in two.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let total: usize = cols[5].parse::<usize>().unwrap() + cols[6].parse::<usize>().unwrap();
        assert_eq!(total, 2);
    }
}

#[test]
fn plan_output_key_is_used_without_out_flag() {
    let dir = workdir();
    let plan = format!("output = \"from_plan.csv\"\n{PLAN}");
    fs::write(dir.path().join("with_output.toml"), plan).unwrap();
    let stdout = ok(&bench(
        &["run", "with_output.toml", "--runs", "1"],
        dir.path(),
    ));
    assert!(stdout.is_empty());
    let written = fs::read_to_string(dir.path().join("from_plan.csv")).unwrap();
    assert!(written.starts_with("estimator,axis_name"));
}

#[test]
fn unknown_plan_key_is_rejected() {
    let dir = workdir();
    fs::write(dir.path().join("bad.toml"), format!("runz = 3\n{PLAN}")).unwrap();
    let out = bench(&["run", "bad.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("runz"));
}

#[test]
fn spectrum_has_minima_at_the_sources() {
    let dir = workdir();
    for path in ["fast", "naive"] {
        let csv = ok(&bench(
            &[
                "spectrum",
                "scenario.toml",
                "--estimator",
                "pr-dml",
                "--grid",
                "0:90:181",
                "--path",
                path,
            ],
            dir.path(),
        ));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("angle_deg,value"));
        let points: Vec<(f64, f64)> = lines
            .map(|l| {
                let (a, v) = l.split_once(',').unwrap();
                (a.parse().unwrap(), v.parse().unwrap())
            })
            .collect();
        assert_eq!(points.len(), 181);
        assert!(points.iter().all(|&(_, v)| v >= 0.0));
        // Deepest point in each half of the grid.
        for (lo, hi, truth) in [(0.0, 50.0, 40.0), (50.0, 90.0, 60.0)] {
            let best = points
                .iter()
                .filter(|&&(a, _)| a >= lo && a < hi)
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            assert!(
                (best.0 - truth).abs() <= 1.0,
                "{path}: minimum at {}",
                best.0
            );
        }
    }
}

#[test]
fn spectrum_rejects_estimators_without_a_spectrum() {
    let dir = workdir();
    let out = bench(
        &["spectrum", "scenario.toml", "--estimator", "dml-grid2"],
        dir.path(),
    );
    assert!(!out.status.success());
    let bad = bench(
        &["spectrum", "scenario.toml", "--estimator", "esprit"],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn time_reports_every_estimator_and_axis_value() {
    let dir = workdir();
    let plan = r#"
axis = "n_sensors"
values = [6, 8]
estimators = ["music", "pr-dml", "pr-ccf"]
runs = 1
grid = "0:90:91"
timing_repetitions = 3

[scenario]
sensors = 6
doas = [30.0, 50.0]
snr_db = 10.0
snapshots = 50
seed = 1
"#;
    fs::write(dir.path().join("timing.toml"), plan).unwrap();
    let csv = ok(&bench(&["time", "timing.toml"], dir.path()));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("estimator,axis_name,axis_value,fast_median_s,naive_median_s,repetitions")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 2);
    for row in rows {
        assert!(row[3].parse::<f64>().unwrap() > 0.0);
        // MUSIC has a single evaluation path.
        assert_eq!(row[4].is_empty(), row[0] == "music");
        assert_eq!(row[5], "3");
    }
}
