use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trajopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajopt")).args(args).output().expect("running trajopt")
}

fn status(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn measures(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("measures.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const CAR_QPM: [&str; 12] =
    ["--problem", "car", "--method", "qpm", "--p", "3", "--q", "6", "--m", "6", "--omega", "1e-6"];

fn car_solve(dir: &Path) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["solve"];
    args.extend(CAR_QPM);
    args.extend(["--N", "16", "--out", out]);
    trajopt(&args)
}

/// Max overshoot of the cubic through `sign(t - 1)` at the LGR nodes of the
/// interval centred on the switch.
fn lgr_cubic_overshoot() -> f64 {
    // roots of (P3 + P4) / (1 + x) on [-1, 1), plus the left endpoint
    let nodes = [-1.0, -0.575_318_923_521_694_2, 0.181_066_271_118_530_9, 0.822_824_080_974_592_1];
    let values = nodes.map(|x: f64| x.signum());
    let lagrange = |x: f64| -> f64 {
        (0..4)
            .map(|i| {
                let l: f64 = (0..4).filter(|&j| j != i).map(|j| (x - nodes[j]) / (nodes[i] - nodes[j])).product();
                values[i] * l
            })
            .sum()
    };
    (0..=20_000).map(|k| lagrange(-1.0 + 2.0 * k as f64 / 20_000.0).abs()).fold(0.0, f64::max) - 1.0
}

#[test]
fn solve_car_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = car_solve(dir.path());
    assert_eq!(status(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,y1,u1"));
    let m = measures(dir.path());
    assert_eq!(m["status"], "Converged");
    assert!(m["rho"].as_f64().unwrap() <= 1e-3);
    assert_eq!(m["gamma"].as_f64(), Some(0.0));
}

#[test]
fn solve_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(status(&car_solve(a.path())), 0);
    assert_eq!(status(&car_solve(b.path())), 0);
    let read = |d: &Path| fs::read(d.join("solution.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn missing_penalty_weight_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = trajopt(&[
        "solve", "--problem", "car", "--method", "qpm", "--p", "3", "--q", "6", "--m", "6", "--N", "4", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(status(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--omega"));
    assert!(!dir.path().join("solution.csv").exists());
}

#[test]
fn unknown_problem_is_a_config_error() {
    let out = trajopt(&["solve", "--problem", "nope", "--method", "dcm", "--p", "2", "--N", "4"]);
    assert_eq!(status(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("car"));
}

#[test]
fn bad_flag_exits_one() {
    assert_eq!(status(&trajopt(&["solve", "--bogus"])), 1);
}

#[test]
fn dcm_overshoots_the_switching_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = trajopt(&[
        "solve", "--problem", "box_counter", "--method", "dcm", "--scheme", "lgr", "--p", "4", "--N", "3", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(status(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let gamma = measures(dir.path())["gamma"].as_f64().unwrap();
    let oracle = lgr_cubic_overshoot();
    assert!((gamma - oracle).abs() < 2e-3, "{gamma} vs {oracle}");
}

#[test]
fn unreachable_tolerance_exits_two_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve"];
    args.extend(CAR_QPM);
    args.extend(["--N", "8", "--tol", "1e-300", "--out", dir.path().to_str().unwrap()]);
    let out = trajopt(&args);
    assert_eq!(status(&out), 2);
    assert!(dir.path().join("solution.csv").exists());
    assert_ne!(measures(dir.path())["status"], "Converged");
}

fn car_study(dir: &Path, parallel: bool) -> Output {
    let mut args = vec!["study"];
    args.extend(CAR_QPM);
    args.extend(["--N", "4,16,64", "--out", dir.to_str().unwrap()]);
    if parallel {
        args.push("--parallel");
    }
    trajopt(&args)
}

#[test]
fn study_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = car_study(dir.path(), false);
    assert_eq!(status(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("study.csv"));
    assert_eq!(rows[0], ["N", "h", "delta", "rho", "gamma", "iters", "time_s"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][0], "4");
    assert_eq!(rows[3][0], "64");
    let orders: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("orders.json")).unwrap()).unwrap();
    assert!(orders["delta"].as_f64().is_some());
}

#[test]
fn parallel_study_matches_sequential() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(status(&car_study(a.path(), false)), 0);
    assert_eq!(status(&car_study(b.path(), true)), 0);
    let strip = |d: &Path| -> Vec<Vec<String>> {
        csv_rows(&d.join("study.csv")).into_iter().map(|mut r| {
            r.pop();
            r
        }).collect()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn study_needs_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["study"];
    args.extend(CAR_QPM);
    args.extend(["--N", "4,16", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(status(&trajopt(&args)), 1);
}

fn bench(path: &Path) -> Output {
    trajopt(&[
        "malm-bench", "--instance", "circle", "--pval", "1e-1,0", "--eps", "0,1e-6", "--out", path.to_str().unwrap(),
    ])
}

#[test]
fn circle_bench_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    assert_eq!(status(&bench(&path)), 0);
    let rows = csv_rows(&path);
    assert_eq!(rows[0], ["pval", "eps", "e_a", "e_b", "malm_iters", "pm_iters", "alm_iters"]);
    assert_eq!(rows.len(), 5);
    let e_b: f64 = rows[1][3].parse().unwrap();
    assert!((e_b - 4.4e-3).abs() < 1e-4, "{e_b}");
    assert!(rows[1][5].parse::<usize>().is_ok());
    assert_eq!(rows[3][5], "n.a.");
    assert_eq!(rows[4][6], "n.c.");
}

#[test]
fn bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(status(&bench(&a)), 0);
    assert_eq!(status(&bench(&b)), 0);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
