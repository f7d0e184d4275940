use std::path::Path;
use std::process::{Command, Output};

const SYNTH: &str = "4,120,3,4,7";
/// Every width used below fits this set.
const EASY: &str = "5,200,3,4,1";

fn capmeter(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capmeter"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CAPMETER_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = capmeter(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    capmeter(args, cwd).status.code().expect("exit code")
}

#[test]
fn cover_example_prints_k_and_log_count() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["cover", "--D", "2", "--p", "2", "--eps", "0.41421356", "--beta", "1"], dir.path());
    assert!(stdout.lines().any(|l| l == "K=2"), "{stdout}");
    let ln_n: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("ln N = "))
        .expect("ln N line")
        .parse()
        .unwrap();
    assert!((ln_n - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["selftest", "--trials", "5"], dir.path());
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = capmeter(&[], dir.path());
    assert_ne!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stderr).to_string() + &String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn error_classes_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let unknown_flag = code(&["cover", "--D", "2", "--p", "2", "--eps", "0.5", "--bogus"], p);
    let missing_file = code(&["measure", "--ckpt", "absent.capm", "--synthetic", SYNTH], p);
    std::fs::write(p.join("bad.json"), "{\"lr\": ").unwrap();
    let bad_config = code(&["train", "--config", "bad.json", "--h", "4", "--synthetic", SYNTH, "--out", "n.capm"], p);
    std::fs::write(p.join("unknown.json"), "{\"no_such_flag\": 1}").unwrap();
    let unknown_key = code(&["train", "--config", "unknown.json", "--h", "4", "--synthetic", SYNTH, "--out", "n.capm"], p);
    let invalid = code(&["cover", "--D", "2", "--p", "2", "--eps", "0"], p);
    let diverged = code(&["train", "--h", "4", "--synthetic", SYNTH, "--lr", "1e200", "--max-epochs", "3", "--out", "d.capm"], p);
    assert_eq!(unknown_flag, 2);
    assert_eq!(missing_file, 3);
    assert_eq!(bad_config, 4);
    assert_eq!(unknown_key, 4);
    assert_eq!(invalid, 5);
    assert_eq!(diverged, 6);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_capmeter"))
        .args(["selftest", "--trials", "1"])
        .current_dir(dir.path())
        .env("CAPMETER_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn command_line_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("cfg.json"), format!("{{\"max_epochs\": 4, \"stop_loss\": 1e-9, \"synthetic\": \"{SYNTH}\", \"h\": 6}}")).unwrap();
    ok(&["train", "--config", "cfg.json", "--out", "a.capm"], p);
    ok(&["train", "--config", "cfg.json", "--max-epochs", "2", "--out", "b.capm"], p);
    let epochs = |f: &str| -> u64 {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join(f)).unwrap()).unwrap();
        v["epochs_run"].as_u64().unwrap()
    };
    assert_eq!(epochs("a.report.json"), 4);
    assert_eq!(epochs("b.report.json"), 2);
}

#[test]
fn train_measure_bounds_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for tag in ["1", "2"] {
        let ckpt = format!("net{tag}.capm");
        ok(&["train", "--synthetic", SYNTH, "--h", "12", "--max-epochs", "60", "--seed", "3", "--out", &ckpt], p);
        ok(&["measure", "--ckpt", &ckpt, "--synthetic", SYNTH, "--out", &format!("panel{tag}.json"), "--csv", "measures.csv"], p);
        ok(&["bounds", "--ckpt", &ckpt, "--synthetic", SYNTH, "--gamma", "0.5", "--out", &format!("bounds{tag}.json")], p);
    }
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("net1.capm"), read("net2.capm"));
    assert_eq!(read("panel1.json"), read("panel2.json"));
    assert_eq!(read("bounds1.json"), read("bounds2.json"));

    let csv = String::from_utf8(read("measures.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("#schema="));
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2].split_once(',').unwrap().1, lines[3].split_once(',').unwrap().1);

    let bounds: serde_json::Value = serde_json::from_slice(&read("bounds1.json")).unwrap();
    assert_eq!(bounds["gamma"].as_f64(), Some(0.5));
    assert!(bounds["thm1_first_form"].as_f64().unwrap() <= bounds["thm1_second_form"].as_f64().unwrap());
    let panel: serde_json::Value = serde_json::from_slice(&read("panel1.json")).unwrap();
    assert_eq!(panel["beta"].as_array().unwrap().len(), 12);
}

#[test]
fn measure_csv_refuses_foreign_schema() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["train", "--synthetic", SYNTH, "--h", "4", "--max-epochs", "2", "--out", "n.capm"], p);
    std::fs::write(p.join("other.csv"), "#schema=something/else\na,b\n").unwrap();
    assert_eq!(code(&["measure", "--ckpt", "n.capm", "--synthetic", SYNTH, "--out", "x.json", "--csv", "other.csv"], p), 5);
}

#[test]
fn lowerbound_certifies_small_instance() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["lowerbound", "--k", "2", "--n", "2", "--alpha", "1,2,3,4", "--beta", "0.5", "--mode", "exact", "--out", "lb.json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("lb.json")).unwrap()).unwrap();
    assert_eq!(v["m"].as_u64(), Some(8));
    assert_eq!(v["certified"].as_bool(), Some(true));
    assert!(v["certification_margin"].as_f64().unwrap() >= -1e-12);
    assert!(v["upper_margin"].as_f64().unwrap() >= 0.0);
}

/// Pulls `(column, points)` out of every polyline.
fn polylines(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| {
            let attr = |name: &str| l.split(&format!("{name}=\"")).nth(1).unwrap().split('"').next().unwrap().to_string();
            let pts = attr("points")
                .split(' ')
                .map(|pt| {
                    let (x, y) = pt.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect();
            (attr("data-column"), pts)
        })
        .collect()
}

#[test]
fn sweep_compare_table_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let train = ["--synthetic", EASY, "--max-epochs", "300", "--lr", "0.05", "--seed", "1"];
    ok(&[&["sweep", "--widths", "8,32,16", "--out-dir", "sw"][..], &train[..]].concat(), p);
    ok(&["compare", "--sweep-dir", "sw", "--out", "t1.csv", "--svg", "c1.svg"], p);
    ok(&["compare", "--sweep-dir", "sw", "--out", "t2.csv", "--svg", "c2.svg", "--sequential"], p);
    let read = |f: &str| std::fs::read_to_string(p.join(f)).unwrap();
    assert_eq!(read("t1.csv"), read("t2.csv"));
    assert_eq!(read("c1.svg"), read("c2.svg"));

    let csv = read("t1.csv");
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("#schema=capmeter.sweep_summary/1;h:int"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let hs: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(hs, ["8", "16", "32"]);
    let norm: Vec<usize> = (0..header.len()).filter(|&j| header[j].starts_with("norm_")).collect();
    assert!(norm.len() >= 10);
    for &j in &norm {
        let max = rows.iter().map(|r| r[j].parse::<f64>().unwrap()).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, 1.0, "{}", header[j]);
    }

    let svg = read("c1.svg");
    let lines = polylines(&svg);
    assert_eq!(lines.len(), norm.len());
    assert!(lines.iter().all(|(_, pts)| pts.len() == 3));
    let top: Vec<f64> = lines.iter().map(|(_, pts)| pts.iter().map(|pt| pt.1).fold(f64::INFINITY, f64::min)).collect();
    assert!(top.windows(2).all(|w| w[0] == w[1]), "{top:?}");
    let xs: Vec<f64> = lines[0].1.iter().map(|pt| pt.0).collect();
    // log2 axis: 8 -> 16 -> 32 are equally spaced.
    assert!(((xs[1] - xs[0]) - (xs[2] - xs[1])).abs() < 0.02);
}

#[test]
fn chart_needs_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["sweep", "--widths", "8", "--out-dir", "sw", "--synthetic", EASY, "--max-epochs", "300", "--lr", "0.05", "--seed", "1"], p);
    assert_eq!(code(&["compare", "--sweep-dir", "sw", "--out", "t.csv", "--svg", "c.svg"], p), 5);
    assert!(p.join("t.csv").exists());
}
