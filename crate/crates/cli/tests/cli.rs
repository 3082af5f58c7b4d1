use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subnyq"))
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const RECT: &str = r#"{
    "schema_version": 1,
    "source": {"preset": "rectangular", "sigma2": 1.0, "w": 0.5},
    "sampler": {"fs": [0.5, 1.0]},
    "rates": {"values": [1.0]}
}"#;

const BAND_PASS: &str = r#"{
    "schema_version": 1,
    "source": {"segments": [[1.0, 2.0, 0.5]]},
    "sampler": {"fs": [2.0], "branches": 1},
    "rates": {"values": [1.0]}
}"#;

#[test]
fn drf_mode_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "rect.json", RECT);
    let out = run(&["drf"], Some(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let (header, rows) = parse_csv(&text);
    assert_eq!(
        header.join(","),
        "fs,P,rate_bits_per_time,theta,distortion,mmse_part,lossy_part"
    );
    assert_eq!(rows[0][0], "0.5");
    assert_eq!(rows[0][1], "1");
    assert_eq!(rows[0][col(&header, "distortion")], "0.53125");
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn mmse_mode_super_nyquist_is_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "rect.json", RECT);
    let (header, rows) = parse_csv(&stdout(&run(&["mmse"], Some(&cfg))));
    assert_eq!(header.join(","), "fs,P,mmse");
    assert_eq!(rows[1][0], "1");
    assert!(num(&rows[1][2]).abs() < 1e-12);
    assert!((num(&rows[0][2]) - 0.5).abs() < 1e-12);
}

#[test]
fn af_sets_mode_lists_band_pass_support() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bp.json", BAND_PASS);
    let text = stdout(&run(&["af-sets"], Some(&cfg)));
    assert_eq!(text, "fs,P,branch,lo,hi\n2,1,1,-2,-1\n2,1,1,1,2\n");
}

#[test]
fn d_dagger_rows_use_infinite_branch_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bp.json", BAND_PASS);
    let (header, rows) = parse_csv(&stdout(&run(&["d-dagger"], Some(&cfg))));
    assert_eq!(rows[0][col(&header, "P")], "inf");
    assert_eq!(rows[0][col(&header, "distortion")], "0.5");
}

#[test]
fn optimal_and_multi_branch_modes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bp2.json",
        r#"{"schema_version": 1,
            "source": {"preset": "band_pass"},
            "sampler": {"fs": [2.0], "branches": 2, "filters": [[[-2, -1]], [[1, 2]]]},
            "rates": {"values": [1.0]},
            "grid": 32}"#,
    );
    let (header, rows) = parse_csv(&stdout(&run(&["drf"], Some(&cfg))));
    assert!((num(&rows[0][col(&header, "distortion")]) - 0.5).abs() < 1e-9);
    let (header, rows) = parse_csv(&stdout(&run(&["drf-optimal"], Some(&cfg))));
    assert_eq!(rows[0][col(&header, "P")], "2");
    assert!((num(&rows[0][col(&header, "distortion")]) - 0.5).abs() < 1e-12);
}

#[test]
fn bounds_are_ordered() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bimodal.json",
        r#"{"schema_version": 1,
            "source": {"preset": "bimodal"},
            "noise": {"segments": [[0.0, 1.0, 0.05]]},
            "sampler": {"fs": {"start": 0.3, "stop": 1.5, "step": 0.3}},
            "rates": {"values": [0.5, 2.0]}}"#,
    );
    let out = run(&["bounds"], Some(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(
        header.join(","),
        "fs,rate_bits_per_time,drf,idrf_stationary,mmse,polyphase_lower_bound,d_star_lower_bound,d_dagger"
    );
    assert_eq!(rows.len(), 10);
    for r in &rows {
        let v = |name: &str| num(&r[col(&header, name)]);
        let d = v("drf");
        for lower in ["idrf_stationary", "mmse", "polyphase_lower_bound", "d_star_lower_bound"] {
            assert!(d >= v(lower) - 1e-6, "{lower} above drf in {r:?}");
        }
        assert!(v("d_star_lower_bound") >= v("d_dagger") - 1e-9);
    }
}

#[test]
fn oracle_check_mode_agrees() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "oracle.json",
        r#"{"schema_version": 1,
            "source": {"preset": "rectangular"},
            "sampler": {"fs": [0.5]},
            "rates": {"values": [1.0]},
            "oracle": {"window": 64, "offsets": 16, "block_window": 32}}"#,
    );
    let (header, rows) = parse_csv(&stdout(&run(&["oracle-check"], Some(&cfg))));
    assert_eq!(
        header.join(","),
        "fs,rate_bits_per_time,quantity,pipeline,oracle,abs_diff"
    );
    assert_eq!(rows.len(), 2);
    assert!(num(&rows[0][5]) < 0.01);
    assert!(num(&rows[1][5]) < 0.05 * num(&rows[1][3]));
}

#[test]
fn ndjson_has_the_same_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "rect.json", RECT);
    let text = stdout(&run(&["drf", "--format", "ndjson"], Some(&cfg)));
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["distortion"], 0.53125);
    assert_eq!(first["P"], 1);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sweep.json",
        r#"{"schema_version": 1,
            "source": {"preset": "bimodal"},
            "sampler": {"fs": {"start": 0.1, "stop": 2.0, "step": 0.1}, "branches": 3, "filters": "optimal"},
            "rates": {"values": [0.5, 1, 3]}}"#,
    );
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let a = bin()
        .env("SUBNYQ_THREADS", "1")
        .args(["drf", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_a)
        .output()
        .unwrap();
    let b = bin()
        .env("SUBNYQ_THREADS", "4")
        .args(["drf", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_b)
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
    let c = stdout(&run(&["drf"], Some(&cfg)));
    assert_eq!(c.as_bytes(), std::fs::read(&out_a).unwrap().as_slice());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing_field = write_config(&dir, "bad.json", r#"{"schema_version": 1, "sampler": {"fs": [1]}}"#);
    let out = run(&["mmse"], Some(&missing_field));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("source"));

    let out = run(&["mmse"], Some(&dir.path().join("nope.json")));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let no_rates = write_config(
        &dir,
        "norates.json",
        r#"{"schema_version": 1, "source": {"preset": "bimodal"}, "sampler": {"fs": [1]}}"#,
    );
    let out = run(&["drf"], Some(&no_rates));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rates"));

    assert_eq!(run(&["mmse"], None).status.code(), Some(2));
    assert_eq!(run(&["figure", "--figure", "spectrogram"], None).status.code(), Some(2));
    assert_eq!(run(&["warp"], None).status.code(), Some(2));

    let cfg = write_config(&dir, "rect.json", RECT);
    let out = bin()
        .env("SUBNYQ_THREADS", "zero")
        .args(["mmse", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unattainable_rate_exits_with_three() {
    let dir = TempDir::new().unwrap();
    // The filter passes only a band where the source has no power.
    let cfg = write_config(
        &dir,
        "dead.json",
        r#"{"schema_version": 1,
            "source": {"preset": "rectangular"},
            "sampler": {"fs": [0.5], "filters": [[[0.6, 0.9]]]},
            "rates": {"values": [1.0]}}"#,
    );
    let out = run(&["drf"], Some(&cfg));
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).is_empty());
}

fn figure_csv(name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let out = run(&["figure", "--figure", name], None);
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    parse_csv(&stdout(&out))
}

#[test]
fn nonmonotone_figure() {
    let (header, rows) = figure_csv("nonmonotone");
    let d = |fs: &str| {
        rows.iter()
            .find(|r| r[0] == fs && r[col(&header, "rate_bits_per_time")] == "1")
            .map(|r| num(&r[col(&header, "distortion")]))
            .unwrap()
    };
    assert!(d("2") < d("2.5"));
}

#[test]
fn rect_figure_noisy_branch_is_flat_above_nyquist() {
    let (header, rows) = figure_csv("rect");
    let noisy: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "noisy" && num(&r[col(&header, "fs")]) >= 1.0)
        .map(|r| num(&r[col(&header, "distortion")]))
        .collect();
    assert!(noisy.len() > 10);
    assert!(noisy.iter().all(|&d| (d - noisy[0]).abs() < 1e-12));
    assert!((noisy[0] - 0.375).abs() < 1e-12);
}

#[test]
fn multi_branch_figure_respects_the_limit() {
    let (header, rows) = figure_csv("multi-branch");
    let (fs_c, p_c, r_c, d_c) = (
        col(&header, "fs"),
        col(&header, "P"),
        col(&header, "rate_bits_per_time"),
        col(&header, "distortion"),
    );
    for r in rows.iter().filter(|r| r[p_c] == "inf") {
        let dag = num(&r[d_c]);
        let peers = rows
            .iter()
            .filter(|q| q[fs_c] == r[fs_c] && q[r_c] == r[r_c] && q[p_c] != "inf");
        let mut n = 0;
        for q in peers {
            assert!(num(&q[d_c]) >= dag - 1e-9, "fs={} P={}", q[fs_c], q[p_c]);
            n += 1;
        }
        assert_eq!(n, 3);
    }
}

#[test]
fn every_figure_stays_within_the_variance() {
    for name in ["rect", "nonmonotone", "mmse-opt", "opsf", "multi-branch", "af-sets"] {
        let (header, rows) = figure_csv(name);
        assert!(!rows.is_empty(), "{name}");
        for (i, h) in header.iter().enumerate() {
            if matches!(
                h.as_str(),
                "distortion"
                    | "idrf_stationary"
                    | "mmse_allpass"
                    | "mmse_optimal"
                    | "landau_bound"
                    | "d_allpass"
                    | "d_optimal"
            ) {
                for r in &rows {
                    let v = num(&r[i]);
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{name}.{h} = {v}");
                }
            }
        }
    }
}

#[test]
fn af_sets_figure_is_aliasing_free() {
    let (header, rows) = figure_csv("af-sets");
    let total: f64 = rows
        .iter()
        .filter(|r| r[col(&header, "P")] == "1" && num(&r[0]) < 0.7)
        .map(|r| num(&r[col(&header, "hi")]) - num(&r[col(&header, "lo")]))
        .sum();
    assert!((total - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("fig.csv");
    let out = bin()
        .args(["figure", "--figure", "mmse-opt", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .starts_with("fs,mmse_allpass,mmse_optimal,landau_bound\n"));
}
