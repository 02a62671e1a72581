use std::path::Path;
use std::process::Command;

fn run(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ultradiff"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs")
        .code()
        .expect("exit code")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn verify_default_passes_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--seed", "5"], a.path()), 0);
    assert_eq!(run(&["verify", "--seed", "5"], b.path()), 0);
    let ra = std::fs::read_to_string(a.path().join("reports.csv")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("reports.csv")).unwrap();
    assert_eq!(ra, rb);
    let n = ra.lines().count() - 1;
    assert!((15..=40).contains(&n), "{n} reports");
    assert!(a.path().join("reports.json").exists());
}

#[test]
fn verify_flags_planted_log_convexity_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"sequence":{"kind":"explicit","values":[1,1,3,4,20]}}"#).unwrap();
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()], dir.path()), 2);
    let r = rows(&dir.path().join("reports.csv"));
    let lc = r.iter().find(|r| r[0] == "log-convexity").unwrap();
    assert_eq!(lc[1], "false");
    assert_eq!(num(&lc[4]), 2.0);
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"radius_grid":{"lo":0.01,"hi":10,"points":0}}"#).unwrap();
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()], dir.path()), 3);
    std::fs::write(&cfg, r#"{"radius":1}"#).unwrap();
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()], dir.path()), 3);
    assert_eq!(run(&["verify", "--tol", "bogus=1"], dir.path()), 3);
    assert_eq!(run(&["approximate", "nope"], dir.path()), 3);
    assert_eq!(run(&["reconstruct", "--fixture", "nope"], dir.path()), 3);
}

#[test]
fn transform_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["transform"], dir.path()), 0);
    for r in rows(&dir.path().join("transform.csv")) {
        assert_eq!(num(&r[2]), 1.0);
        assert_eq!(num(&r[3]), 0.0);
        assert!(num(&r[5]) >= 1.0);
    }

    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"probe_box":{"re":[0,0],"im":[1,1],"n_re":1,"n_im":1},"random_probes":0}"#,
    )
    .unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"terms":[],"point_terms":[[1.0,1.0]],"m":1}"#).unwrap();
    let code = run(
        &["transform", "--config", cfg.to_str().unwrap(), "--functional", f.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code, 0);
    let r = &rows(&dir.path().join("transform.csv"))[0];
    assert!((num(&r[2]) - std::f64::consts::E).abs() < 1e-12);
    assert!(num(&r[3]).abs() < 1e-12);
}

#[test]
fn reconstruct_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["reconstruct"], dir.path()), 0);
    let r = rows(&dir.path().join("reconstruct.csv"));
    assert_eq!(r.len(), 45);
    for row in &r {
        assert!(num(&row[4]) <= 1e-6, "{row:?}");
        if num(&row[1]) == 0.0 && num(&row[0]).fract() == 0.0 {
            assert!(num(&row[4]) < 1e-15);
        }
    }
    assert_eq!(run(&["reconstruct", "--fixture", "empty"], dir.path()), 0);
    for row in rows(&dir.path().join("reconstruct.csv")) {
        assert_eq!(num(&row[2]), 0.0);
        assert_eq!(num(&row[3]), 0.0);
    }
}

#[test]
fn approximate_zero_has_zero_gaps() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["approximate", "zero"], dir.path()), 0);
    let r = rows(&dir.path().join("pipeline.csv"));
    assert!(!r.is_empty());
    assert!(r.iter().all(|row| num(&row[6]) == 0.0));
}

#[test]
fn report_merge_concatenates() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify"], dir.path()), 0);
    let json = dir.path().join("reports.json");
    let merged = dir.path().join("merged");
    let j = json.to_str().unwrap();
    assert_eq!(run(&["report-merge", j, j], &merged), 0);
    let a = rows(&dir.path().join("reports.csv")).len();
    let b = rows(&merged.join("reports.csv")).len();
    assert_eq!(b, 2 * a);
}
