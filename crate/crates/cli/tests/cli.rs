use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kdv_nf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdv-nf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdv_nf(&["verify", "--quick"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("verify/verify.csv")).unwrap();
    assert!(csv.starts_with("suite,value,tolerance,pass,note\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert!(manifest["columns"]["verify.csv"]["suite"].is_string());
}

#[test]
fn paper_mode_fails_the_airy_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdv_nf(&["verify", "--quick", "--paper-mode"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("airy_identity      FAIL"), "{text}");
    assert!(text.contains("c_T = -1/3"), "{text}");
}

#[test]
fn scan_shows_growth_above_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let o = kdv_nf(&["scan", "--quick"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("scan/scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("name,s,delta,epsilon,cutoff,sup,argmax_xi1,argmax_xi2,argmax_xi3")
    );
    let sups: Vec<f64> = lines
        .filter(|l| l.starts_with("M,0.6,"))
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sups.len(), 3);
    assert!(sups.windows(2).all(|w| w[1] > w[0]), "{sups:?}");
    assert!(stdout(&o).contains("M s=0.6") && stdout(&o).contains("(growing)"));
}

#[test]
fn replay_from_manifest_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(kdv_nf(&["lipschitz", "--quick"], a.path()).status.code(), Some(0));
    let manifest = a.path().join("lipschitz/manifest.json");
    let o = kdv_nf(&["lipschitz", "--config", manifest.to_str().unwrap(), "--jobs", "1"], b.path());
    assert_eq!(o.status.code(), Some(0));
    for name in ["lipschitz.csv", "solution_map.csv"] {
        let x = fs::read(a.path().join("lipschitz").join(name)).unwrap();
        let y = fs::read(b.path().join("lipschitz").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn evolve_is_deterministic_and_decomposable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = kdv_nf(&["evolve", "--quick", "--seed", "7"], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let frames: Vec<_> = fs::read_dir(a.path().join("evolve/seed_7")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(frames.len() > 5);
    for name in frames {
        let x = fs::read(a.path().join("evolve/seed_7").join(&name)).unwrap();
        let y = fs::read(b.path().join("evolve/seed_7").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
    let run = a.path().join("evolve");
    let o = kdv_nf(&["decompose", "--run", run.to_str().unwrap()], a.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(a.path().join("decompose/slopes.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("7,w,tail_slope,")), "{csv}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(kdv_nf(&["scan", "--no-such-flag"], dir.path()).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"scan": {"kinds": ["Q"]}}"#).unwrap();
    assert_eq!(kdv_nf(&["scan", "--config", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
    fs::write(&bad, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(kdv_nf(&["verify", "--config", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(kdv_nf(&["report"], &dir.path().join("empty")).status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("big.json");
    fs::write(
        &config,
        r#"{"evolve": {"data": "smooth", "amplitude": 50.0, "max_mode": 16, "dt": 0.05, "horizon": 10.0}}"#,
    )
    .unwrap();
    let o = kdv_nf(&["evolve", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn report_collects_manifests() {
    let dir = tempfile::tempdir().unwrap();
    kdv_nf(&["verify", "--quick"], dir.path());
    kdv_nf(&["scan", "--quick"], dir.path());
    let o = kdv_nf(&["report"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(text.contains("== verify (Pass") && text.contains("== scan (Pass"), "{text}");
}
