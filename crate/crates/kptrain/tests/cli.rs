use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kptrain(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kptrain")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_default_domain_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/validate.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["points"].as_array().unwrap().len(), 5);
}

#[test]
fn validate_flags_domain_touching_the_axis() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[domain.boundary]\nkind = \"circle\"\ncenter = [1.0, 0.0]\nradius = 1.0\n").unwrap();
    let o = kptrain(dir.path(), &["validate", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("axis-distance"), "{}", stderr(&o));
}

#[test]
fn eps_outside_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["field", "--source", "train", "--eps", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn order_outside_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["frame", "--N", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_field_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.toml"), "times = [5.0]\n[grid]\nx_lo = -2.0\nx_hi = 2.0\nnx = 6\ny_ratios = [0.4, 0.6]\n").unwrap();
    let a = kptrain(dir.path(), &["field", "--config", "g.toml", "--source", "exact", "--out", "a"]);
    let b = kptrain(dir.path(), &["field", "--config", "g.toml", "--source", "exact", "--out", "b", "--workers", "3"]);
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    let fa = fs::read(dir.path().join("a/field_exact.csv")).unwrap();
    let fb = fs::read(dir.path().join("b/field_exact.csv")).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(String::from_utf8(fa).unwrap().lines().count(), 13);
    assert_eq!(
        fs::read(dir.path().join("a/field_exact.json")).unwrap(),
        fs::read(dir.path().join("b/field_exact.json")).unwrap()
    );
}

#[test]
fn train_field_has_two_peaks_at_order_three() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("w.toml"), "[grid]\nx_lo = -10.0\nx_hi = 30.0\nnx = 801\n").unwrap();
    let o = kptrain(dir.path(), &["field", "--config", "w.toml", "--source", "train", "--N", "3", "--t", "10000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/field_train.csv")).unwrap();
    let u: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    let peaks = (1..u.len() - 1).filter(|&i| u[i] > u[i - 1] && u[i] >= u[i + 1]).count();
    assert_eq!(peaks, 2);
}

#[test]
fn compare_refuses_a_single_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["compare", "--t", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("single time"));
}

#[test]
fn compare_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["compare", "--t", "100,1000", "--N", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/compare.json")).unwrap()).unwrap();
    assert!(r["inner_exponent"].as_f64().unwrap() < 0.0);
    assert_eq!(r["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn frame_dump_with_moments() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["frame", "--moments", "--t", "100", "--N", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/frame.json")).unwrap()).unwrap();
    let m = &r[0]["moments"][0];
    let (a, b) = (m["inner_logdet"].as_f64().unwrap(), m["inner_rowrep"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-10 * a.abs());
    assert_eq!(m["moments"]["j"].as_array().unwrap().len(), 9);
}

#[test]
fn ridges_cover_every_term() {
    let dir = tempfile::tempdir().unwrap();
    let o = kptrain(dir.path(), &["ridges", "--t", "1000", "--N", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/ridges.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 9);
}
