use std::fs;
use std::process::{Command, Output};

fn rdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn bands_at_unit_coupling() {
    let o = rdm(&["bands", "--lambda", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).take(2).map(|x| x.parse().unwrap()).collect())
        .collect();
    let s5 = 5f64.sqrt();
    let want = [[-(1.0 + s5) / 2.0, (3.0 - s5) / 2.0], [(s5 - 1.0) / 2.0, (3.0 + s5) / 2.0]];
    assert_eq!(rows.len(), 2);
    for (r, w) in rows.iter().zip(want) {
        assert!((r[0] - w[0]).abs() < 1e-12 && (r[1] - w[1]).abs() < 1e-12);
    }
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("bands lambda=1: 2 bands"));
}

#[test]
fn conjecture_mode_is_flagged() {
    let o = rdm(&["bands", "--lambda", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.contains("conjectural")));
}

#[test]
fn ids_output_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["ids", "--lambda", "3", "--p", "0.5", "--L", "200", "--samples", "1000", "--seed", "7"];
    let mut first: Vec<&str> = base.to_vec();
    first.extend(["--threads", "1", "--output", a.to_str().unwrap()]);
    let mut second: Vec<&str> = base.to_vec();
    second.extend(["--threads", "4", "--output", b.to_str().unwrap()]);
    let o1 = rdm(&first);
    let o2 = rdm(&second);
    assert_eq!(code(&o1), 0);
    assert_eq!(code(&o2), 0);
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    assert!(String::from_utf8(o1.stdout).unwrap().starts_with("ids lambda=3"));
    assert!(String::from_utf8(x).unwrap().starts_with("energy,ids,stderr\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&rdm(&["nonsense"])), 1);
    assert_eq!(code(&rdm(&["bands", "--lambda", "1", "--bogus"])), 1);
    assert_eq!(code(&rdm(&["--help"])), 0);
    assert_eq!(code(&rdm(&["--version"])), 0);
    assert_eq!(code(&rdm(&["bands", "--lambda", "3", "--mode", "proved"])), 2);
    assert_eq!(code(&rdm(&["bubbles", "--m", "3", "--b", "1", "--q", "0"])), 2);
    assert_eq!(code(&rdm(&["symmetry", "--p", "0.3", "--L", "10", "--samples", "10"])), 2);
    assert_eq!(code(&rdm(&["minimizers", "--L", "12", "--cap", "100"])), 4);
    assert_eq!(code(&rdm(&["walk", "--L", "2"])), 2);
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep point\nlambda=3\nmode=conjecture\n").unwrap();
    let from_file = rdm(&["bands", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(String::from_utf8(from_file.stdout).unwrap().lines().count(), 7);
    let overridden = rdm(&["bands", "--config", cfg.to_str().unwrap(), "--lambda", "1"]);
    assert_eq!(code(&overridden), 0);
    assert_eq!(String::from_utf8(overridden.stdout).unwrap().lines().count(), 3);
}

#[test]
fn edgefit_json_has_the_fit_fields() {
    let o = rdm(&[
        "edgefit", "--lambda", "1", "--L", "60", "--samples", "200", "--edge", "g-plus", "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["edge", "side", "C", "eps_lo", "eps_hi", "product_min", "product_max", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["side"], "above");
}

#[test]
fn gap_on_an_explicit_window() {
    let o = rdm(&["gap", "--lambda", "2", "--omega", "0110100111"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("0,0,"));
    assert_eq!(code(&rdm(&["gap", "--lambda", "2", "--omega", "01x"])), 2);
}

#[test]
fn quick_verification_passes() {
    let o = rdm(&["verify-all", "--quick"]);
    let status = code(&o);
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(status, 0, "{err}");
    assert_eq!(err.lines().filter(|l| l.starts_with("[PASS]")).count(), 14, "{err}");
}
