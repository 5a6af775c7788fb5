use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn krein() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_krein"));
    for key in ["SYM", "RANK", "RESID", "PAIR", "CLUSTER", "ZERO", "ZERO_R", "SLOPE", "MATCHING", "COND_MAX", "OVERLAP", "KERNEL"] {
        cmd.env_remove(format!("KREIN_TOL_{key}"));
    }
    cmd
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    krein().args(args).arg("--out").arg(out).output().unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_parameters_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["core-demo", "--bogus", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--bogus"));
    let o = krein().args(["kdv5-wave"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "--out is required");
    let o = krein().args(["no-such-scenario", "--out", "x"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn real_pair_example_has_one_real_pair() {
    let dir = tempfile::tempdir().unwrap();
    let real = data("real_pair.json");
    ok(&run(&["core-demo", "--pencil", real.to_str().unwrap()], dir.path()));
    let spec = read_json(dir.path().join("spectrum.json"));
    assert_eq!(spec["k_r"], 1);
    assert_eq!(spec["k_i_minus"], 0);
    let index = read_json(dir.path().join("index.json"));
    assert_eq!(index["check"]["agrees"], true);
    assert_eq!(index["check"]["formula"], 1);
}

#[test]
fn imaginary_pair_example_has_two_negative_krein_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let p = data("imaginary_pair.json");
    ok(&run(&["core-demo", "--pencil", p.to_str().unwrap(), "--z-max", "2"], dir.path()));
    let k = read_json(dir.path().join("krein.json"));
    let zeros = k["zeros"].as_array().unwrap();
    assert_eq!(zeros.len(), 2);
    for z in zeros {
        assert!((z["z"].as_f64().unwrap().abs() - 2f64.sqrt()).abs() < 1e-10);
        assert_eq!(z["signature"], "negative");
    }
    let svg = fs::read_to_string(dir.path().join("core.svg")).unwrap();
    assert_eq!(svg.matches("class=\"zero\"").count(), 2 + 2, "two Krein zeros and two eigenvalues");
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["kdv5-scan", "--coarse", "30", "--window-points", "10", "--seed", "5"];
    ok(&run(&args, a.path()));
    ok(&run(&args, b.path()));
    let args = ["core-demo", "--degree", "2", "--dim", "5", "--seed", "3"];
    let (c, d) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&run(&args, c.path()));
    ok(&run(&args, d.path()));
    for (x, y) in [(a.path(), b.path()), (c.path(), d.path())] {
        let mut names: Vec<_> = fs::read_dir(x).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.len() > 3);
        for n in names {
            assert_eq!(fs::read(x.join(&n)).unwrap(), fs::read(y.join(&n)).unwrap(), "{n:?} differs");
        }
    }
}

#[test]
fn manifest_lists_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["kdv5-dispersion", "--points", "101"], dir.path()));
    let m = read_json(dir.path().join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["scenario"], "kdv5-dispersion");
    assert_eq!(m["parameters"]["points"], 101);
    assert_eq!(m["tolerances"]["zero"], 1e-8);
    let mut listed: Vec<String> =
        m["artifacts"].as_array().unwrap().iter().map(|a| a["file"].as_str().unwrap().to_string()).collect();
    listed.push("manifest.json".into());
    listed.sort();
    let mut found: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    found.sort();
    assert_eq!(listed, found);
}

#[test]
fn dispersion_plot_marks_signature_and_collisions() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["kdv5-dispersion"], dir.path()));
    let svg = fs::read_to_string(dir.path().join("dispersion.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("stroke-dasharray=\"6 4\""), "negative-signature curves are dashed");
    assert!(svg.matches("<polyline").count() > 5);
    let c = read_json(dir.path().join("collisions.json"));
    assert_eq!(svg.matches("class=\"cross\"").count(), c["collisions"].as_array().unwrap().len());
    let bracket = c["index_change_bracket"].as_array().unwrap();
    let target = 2.0 - 3f64.sqrt();
    assert!(bracket[0].as_f64().unwrap() <= target && target <= bracket[1].as_f64().unwrap());
}

#[test]
fn krein_plot_has_pole_and_zero_markers() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["core-demo", "--degree", "2", "--dim", "5", "--seed", "3"], dir.path()));
    let k = read_json(dir.path().join("krein.json"));
    let svg = fs::read_to_string(dir.path().join("core.svg")).unwrap();
    assert!(!k["poles"].as_array().unwrap().is_empty());
    assert!(svg.contains("class=\"pole\""));
    assert!(svg.matches("class=\"zero\"").count() >= k["zeros"].as_array().unwrap().len());
}

#[test]
fn solver_errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bridge-pulse", "--c", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let e = read_json(dir.path().join("error.json"));
    assert_eq!(e["error"]["kind"], "OutOfRange");
    assert_eq!(read_json(dir.path().join("manifest.json"))["status"], "error");
}

#[test]
fn tolerance_overrides_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = krein().env("KREIN_TOL_ZERO", "1e-9").args(["kdv5-wave", "--out"]).arg(dir.path()).output().unwrap();
    ok(&o);
    assert_eq!(read_json(dir.path().join("manifest.json"))["tolerances"]["zero"], 1e-9);
    let o = krein().env("KREIN_TOL_PAIR", "-1").args(["kdv5-wave", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn double_pulse_small_eigenvalues_shrink_with_m() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["bridge-multipulse", "--m", "1,2", "--k", "0"], dir.path()));
    let s = read_json(dir.path().join("a0_small.json"));
    let nus: Vec<f64> = s["cases"].as_array().unwrap().iter().map(|c| c["small"][0].as_f64().unwrap()).collect();
    assert!(nus[0] > 0.0 && nus[1] > 0.0 && nus[1] < nus[0], "{nus:?}");
    assert!(dir.path().join("multipulse_m2.csv").exists());
}
