use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_latticeflux");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn latticeflux(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_recipe(recipe: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![recipe, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    latticeflux(&args)
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

/// CSV body without the `#` header block.
fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = body(path);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn shipped_configs_pass() {
    let dir = tempfile::tempdir().unwrap();
    for (recipe, file) in [
        ("figure2", "figure2.toml"),
        ("size-scan", "size-scan.toml"),
        ("size-scan", "size-scan-disordered.toml"),
        ("mode-table", "mode-table.toml"),
        ("jw-verify", "jw-verify.toml"),
        ("subspace-check", "subspace-check.toml"),
        ("oracle-compare", "oracle-compare.toml"),
    ] {
        let out = dir.path().join(file);
        let o = run_recipe(recipe, &configs().join(file), &out, &[]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(o.status.code(), Some(0), "{file}: {stdout}{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout.contains(&format!("{recipe}: PASS")));
        let s = summary(&out);
        assert_eq!(s["passed"], Value::Bool(true));
        assert_eq!(s["recipe"], recipe);
        for f in s["files"].as_array().unwrap() {
            assert!(out.join(f.as_str().unwrap()).exists());
        }
    }
}

#[test]
fn figure2_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f2");
    let o = run_recipe("figure2", &configs().join("figure2.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = out.join("figure2.csv");
    let t = column(&csv, "t_hot");
    let b = column(&csv, "boson");
    let f = column(&csv, "fermion");
    assert_eq!(t.len(), 81);
    assert!((t[0] - 1.0).abs() < 1e-12 && (t[80] - 1e4).abs() < 1e-8);
    // bosons carry more at t_hot = 1e3
    let k = t.iter().position(|x| (x - 1e3).abs() < 1e-6).unwrap();
    assert!(b[k] > f[k]);
    let header = fs::read_to_string(&csv).unwrap();
    for key in ["omega = 10.0", "g = 0.01", "gamma = 0.01", "t_cold = 0.001", "recipe = figure2"] {
        assert!(header.contains(key), "header lacks {key}");
    }
}

#[test]
fn fermion_size_scan_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    assert_eq!(run_recipe("size-scan", &configs().join("size-scan.toml"), &out, &[]).status.code(), Some(0));
    let js = column(&out.join("size_scan.csv"), "j_in");
    assert_eq!(js.len(), 15);
    for j in js {
        assert!((j - 1.0 / 7.0).abs() < 1e-12);
    }
}

#[test]
fn ctplot_plateau_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ct.toml",
        "[ladder]\nrungs = [15]\n[dynamics]\nstate = \"two-exciton\"\nt_max = 2.0\nwindow = [0.5, 2.0]\n",
    );
    let out = dir.path().join("ct");
    let o = run_recipe("ladder-ctplot", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let mean = column(&out.join("plateau.csv"), "mean")[0];
    assert!((mean - 8.0).abs() < 1e-3);
    let t = column(&out.join("curvature.csv"), "t");
    assert!((t[0] - 0.01).abs() < 1e-12);
}

#[test]
fn failed_check_exits_one_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "phi0.toml",
        "[ladder]\nrungs = [15]\n[dynamics]\nphi_over_pi = 0.0\nt_max = 2.0\nwindow = [0.5, 2.0]\n",
    );
    let out = dir.path().join("phi0");
    let o = run_recipe("ladder-ctplot", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL plateau-deviation"));
    assert_eq!(summary(&out)["passed"], Value::Bool(false));
    assert!(out.join("msd.csv").exists());
}

#[test]
fn config_errors_exit_two_with_key_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg = write_config(dir.path(), "neg.toml", "[baths]\ngamma_in = -0.5\n");
    let o = run_recipe("size-scan", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("baths.gamma_in"));
    assert!(!out.exists());

    let cfg = write_config(dir.path(), "typo.toml", "[figure2]\nomgea = 1.0\n");
    let o = run_recipe("figure2", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("figure2") && err.contains("omgea"), "{err}");

    let cfg = write_config(dir.path(), "other.toml", "recipe = \"jw-verify\"\n");
    assert_eq!(run_recipe("figure2", &cfg, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn runtime_failure_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    // the window starts after the excitation reaches the ends of a short ladder
    let cfg = write_config(
        dir.path(),
        "late.toml",
        "[ladder]\nrungs = [5]\n[dynamics]\nstate = \"single\"\nt_max = 8.0\nwindow = [7.0, 8.0]\n",
    );
    let out = dir.path().join("late");
    let o = run_recipe("ladder-ctplot", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn reruns_are_byte_identical_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("size-scan-disordered.toml");
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let o = run_recipe("size-scan", &cfg, &out, extra);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("size_scan.csv")).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    assert_eq!(a, b);
    let c = run("c", &["--seed", "42"]);
    assert_eq!(a, c);
    let d = run("d", &["--seed", "7"]);
    assert_ne!(a, d);
    let s = summary(&dir.path().join("d"));
    assert_eq!(s["seed"], 7);

    // a timestamp only touches the header
    let e = dir.path().join("e");
    let o = run_recipe("size-scan", &cfg, &e, &["--timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(e.join("size_scan.csv")).unwrap().contains("# generated_at_unix = "));
    assert_eq!(body(&e.join("size_scan.csv")), body(&dir.path().join("a/size_scan.csv")));
}

#[test]
fn validate_prints_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.toml", "recipe = \"figure2\"\n");
    let o = latticeflux(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[figure2]") && text.contains("t_cold = 0.001"), "{text}");

    let cfg = write_config(dir.path(), "bad.toml", "recipe = \"figure9\"\n");
    let o = latticeflux(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("oracle-compare") && err.contains("size-scan"), "{err}");
}
