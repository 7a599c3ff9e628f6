use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[potential]
kind = "quartic"
eta = 3.0
[physics]
gamma = 0.0
decoherence = 0.0
[grid]
nx = 48
np = 48
hx = 0.3
hp = 0.3
[output]
t_final = 1.0
series_every = 2
frame = "liouville"
[resample]
enabled = true
nx = 81
np = 61
x_extent = 8.0
p_extent = 6.0
"#;

fn qxpanse(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qxpanse"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("QXPANSE_")) {
        cmd.env_remove(k);
    }
    cmd.args(args).envs(envs.iter().copied()).env("RUST_LOG", "warn");
    cmd.output().expect("spawn qxpanse")
}

fn write_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, SMALL).unwrap();
    p.display().to_string()
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn run_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let o = qxpanse(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--snapshot-every", "10", "--frame", "both"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("eta = 3.0"), "{report}");

    let files = names(&out);
    for f in ["config.toml", "series.csv", "report.toml", "marginal.csv", "liouville_000000.qxwf", "liouville_000010.qxwf", "lab_000020.qxwf"] {
        assert!(files.iter().any(|n| n == f), "missing {f} in {files:?}");
    }
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 11);

    let o = qxpanse(&["analyze", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[[analysis]]") && text.contains("eta_lambda_min"), "{text}");

    let snap = out.join("liouville_000020.qxwf");
    let marginal = tmp.path().join("m.csv");
    let o = qxpanse(&["analyze", snap.to_str().unwrap(), "--config", &cfg, "--marginal", marginal.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&marginal).unwrap().lines().count(), 1 + 81);
}

#[test]
fn environment_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("env");
    let o = qxpanse(
        &["run"],
        &[
            ("QXPANSE_CONFIG", cfg.as_str()),
            ("QXPANSE_OUT", out.to_str().unwrap()),
            ("QXPANSE_FRAME", "lab"),
            ("QXPANSE_CLASSICAL", "true"),
            ("QXPANSE_THREADS", "1"),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = names(&out);
    assert!(files.iter().any(|n| n.starts_with("lab_")));
    assert!(!files.iter().any(|n| n.starts_with("liouville_")));
    let stored = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(stored.contains("classical"), "{stored}");
}

#[test]
fn serial_and_parallel_runs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let mut series = Vec::new();
    for threads in ["1", "2"] {
        let out = tmp.path().join(format!("t{threads}"));
        let o = qxpanse(&["--threads", threads, "run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        series.push(std::fs::read(out.join("series.csv")).unwrap());
    }
    assert_eq!(series[0], series[1]);
}

#[test]
fn sweep_writes_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("sweep");
    let o = qxpanse(&["sweep", "--config", &cfg, "--key", "eta", "--values", "3,6,12", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(names(&out), ["eta_000.toml", "eta_001.toml", "eta_002.toml"]);
    let last = std::fs::read_to_string(out.join("eta_002.toml")).unwrap();
    assert!(last.contains("t_final = 4.0"), "{last}");
}

#[test]
fn dump_operator_to_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let path = tmp.path().join("d.coo");
    let o = qxpanse(&["dump-operator", "--config", &cfg, "--time", "0.5", "--out", path.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 48 * 48);
}

#[test]
fn failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\nnx = -3\n").unwrap();
    let o = qxpanse(&["run", "--config", bad.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()], &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = qxpanse(&["--threads", "0", "verify"], &[]);
    assert!(!o.status.success());

    let o = qxpanse(&["sweep", "--key", "mass", "--values", "1", "--out", "unused"], &[]);
    assert!(!o.status.success());
}
