use std::fs;
use std::path::Path;
use std::process::Command;

const SRT: &str = r#"
[run]
scenario = "srt_ratio"

[rv_kernel]
alpha = 0.7
family = "constant"

[dist_factory]
builder = "baseline"
x_max = 4096
"#;

fn renewlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_renewlab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SRT.replace("x_max = 4096", "x_max = 4096\nwidth = 2"));
    let o = renewlab(&["srt-ratio", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(renewlab(&["srt-ratio"]).status.code(), Some(1));
}

#[test]
fn missing_config_is_an_io_error() {
    let o = renewlab(&["renewal", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sampling_without_seed_is_rejected_and_seed_flag_fixes_it() {
    let dir = tempfile::tempdir().unwrap();
    let two = SRT.replace("x_max = 4096", "x_max = 4096\np = 0.5\nq = 0.5");
    let cfg = write_config(dir.path(), &two);
    assert_eq!(renewlab(&["dist-build", "--config", &cfg, "--out", dir.path().to_str().unwrap()]).status.code(), Some(0));
    assert!(dir.path().join("dist.bin").exists());
    let o = renewlab(&["srt-ratio", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    let o = renewlab(&["srt-ratio", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn srt_ratio_run_writes_manifest_and_ratio_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SRT);
    let out = dir.path().join("out");
    let o = renewlab(&["srt-ratio", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "srt_ratio");
    assert!(manifest["operations"].as_array().unwrap().len() >= 2);
    let csv = fs::read_to_string(out.join("srt_ratio.csv")).unwrap();
    assert!(csv.starts_with("x,u,ratio,trunc_err,flagged"));
    let last: f64 = csv.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((0.9..=1.1).contains(&last), "final ratio {last}");

    // Same config, same bytes.
    let out2 = dir.path().join("out2");
    renewlab(&["srt-ratio", "--config", &cfg, "--out", out2.to_str().unwrap()]);
    assert_eq!(csv, fs::read_to_string(out2.join("srt_ratio.csv")).unwrap());

    let back = dir.path().join("back");
    let o = renewlab(&[
        "export",
        "--input",
        out.join("srt_ratio.json").to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        back.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv, fs::read_to_string(back.join("srt_ratio.csv")).unwrap());
}
