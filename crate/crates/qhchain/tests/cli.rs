//! End-to-end tests of the `qhchain` binary: exit codes, reproducibility
//! of outputs, and a quantitative smoke check of the classical flag.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qhchain"))
}

fn tmp_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qhchain-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "\
n = 64
seed = 5
realizations = 4
n_values = 32,64
macro_times = 0.25
test_functions = 1,sin1
beta_grid = 6
";

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let dir = tmp_dir("repro");
    let conf = write_config(&dir, SMALL);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["spectrum", "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in ["spectrum.csv", "localization.csv"] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
        assert!(!a.is_empty());
    }
}

#[test]
fn seed_flag_changes_the_output() {
    let dir = tmp_dir("seed");
    let conf = write_config(&dir, SMALL);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for (out, seed) in [(&out_a, "5"), (&out_b, "6")] {
        let status = bin()
            .args(["spectrum", "--seed", seed, "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(out_a.join("spectrum.csv")).unwrap();
    let b = fs::read(out_b.join("spectrum.csv")).unwrap();
    assert_ne!(a, b, "different seeds must give different disorder");
}

#[test]
fn invalid_config_exits_2_and_names_the_key() {
    let dir = tmp_dir("invalid");
    let conf = write_config(&dir, "beta.kind = constant\nbeta.value = -0.5\n");
    let output = bin()
        .args(["thermal", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("beta"), "stderr should name the offending key: {stderr}");
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tmp_dir("missing");
    let output = bin()
        .args(["spectrum", "--config"])
        .arg(dir.join("does-not-exist.conf"))
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn classical_fmu_is_one_over_beta() {
    let dir = tmp_dir("classical");
    // the zero-mode removal shaves 1/(2n) off the kinetic half of the site
    // energy, so β·f = 1 − 1/(2n) + O(1/n²); n = 256 puts that inside 5e-3
    let conf = write_config(&dir, "n = 256\nseed = 5\nrealizations = 4\nbeta_grid = 6\n");
    let out = dir.join("out");
    let status = bin()
        .args(["f-mu", "--classical", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("fmu.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "beta,f,beta_f");
    let mut checked = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let beta_f: f64 = cols[2].parse().unwrap();
        assert!(
            (beta_f - 1.0).abs() < 5e-3,
            "classical β·f should be 1, got {beta_f} at β = {}",
            cols[0]
        );
        checked += 1;
    }
    assert!(checked >= 4);
}

#[test]
fn manifest_records_the_run() {
    let dir = tmp_dir("manifest");
    let conf = write_config(&dir, SMALL);
    let out = dir.join("out");
    let status = bin()
        .args(["spectrum", "--seed", "9", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\": \"spectrum\""), "{manifest}");
    assert!(manifest.contains("\"seed\": 9"), "{manifest}");
    assert!(manifest.contains("spectrum.csv"), "{manifest}");
}

#[test]
fn euler_runs_without_config() {
    let dir = tmp_dir("euler");
    let out = dir.join("out");
    let status = bin().arg("euler").arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("euler.csv")).unwrap();
    assert!(text.starts_with("y,t,r,p,e"));
    assert!(text.lines().count() > 200);
}
