use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vrblock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrblock")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL_PL: &str = "\
# small PL quadratic
problem = pl_quadratic
dim = 8
blocks = 4
steplength = pl_optimal
schedule = polynomial:1
iterations = 300
trajectories = 4
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn run_writes_csv_and_script() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_PL);
    let out = dir.path().join("result.csv");
    let text = stdout(&vrblock(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert!(text.contains("final mean"));
    let csv = fs::read_to_string(&out).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "k,po_calls,sfo_calls_mean,gap_mean,gap_std,gmap_sq_mean,gmap_sq_std");
    assert_eq!(data_rows(&csv).len(), 301);
    assert!(csv.contains("# problem = pl_quadratic"));
    assert!(dir.path().join("result.gp").exists());
}

#[test]
fn zero_iterations_give_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg =
        write_config(dir.path(), &SMALL_PL.replace("iterations = 300", "iterations = 0").replace("trajectories = 4", "trajectories = 1"));
    let out = dir.path().join("r.csv");
    stdout(&vrblock(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(data_rows(&fs::read_to_string(&out).unwrap()).len(), 1);
}

#[test]
fn reruns_and_sequential_mode_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_PL);
    let paths: Vec<_> = ["a.csv", "b.csv", "c.csv"].iter().map(|n| dir.path().join(n)).collect();
    for (i, p) in paths.iter().enumerate() {
        let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", p.to_str().unwrap()];
        if i == 2 {
            args.insert(0, "--sequential");
        }
        stdout(&vrblock(&args));
    }
    let a = fs::read(&paths[0]).unwrap();
    assert_eq!(a, fs::read(&paths[1]).unwrap());
    assert_eq!(a, fs::read(&paths[2]).unwrap());
}

#[test]
fn seed_flag_changes_trajectories() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_PL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    stdout(&vrblock(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]));
    stdout(&vrblock(&["run", "--config", cfg.to_str().unwrap(), "--seed", "99", "--out", b.to_str().unwrap()]));
    let (a, b) = (fs::read_to_string(a).unwrap(), fs::read_to_string(b).unwrap());
    assert!(b.contains("# seed = 99"));
    assert_ne!(data_rows(&a), data_rows(&b));
}

#[test]
fn rate_fit_reads_generated_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_PL);
    let out = dir.path().join("r.csv");
    stdout(&vrblock(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let text =
        stdout(&vrblock(&["rate-fit", out.to_str().unwrap(), "--column", "gap_mean", "--scale", "semilog", "--from", "0", "--to", "100"]));
    assert!(text.starts_with("slope "));
    assert!(text.contains("contraction factor"));
    let bad = vrblock(&["rate-fit", out.to_str().unwrap(), "--column", "nope", "--scale", "loglog", "--from", "1", "--to", "100"]);
    assert!(!bad.status.success());
}

#[test]
fn preset_print_and_overrides() {
    let text = stdout(&vrblock(&["preset", "table3", "--print", "trajectories=3"]));
    assert_eq!(text.matches("# table3 / ").count(), 4);
    assert_eq!(text.matches("samples = 2000").count(), 4);
    assert_eq!(text.matches("trajectories = 3").count(), 4);
    assert!(text.contains("method = bsg:16"));
    let bad = vrblock(&["preset", "table3", "--print", "no_such_key=1"]);
    assert!(!bad.status.success());
    let unknown = vrblock(&["preset", "table9", "--print"]);
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("unknown preset"));
}

#[test]
fn preset_runs_into_directory() {
    let dir = TempDir::new().unwrap();
    let text = stdout(&vrblock(&["preset", "pl_polynomial", "iterations=50", "trajectories=2", "--out-dir", dir.path().to_str().unwrap()]));
    assert_eq!(text.lines().count(), 2);
    assert!(dir.path().join("pl_polynomial_v1.csv").exists());
    assert!(dir.path().join("pl_polynomial_v2.csv").exists());
}

#[test]
fn optimum_reports_value() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "problem = lasso\nsamples = 100\ndim = 20\nblocks = 4\n");
    let text = stdout(&vrblock(&["optimum", "--config", cfg.to_str().unwrap(), "--tol", "1e-10"]));
    let value: f64 = text.lines().next().unwrap().strip_prefix("f_star ").unwrap().parse().unwrap();
    assert!(value > 0.0);
    assert!(text.contains("converged true"));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "problem = lasso\nsamples = many\n");
    let out = vrblock(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
}
