use std::path::Path;
use std::process::{Command, Output};

fn pavg(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pavg"))
        .args(args)
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("PAVG_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const HARMONIC: &str = "[potential]\nkind = \"harmonic\"\n[physics]\nbeta = 1.0\n[method]\nn = 8\n\
                        [sampler]\nn_samples = 5000\nseed = 3\n";

#[test]
fn rho_writes_report_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let out = dir.path().join("out");
    let o = pavg(&["rho"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("rho("));
    let csv = std::fs::read_to_string(out.join("points.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,mean,stderr,reference,abs_error"));
    assert_eq!(csv.lines().count(), 2);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["result"]["command"], "rho");
    assert_eq!(report["config"]["sampler"]["seed"], 3);
    assert!(report["result"]["reference"].as_f64().is_some());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let out = dir.path().join("out");
    assert!(pavg(&["z"], &cfg, &out).status.success());
    let first = std::fs::read(out.join("report.json")).unwrap();
    assert!(pavg(&["z"], &cfg, &out).status.success());
    assert_eq!(first, std::fs::read(out.join("report.json")).unwrap());
}

#[test]
fn seed_override_changes_the_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HARMONIC);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(pavg(&["rho"], &cfg, &a).status.success());
    assert!(pavg(&["rho", "--seed", "99"], &cfg, &b).status.success());
    let read = |p: &Path| std::fs::read_to_string(p.join("points.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn study_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[potential]\nkind = \"harmonic\"\n[physics]\nbeta = 1.0\n[study]\nobservable = \"rho_diag\"\n\
         orders = [0, 1, 2, 4]\n[sampler]\nn_samples = 5000\n",
    );
    let out = dir.path().join("out");
    let o = pavg(&["study"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("points.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["result"]["verdicts"]["monotone"]["outcome"].is_string());
}

#[test]
fn kato_and_oracle_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let kato = write(dir.path(), "k.toml", "[potential]\nkind = \"coulomb3d\"\n[physics]\nbeta = 1.0\n");
    let out = dir.path().join("k");
    assert!(pavg(&["kato"], &kato, &out).status.success());
    let csv = std::fs::read_to_string(out.join("kato.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("eps,value"));
    assert_eq!(csv.lines().count(), 5);

    let oracle = write(
        dir.path(),
        "o.toml",
        "[potential]\nkind = \"quartic\"\n[physics]\nbeta = 1.0\n[oracle]\npoints = 128\nhalf_width = 5.0\n\
         write_matrix = true\n",
    );
    let out = dir.path().join("o");
    let o = pavg(&["oracle"], &oracle, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("oracle_diagonal.csv")).unwrap().lines().count(), 129);
    assert_eq!(std::fs::read_to_string(out.join("oracle_matrix.csv")).unwrap().lines().count(), 128 * 128 + 1);
}

#[test]
fn configuration_errors_exit_with_code_two_and_list_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write(dir.path(), "bad.toml", "[potential]\nkind = \"harmonic\"\ncolour = \"red\"\n[physics]\nbeta = -1.0\n");
    let o = pavg(&["rho"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour"), "{err}");
    assert!(err.contains("physics.beta"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn lennard_jones_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "lj.toml", "[potential]\nkind = \"lennard_jones\"\n[physics]\nbeta = 1.0\n");
    let o = pavg(&["z"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn harmonic_oracle_needs_a_harmonic_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "o.toml",
        "[potential]\nkind = \"quartic\"\n[physics]\nbeta = 1.0\n[oracle]\nkind = \"harmonic_exact\"\n",
    );
    let o = pavg(&["oracle"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle.kind"));
}

#[test]
fn truncated_partition_domain_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "z.toml",
        "[potential]\nkind = \"harmonic\"\n[physics]\nbeta = 1.0\n[domain]\nhalf_width = 0.5\n\
         [sampler]\nn_samples = 5000\n",
    );
    let o = pavg(&["z"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pavg(&["rho"], &dir.path().join("absent.toml"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(5));
}
