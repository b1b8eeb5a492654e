use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reggeon::cli::{EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER};

fn reggeon(sub: &str, config: &Path, out: &Path) -> Output {
    reggeon_threads(sub, config, out, 1)
}

fn reggeon_threads(sub: &str, config: &Path, out: &Path, threads: usize) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reggeon"))
        .args([sub, "--threads", &threads.to_string(), "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn reggeon")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

const BETHE: &str = "[bethe]\nlength = 10\nroots = 3\n";
const QUENCH: &str = "[quench]\nsites = 8\nt_max = 6.0\ndt = 0.2\nblock_lengths = [0, 1, 2, 3, 4]\n";
const DIS: &str = "[dis]\nm = 0.938\nx = 0.01\nQ = 2.0\n";

#[test]
fn bethe_writes_roots_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let r = reggeon("bethe", &write_config(tmp.path(), BETHE), &out);
    assert_eq!(r.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&r.stderr));
    let roots = fs::read_to_string(out.join("roots.csv")).unwrap();
    assert_eq!(roots.lines().count(), 4);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "bethe");
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "roots.csv"));
    assert!(out.join("timings.json").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for (sub, text, files) in [
        ("bethe", BETHE, &["roots.csv", "bethe.json", "manifest.json"][..]),
        ("quench", QUENCH, &["entropy.csv", "blocks.csv", "quench.json", "manifest.json"][..]),
        ("dis", DIS, &["entropy_vs_x.csv", "entropy_vs_time.csv", "dis.json", "manifest.json"][..]),
    ] {
        let cfg = write_config(tmp.path(), text);
        let (a, b) = (tmp.path().join(format!("{sub}_a")), tmp.path().join(format!("{sub}_b")));
        for out in [&a, &b] {
            let r = reggeon(sub, &cfg, out);
            assert_eq!(r.status.code(), Some(EXIT_OK), "{sub}: {}", String::from_utf8_lossy(&r.stderr));
        }
        for f in files {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{sub}/{f} differs");
        }
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad_syntax = write_config(tmp.path(), "[bethe\nlength = 4\n");
    let r = reggeon("bethe", &bad_syntax, &out);
    assert_eq!(r.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line"));

    let unknown = write_config(tmp.path(), "[bethe]\nlength = 4\nroots = 1\nspeed = 3\n");
    assert_eq!(reggeon("bethe", &unknown, &out).status.code(), Some(EXIT_CONFIG));

    let missing_section = write_config(tmp.path(), DIS);
    assert_eq!(reggeon("bethe", &missing_section, &out).status.code(), Some(EXIT_CONFIG));

    let stalled = write_config(tmp.path(), "[bethe]\nlength = 40\nroots = 12\ntol = 1e-300\nmax_iter = 1\n");
    let r = reggeon("bethe", &stalled, &out);
    assert_eq!(r.status.code(), Some(EXIT_SOLVER), "{}", String::from_utf8_lossy(&r.stderr));

    let blocked = tmp.path().join("file");
    fs::write(&blocked, "").unwrap();
    let ok = write_config(tmp.path(), BETHE);
    assert_eq!(reggeon("bethe", &ok, &blocked.join("sub")).status.code(), Some(EXIT_IO));
}

#[test]
fn quench_reports_invariants() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let r = reggeon("quench", &write_config(tmp.path(), QUENCH), &out);
    assert_eq!(r.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&r.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["results"]["invariants_hold"], true);
    let table = reggeon::io::Table::read_csv(&out.join("entropy.csv")).unwrap();
    assert_eq!(table.columns, ["t", "S"]);
    assert_eq!(table.rows.len(), 31);
    assert!(table.rows[0][1].abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[quench]\nsites = 12\nt_max = 3.0\ndt = 0.5\n");
    let (a, b) = (tmp.path().join("one"), tmp.path().join("three"));
    assert_eq!(reggeon_threads("quench", &cfg, &a, 1).status.code(), Some(EXIT_OK));
    assert_eq!(reggeon_threads("quench", &cfg, &b, 3).status.code(), Some(EXIT_OK));
    for f in ["entropy.csv", "quench.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}
