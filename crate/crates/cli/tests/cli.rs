use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rsvrc"))
}

fn desk(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/corpus").join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn rsvrc");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

const KEY: &str = "0badc0de";

#[test]
fn embed_simulate_extract() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("msg.bin");
    std::fs::write(&msg, b"the eagle has landed").unwrap();
    let stego = dir.path().join("stego.qdct");
    let report = dir.path().join("report.json");
    let out = run(bin()
        .arg("embed")
        .arg(desk("desk00_camera.pgm"))
        .args(["--msg", msg.to_str().unwrap(), "--key", KEY, "--payload", "0.1", "--quality", "85", "--bch", "127,64"])
        .args(["--report", report.to_str().unwrap(), "-o", stego.to_str().unwrap()]));
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(rep["message_bytes"], 20);

    let received = dir.path().join("received.qdct");
    let out = run(bin()
        .arg("simulate")
        .arg(&stego)
        .args(["--quality", "85", "--passes", "1", "-o", received.to_str().unwrap()]));
    assert!(out.status.success());
    let passes: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(passes.as_array().unwrap().len(), 1);

    let got = dir.path().join("got.bin");
    let out = run(bin()
        .arg("extract")
        .arg(&received)
        .args(["--key", KEY, "--bch", "127,64", "-o", got.to_str().unwrap()]));
    assert!(out.status.success());
    assert_eq!(std::fs::read(&got).unwrap(), b"the eagle has landed");

    let out = bin()
        .arg("extract")
        .arg(&received)
        .args(["--key", "feedface", "-o", got.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tcm_writes_a_stable_image() {
    let dir = tempfile::tempdir().unwrap();
    let matched = dir.path().join("matched.qdct");
    let out = run(bin()
        .arg("tcm")
        .arg(desk("desk05_coffee.pgm"))
        .args(["--quality", "75", "--max-iters", "12", "-o", matched.to_str().unwrap()]));
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let residual = summary["residual_changes"].as_u64().unwrap();

    let out = run(bin().arg("simulate").arg(&matched).args(["--quality", "75"]));
    let passes: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(passes[0]["changed_total"].as_u64().unwrap(), residual);
}

#[test]
fn capacity_and_format_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("big.bin");
    std::fs::write(&msg, vec![1u8; 20_000]).unwrap();
    let out = bin()
        .arg("embed")
        .arg(desk("desk01_camera.pgm"))
        .args(["--msg", msg.to_str().unwrap(), "--key", KEY, "-o"])
        .arg(dir.path().join("x.qdct"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"not an image").unwrap();
    let out = bin()
        .arg("costmap")
        .arg(&junk)
        .arg("-o")
        .arg(dir.path().join("c.f64"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .arg("extract")
        .arg(desk("desk01_camera.pgm"))
        .args(["--key", KEY, "--bch", "127", "-o"])
        .arg(dir.path().join("m"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn costmap_dumps_one_f64_per_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("costs.f64");
    let out = run(bin().arg("costmap").arg(desk("desk12_brick.pgm")).arg("-o").arg(&path));
    assert!(out.status.success());
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 256 * 256 * 8);
    let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
    assert!(first.is_finite() && first > 0.0);
}

#[test]
fn evaluate_writes_versioned_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::copy(desk("desk02_astronaut.pgm"), corpus.join("a.pgm")).unwrap();
    let report = dir.path().join("report.json");
    let out = run(bin()
        .arg("evaluate")
        .arg("--corpus")
        .arg(&corpus)
        .args(["--methods", "rsvrc,baseline", "--quality", "85", "--payload", "0.1", "--out"])
        .arg(&report));
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["version"], 1);
    assert_eq!(r["cells"].as_array().unwrap().len(), 2);
    assert_eq!(r["cells"][0]["embed_changes_by_mode"].as_array().unwrap().len(), 8);
}
