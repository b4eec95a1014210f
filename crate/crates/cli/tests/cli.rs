//! Black-box checks of the binary: exit codes, file round trips, and the
//! pinned CSV schema.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bandwidth-puzzle"))
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn gen_solve_verify_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let content = dir.path().join("content.bin");
    std::fs::write(&content, vec![0xa5u8; 1_250]).unwrap();
    let chal = dir.path().join("c.bin");
    let resp = dir.path().join("r.bin");

    let status = bin()
        .args(["--seed", "3", "--params", "10000,50,20,2,1000,256", "gen"])
        .arg("--content")
        .arg(&content)
        .arg("--out")
        .arg(&chal)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .arg("solve")
        .arg("--content")
        .arg(&content)
        .arg("--challenge")
        .arg(&chal)
        .arg("--out")
        .arg(&resp)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .arg("verify")
        .arg("--secret")
        .arg(dir.path().join("c.bin.secret"))
        .arg("--response")
        .arg(&resp)
        .status()
        .unwrap();
    assert!(status.success());

    // Tampered response: rejected with exit code 1.
    let mut bytes = std::fs::read(&resp).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&resp, &bytes).unwrap();
    let status = bin()
        .arg("verify")
        .arg("--secret")
        .arg(dir.path().join("c.bin.secret"))
        .arg("--response")
        .arg(&resp)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn wrong_size_content_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let content = dir.path().join("short.bin");
    std::fs::write(&content, vec![0u8; 10]).unwrap();
    let output = bin()
        .args(["--seed", "3", "--params", "10000,50,20,2,1000,256", "gen"])
        .arg("--content")
        .arg(&content)
        .arg("--out")
        .arg(dir.path().join("c.bin"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bits"), "stderr: {stderr}");
}

#[test]
fn missing_content_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["--seed", "3", "--params", "10000,50,20,2,1000,256", "gen"])
        .arg("--content")
        .arg(dir.path().join("nope.bin"))
        .arg("--out")
        .arg(dir.path().join("c.bin"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn simulate_csv_bytes_are_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let status = bin()
        .arg("--csv")
        .arg(&out)
        .arg("simulate")
        .arg("--config")
        .arg(fixture("golden_sim.cfg"))
        .status()
        .unwrap();
    assert!(status.success());
    let produced = std::fs::read(&out).unwrap();
    let golden = std::fs::read(fixture("golden_sweep.csv")).unwrap();
    assert_eq!(produced, golden, "simulate CSV schema or values drifted");
}

#[test]
fn simulate_zero_sigma_zeroes_the_strategy_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.cfg");
    std::fs::write(
        &cfg,
        "n_bits=20000\nset_size=50\nsets_per_puzzle=40\npuzzles_per_challenge=2\n\
         q_hash=400\nslack_v=10\nsigma=0\ntrials=5\nseed=9\nadversaries=2,4\n",
    )
    .unwrap();
    let out = dir.path().join("sweep.csv");
    let status = bin()
        .arg("--csv")
        .arg(&out)
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "0", "strategy_bits not zero in {line:?}");
    }
}

#[test]
fn check_params_exit_codes_track_the_verdict() {
    let pass = bin()
        .args([
            "--params",
            "10000000,10000,200,10,3000,256",
            "check-params",
            "--q-hash",
            "4000",
            "--adversaries",
            "100",
        ])
        .status()
        .unwrap();
    assert!(pass.success());

    let fail = bin()
        .args([
            "--params",
            "1000000,10000,200,10,3000,256",
            "check-params",
            "--q-hash",
            "4000",
            "--adversaries",
            "100",
        ])
        .status()
        .unwrap();
    assert_eq!(fail.code(), Some(1));
}

#[test]
fn bounds_sweep_emits_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bounds.csv");
    let status = bin()
        .arg("--csv")
        .arg(&out)
        .args([
            "--params",
            "10000000,10000,200,10,3000,256",
            "bounds",
            "--q-hash",
            "4000",
            "--sweep-a",
            "10:30:10",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# bandwidth-puzzle bounds csv v1"));
    assert_eq!(
        lines.next(),
        Some("a,dominant_bits,penalty_bits,raw_total_bits,total_bits")
    );
    assert_eq!(lines.count(), 3);
}
